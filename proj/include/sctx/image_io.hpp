// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sctx {

// Thin libpng wrappers for the two pixel formats the point-map exporter
// needs. Row-major, top-left origin.

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);
void write_png_gray16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& gray);

struct ImageRgb8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 bytes per pixel
};
struct ImageGray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};

ImageRgb8 read_png_rgb8(const std::string& path);
ImageGray16 read_png_gray16(const std::string& path);

}  // namespace sctx
