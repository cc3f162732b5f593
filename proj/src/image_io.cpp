// SPDX-License-Identifier: Apache-2.0
#include "sctx/image_io.hpp"

#include <cstdio>
#include <memory>

#include <png.h>

#include "sctx/error.hpp"

namespace sctx {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
  throw Error(ErrorCode::io_error, path + ": " + what);
}

}  // namespace

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    fail(path, "rgb buffer size does not match dimensions");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng write error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&rgb[static_cast<std::size_t>(y) * width * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png_gray16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& gray) {
  if (gray.size() != static_cast<std::size_t>(width) * height) {
    fail(path, "gray buffer size does not match dimensions");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng write error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  // PNG 16-bit samples are big-endian.
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint16_t v = gray[static_cast<std::size_t>(y) * width + x];
      row[2 * x] = static_cast<std::uint8_t>(v >> 8);
      row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace {

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

}  // namespace

ImageRgb8 read_png_rgb8(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open for reading");

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  r.info = r.png ? png_create_info_struct(r.png) : nullptr;
  if (!r.png || !r.info) fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(r.png))) fail(path, "libpng read error");

  png_init_io(r.png, fp.get());
  png_read_info(r.png, r.info);
  png_set_expand(r.png);
  png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);

  ImageRgb8 img;
  img.width = static_cast<int>(png_get_image_width(r.png, r.info));
  img.height = static_cast<int>(png_get_image_height(r.png, r.info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int y = 0; y < img.height; ++y) {
    png_read_row(r.png, &img.pixels[static_cast<std::size_t>(y) * img.width * 3], nullptr);
  }
  return img;
}

ImageGray16 read_png_gray16(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open for reading");

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  r.info = r.png ? png_create_info_struct(r.png) : nullptr;
  if (!r.png || !r.info) fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(r.png))) fail(path, "libpng read error");

  png_init_io(r.png, fp.get());
  png_read_info(r.png, r.info);
  if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(r.png, r.info) != 16) {
    fail(path, "expected 16-bit grayscale PNG");
  }
  png_read_update_info(r.png, r.info);

  ImageGray16 img;
  img.width = static_cast<int>(png_get_image_width(r.png, r.info));
  img.height = static_cast<int>(png_get_image_height(r.png, r.info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 2);
  for (int y = 0; y < img.height; ++y) {
    png_read_row(r.png, row.data(), nullptr);
    for (int x = 0; x < img.width; ++x) {
      img.pixels[static_cast<std::size_t>(y) * img.width + x] =
          static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
    }
  }
  return img;
}

}  // namespace sctx
