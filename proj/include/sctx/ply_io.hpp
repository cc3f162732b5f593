// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "sctx/context.hpp"

namespace sctx {

/// Binary little-endian PLY with vertex properties x,y,z (float32),
/// red,green,blue (uchar, mapped to [0,1] by /255) and instance (uint32).
/// Extra vertex properties of known scalar types are skipped on load.
LabeledPointCloud load_cloud(const std::string& path);

/// Canonical writer for the same layout. save then load is bit-identical
/// for clouds whose positions are float32-representable and whose colors
/// are 1/255-quantized.
void save_cloud(const LabeledPointCloud& cloud, const std::string& path);

}  // namespace sctx
