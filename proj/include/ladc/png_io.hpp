// Copyright 2026 The ladc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <filesystem>

#include "ladc/tensor.hpp"

namespace ladc {

// Decodes any 8/16-bit PNG to an H x W x 3 tensor in [0, 1] (grey is
// replicated, alpha dropped).
Tensor read_png_rgb(const std::filesystem::path& path);

// Writes an H x W x 3 (RGB) or H x W x 1 (grey) tensor as 8-bit PNG with
// values clamp(round(255 v)).
void write_png(const Tensor& image, const std::filesystem::path& path);

// Writes an H x W x 1 binary tensor as a 1-bit greyscale PNG.
void write_mask_png(const Tensor& mask, const std::filesystem::path& path);

// Reads a greyscale or RGB PNG as a binary H x W x 1 mask (any nonzero
// sample counts as set).
Tensor read_mask_png(const std::filesystem::path& path);

}  // namespace ladc
