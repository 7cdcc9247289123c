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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ladc/tensor.hpp"

namespace ladc {

enum class CueShape { kSquare, kDisk, kStripes };

const char* cue_shape_name(CueShape s);

struct CueSpec {
  CueShape shape = CueShape::kSquare;
  std::string color_name;
  std::array<float, 3> color{};
  std::size_t spacing = 0;  // gap between stripes; 0 for other shapes
};

struct SynthOptions {
  std::size_t n_classes = 3;
  std::size_t count = 40;  // images per class
  std::size_t size = 128;
  std::uint64_t seed = 0;
  // Classes 0 and 1 share a stripe cue that differs only in stripe spacing.
  bool entangled = false;
};

// Cue assignment per class for the given options.
std::vector<CueSpec> synth_class_cues(const SynthOptions& options);
std::string synth_class_name(std::size_t k, const CueSpec& cue);

struct SynthImage {
  Tensor image;  // size x size x 3, black background
  Tensor mask;   // size x size x 1, ground-truth cue pixels
  std::vector<std::array<std::size_t, 4>> boxes;  // x, y, w, h per cue
};

// Renders image `i` of class `k`; depends only on (options, k, i).
SynthImage synth_render(const SynthOptions& options, std::size_t k, std::size_t i);

// Writes <out>/images/<class>/*.png, <out>/masks/<class>/*.png (1-bit) and
// <out>/manifest.json. Returns the manifest path.
std::filesystem::path synth_dataset(const SynthOptions& options, const std::filesystem::path& out);

}  // namespace ladc
