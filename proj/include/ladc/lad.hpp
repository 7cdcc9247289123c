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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ladc/tensor.hpp"

namespace ladc {

struct LayerActivation {
  std::string layer_id;
  Tensor activation;  // h_l x w_l x c_l
};

// Activations of the configured layers for one image, in configuration order.
struct ActivationSet {
  std::vector<LayerActivation> layers;
  std::string source_image_id;
  Resolution input_resolution;

  std::vector<std::string> layer_ids() const;
  std::size_t total_channels() const;
};

// Per-channel affine map v -> (v - mean) / std applied to descriptors.
struct Standardization {
  std::vector<float> mean;
  std::vector<float> stddev;

  // Channels with zero spread get stddev 1 so the map stays defined.
  static Standardization from_stats(const StreamingStats& stats);
};

// Per-pixel local aggregated descriptors: field(a, b) is the concatenation of
// every configured layer's activation upscaled to the input resolution.
struct DescriptorField {
  Tensor field;  // H x W x D_total
  std::string image_id;

  std::size_t dim() const { return field.channels(); }
  std::size_t pixel_count() const { return field.height() * field.width(); }
};

DescriptorField assemble_descriptors(
    const ActivationSet& acts,
    const std::optional<Standardization>& standardize = std::nullopt);

}  // namespace ladc
