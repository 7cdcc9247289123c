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


#include "ladc/lad.hpp"

#include <set>

#include "ladc/error.hpp"

namespace ladc {

std::vector<std::string> ActivationSet::layer_ids() const {
  std::vector<std::string> ids;
  ids.reserve(layers.size());
  for (const auto& l : layers) ids.push_back(l.layer_id);
  return ids;
}

std::size_t ActivationSet::total_channels() const {
  std::size_t total = 0;
  for (const auto& l : layers) total += l.activation.channels();
  return total;
}

Standardization Standardization::from_stats(const StreamingStats& stats) {
  Standardization s;
  const auto sd = stats.stddev();
  for (std::size_t k = 0; k < stats.channels(); ++k) {
    s.mean.push_back(static_cast<float>(stats.mean()[k]));
    const auto v = static_cast<float>(sd[k]);
    s.stddev.push_back(v > 0.0f ? v : 1.0f);
  }
  return s;
}

DescriptorField assemble_descriptors(const ActivationSet& acts,
                                     const std::optional<Standardization>& standardize) {
  if (acts.layers.empty()) {
    fail(ErrorCode::kInvalidArgument, "assemble_descriptors: empty layer set");
  }
  std::set<std::string> seen;
  std::vector<Tensor> upscaled;
  upscaled.reserve(acts.layers.size());
  for (const auto& l : acts.layers) {
    if (!seen.insert(l.layer_id).second) {
      fail(ErrorCode::kInvalidArgument, "assemble_descriptors: duplicate layer " + l.layer_id);
    }
    if (l.activation.rank() != 3) {
      fail(ErrorCode::kShapeMismatch, "layer " + l.layer_id + " activation is " +
                                          l.activation.shape_string() +
                                          ", expected h x w x c");
    }
    upscaled.push_back(bilinear_upscale(l.activation, acts.input_resolution));
  }
  Tensor field = concat_channels(upscaled);
  upscaled.clear();

  if (standardize) {
    const std::size_t d = field.channels();
    if (standardize->mean.size() != d || standardize->stddev.size() != d) {
      fail(ErrorCode::kShapeMismatch,
           "assemble_descriptors: standardization has " +
               std::to_string(standardize->mean.size()) + " channels, descriptors have " +
               std::to_string(d));
    }
    for (float s : standardize->stddev) {
      if (!(s > 0.0f)) fail(ErrorCode::kInvalidArgument, "assemble_descriptors: std <= 0");
    }
    auto data = field.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t k = i % d;
      data[i] = (data[i] - standardize->mean[k]) / standardize->stddev[k];
    }
  }
  return DescriptorField{std::move(field), acts.source_image_id};
}

}  // namespace ladc
