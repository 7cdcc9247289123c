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

#include <cstddef>
#include <span>
#include <vector>

#include "ladc/concepts.hpp"
#include "ladc/tensor.hpp"

namespace ladc {

// g(y) = || y 1^T - 1 y^T ||_F = sqrt(sum_{i,j} (y_i - y_j)^2): a scalar that
// grows with the pairwise separation of the logits. Requires n_k >= 2.
double wrapper_g(std::span<const float> logits);
double wrapper_g(std::span<const double> logits);

// dg/dy_i = (2 n_k y_i - 2 sum(y)) / g(y). Throws kUndefinedGradient when
// g(y) == 0.
std::vector<double> grad_g_wrt_logits(std::span<const double> logits);
std::vector<double> grad_g_wrt_logits(std::span<const float> logits);

// r = sum of |input_grad| over the masked-in pixels, all channels.
double image_relevance(const Tensor& input_grad, const ConceptMask& mask);

class RelevanceAccumulator {
 public:
  RelevanceAccumulator() = default;
  explicit RelevanceAccumulator(std::size_t n_concepts)
      : sums_(n_concepts, 0.0), presence_(n_concepts, 0) {}

  // One mask per concept for a single image.
  void accumulate(std::span<const ConceptMask> image_masks, const Tensor& input_grad);
  // Label-map form of the same update.
  void accumulate(const LabelMap& labels, const Tensor& input_grad);
  void merge(const RelevanceAccumulator& other);

  std::size_t n_concepts() const { return sums_.size(); }
  const std::vector<double>& sums() const { return sums_; }
  const std::vector<std::size_t>& presence() const { return presence_; }

 private:
  std::vector<double> sums_;
  std::vector<std::size_t> presence_;
};

struct ImportanceReport {
  std::vector<double> mean_relevance;
  std::vector<double> importance;
  std::vector<std::size_t> presence;
  std::size_t n_classes = 0;
  std::size_t n_concepts = 0;
};

// Mean relevance over the images where each concept is present (0 when
// absent), then |mean| scaled by the largest |mean| into [0, 1].
ImportanceReport finalize(const RelevanceAccumulator& acc, std::size_t n_classes = 0);

}  // namespace ladc
