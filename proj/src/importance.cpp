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


#include "ladc/importance.hpp"

#include <cmath>

#include "ladc/error.hpp"

namespace ladc {

namespace {

template <typename T>
std::vector<double> centered(std::span<const T> y) {
  if (y.size() < 2) {
    fail(ErrorCode::kInvalidArgument, "wrapper g needs at least 2 logits, got " +
                                          std::to_string(y.size()));
  }
  // Shift by y_0 first so equal logits give exactly zero.
  std::vector<double> z(y.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(static_cast<double>(y[i]))) {
      fail(ErrorCode::kNonFinite, "wrapper g: non-finite logit");
    }
    z[i] = static_cast<double>(y[i]) - static_cast<double>(y[0]);
    mean += z[i];
  }
  mean /= static_cast<double>(y.size());
  for (double& v : z) v -= mean;
  return z;
}

// sum_{i,j} (y_i - y_j)^2 = 2 n sum_i (y_i - mean)^2
double g_from_centered(const std::vector<double>& z) {
  double ss = 0.0;
  for (double v : z) ss += v * v;
  return std::sqrt(2.0 * static_cast<double>(z.size()) * ss);
}

template <typename T>
std::vector<double> grad_impl(std::span<const T> y) {
  const auto z = centered(y);
  const double g = g_from_centered(z);
  if (g == 0.0) {
    fail(ErrorCode::kUndefinedGradient, "gradient of g undefined: all logits equal");
  }
  // 2 n y_i - 2 sum(y) == 2 n (y_i - mean)
  const double scale = 2.0 * static_cast<double>(z.size()) / g;
  std::vector<double> grad(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) grad[i] = scale * z[i];
  return grad;
}

}  // namespace

double wrapper_g(std::span<const double> logits) { return g_from_centered(centered(logits)); }
double wrapper_g(std::span<const float> logits) { return g_from_centered(centered(logits)); }

std::vector<double> grad_g_wrt_logits(std::span<const double> logits) { return grad_impl(logits); }
std::vector<double> grad_g_wrt_logits(std::span<const float> logits) { return grad_impl(logits); }

double image_relevance(const Tensor& input_grad, const ConceptMask& mask) {
  const Tensor& m = mask.mask;
  if (input_grad.rank() != 3 || m.rank() != 3 || m.channels() != 1 ||
      input_grad.height() != m.height() || input_grad.width() != m.width()) {
    fail(ErrorCode::kShapeMismatch, "image_relevance: gradient " + input_grad.shape_string() +
                                        " vs mask " + m.shape_string());
  }
  const std::size_t c = input_grad.channels();
  const auto g = input_grad.data();
  const auto mv = m.data();
  double r = 0.0;
  for (std::size_t px = 0; px < mv.size(); ++px) {
    if (mv[px] == 0.0f) continue;
    for (std::size_t k = 0; k < c; ++k) r += std::fabs(static_cast<double>(g[px * c + k]) * mv[px]);
  }
  return r;
}

void RelevanceAccumulator::accumulate(std::span<const ConceptMask> image_masks,
                                      const Tensor& input_grad) {
  if (image_masks.size() != sums_.size()) {
    fail(ErrorCode::kInvalidArgument, "accumulate: got " + std::to_string(image_masks.size()) +
                                          " masks for " + std::to_string(sums_.size()) +
                                          " concepts");
  }
  for (std::size_t j = 0; j < image_masks.size(); ++j) {
    if (!image_masks[j].present()) continue;
    sums_[j] += image_relevance(input_grad, image_masks[j]);
    ++presence_[j];
  }
}

void RelevanceAccumulator::accumulate(const LabelMap& labels, const Tensor& input_grad) {
  if (input_grad.rank() != 3 || input_grad.height() != labels.height ||
      input_grad.width() != labels.width) {
    fail(ErrorCode::kShapeMismatch, "accumulate: gradient " + input_grad.shape_string() +
                                        " vs label map " + std::to_string(labels.height) +
                                        "x" + std::to_string(labels.width));
  }
  const std::size_t c = input_grad.channels();
  const auto g = input_grad.data();
  // Per-image sums first, so the floating-point order matches image_relevance.
  std::vector<double> local(sums_.size(), 0.0);
  std::vector<bool> seen(sums_.size(), false);
  for (std::size_t px = 0; px < labels.labels.size(); ++px) {
    const auto j = labels.labels[px];
    if (j >= sums_.size()) {
      fail(ErrorCode::kInvalidArgument, "accumulate: label " + std::to_string(j) +
                                            " out of range");
    }
    seen[j] = true;
    for (std::size_t k = 0; k < c; ++k) local[j] += std::fabs(static_cast<double>(g[px * c + k]));
  }
  for (std::size_t j = 0; j < sums_.size(); ++j) {
    if (!seen[j]) continue;
    sums_[j] += local[j];
    ++presence_[j];
  }
}

void RelevanceAccumulator::merge(const RelevanceAccumulator& other) {
  if (other.sums_.size() != sums_.size()) {
    fail(ErrorCode::kInvalidArgument, "RelevanceAccumulator::merge: concept count mismatch");
  }
  for (std::size_t j = 0; j < sums_.size(); ++j) {
    sums_[j] += other.sums_[j];
    presence_[j] += other.presence_[j];
  }
}

ImportanceReport finalize(const RelevanceAccumulator& acc, std::size_t n_classes) {
  ImportanceReport report;
  report.n_concepts = acc.n_concepts();
  report.n_classes = n_classes;
  report.presence = acc.presence();
  report.mean_relevance.assign(acc.n_concepts(), 0.0);
  report.importance.assign(acc.n_concepts(), 0.0);
  double peak = 0.0;
  for (std::size_t j = 0; j < acc.n_concepts(); ++j) {
    if (acc.presence()[j] > 0) {
      report.mean_relevance[j] = acc.sums()[j] / static_cast<double>(acc.presence()[j]);
    }
    peak = std::max(peak, std::fabs(report.mean_relevance[j]));
  }
  if (peak > 0.0) {
    for (std::size_t j = 0; j < acc.n_concepts(); ++j) {
      report.importance[j] = std::fabs(report.mean_relevance[j]) / peak;
    }
  }
  return report;
}

}  // namespace ladc
