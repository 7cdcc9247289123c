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


#include "ladc/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ladc/error.hpp"
#include "ladc/parallel.hpp"

namespace ladc {

std::size_t ConceptMask::area() const {
  std::size_t n = 0;
  for (float v : mask.data()) n += v != 0.0f;
  return n;
}

Tensor LabelMap::to_tensor() const {
  std::vector<float> data(labels.begin(), labels.end());
  return Tensor({height, width, 1}, std::move(data));
}

LabelMap LabelMap::from_tensor(const Tensor& t, std::string image_id) {
  if (t.rank() != 3 || t.channels() != 1) {
    fail(ErrorCode::kShapeMismatch, "label map must be H x W x 1, got " + t.shape_string());
  }
  LabelMap m{t.height(), t.width(), {}, std::move(image_id)};
  m.labels.reserve(t.size());
  for (float v : t.data()) {
    if (v < 0.0f || v != std::floor(v)) {
      fail(ErrorCode::kInvalidArgument, "label map holds a non-integer label");
    }
    m.labels.push_back(static_cast<std::uint32_t>(v));
  }
  return m;
}

ConceptMask LabelMap::mask(std::size_t concept_index) const {
  std::vector<float> data(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    data[i] = labels[i] == concept_index ? 1.0f : 0.0f;
  }
  return ConceptMask{Tensor({height, width, 1}, std::move(data)), concept_index, image_id};
}

std::vector<std::size_t> LabelMap::areas(std::size_t n_concepts) const {
  std::vector<std::size_t> a(n_concepts, 0);
  for (auto l : labels) {
    if (l < n_concepts) ++a[l];
  }
  return a;
}

LabelMap compute_labels(const DescriptorField& field, const CentroidSet& centroids,
                        std::size_t workers) {
  if (field.dim() != centroids.dim()) {
    fail(ErrorCode::kShapeMismatch, "descriptor dimension " + std::to_string(field.dim()) +
                                        " does not match centroid dimension " +
                                        std::to_string(centroids.dim()));
  }
  const std::size_t h = field.field.height(), w = field.field.width();
  LabelMap m{h, w, std::vector<std::uint32_t>(h * w), field.image_id};
  const auto data = field.field.data();
  const std::size_t d = field.dim();
  parallel_for(h, workers, [&](std::size_t row) {
    for (std::size_t col = 0; col < w; ++col) {
      const std::size_t px = row * w + col;
      m.labels[px] = static_cast<std::uint32_t>(
          assign_nearest(centroids, data.subspan(px * d, d)));
    }
  });
  return m;
}

std::vector<ConceptMask> masks_from_labels(const LabelMap& labels, std::size_t n_concepts) {
  std::vector<ConceptMask> masks;
  masks.reserve(n_concepts);
  for (std::size_t j = 0; j < n_concepts; ++j) masks.push_back(labels.mask(j));
  return masks;
}

std::vector<ConceptMask> compute_masks(const DescriptorField& field,
                                       const CentroidSet& centroids) {
  return masks_from_labels(compute_labels(field, centroids), centroids.count());
}

Tensor build_example(const Tensor& image, const ConceptMask& mask, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "build_example: lambda must lie in [0, 1]");
  }
  if (image.rank() != 3 || mask.mask.rank() != 3 || mask.mask.channels() != 1 ||
      image.height() != mask.mask.height() || image.width() != mask.mask.width()) {
    fail(ErrorCode::kShapeMismatch, "build_example: image " + image.shape_string() +
                                        " vs mask " + mask.mask.shape_string());
  }
  Tensor out = image;
  const std::size_t c = image.channels();
  auto data = out.mutable_data();
  const auto m = mask.mask.data();
  for (std::size_t px = 0; px < m.size(); ++px) {
    const double mv = m[px];
    for (std::size_t k = 0; k < c; ++k) {
      const double x = data[px * c + k];
      data[px * c + k] = static_cast<float>((1.0 - lambda) * mv * x + lambda * x);
    }
  }
  return out;
}

std::vector<RenderedExample> build_example_set(std::vector<ExampleCandidate> corpus,
                                               double lambda, std::size_t max_examples) {
  std::vector<std::pair<std::size_t, std::size_t>> ranked;  // (area, position)
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::size_t a = corpus[i].mask.area();
    if (a > 0) ranked.emplace_back(a, i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  if (ranked.size() > max_examples) ranked.resize(max_examples);

  std::vector<RenderedExample> out;
  out.reserve(ranked.size());
  for (auto [area, i] : ranked) {
    auto& cand = corpus[i];
    out.push_back(RenderedExample{cand.image_id, area,
                                  build_example(cand.image, cand.mask, lambda),
                                  std::move(cand.mask)});
  }
  return out;
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s + "]";
}

}  // namespace

void check_layer_config(const ActivationSet& acts, const ConceptModel& model) {
  std::ostringstream diff;
  const auto ids = acts.layer_ids();
  if (ids != model.layers) {
    diff << "layers: fit-time " << join(model.layers) << ", given " << join(ids) << "; ";
  } else {
    for (std::size_t i = 0; i < ids.size() && i < model.layer_channels.size(); ++i) {
      const std::size_t c = acts.layers[i].activation.rank() == 3
                                ? acts.layers[i].activation.channels()
                                : 0;
      if (c != model.layer_channels[i]) {
        diff << "layer " << ids[i] << " channels: fit-time " << model.layer_channels[i]
             << ", given " << c << "; ";
      }
    }
  }
  if (!(acts.input_resolution == model.input_resolution)) {
    diff << "input resolution: fit-time " << model.input_resolution.height << "x"
         << model.input_resolution.width << ", given " << acts.input_resolution.height << "x"
         << acts.input_resolution.width << "; ";
  }
  const std::string d = diff.str();
  if (!d.empty()) fail(ErrorCode::kLayerConfigMismatch, "layer configuration mismatch: " + d);
}

ConceptMask localize(const ActivationSet& acts, const ConceptModel& model,
                     std::size_t concept_index) {
  if (concept_index >= model.centroids.count()) {
    fail(ErrorCode::kInvalidArgument, "localize: concept " + std::to_string(concept_index) +
                                          " out of range (n_c = " +
                                          std::to_string(model.centroids.count()) + ")");
  }
  check_layer_config(acts, model);
  const auto field = assemble_descriptors(acts, model.standardization);
  return compute_labels(field, model.centroids).mask(concept_index);
}

}  // namespace ladc
