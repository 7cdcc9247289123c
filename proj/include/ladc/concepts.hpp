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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ladc/clustering.hpp"
#include "ladc/lad.hpp"

namespace ladc {

// Binary localization of one concept in one image (H x W x 1, values 0/1).
struct ConceptMask {
  Tensor mask;
  std::size_t concept_index = 0;
  std::string image_id;

  std::size_t area() const;
  bool present() const { return area() > 0; }
};

struct ConceptRecord {
  std::size_t concept_index = 0;
  std::vector<float> centroid;
  double importance = 0.0;
  std::size_t n_images_present = 0;
  std::vector<std::string> example_refs;
};

// Nearest-centroid label of every pixel, row-major (H x W).
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint32_t> labels;
  std::string image_id;

  Tensor to_tensor() const;  // H x W x 1, labels stored as floats
  static LabelMap from_tensor(const Tensor& t, std::string image_id = {});
  ConceptMask mask(std::size_t concept_index) const;
  std::vector<std::size_t> areas(std::size_t n_concepts) const;
};

LabelMap compute_labels(const DescriptorField& field, const CentroidSet& centroids,
                        std::size_t workers = 1);

// One mask per concept; pixel (a, b) is set in mask j iff its descriptor's
// nearest centroid is j, so the masks partition the pixel grid.
std::vector<ConceptMask> compute_masks(const DescriptorField& field,
                                       const CentroidSet& centroids);
std::vector<ConceptMask> masks_from_labels(const LabelMap& labels, std::size_t n_concepts);

// (1 - lambda) * (m . x) + lambda * x with the mask broadcast over channels.
Tensor build_example(const Tensor& image, const ConceptMask& mask, double lambda);

struct ExampleCandidate {
  std::string image_id;
  Tensor image;
  ConceptMask mask;
};

struct RenderedExample {
  std::string image_id;
  std::size_t mask_area = 0;
  Tensor rendered;
  ConceptMask mask;
};

// Ranks candidates by mask area (descending, ties in input order), drops
// images where the concept is absent, renders the top max_examples.
std::vector<RenderedExample> build_example_set(std::vector<ExampleCandidate> corpus,
                                               double lambda, std::size_t max_examples);

// Everything needed to reproduce the fit-time descriptor space.
struct ConceptModel {
  CentroidSet centroids;
  std::vector<std::string> layers;
  std::vector<std::size_t> layer_channels;
  std::optional<Standardization> standardization;
  Resolution input_resolution;
};

// Rejects activation sets whose layer configuration differs from the model's,
// listing both configurations.
void check_layer_config(const ActivationSet& acts, const ConceptModel& model);

ConceptMask localize(const ActivationSet& acts, const ConceptModel& model,
                     std::size_t concept_index);

}  // namespace ladc
