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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ladc/concepts.hpp"
#include "ladc/dataset.hpp"
#include "ladc/importance.hpp"
#include "ladc/runner.hpp"

namespace ladc {

struct ExtractionConfig {
  std::vector<std::string> layers;
  std::size_t n_concepts = 20;
  std::size_t batch_size = 8;
  double lambda = 0.3;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  bool standardize = true;
  bool shuffle_batches = false;
  std::optional<Resolution> resolution;
  std::size_t workers = 1;
  // How the runner was chosen ("toy" or a shell command); recorded so later
  // commands can reconnect.
  std::string runner_spec = "toy";

  void validate() const;
};

struct ExtractionResult {
  ConceptModel model;
  std::size_t passes = 0;
  std::uint64_t forward_evaluations = 0;
  std::size_t reseeded = 0;
};

// File layout of an analysis directory.
struct ArtifactPaths {
  std::filesystem::path root;

  std::filesystem::path centroids() const { return root / "centroids.ltns"; }
  std::filesystem::path centroids_sidecar() const { return root / "centroids.json"; }
  std::filesystem::path extraction() const { return root / "extraction.json"; }
  std::filesystem::path importance() const { return root / "importance.json"; }
  std::filesystem::path concepts_json() const { return root / "concepts.json"; }
  std::filesystem::path labels_dir() const { return root / "labels"; }
  std::filesystem::path label_file(std::size_t image) const;
  std::filesystem::path cache_dir() const { return root / "cache"; }
};

// Pass 1 (when standardizing) streams activations into per-channel
// statistics; pass 2 assembles descriptors batch by batch, spills them to a
// cache and feeds the streaming k-means; finally every image's label map is
// written. Exactly passes x N forward evaluations are made.
// Image order used to compose extraction batches: a permutation of [0, n)
// determined by the seed.
std::vector<std::size_t> extraction_order(std::size_t n, std::uint64_t seed);

ExtractionResult extract_concepts(const DatasetIndex& index, ModelRunner& runner,
                                  const ExtractionConfig& config,
                                  const std::filesystem::path& out_dir);

struct ScoreResult {
  ImportanceReport report;
  std::size_t skipped_images = 0;
  std::uint64_t gradient_evaluations = 0;
};

// One grad_g evaluation per image, accumulated against the stored label maps.
ScoreResult score_concepts(const DatasetIndex& index, ModelRunner& runner,
                           const ConceptModel& model, const std::filesystem::path& out_dir,
                           std::size_t batch_size, std::size_t workers = 1);

// Persisted state of an analysis directory.
struct Analysis {
  ExtractionConfig config;
  DatasetIndex index;
  ConceptModel model;
  RunnerInfo runner;
  std::uint64_t extraction_forward = 0;
  std::size_t extraction_passes = 0;
};

void save_model(const ConceptModel& model, const ExtractionConfig& config,
                const ArtifactPaths& paths);
ConceptModel load_model(const ArtifactPaths& paths);
Analysis load_analysis(const std::filesystem::path& out_dir);
void save_score(const ScoreResult& score, const ArtifactPaths& paths);
ScoreResult load_score(const ArtifactPaths& paths);
LabelMap load_labels(const ArtifactPaths& paths, const DatasetIndex& index, std::size_t image);

// Localizes a concept in an arbitrary image using the stored model.
ConceptMask localize_image(const std::filesystem::path& out_dir, ModelRunner& runner,
                           const Tensor& image, std::size_t concept_index,
                           const std::string& image_id = "image");

}  // namespace ladc
