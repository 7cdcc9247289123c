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


#include "ladc/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ladc/error.hpp"
#include "ladc/pipeline.hpp"
#include "ladc/png_io.hpp"

namespace ladc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string two_digit(const char* prefix, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

Tensor tile_grid(const std::vector<RenderedExample>& examples, std::size_t columns) {
  const std::size_t gap = 2;
  const std::size_t h = examples[0].rendered.height(), w = examples[0].rendered.width();
  const std::size_t cols = std::min(columns, examples.size());
  const std::size_t rows = (examples.size() + cols - 1) / cols;
  Tensor grid = Tensor::filled({rows * h + (rows - 1) * gap, cols * w + (cols - 1) * gap, 3}, 1.0f);
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const std::size_t oy = (e / cols) * (h + gap), ox = (e % cols) * (w + gap);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t c = 0; c < 3; ++c) grid.at(oy + i, ox + j, c) = examples[e].rendered.at(i, j, c);
      }
    }
  }
  return grid;
}

}  // namespace

json generate_report(const fs::path& out_dir, const ReportOptions& options) {
  const ArtifactPaths paths{out_dir};
  const Analysis analysis = load_analysis(out_dir);
  const ScoreResult score = load_score(paths);
  const std::size_t n_c = analysis.model.centroids.count();
  const std::size_t n = analysis.index.size();
  if (score.report.n_concepts != n_c || score.report.importance.size() != n_c) {
    fail(ErrorCode::kDataset, "importance.json does not match the extracted concepts");
  }
  const double lambda = options.lambda.value_or(analysis.config.lambda);

  // areas[i][j]: pixels of concept j in image i.
  std::vector<std::vector<std::size_t>> areas(n);
  for (std::size_t i = 0; i < n; ++i) {
    areas[i] = load_labels(paths, analysis.index, i).areas(n_c);
  }

  const fs::path concepts_dir = out_dir / "concepts";
  fs::remove_all(concepts_dir);

  std::vector<std::size_t> order(n_c);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score.report.importance[a] > score.report.importance[b];
  });

  json concepts = json::array();
  for (std::size_t j : order) {
    std::size_t present = 0;
    std::vector<std::size_t> ranked;
    for (std::size_t i = 0; i < n; ++i) {
      if (areas[i][j] == 0) continue;
      ++present;
      ranked.push_back(i);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return areas[a][j] > areas[b][j]; });
    if (ranked.size() > options.max_examples) ranked.resize(options.max_examples);

    std::vector<ExampleCandidate> candidates;
    for (std::size_t i : ranked) {
      candidates.push_back({analysis.index.images[i].id, load_image(analysis.index, i),
                            load_labels(paths, analysis.index, i).mask(j)});
    }
    const auto examples = build_example_set(std::move(candidates), lambda, options.max_examples);

    const std::string dir_name = two_digit("concept_", j);
    const fs::path dir = concepts_dir / dir_name;
    json example_files = json::array(), mask_files = json::array(), example_ids = json::array();
    json grid_file = nullptr;
    if (!examples.empty()) {
      fs::create_directories(dir);
      for (std::size_t e = 0; e < examples.size(); ++e) {
        const std::string ex = two_digit("example_", e) + ".png";
        const std::string mk = two_digit("mask_", e) + ".png";
        write_png(examples[e].rendered, dir / ex);
        write_mask_png(examples[e].mask.mask, dir / mk);
        example_files.push_back("concepts/" + dir_name + "/" + ex);
        mask_files.push_back("concepts/" + dir_name + "/" + mk);
        example_ids.push_back(examples[e].image_id);
      }
      write_png(tile_grid(examples, options.grid_columns), dir / "grid.png");
      grid_file = "concepts/" + dir_name + "/grid.png";
    }
    concepts.push_back({{"index", j},
                        {"importance", score.report.importance[j]},
                        {"mean_relevance", score.report.mean_relevance[j]},
                        {"n_images_present", present},
                        {"n_images_scored", score.report.presence[j]},
                        {"centroid_file", paths.centroids().filename().string()},
                        {"centroid_row", j},
                        {"grid", grid_file},
                        {"examples", example_files},
                        {"example_masks", mask_files},
                        {"example_images", example_ids}});
  }

  const auto& c = analysis.config;
  json doc{{"config",
            {{"layers", c.layers},
             {"n_concepts", c.n_concepts},
             {"batch_size", c.batch_size},
             {"lambda", lambda},
             {"epochs", c.epochs},
             {"seed", c.seed},
             {"standardize", c.standardize},
             {"shuffle_batches", c.shuffle_batches},
             {"input_resolution", {analysis.index.resolution.height, analysis.index.resolution.width}},
             {"max_examples", options.max_examples}}},
           {"classes", analysis.index.classes},
           {"runner",
            {{"protocol", analysis.runner.protocol},
             {"n_k", analysis.runner.n_classes},
             {"input_normalization", analysis.runner.input_normalization.empty()
                                         ? json(nullptr)
                                         : json::parse(analysis.runner.input_normalization)}}},
           {"concepts", concepts},
           {"skipped_images", score.skipped_images},
           {"eval_counts",
            {{"n_images", n},
             {"extraction_forward", analysis.extraction_forward},
             {"extraction_passes", analysis.extraction_passes},
             {"scoring_gradient", score.gradient_evaluations}}}};

  const auto problems = validate_concepts_json(doc);
  if (!problems.empty()) {
    fail(ErrorCode::kDataset, "concepts.json failed schema validation: " + problems.front());
  }
  std::ofstream out(paths.concepts_json(), std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + paths.concepts_json().string());
  out << doc.dump(2) << "\n";
  if (!out) fail(ErrorCode::kIo, "write failed: " + paths.concepts_json().string());
  return doc;
}

std::vector<std::string> validate_concepts_json(const json& doc) {
  std::vector<std::string> errs;
  auto need = [&](const json& obj, const char* key, json::value_t type, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
      errs.push_back(where + ": missing '" + key + "'");
      return false;
    }
    const auto t = obj.at(key).type();
    const bool number_ok = type == json::value_t::number_float &&
                           (t == json::value_t::number_integer || t == json::value_t::number_unsigned);
    const bool unsigned_ok = type == json::value_t::number_unsigned && t == json::value_t::number_integer &&
                             obj.at(key).get<std::int64_t>() >= 0;
    if (t != type && !number_ok && !unsigned_ok) {
      errs.push_back(where + ": '" + key + "' has type " + obj.at(key).type_name());
      return false;
    }
    return true;
  };
  using vt = json::value_t;
  if (!doc.is_object()) return {"document is not an object"};
  if (need(doc, "config", vt::object, "root")) {
    const auto& c = doc["config"];
    need(c, "layers", vt::array, "config");
    need(c, "n_concepts", vt::number_unsigned, "config");
    need(c, "batch_size", vt::number_unsigned, "config");
    need(c, "lambda", vt::number_float, "config");
    need(c, "epochs", vt::number_unsigned, "config");
    need(c, "seed", vt::number_unsigned, "config");
    need(c, "standardize", vt::boolean, "config");
  }
  need(doc, "classes", vt::array, "root");
  need(doc, "skipped_images", vt::number_unsigned, "root");
  if (need(doc, "eval_counts", vt::object, "root")) {
    need(doc["eval_counts"], "n_images", vt::number_unsigned, "eval_counts");
    need(doc["eval_counts"], "extraction_forward", vt::number_unsigned, "eval_counts");
    need(doc["eval_counts"], "scoring_gradient", vt::number_unsigned, "eval_counts");
  }
  if (need(doc, "concepts", vt::array, "root")) {
    double prev = 2.0;
    std::size_t prev_index = 0;
    bool any_positive = false;
    double peak = 0.0;
    for (std::size_t k = 0; k < doc["concepts"].size(); ++k) {
      const auto& c = doc["concepts"][k];
      const std::string where = "concepts[" + std::to_string(k) + "]";
      const bool ok = need(c, "index", vt::number_unsigned, where) &
                      need(c, "importance", vt::number_float, where) &
                      need(c, "n_images_present", vt::number_unsigned, where) &
                      need(c, "centroid_file", vt::string, where) &
                      need(c, "examples", vt::array, where);
      if (!ok) continue;
      const double imp = c["importance"].get<double>();
      if (imp < 0.0 || imp > 1.0) errs.push_back(where + ": importance outside [0, 1]");
      const std::size_t idx = c["index"].get<std::size_t>();
      if (imp > prev || (imp == prev && idx < prev_index)) {
        errs.push_back(where + ": concepts not sorted by importance, then index");
      }
      prev = imp;
      prev_index = idx;
      any_positive |= imp > 0.0;
      peak = std::max(peak, imp);
      if (c["examples"].size() > c["n_images_present"].get<std::size_t>()) {
        errs.push_back(where + ": more examples than images containing the concept");
      }
    }
    if (any_positive && peak != 1.0) errs.push_back("concepts: maximum importance is not 1");
    if (doc.contains("config") && doc["config"].contains("n_concepts") &&
        doc["config"]["n_concepts"].is_number() &&
        doc["concepts"].size() != doc["config"]["n_concepts"].get<std::size_t>()) {
      errs.push_back("concepts: count differs from config.n_concepts");
    }
  }
  return errs;
}

}  // namespace ladc
