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


#include <algorithm>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "ladc/dataset.hpp"
#include "ladc/error.hpp"
#include "ladc/importance.hpp"
#include "ladc/pipeline.hpp"
#include "ladc/png_io.hpp"
#include "ladc/report.hpp"
#include "ladc/synth.hpp"
#include "test_util.hpp"

using namespace ladc;
using ladc::testing::TempDir;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ExtractionConfig small_config() {
  ExtractionConfig c;
  c.layers = {"a1", "a2"};
  c.n_concepts = 6;
  c.batch_size = 4;
  c.epochs = 3;
  c.seed = 11;
  return c;
}

fs::path small_corpus(const TempDir& dir) {
  SynthOptions o;
  o.n_classes = 3;
  o.count = 4;
  o.size = 32;
  o.seed = 8;
  synth_dataset(o, dir / "synth");
  return dir / "synth" / "images";
}

// Runs extract + score + report into out.
json run_all(const fs::path& data, const fs::path& out, ExtractionConfig config,
             std::size_t score_workers = 1) {
  const auto index = ingest_dataset(data);
  ToyRunner toy(index.n_classes());
  extract_concepts(index, toy, config, out);
  const auto analysis = load_analysis(out);
  save_score(score_concepts(index, toy, analysis.model, out, config.batch_size, score_workers),
             ArtifactPaths{out});
  return generate_report(out);
}

json strip_paths(json doc) {
  for (auto& c : doc["concepts"]) {
    c.erase("grid");
    c.erase("examples");
    c.erase("example_masks");
  }
  return doc;
}

}  // namespace

TEST_CASE("extraction config validation") {
  ExtractionConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.n_concepts = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config();
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config();
  c.lambda = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config();
  c.layers.clear();
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("extraction order is a seeded permutation") {
  const auto a = extraction_order(50, 3), b = extraction_order(50, 3), c = extraction_order(50, 4);
  CHECK(a == b);
  CHECK(a != c);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("extraction: evaluation audit, label maps, partition, cache cleanup") {
  TempDir dir("extract");
  const auto data = small_corpus(dir);
  const auto index = ingest_dataset(data);
  for (bool standardize : {true, false}) {
    ToyRunner toy(3);
    auto config = small_config();
    config.standardize = standardize;
    const fs::path out = dir / (standardize ? "std" : "raw");
    const auto result = extract_concepts(index, toy, config, out);
    CHECK(result.passes == (standardize ? 2u : 1u));
    CHECK(toy.counter().forward_count == result.passes * index.size());
    CHECK(toy.counter().gradient_count == 0);
    CHECK(result.model.centroids.count() == 6);
    CHECK(result.model.standardization.has_value() == standardize);
    CHECK(!fs::exists(ArtifactPaths{out}.cache_dir()));
    for (std::size_t i = 0; i < index.size(); ++i) {
      const auto labels = load_labels(ArtifactPaths{out}, index, i);
      const auto masks = masks_from_labels(labels, 6);
      for (std::size_t p = 0; p < labels.labels.size(); ++p) {
        float sum = 0;
        for (const auto& m : masks) sum += m.mask.data()[p];
        CHECK(sum == 1.0f);
      }
    }
    const auto model = load_model(ArtifactPaths{out});
    CHECK(model.centroids.bit_equal(result.model.centroids));
    CHECK(model.layers == config.layers);
    CHECK(model.layer_channels == std::vector<std::size_t>{3, 3});
  }
}

TEST_CASE("scoring makes one gradient evaluation per image and no forward pass") {
  TempDir dir("score");
  const auto data = small_corpus(dir);
  const auto index = ingest_dataset(data);
  ToyRunner toy(3);
  extract_concepts(index, toy, small_config(), dir / "out");
  const auto forward = toy.counter().forward_count;
  const auto analysis = load_analysis(dir / "out");
  const auto score = score_concepts(index, toy, analysis.model, dir / "out", 5, 2);
  CHECK(toy.counter().gradient_count == index.size());
  CHECK(toy.counter().forward_count == forward);
  CHECK(score.gradient_evaluations == index.size());
  CHECK(score.skipped_images == 0);
  double peak = 0;
  for (double v : score.report.importance) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    peak = std::max(peak, v);
  }
  CHECK(peak == 1.0);
}

TEST_CASE("end-to-end runs are deterministic across repeats and worker counts") {
  TempDir dir("determinism");
  const auto data = small_corpus(dir);
  auto config = small_config();
  const json a = run_all(data, dir / "a", config);
  const json b = run_all(data, dir / "b", config);
  config.workers = 3;
  const json c = run_all(data, dir / "c", config, 3);
  CHECK(slurp(dir / "a" / "centroids.ltns") == slurp(dir / "b" / "centroids.ltns"));
  CHECK(slurp(dir / "a" / "centroids.ltns") == slurp(dir / "c" / "centroids.ltns"));
  CHECK(strip_paths(a) == strip_paths(b));
  CHECK(strip_paths(a)["concepts"] == strip_paths(c)["concepts"]);
  for (std::size_t i = 0; i < 12; ++i) {
    const auto f = ArtifactPaths{dir / "a"}.label_file(i).filename();
    CHECK(slurp(dir / "a" / "labels" / f) == slurp(dir / "c" / "labels" / f));
  }
}

TEST_CASE("report: ordering, example counts, round-trip and schema checks") {
  TempDir dir("report");
  const auto data = small_corpus(dir);
  const fs::path out = dir / "out";
  const json doc = run_all(data, out, small_config());
  CHECK(validate_concepts_json(doc).empty());
  CHECK(json::parse(slurp(out / "concepts.json")) == doc);
  CHECK(doc["concepts"].size() == 6);
  CHECK(doc["classes"].size() == 3);
  CHECK(doc["eval_counts"]["n_images"] == 12);
  CHECK(doc["eval_counts"]["extraction_forward"] == 24);
  CHECK(doc["eval_counts"]["scoring_gradient"] == 12);
  CHECK(doc["runner"]["protocol"] == "concept-runner/1");
  CHECK(doc["runner"]["input_normalization"].is_object());

  const auto score = load_score(ArtifactPaths{out});
  for (std::size_t r = 0; r < doc["concepts"].size(); ++r) {
    const auto& c = doc["concepts"][r];
    const std::size_t j = c["index"];
    CHECK(c["importance"].get<double>() == score.report.importance[j]);
    if (r > 0) {
      const auto& p = doc["concepts"][r - 1];
      const double pi = p["importance"], ci = c["importance"];
      CHECK((pi > ci || (pi == ci && p["index"].get<std::size_t>() < j)));
    }
    const std::size_t present = c["n_images_present"];
    CHECK(c["examples"].size() == std::min<std::size_t>(8, present));
    for (const auto& e : c["examples"]) CHECK(fs::exists(out / e.get<std::string>()));
    if (present > 0) CHECK(fs::exists(out / c["grid"].get<std::string>()));
  }

  const json small = generate_report(out, ReportOptions{2, 0.5, 2});
  for (const auto& c : small["concepts"]) {
    CHECK(c["examples"].size() == std::min<std::size_t>(2, c["n_images_present"].get<std::size_t>()));
  }
  CHECK(small["config"]["lambda"] == 0.5);

  json broken = doc;
  std::swap(broken["concepts"][0], broken["concepts"][1]);
  CHECK(!validate_concepts_json(broken).empty());
  broken = doc;
  broken["concepts"][0]["importance"] = 1.5;
  CHECK(!validate_concepts_json(broken).empty());
  broken = doc;
  broken.erase("eval_counts");
  CHECK(!validate_concepts_json(broken).empty());
  broken = doc;
  broken["concepts"].erase(broken["concepts"].size() - 1);
  CHECK(!validate_concepts_json(broken).empty());
}

TEST_CASE("localizing a training image reproduces its extraction mask") {
  TempDir dir("localize");
  const auto data = small_corpus(dir);
  const auto index = ingest_dataset(data);
  ToyRunner toy(3);
  extract_concepts(index, toy, small_config(), dir / "out");
  for (std::size_t i : {0u, 5u, 11u}) {
    const auto labels = load_labels(ArtifactPaths{dir / "out"}, index, i);
    for (std::size_t j = 0; j < 6; ++j) {
      const auto m = localize_image(dir / "out", toy, load_image(index, i), j, index.images[i].id);
      CHECK(m.mask.bit_equal(labels.mask(j).mask));
    }
  }
  CHECK_THROWS_AS(localize_image(dir / "out", toy, Tensor({16, 16, 3}), 0, "small"), Error);
}

TEST_CASE("degenerate corpora: all-black images") {
  TempDir dir("black");
  for (const char* cls : {"a", "b"}) {
    for (int i = 0; i < 3; ++i) {
      fs::create_directories(dir / "data" / cls);
      write_png(Tensor({8, 8, 3}), dir / "data" / cls / (std::to_string(i) + ".png"));
    }
  }
  const auto index = ingest_dataset(dir / "data");
  ToyRunner toy(2);
  auto config = small_config();
  config.n_concepts = 3;
  const auto result = extract_concepts(index, toy, config, dir / "out");
  CHECK(result.model.centroids.count() == 3);
  const auto score = score_concepts(index, toy, result.model, dir / "out", 4, 1);
  CHECK(score.skipped_images == index.size());
  CHECK(toy.counter().gradient_count == index.size());
  for (double v : score.report.importance) CHECK(v == 0.0);
  save_score(score, ArtifactPaths{dir / "out"});
  const json doc = generate_report(dir / "out");
  CHECK(doc["skipped_images"] == 6);
  CHECK(validate_concepts_json(doc).empty());
}

TEST_CASE("runner mismatch and runner failure leave no partial artifacts") {
  TempDir dir("failure");
  const auto data = small_corpus(dir);
  const auto index = ingest_dataset(data);
  ToyRunner four(4);
  CHECK_THROWS_AS(extract_concepts(index, four, small_config(), dir / "mismatch"), Error);

  SubprocessOptions o;
  o.command = std::string(LADC_FAKE_RUNNER) + " exit";
  SubprocessRunner dying(o);
  auto config = small_config();
  config.layers = {"x"};
  try {
    extract_concepts(index, dying, config, dir / "dead");
    FAIL("expected the runner to fail");
  } catch (const Error& e) {
    CHECK(is_runner_error(e.code()));
  }
  const ArtifactPaths paths{dir / "dead"};
  CHECK(!fs::exists(paths.centroids()));
  CHECK(!fs::exists(paths.labels_dir()));
  CHECK(!fs::exists(paths.cache_dir()));
}
