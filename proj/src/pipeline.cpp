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


#include "ladc/pipeline.hpp"

#include <cstdio>
#include <numeric>
#include <random>
#include <span>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "ladc/error.hpp"
#include "ladc/parallel.hpp"

namespace ladc {

namespace fs = std::filesystem;
using json = nlohmann::json;

void ExtractionConfig::validate() const {
  if (layers.empty()) fail(ErrorCode::kInvalidArgument, "no layers configured");
  if (n_concepts < 2) fail(ErrorCode::kInvalidArgument, "n_concepts must be at least 2");
  if (batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch_size must be at least 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorCode::kInvalidArgument, "lambda must lie in [0, 1]");
  if (epochs < 1) fail(ErrorCode::kInvalidArgument, "epochs must be at least 1");
  if (workers < 1) fail(ErrorCode::kInvalidArgument, "workers must be at least 1");
}

fs::path ArtifactPaths::label_file(std::size_t image) const {
  char name[32];
  std::snprintf(name, sizeof name, "%06zu.ltns", image);
  return labels_dir() / name;
}

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(ErrorCode::kIo, "cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataset, p.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + p.string());
  out << j.dump(2) << "\n";
  if (!out) fail(ErrorCode::kIo, "write failed: " + p.string());
}

fs::path batch_file(const ArtifactPaths& paths, std::size_t b) {
  char name[32];
  std::snprintf(name, sizeof name, "batch_%05zu.ltns", b);
  return paths.cache_dir() / name;
}

// Descriptor batches spilled to disk during pass 2, replayed every epoch.
class DiskBatchStream final : public BatchStream {
 public:
  DiskBatchStream(const ArtifactPaths& paths, std::size_t count) : paths_(paths), count_(count) {}
  std::size_t batch_count() const override { return count_; }
  PointSet batch(std::size_t index) const override {
    return PointSet::from_tensor(load_tensor(batch_file(paths_, index)));
  }

 private:
  ArtifactPaths paths_;
  std::size_t count_;
};

std::vector<Tensor> load_batch_images(const DatasetIndex& index, std::size_t begin,
                                      std::size_t end, std::size_t workers) {
  std::vector<Tensor> images(end - begin);
  parallel_for(images.size(), workers,
               [&](std::size_t i) { images[i] = load_image(index, begin + i); });
  return images;
}

std::vector<Tensor> load_images(const DatasetIndex& index, std::span<const std::size_t> which,
                                std::size_t workers) {
  std::vector<Tensor> images(which.size());
  parallel_for(images.size(), workers,
               [&](std::size_t i) { images[i] = load_image(index, which[i]); });
  return images;
}

std::vector<std::string> image_ids(const DatasetIndex& index, std::span<const std::size_t> which) {
  std::vector<std::string> ids;
  for (std::size_t i : which) ids.push_back(index.images[i].id);
  return ids;
}

}  // namespace

std::vector<std::size_t> extraction_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = n; i > 1; --i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    std::swap(order[i - 1], order[static_cast<std::size_t>(u * static_cast<double>(i))]);
  }
  return order;
}

namespace {

json config_json(const ExtractionConfig& c, Resolution res) {
  return json{{"layers", c.layers},
              {"n_concepts", c.n_concepts},
              {"batch_size", c.batch_size},
              {"lambda", c.lambda},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"standardize", c.standardize},
              {"shuffle_batches", c.shuffle_batches},
              {"input_resolution", {res.height, res.width}}};
}

ExtractionConfig config_from_json(const json& j) {
  ExtractionConfig c;
  c.layers = j.at("layers").get<std::vector<std::string>>();
  c.n_concepts = j.at("n_concepts").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.standardize = j.at("standardize").get<bool>();
  c.shuffle_batches = j.value("shuffle_batches", false);
  const auto r = j.at("input_resolution");
  c.resolution = Resolution{r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()};
  return c;
}

json runner_json(const RunnerInfo& info) {
  json j{{"protocol", info.protocol}, {"n_k", info.n_classes}, {"layers", info.layers}};
  j["input_normalization"] =
      info.input_normalization.empty() ? json(nullptr) : json::parse(info.input_normalization);
  return j;
}

// Removes partially written artifacts unless released.
class PartialStateGuard {
 public:
  explicit PartialStateGuard(std::vector<fs::path> targets) : targets_(std::move(targets)) {}
  ~PartialStateGuard() {
    for (const auto& t : targets_) {
      std::error_code ec;
      fs::remove_all(t, ec);
    }
  }
  void keep(const fs::path& p) { std::erase(targets_, p); }

 private:
  std::vector<fs::path> targets_;
};

}  // namespace

ExtractionResult extract_concepts(const DatasetIndex& index, ModelRunner& runner,
                                  const ExtractionConfig& config, const fs::path& out_dir) {
  config.validate();
  if (index.size() == 0) fail(ErrorCode::kDataset, "dataset is empty");
  if (runner.info().n_classes != index.n_classes()) {
    fail(ErrorCode::kDataset, "runner reports n_k = " + std::to_string(runner.info().n_classes) +
                                  " but the dataset has " +
                                  std::to_string(index.n_classes()) + " classes");
  }
  const ArtifactPaths paths{out_dir};
  fs::create_directories(out_dir);
  for (const auto& stale : {paths.labels_dir(), paths.cache_dir()}) fs::remove_all(stale);
  for (const auto& stale : {paths.centroids(), paths.centroids_sidecar(), paths.extraction(),
                            paths.importance(), paths.concepts_json()}) {
    fs::remove(stale);
  }
  fs::create_directories(paths.cache_dir());
  fs::create_directories(paths.labels_dir());
  PartialStateGuard guard({paths.cache_dir(), paths.labels_dir(), paths.centroids(),
                           paths.centroids_sidecar()});

  const std::size_t n = index.size();
  const std::size_t bs = config.batch_size;
  const std::size_t n_batches = (n + bs - 1) / bs;
  const std::uint64_t forward_before = runner.counter().forward_count;
  const std::uint64_t gradient_before = runner.counter().gradient_count;

  // Dataset order is class-sorted; batches draw from a seeded permutation so
  // the first batch, which seeds the centroids, mixes classes.
  const std::vector<std::size_t> order = extraction_order(n, config.seed);
  auto batch_members = [&](std::size_t b) {
    const std::size_t begin = b * bs, end = std::min(n, begin + bs);
    return std::span<const std::size_t>(order.data() + begin, end - begin);
  };
  auto batch_activations = [&](std::size_t b) {
    const auto members = batch_members(b);
    const auto images = load_images(index, members, config.workers);
    return runner.activations(images, config.layers, image_ids(index, members));
  };

  ExtractionResult result;
  result.model.layers = config.layers;
  result.model.input_resolution = index.resolution;

  // Pass 1: standardization statistics.
  if (config.standardize) {
    StreamingStats stats;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const auto acts = batch_activations(b);
      std::vector<StreamingStats> local(acts.size());
      parallel_for(acts.size(), config.workers,
                   [&](std::size_t i) { local[i].add(assemble_descriptors(acts[i]).field); });
      for (const auto& s : local) stats.merge(s);
    }
    result.model.standardization = Standardization::from_stats(stats);
    ++result.passes;
  }

  // Pass 2: descriptors to the spill cache.
  for (std::size_t b = 0; b < n_batches; ++b) {
    const auto acts = batch_activations(b);
    if (b == 0) {
      for (const auto& l : acts[0].layers) result.model.layer_channels.push_back(l.activation.channels());
    }
    std::vector<DescriptorField> fields(acts.size());
    parallel_for(acts.size(), config.workers, [&](std::size_t i) {
      fields[i] = assemble_descriptors(acts[i], result.model.standardization);
    });
    PointSet batch;
    for (const auto& f : fields) batch.append(PointSet::from_tensor(f.field));
    save_tensor(batch.to_tensor(), batch_file(paths, b));
  }
  ++result.passes;

  FitOptions fit;
  fit.n_concepts = config.n_concepts;
  fit.seed = config.seed;
  fit.epochs = config.epochs;
  fit.workers = config.workers;
  fit.shuffle_batches = config.shuffle_batches;
  FitSummary summary;
  result.model.centroids = fit_stream(DiskBatchStream(paths, n_batches), fit, &summary);
  result.reseeded = summary.reseeded;

  // Label maps from the cached descriptors; no further model calls.
  const std::size_t px = index.resolution.height * index.resolution.width;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const PointSet batch = PointSet::from_tensor(load_tensor(batch_file(paths, b)));
    const auto members = batch_members(b);
    const std::size_t count = batch.rows() / px;
    parallel_for(count, config.workers, [&](std::size_t i) {
      std::vector<float> data;
      data.reserve(px * batch.dim());
      for (std::size_t r = 0; r < px; ++r) {
        auto row = batch.row(i * px + r);
        data.insert(data.end(), row.begin(), row.end());
      }
      DescriptorField field{
          Tensor({index.resolution.height, index.resolution.width, batch.dim()}, std::move(data)),
          index.images[members[i]].id};
      save_tensor(compute_labels(field, result.model.centroids).to_tensor(),
                  paths.label_file(members[i]));
    });
  }
  fs::remove_all(paths.cache_dir());

  result.forward_evaluations = runner.counter().forward_count - forward_before;
  if (result.forward_evaluations != result.passes * n ||
      runner.counter().gradient_count != gradient_before) {
    fail(ErrorCode::kRunnerFailed,
         "evaluation audit failed: " + std::to_string(result.forward_evaluations) +
             " forward evaluations for " + std::to_string(result.passes) + " passes over " +
             std::to_string(n) + " images");
  }

  save_model(result.model, config, paths);
  json images = json::array();
  for (const auto& e : index.images) {
    images.push_back({{"id", e.id}, {"path", fs::absolute(e.path).string()}, {"class", e.class_index}});
  }
  write_json(json{{"config", config_json(config, index.resolution)},
                  {"runner_spec", config.runner_spec},
                  {"runner", runner_json(runner.info())},
                  {"dataset",
                   {{"root", fs::absolute(index.root).string()},
                    {"classes", index.classes},
                    {"images", images}}},
                  {"eval_counts",
                   {{"extraction_forward", result.forward_evaluations},
                    {"extraction_passes", result.passes},
                    {"n_images", n}}},
                  {"reseeded_centroids", result.reseeded}},
             paths.extraction());
  guard.keep(paths.labels_dir());
  guard.keep(paths.centroids());
  guard.keep(paths.centroids_sidecar());
  return result;
}

void save_model(const ConceptModel& model, const ExtractionConfig& config,
                const ArtifactPaths& paths) {
  save_tensor(model.centroids.to_tensor(), paths.centroids());
  json standardization = nullptr;
  if (model.standardization) {
    standardization = {{"mean", model.standardization->mean},
                       {"std", model.standardization->stddev}};
  }
  write_json(json{{"centroid_file", paths.centroids().filename().string()},
                  {"n_c", model.centroids.count()},
                  {"dim", model.centroids.dim()},
                  {"seed", config.seed},
                  {"epochs", config.epochs},
                  {"layers", model.layers},
                  {"layer_channels", model.layer_channels},
                  {"standardization", standardization},
                  {"input_resolution",
                   {model.input_resolution.height, model.input_resolution.width}}},
             paths.centroids_sidecar());
}

ConceptModel load_model(const ArtifactPaths& paths) {
  const json side = read_json(paths.centroids_sidecar());
  ConceptModel model;
  try {
    model.centroids = CentroidSet::from_tensor(load_tensor(paths.root / side.at("centroid_file").get<std::string>()));
    model.layers = side.at("layers").get<std::vector<std::string>>();
    model.layer_channels = side.at("layer_channels").get<std::vector<std::size_t>>();
    if (!side.at("standardization").is_null()) {
      model.standardization = Standardization{
          side["standardization"].at("mean").get<std::vector<float>>(),
          side["standardization"].at("std").get<std::vector<float>>()};
    }
    const auto r = side.at("input_resolution");
    model.input_resolution = {r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()};
    if (side.at("n_c").get<std::size_t>() != model.centroids.count() ||
        side.at("dim").get<std::size_t>() != model.centroids.dim()) {
      fail(ErrorCode::kDataset, "centroid sidecar disagrees with " + paths.centroids().string());
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataset, paths.centroids_sidecar().string() + ": " + e.what());
  }
  return model;
}

Analysis load_analysis(const fs::path& out_dir) {
  const ArtifactPaths paths{out_dir};
  const json ex = read_json(paths.extraction());
  Analysis a;
  try {
    a.config = config_from_json(ex.at("config"));
    a.config.runner_spec = ex.value("runner_spec", std::string("toy"));
    const auto& ds = ex.at("dataset");
    a.index.root = ds.at("root").get<std::string>();
    a.index.classes = ds.at("classes").get<std::vector<std::string>>();
    for (const auto& img : ds.at("images")) {
      a.index.images.push_back({img.at("path").get<std::string>(), img.at("class").get<std::size_t>(),
                                img.at("id").get<std::string>()});
    }
    a.index.resolution = *a.config.resolution;
    const auto& r = ex.at("runner");
    a.runner.protocol = r.at("protocol").get<std::string>();
    a.runner.n_classes = r.at("n_k").get<std::size_t>();
    a.runner.layers = r.at("layers").get<std::vector<std::string>>();
    if (!r.at("input_normalization").is_null()) a.runner.input_normalization = r["input_normalization"].dump();
    a.extraction_forward = ex.at("eval_counts").at("extraction_forward").get<std::uint64_t>();
    a.extraction_passes = ex.at("eval_counts").at("extraction_passes").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataset, paths.extraction().string() + ": " + e.what());
  }
  a.model = load_model(paths);
  return a;
}

LabelMap load_labels(const ArtifactPaths& paths, const DatasetIndex& index, std::size_t image) {
  return LabelMap::from_tensor(load_tensor(paths.label_file(image)), index.images.at(image).id);
}

ScoreResult score_concepts(const DatasetIndex& index, ModelRunner& runner,
                           const ConceptModel& model, const fs::path& out_dir,
                           std::size_t batch_size, std::size_t workers) {
  if (batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch_size must be at least 1");
  const ArtifactPaths paths{out_dir};
  const std::size_t n = index.size();
  const std::size_t n_c = model.centroids.count();
  const std::uint64_t forward_before = runner.counter().forward_count;
  const std::uint64_t gradient_before = runner.counter().gradient_count;

  RelevanceAccumulator total(n_c);
  ScoreResult result;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    const auto images = load_batch_images(index, begin, end, workers);
    const auto grads = runner.grad_g(images);
    std::vector<RelevanceAccumulator> local(images.size(), RelevanceAccumulator(n_c));
    parallel_for(images.size(), workers, [&](std::size_t i) {
      if (!grads[i].defined()) return;
      local[i].accumulate(load_labels(paths, index, begin + i), *grads[i].grad);
    });
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (!grads[i].defined()) {
        ++result.skipped_images;
        continue;
      }
      total.merge(local[i]);
    }
  }
  result.report = finalize(total, runner.info().n_classes);
  result.gradient_evaluations = runner.counter().gradient_count - gradient_before;
  if (result.gradient_evaluations != n || runner.counter().forward_count != forward_before) {
    fail(ErrorCode::kRunnerFailed,
         "evaluation audit failed: " + std::to_string(result.gradient_evaluations) +
             " gradient evaluations and " +
             std::to_string(runner.counter().forward_count - forward_before) +
             " forward evaluations for " + std::to_string(n) + " images");
  }
  return result;
}

void save_score(const ScoreResult& score, const ArtifactPaths& paths) {
  write_json(json{{"mean_relevance", score.report.mean_relevance},
                  {"importance", score.report.importance},
                  {"presence", score.report.presence},
                  {"n_k", score.report.n_classes},
                  {"n_c", score.report.n_concepts},
                  {"skipped_images", score.skipped_images},
                  {"scoring_gradient", score.gradient_evaluations}},
             paths.importance());
}

ScoreResult load_score(const ArtifactPaths& paths) {
  const json j = read_json(paths.importance());
  ScoreResult s;
  try {
    s.report.mean_relevance = j.at("mean_relevance").get<std::vector<double>>();
    s.report.importance = j.at("importance").get<std::vector<double>>();
    s.report.presence = j.at("presence").get<std::vector<std::size_t>>();
    s.report.n_classes = j.at("n_k").get<std::size_t>();
    s.report.n_concepts = j.at("n_c").get<std::size_t>();
    s.skipped_images = j.at("skipped_images").get<std::size_t>();
    s.gradient_evaluations = j.at("scoring_gradient").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataset, paths.importance().string() + ": " + e.what());
  }
  return s;
}

ConceptMask localize_image(const fs::path& out_dir, ModelRunner& runner, const Tensor& image,
                           std::size_t concept_index, const std::string& image_id) {
  const ConceptModel model = load_model(ArtifactPaths{out_dir});
  const std::vector<Tensor> images{image};
  const std::vector<std::string> ids{image_id};
  const auto acts = runner.activations(images, model.layers, ids);
  return localize(acts.at(0), model, concept_index);
}

}  // namespace ladc
