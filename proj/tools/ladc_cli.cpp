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


// Command-line front end over the ladc C API.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 runner error.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ladc/ladc.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRunner = 3;

struct RunnerChoice {
  std::string command;
  bool toy = false;
};

int report_failure(ladc_status s) {
  std::cerr << "ladc: " << ladc_status_name(s) << ": " << ladc_last_error() << "\n";
  return static_cast<int>(ladc_status_class(s));
}

// Flag beats CONCEPT_RUNNER_CMD, which beats the runner recorded at extraction.
std::string resolve_runner(const RunnerChoice& choice, const std::string& recorded) {
  if (choice.toy) return "toy";
  if (!choice.command.empty()) return choice.command;
  if (const char* env = std::getenv("CONCEPT_RUNNER_CMD"); env && *env) return env;
  return recorded;
}

ladc_status open_runner(const std::string& spec, size_t n_classes, ladc_runner** out) {
  if (spec == "toy") return ladc_runner_open_toy(n_classes, out);
  return ladc_runner_open_command(spec.c_str(), 0, out);
}

std::string recorded_runner(const std::string& out_dir, ladc_status* status) {
  size_t needed = 0;
  *status = ladc_recorded_runner(out_dir.c_str(), nullptr, 0, &needed);
  if (*status != LADC_OK) return {};
  std::vector<char> buf(needed + 1);
  *status = ladc_recorded_runner(out_dir.c_str(), buf.data(), buf.size(), &needed);
  return std::string(buf.data());
}

size_t count_class_dirs(const std::string& data_dir) {
  std::error_code ec;
  size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(data_dir, ec)) {
    if (e.is_directory()) ++n;
  }
  return n;
}

// Scoped runner handle.
struct Runner {
  ladc_runner* handle = nullptr;
  ~Runner() { ladc_runner_close(handle); }
};

void add_runner_flags(CLI::App* cmd, RunnerChoice& choice) {
  auto* runner = cmd->add_option("--runner", choice.command, "concept-runner/1 command line");
  auto* toy = cmd->add_flag("--toy-model", choice.toy, "use the built-in toy model");
  runner->excludes(toy);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept extraction over localized activation descriptors"};
  app.require_subcommand(1);
  size_t workers = 1;
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  ladc_extract_options ex;
  ladc_extract_options_init(&ex);
  std::string data_dir, out_dir, layers = "a1,a2";
  bool no_standardize = false;
  std::vector<size_t> resolution;
  RunnerChoice extract_runner;
  auto* extract = app.add_subcommand("extract", "extract concepts from a dataset");
  extract->add_option("--data", data_dir, "dataset root (one subdirectory per class)")->required();
  extract->add_option("--out", out_dir, "output directory")->required();
  extract->add_option("--layers", layers, "comma separated layer ids");
  extract->add_option("--n-concepts", ex.n_concepts, "number of concepts")->check(CLI::Range(2, 1 << 20));
  extract->add_option("--batch-size", ex.batch_size, "images per minibatch")->check(CLI::PositiveNumber);
  extract->add_option("--lambda", ex.lambda, "attenuation of non-concept pixels")->check(CLI::Range(0.0, 1.0));
  extract->add_option("--epochs", ex.epochs, "passes over the descriptor cache")->check(CLI::PositiveNumber);
  extract->add_option("--seed", ex.seed, "random seed");
  extract->add_flag("--no-standardize", no_standardize, "skip per-channel standardization");
  extract->add_flag("--shuffle-batches", "shuffle batch order per epoch");
  extract->add_option("--resolution", resolution, "target H W (default: first image)")->expected(2);
  add_runner_flags(extract, extract_runner);

  RunnerChoice score_runner;
  auto* score = app.add_subcommand("score", "score extracted concepts");
  score->add_option("--out", out_dir, "analysis directory")->required();
  add_runner_flags(score, score_runner);

  std::string image;
  size_t concept_index = 0;
  std::string mask_out;
  RunnerChoice loc_runner;
  auto* localize = app.add_subcommand("localize", "mask one concept in a new image");
  localize->add_option("--out", out_dir, "analysis directory")->required();
  localize->add_option("--image", image, "input PNG")->required()->check(CLI::ExistingFile);
  localize->add_option("--concept", concept_index, "concept index")->required();
  localize->add_option("--mask", mask_out, "output mask PNG (default: OUT/localize/<image>_cJJ.png)");
  add_runner_flags(localize, loc_runner);

  ladc_synth_options so;
  ladc_synth_options_init(&so);
  bool entangled = false;
  auto* synth = app.add_subcommand("synth", "generate a planted-cue dataset");
  synth->add_option("--classes", so.n_classes, "number of classes")->check(CLI::Range(2, 1000));
  synth->add_option("--count", so.count, "images per class")->check(CLI::Range(4, 1000000));
  synth->add_option("--size", so.size, "image side in pixels")->check(CLI::Range(32, 8192));
  synth->add_option("--seed", so.seed, "random seed");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_flag("--entangled", entangled, "two classes share a cue differing only in spacing");

  size_t max_examples = 8;
  auto* report = app.add_subcommand("report", "write concepts.json and example grids");
  report->add_option("--out", out_dir, "analysis directory")->required();
  report->add_option("--max-examples", max_examples, "examples per concept")->check(CLI::PositiveNumber);

  std::vector<size_t> target;
  auto* resize = app.add_subcommand("resize", "area-average downsize a dataset");
  resize->add_option("--data", data_dir, "dataset root")->required();
  resize->add_option("--out", out_dir, "output root")->required();
  resize->add_option("--resolution", target, "target H W")->required()->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (*extract) {
    const std::string spec = resolve_runner(extract_runner, "");
    if (spec.empty()) {
      std::cerr << "ladc: no runner: pass --runner CMD, --toy-model or set CONCEPT_RUNNER_CMD\n";
      return kExitUsage;
    }
    // With fewer than two class folders ingestion reports the dataset problem.
    Runner r;
    if (auto s = open_runner(spec, std::max<size_t>(2, count_class_dirs(data_dir)), &r.handle); s != LADC_OK) {
      return report_failure(s);
    }
    ex.layers = layers.c_str();
    ex.standardize = no_standardize ? 0 : 1;
    ex.shuffle_batches = extract->count("--shuffle-batches") > 0;
    ex.workers = workers;
    ex.runner_spec = spec.c_str();
    if (resolution.size() == 2) {
      ex.height = resolution[0];
      ex.width = resolution[1];
    }
    if (auto s = ladc_extract(r.handle, data_dir.c_str(), out_dir.c_str(), &ex); s != LADC_OK) {
      return report_failure(s);
    }
    uint64_t fwd = 0;
    ladc_runner_counts(r.handle, &fwd, nullptr);
    std::cout << "extracted " << ex.n_concepts << " concepts into " << out_dir << " (" << fwd
              << " forward evaluations)\n";
    return 0;
  }

  if (*score || *localize) {
    ladc_status s = LADC_OK;
    const std::string recorded = recorded_runner(out_dir, &s);
    if (s != LADC_OK) return report_failure(s);
    const std::string spec = resolve_runner(*score ? score_runner : loc_runner, recorded);
    if (spec.empty()) {
      std::cerr << "ladc: no runner recorded; pass --runner CMD or --toy-model\n";
      return kExitRunner;
    }
    // The toy model's class count is taken from the recorded dataset.
    Runner r;
    size_t n_classes = 0;
    {
      std::ifstream in(std::filesystem::path(out_dir) / "extraction.json");
      const auto doc = nlohmann::json::parse(in, nullptr, false);
      if (!doc.is_discarded() && doc.contains("dataset")) n_classes = doc["dataset"]["classes"].size();
    }
    if (auto st = open_runner(spec, n_classes, &r.handle); st != LADC_OK) return report_failure(st);
    if (*score) {
      size_t skipped = 0;
      if (auto st = ladc_score(r.handle, out_dir.c_str(), workers, &skipped); st != LADC_OK) {
        return report_failure(st);
      }
      uint64_t grad = 0;
      ladc_runner_counts(r.handle, nullptr, &grad);
      std::cout << "scored " << grad << " images (" << skipped << " skipped with g = 0)\n";
      return 0;
    }
    if (mask_out.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "_c%02zu.png", concept_index);
      const auto dir = std::filesystem::path(out_dir) / "localize";
      std::filesystem::create_directories(dir);
      mask_out = (dir / (std::filesystem::path(image).stem().string() + name)).string();
    }
    size_t pixels = 0;
    if (auto st = ladc_localize(r.handle, out_dir.c_str(), image.c_str(), concept_index,
                                mask_out.c_str(), &pixels);
        st != LADC_OK) {
      return report_failure(st);
    }
    std::cout << mask_out << " (" << pixels << " pixels)\n";
    return 0;
  }

  if (*synth) {
    so.entangled = entangled ? 1 : 0;
    if (auto s = ladc_synth(&so, out_dir.c_str()); s != LADC_OK) return report_failure(s);
    std::cout << "wrote " << so.n_classes * so.count << " images to " << out_dir << "/images\n";
    return 0;
  }

  if (*report) {
    if (auto s = ladc_report(out_dir.c_str(), max_examples, -1.0); s != LADC_OK) return report_failure(s);
    std::cout << out_dir << "/concepts.json\n";
    return 0;
  }

  if (*resize) {
    size_t written = 0;
    if (auto s = ladc_resize(data_dir.c_str(), out_dir.c_str(), target[0], target[1], &written);
        s != LADC_OK) {
      return report_failure(s);
    }
    std::cout << "resized " << written << " images into " << out_dir << "\n";
    return 0;
  }
  return kExitUsage;
}
