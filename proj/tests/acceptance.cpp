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


// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Runs with the built-in toy model only.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ladc/clustering.hpp"
#include "ladc/dataset.hpp"
#include "ladc/importance.hpp"
#include "ladc/pipeline.hpp"
#include "ladc/report.hpp"
#include "ladc/runner.hpp"
#include "ladc/synth.hpp"
#include "ladc/tensor.hpp"
#include "test_util.hpp"

using namespace ladc;
using ladc::testing::random_tensor;
using ladc::testing::relative_error;
using ladc::testing::TempDir;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s (%.2fs)%s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs,
              o.detail.empty() ? "" : ": ", o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path synth_corpus(const fs::path& root, std::size_t classes, std::size_t count, std::size_t size,
                      std::uint64_t seed) {
  SynthOptions o;
  o.n_classes = classes;
  o.count = count;
  o.size = size;
  o.seed = seed;
  synth_dataset(o, root);
  return root / "images";
}

ExtractionConfig default_config() {
  ExtractionConfig c;
  c.layers = {"a1", "a2"};
  c.n_concepts = 20;
  c.batch_size = 8;
  c.epochs = 10;
  c.seed = 0;
  return c;
}

double g_oracle(const std::vector<double>& y) {
  double s = 0.0;
  for (double a : y) {
    for (double b : y) s += (a - b) * (a - b);
  }
  return std::sqrt(s);
}

// Keeps every scalar of a JSON document, keyed by its pointer.
void scalars(const json& j, const std::string& at, std::vector<std::pair<std::string, json>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) scalars(v, at + "/" + k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) scalars(j[i], at + "/" + std::to_string(i), out);
  } else {
    out.emplace_back(at, j);
  }
}

Outcome eval_count() {
  Outcome o;
  TempDir dir("acc_count");
  const auto index = ingest_dataset(synth_corpus(dir / "synth", 3, 4, 32, 1));
  ToyRunner toy(index.n_classes());
  auto config = default_config();
  config.n_concepts = 6;
  extract_concepts(index, toy, config, dir / "out");
  const auto forward = toy.counter().forward_count;
  const auto gradient = toy.counter().gradient_count;
  const auto model = load_model(ArtifactPaths{dir / "out"});
  const auto t0 = Clock::now();
  const auto score = score_concepts(index, toy, model, dir / "out", config.batch_size);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const auto grads = toy.counter().gradient_count - gradient;
  const auto extra = toy.counter().forward_count - forward;
  o.require(index.size() == 12, "corpus has " + std::to_string(index.size()) + " images");
  o.require(grads == 12, std::to_string(grads) + " gradient evaluations");
  o.require(extra == 0, std::to_string(extra) + " extra forward passes");
  o.require(score.gradient_evaluations == 12, "reported gradient evaluations differ");
  o.require(secs < 5.0, "scoring took " + fmt(secs) + "s");
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(grads) + " gradients, " +
              std::to_string(extra) + " extra forwards, " + fmt(secs) + "s";
  return o;
}

Outcome wrapper() {
  Outcome o;
  o.require(wrapper_g(std::vector<double>{3.5, 3.5, 3.5, 3.5, 3.5}) == 0.0, "g(c,...,c) != 0");
  const double g10 = wrapper_g(std::vector<double>{1, 0}), g311 = wrapper_g(std::vector<double>{3, 1, 1});
  o.require(relative_error(g10, g_oracle({1, 0})) <= 1e-6, "g(1,0)=" + fmt(g10));
  o.require(relative_error(g10, std::sqrt(2.0)) <= 1e-6, "g(1,0) != sqrt 2");
  o.require(relative_error(g311, g_oracle({3, 1, 1})) <= 1e-6 && relative_error(g311, 4.0) <= 1e-6,
            "g(3,1,1)=" + fmt(g311));
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0, 4);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> y(2 + rng() % 9);
    for (auto& v : y) v = n(rng);
    const double g = wrapper_g(std::span<const double>(y));
    const double c = n(rng) * 10, alpha = n(rng);
    std::vector<double> shifted = y, scaled = y;
    for (auto& v : shifted) v += c;
    for (auto& v : scaled) v *= alpha;
    worst = std::max({worst, relative_error(g, g_oracle(y)),
                      relative_error(wrapper_g(std::span<const double>(shifted)), g),
                      relative_error(wrapper_g(std::span<const double>(scaled)), std::abs(alpha) * g)});
  }
  o.require(worst <= 1e-6, "worst invariance error " + fmt(worst));
  if (o.pass) o.detail = "worst relative error " + fmt(worst);
  return o;
}

Outcome gradients() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0, 2);
  double worst_logit = 0;
  int checked = 0;
  while (checked < 100) {
    std::vector<double> y(2 + rng() % 8);
    for (auto& v : y) v = n(rng);
    if (wrapper_g(std::span<const double>(y)) <= 0.1) continue;
    ++checked;
    const auto an = grad_g_wrt_logits(std::span<const double>(y));
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double h = 1e-5, keep = y[i];
      y[i] = keep + h;
      const double up = wrapper_g(std::span<const double>(y));
      y[i] = keep - h;
      const double down = wrapper_g(std::span<const double>(y));
      y[i] = keep;
      const double fd = (up - down) / (2 * h);
      worst_logit = std::max(worst_logit, std::abs(an[i] - fd) / std::max(1.0, std::abs(an[i])));
    }
  }
  o.require(worst_logit <= 1e-4, "logit gradient error " + fmt(worst_logit));

  ToyModel model(3);
  const Tensor x = random_tensor({16, 16, 3}, rng, 0.05f, 1.0f);
  const auto r = model.grad_g(x);
  o.require(r.defined(), "toy gradient undefined");
  double worst_pixel = 0;
  for (int t = 0; t < 5 && r.defined(); ++t) {
    const std::size_t i = rng() % 16, j = rng() % 16, c = rng() % 3;
    Tensor up = x, down = x;
    up.at(i, j, c) += 1e-3f;
    down.at(i, j, c) -= 1e-3f;
    const double step = static_cast<double>(up.at(i, j, c)) - down.at(i, j, c);
    const auto yu = model.logits(up), yd = model.logits(down);
    const double fd = (wrapper_g(std::span<const double>(yu)) - wrapper_g(std::span<const double>(yd))) / step;
    worst_pixel = std::max(worst_pixel, relative_error(r.grad->at(i, j, c), fd));
  }
  o.require(worst_pixel <= 1e-3, "toy pixel gradient error " + fmt(worst_pixel));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("logits ") + fmt(worst_logit) +
              ", toy pixels " + fmt(worst_pixel);
  return o;
}

Outcome clustering() {
  Outcome o;
  // 200 points, radius 0.1, centres 10 apart.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  PointSet pts(2);
  for (int i = 0; i < 100; ++i) {
    for (float cx : {0.0f, 10.0f}) {
      const float r = 0.1f * std::sqrt(u(rng)), t = 6.2831853f * u(rng);
      const float p[2] = {cx + r * std::cos(t), r * std::sin(t)};
      pts.append(p);
    }
  }
  std::vector<PointSet> batches;
  for (std::size_t i = 0; i < pts.rows(); i += 20) {
    PointSet b(2);
    for (std::size_t k = i; k < i + 20; ++k) b.append(pts.row(k));
    batches.push_back(std::move(b));
  }
  FitOptions opt;
  opt.n_concepts = 2;
  opt.epochs = 20;
  opt.seed = 4;
  const auto fit = fit_stream(InMemoryBatchStream(batches), opt);

  // Full-batch Lloyd from the blob centres.
  double c[2][2] = {{0, 0}, {10, 0}};
  for (int it = 0; it < 100; ++it) {
    double s[2][2] = {{0, 0}, {0, 0}};
    int cnt[2] = {0, 0};
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      const auto p = pts.row(i);
      const double d0 = std::pow(p[0] - c[0][0], 2) + std::pow(p[1] - c[0][1], 2);
      const double d1 = std::pow(p[0] - c[1][0], 2) + std::pow(p[1] - c[1][1], 2);
      const int k = d1 < d0 ? 1 : 0;
      s[k][0] += p[0];
      s[k][1] += p[1];
      ++cnt[k];
    }
    for (int k = 0; k < 2; ++k) {
      if (cnt[k]) {
        c[k][0] = s[k][0] / cnt[k];
        c[k][1] = s[k][1] / cnt[k];
      }
    }
  }
  double worst = 0;
  for (auto& oc : c) {
    double best = 1e9;
    for (std::size_t j = 0; j < 2; ++j) {
      best = std::min(best, std::hypot(fit.centroid(j)[0] - oc[0], fit.centroid(j)[1] - oc[1]));
    }
    worst = std::max(worst, best);
  }
  o.require(worst < 0.05, "centroid distance to Lloyd " + fmt(worst));

  std::normal_distribution<float> g(0.0f, 3.0f);
  std::vector<float> cd(16 * 8);
  for (auto& v : cd) v = g(rng);
  const CentroidSet cents(16, 8, cd);
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<float> v(8);
    for (auto& x : v) x = g(rng);
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < 16; ++j) {
      double d = 0;
      for (std::size_t k = 0; k < 8; ++k) d += std::pow(double(v[k]) - cents.centroid(j)[k], 2);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    mismatches += assign_nearest(cents, v) != best;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " assignment mismatches");
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("Lloyd distance ") + fmt(worst) + ", " +
              std::to_string(mismatches) + "/1000 assignment mismatches";
  return o;
}

Outcome partition() {
  Outcome o;
  TempDir dir("acc_partition");
  const auto index = ingest_dataset(synth_corpus(dir / "synth", 2, 20, 64, 5));
  ToyRunner toy(index.n_classes());
  auto config = default_config();
  config.n_concepts = 8;
  config.epochs = 3;
  extract_concepts(index, toy, config, dir / "out");
  std::size_t bad = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto labels = load_labels(ArtifactPaths{dir / "out"}, index, i);
    std::vector<float> sum(labels.labels.size(), 0.0f);
    for (std::size_t j = 0; j < config.n_concepts; ++j) {
      const auto m = labels.mask(j);
      for (std::size_t p = 0; p < sum.size(); ++p) {
        const float v = m.mask.data()[p];
        bad += v != 0.0f && v != 1.0f;
        sum[p] += v;
      }
    }
    for (float s : sum) bad += s != 1.0f;
  }
  o.require(index.size() == 40, "run has " + std::to_string(index.size()) + " images");
  o.require(bad == 0, std::to_string(bad) + " pixels violate the partition");
  if (o.pass) o.detail = "40 images, every pixel in exactly one concept";
  return o;
}

Outcome planted() {
  Outcome o;
  TempDir dir("acc_planted");
  SynthOptions so;
  so.n_classes = 3;
  so.count = 40;
  so.size = 128;
  so.seed = 7;
  synth_dataset(so, dir / "synth");
  const auto index = ingest_dataset(dir / "synth" / "images");
  ToyRunner toy(index.n_classes());
  const auto config = default_config();
  const fs::path out = dir / "out";
  const auto t0 = Clock::now();
  const auto result = extract_concepts(index, toy, config, out);
  const auto score = score_concepts(index, toy, result.model, out, config.batch_size);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();

  const std::size_t nc = config.n_concepts;
  // IoU over the corpus: |M_j and G_k| / (|M_j| + |G_k| - |M_j and G_k|), where
  // G_k holds the cue pixels of class k images.
  std::vector<std::vector<double>> inter(3, std::vector<double>(nc, 0));
  std::vector<double> area(nc, 0), truth_area(3, 0), background(nc, 0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const std::size_t k = index.images[i].class_index;
    const std::size_t n = std::stoul(index.images[i].path.stem().string());
    const auto truth = synth_render(so, k, n).mask;
    const auto labels = load_labels(ArtifactPaths{out}, index, i);
    for (std::size_t p = 0; p < labels.labels.size(); ++p) {
      const std::size_t j = labels.labels[p];
      area[j] += 1;
      if (truth.data()[p] != 0.0f) {
        truth_area[k] += 1;
        inter[k][j] += 1;
      } else {
        background[j] += 1;
      }
    }
  }
  std::vector<std::size_t> best(3);
  std::vector<double> best_iou(3, 0);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < nc; ++j) {
      const double iou = inter[k][j] / (area[j] + truth_area[k] - inter[k][j]);
      if (iou > best_iou[k]) {
        best_iou[k] = iou;
        best[k] = j;
      }
    }
    o.require(best_iou[k] >= 0.5, "cue " + std::to_string(k) + " best IoU " + fmt(best_iou[k]));
  }
  const std::size_t bg = static_cast<std::size_t>(
      std::max_element(background.begin(), background.end()) - background.begin());
  const auto& imp = score.report.importance;
  o.require(imp[bg] <= 0.05, "background concept importance " + fmt(imp[bg]));
  std::vector<std::size_t> rank(nc);
  for (std::size_t j = 0; j < nc; ++j) rank[j] = j;
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
  for (std::size_t r = 0; r < 2; ++r) {
    o.require(std::find(best.begin(), best.end(), rank[r]) != best.end(),
              "rank " + std::to_string(r + 1) + " concept " + std::to_string(rank[r]) + " is not a cue concept");
  }
  o.require(secs < 120.0, "run took " + fmt(secs) + "s");
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("IoU ") + fmt(best_iou[0]) + "/" +
              fmt(best_iou[1]) + "/" + fmt(best_iou[2]) + ", background importance " + fmt(imp[bg]) +
              ", top-2 concepts " + std::to_string(rank[0]) + "," + std::to_string(rank[1]);
  return o;
}

Outcome determinism() {
  Outcome o;
  TempDir dir("acc_determinism");
  const auto data = synth_corpus(dir / "synth", 3, 6, 48, 3);
  std::vector<json> docs;
  for (const char* name : {"a", "b"}) {
    const auto index = ingest_dataset(data);
    ToyRunner toy(index.n_classes());
    auto config = default_config();
    config.n_concepts = 8;
    config.epochs = 4;
    config.seed = 21;
    extract_concepts(index, toy, config, dir / name);
    const auto analysis = load_analysis(dir / name);
    save_score(score_concepts(index, toy, analysis.model, dir / name, config.batch_size),
               ArtifactPaths{dir / name});
    docs.push_back(generate_report(dir / name));
  }
  std::vector<std::pair<std::string, json>> sa, sb;
  scalars(docs[0], "", sa);
  scalars(docs[1], "", sb);
  o.require(sa == sb, "concepts.json scalars differ");
  o.require(slurp(dir / "a" / "centroids.ltns") == slurp(dir / "b" / "centroids.ltns"),
            "centroid files differ");
  if (o.pass) o.detail = std::to_string(sa.size()) + " scalars equal, centroid bytes equal";
  return o;
}

Outcome ltns_and_echo() {
  Outcome o;
  TempDir dir("acc_ltns");
  std::mt19937_64 rng(31);
  std::size_t mismatched = 0;
  for (int t = 0; t < 20; ++t) {
    Tensor x = random_tensor({1 + rng() % 9, 1 + rng() % 9, 1 + rng() % 5}, rng, -1e4f, 1e4f);
    x.mutable_data()[0] = -0.0f;
    if (x.size() > 1) x.mutable_data()[1] = std::numeric_limits<float>::denorm_min();
    save_tensor(x, dir / "t.ltns");
    mismatched += !load_tensor(dir / "t.ltns").bit_equal(x);
    mismatched += !decode_tensor(encode_tensor(x)).bit_equal(x);
  }
  o.require(mismatched == 0, std::to_string(mismatched) + " LTNS round-trips differ");

  SubprocessOptions opt;
  opt.command = std::string(LADC_FAKE_RUNNER) + " echo";
  SubprocessRunner echo(opt);
  std::vector<Tensor> images;
  for (int i = 0; i < 4; ++i) images.push_back(random_tensor({6, 5, 3}, rng, -100, 100));
  const auto acts = echo.activations(images, {"x"});
  const auto grads = echo.grad_g(images);
  std::size_t echo_bad = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    echo_bad += !acts[i].layers[0].activation.bit_equal(images[i]);
    echo_bad += !grads[i].defined() || !grads[i].grad->bit_equal(images[i]);
  }
  o.require(echo_bad == 0, std::to_string(echo_bad) + " echoed tensors differ");
  if (o.pass) o.detail = "40 LTNS round-trips and 8 echoed tensors bit-exact";
  return o;
}

}  // namespace

int main() {
  criterion("evaluation count: 12 images score with 12 gradients and no forward pass", eval_count);
  criterion("wrapper g correctness", wrapper);
  criterion("gradient checks against finite differences", gradients);
  criterion("clustering oracle equivalence", clustering);
  criterion("mask partition on a 40-image run", partition);
  criterion("planted-concept recovery", planted);
  criterion("end-to-end determinism", determinism);
  criterion("LTNS round-trip and protocol echo are bit-exact", ltns_and_echo);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
