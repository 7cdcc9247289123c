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


#include "ladc/ladc.h"

#include <cstring>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "ladc/error.hpp"
#include "ladc/importance.hpp"
#include "ladc/pipeline.hpp"
#include "ladc/png_io.hpp"
#include "ladc/report.hpp"
#include "ladc/runner.hpp"
#include "ladc/synth.hpp"

struct ladc_tensor {
  ladc::Tensor tensor;
};

struct ladc_runner {
  std::unique_ptr<ladc::ModelRunner> runner;
};

namespace {

thread_local std::string last_error;

ladc_status to_status(ladc::ErrorCode code) {
  using ladc::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return LADC_ERR_INVALID_ARGUMENT;
    case ErrorCode::kShapeMismatch: return LADC_ERR_SHAPE;
    case ErrorCode::kNonFinite: return LADC_ERR_NON_FINITE;
    case ErrorCode::kBadMagic: return LADC_ERR_BAD_MAGIC;
    case ErrorCode::kBadVersion: return LADC_ERR_BAD_VERSION;
    case ErrorCode::kBadDtype: return LADC_ERR_BAD_DTYPE;
    case ErrorCode::kTruncated: return LADC_ERR_TRUNCATED;
    case ErrorCode::kDimensionOverflow: return LADC_ERR_DIM_OVERFLOW;
    case ErrorCode::kInvalidShape: return LADC_ERR_INVALID_SHAPE;
    case ErrorCode::kIo: return LADC_ERR_IO;
    case ErrorCode::kDataset: return LADC_ERR_DATASET;
    case ErrorCode::kImageDecode: return LADC_ERR_IMAGE_DECODE;
    case ErrorCode::kUnknownLayer: return LADC_ERR_UNKNOWN_LAYER;
    case ErrorCode::kLayerConfigMismatch: return LADC_ERR_LAYER_CONFIG;
    case ErrorCode::kUndefinedGradient: return LADC_ERR_UNDEFINED_GRADIENT;
    case ErrorCode::kRunnerHandshakeTimeout: return LADC_ERR_RUNNER_TIMEOUT;
    case ErrorCode::kRunnerProtocolMismatch: return LADC_ERR_RUNNER_PROTOCOL;
    case ErrorCode::kRunnerMalformedReply: return LADC_ERR_RUNNER_REPLY;
    case ErrorCode::kRunnerExited: return LADC_ERR_RUNNER_EXITED;
    case ErrorCode::kRunnerFailed: return LADC_ERR_RUNNER_FAILED;
  }
  return LADC_ERR_INTERNAL;
}

// Runs fn, translating exceptions into a status and last_error.
template <typename Fn>
ladc_status guarded(Fn&& fn) {
  try {
    fn();
    return LADC_OK;
  } catch (const ladc::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return LADC_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return LADC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return LADC_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) ladc::fail(ladc::ErrorCode::kInvalidArgument, what);
}

std::vector<std::string> split_csv(const char* s) {
  std::vector<std::string> out;
  std::stringstream ss(s ? s : "");
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

extern "C" {

const char* ladc_version(void) { return "1.0.0"; }

const char* ladc_last_error(void) { return last_error.c_str(); }

const char* ladc_status_name(ladc_status status) {
  switch (status) {
    case LADC_OK: return "ok";
    case LADC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LADC_ERR_SHAPE: return "shape mismatch";
    case LADC_ERR_NON_FINITE: return "non-finite value";
    case LADC_ERR_BAD_MAGIC: return "bad magic";
    case LADC_ERR_BAD_VERSION: return "bad version";
    case LADC_ERR_BAD_DTYPE: return "bad dtype";
    case LADC_ERR_TRUNCATED: return "truncated payload";
    case LADC_ERR_DIM_OVERFLOW: return "dimension overflow";
    case LADC_ERR_INVALID_SHAPE: return "invalid shape";
    case LADC_ERR_IO: return "i/o error";
    case LADC_ERR_DATASET: return "dataset error";
    case LADC_ERR_IMAGE_DECODE: return "image decode error";
    case LADC_ERR_UNKNOWN_LAYER: return "unknown layer";
    case LADC_ERR_LAYER_CONFIG: return "layer configuration mismatch";
    case LADC_ERR_UNDEFINED_GRADIENT: return "undefined gradient";
    case LADC_ERR_RUNNER_TIMEOUT: return "runner handshake timeout";
    case LADC_ERR_RUNNER_PROTOCOL: return "runner protocol mismatch";
    case LADC_ERR_RUNNER_REPLY: return "malformed runner reply";
    case LADC_ERR_RUNNER_EXITED: return "runner exited";
    case LADC_ERR_RUNNER_FAILED: return "runner request failed";
    case LADC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

ladc_error_class ladc_status_class(ladc_status status) {
  switch (status) {
    case LADC_OK:
      return LADC_CLASS_OK;
    case LADC_ERR_INVALID_ARGUMENT:
      return LADC_CLASS_USAGE;
    case LADC_ERR_UNKNOWN_LAYER:
    case LADC_ERR_RUNNER_TIMEOUT:
    case LADC_ERR_RUNNER_PROTOCOL:
    case LADC_ERR_RUNNER_REPLY:
    case LADC_ERR_RUNNER_EXITED:
    case LADC_ERR_RUNNER_FAILED:
      return LADC_CLASS_RUNNER;
    default:
      return LADC_CLASS_DATA;
  }
}

ladc_status ladc_tensor_create(const size_t* shape, size_t ndim, const float* data,
                               ladc_tensor** out) {
  return guarded([&] {
    require(out && shape && ndim > 0, "ladc_tensor_create: null argument");
    std::vector<std::size_t> dims(shape, shape + ndim);
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    std::vector<float> values(n, 0.0f);
    if (data) std::memcpy(values.data(), data, n * sizeof(float));
    *out = new ladc_tensor{ladc::Tensor(std::move(dims), std::move(values))};
  });
}

ladc_status ladc_tensor_read(const char* path, ladc_tensor** out) {
  return guarded([&] {
    require(path && out, "ladc_tensor_read: null argument");
    *out = new ladc_tensor{ladc::load_tensor(path)};
  });
}

ladc_status ladc_tensor_write(const ladc_tensor* tensor, const char* path) {
  return guarded([&] {
    require(tensor && path, "ladc_tensor_write: null argument");
    ladc::save_tensor(tensor->tensor, path);
  });
}

size_t ladc_tensor_ndim(const ladc_tensor* t) { return t ? t->tensor.rank() : 0; }
size_t ladc_tensor_dim(const ladc_tensor* t, size_t axis) {
  return t && axis < t->tensor.rank() ? t->tensor.shape()[axis] : 0;
}
size_t ladc_tensor_size(const ladc_tensor* t) { return t ? t->tensor.size() : 0; }
const float* ladc_tensor_data(const ladc_tensor* t) { return t ? t->tensor.data().data() : nullptr; }
void ladc_tensor_free(ladc_tensor* t) { delete t; }

ladc_status ladc_wrapper_g(const float* logits, size_t n, double* out) {
  return guarded([&] {
    require(logits && out, "ladc_wrapper_g: null argument");
    *out = ladc::wrapper_g(std::span<const float>(logits, n));
  });
}

ladc_status ladc_wrapper_g_grad(const float* logits, size_t n, double* grad) {
  return guarded([&] {
    require(logits && grad, "ladc_wrapper_g_grad: null argument");
    const auto g = ladc::grad_g_wrt_logits(std::span<const float>(logits, n));
    std::copy(g.begin(), g.end(), grad);
  });
}

ladc_status ladc_runner_open_toy(size_t n_classes, ladc_runner** out) {
  return guarded([&] {
    require(out != nullptr, "ladc_runner_open_toy: null argument");
    *out = new ladc_runner{std::make_unique<ladc::ToyRunner>(n_classes)};
  });
}

ladc_status ladc_runner_open_command(const char* command, int handshake_timeout_ms,
                                     ladc_runner** out) {
  return guarded([&] {
    require(command && out, "ladc_runner_open_command: null argument");
    ladc::SubprocessOptions opts;
    opts.command = command;
    if (handshake_timeout_ms > 0) opts.handshake_timeout = std::chrono::milliseconds(handshake_timeout_ms);
    *out = new ladc_runner{std::make_unique<ladc::SubprocessRunner>(std::move(opts))};
  });
}

void ladc_runner_close(ladc_runner* runner) { delete runner; }

ladc_status ladc_runner_counts(const ladc_runner* runner, uint64_t* forward, uint64_t* gradient) {
  return guarded([&] {
    require(runner != nullptr, "ladc_runner_counts: null runner");
    if (forward) *forward = runner->runner->counter().forward_count;
    if (gradient) *gradient = runner->runner->counter().gradient_count;
  });
}

size_t ladc_runner_n_classes(const ladc_runner* runner) {
  return runner ? runner->runner->info().n_classes : 0;
}

ladc_status ladc_serve_toy_runner(size_t n_classes) {
  return guarded([&] {
    ladc::ToyRunner toy(n_classes);
    ladc::serve_protocol(toy, std::cin, std::cout);
  });
}

void ladc_extract_options_init(ladc_extract_options* o) {
  if (!o) return;
  *o = ladc_extract_options{};
  o->layers = "a1,a2";
  o->n_concepts = 20;
  o->batch_size = 8;
  o->lambda = 0.3;
  o->epochs = 10;
  o->seed = 0;
  o->standardize = 1;
  o->shuffle_batches = 0;
  o->workers = 1;
  o->runner_spec = nullptr;
}

ladc_status ladc_extract(ladc_runner* runner, const char* data_dir, const char* out_dir,
                         const ladc_extract_options* options) {
  return guarded([&] {
    require(runner && data_dir && out_dir && options, "ladc_extract: null argument");
    ladc::ExtractionConfig config;
    config.layers = split_csv(options->layers);
    config.n_concepts = options->n_concepts;
    config.batch_size = options->batch_size;
    config.lambda = options->lambda;
    config.epochs = options->epochs;
    config.seed = options->seed;
    config.standardize = options->standardize != 0;
    config.shuffle_batches = options->shuffle_batches != 0;
    config.workers = options->workers;
    if (options->runner_spec) config.runner_spec = options->runner_spec;
    if (options->height || options->width) {
      require(options->height && options->width, "ladc_extract: give both height and width");
      config.resolution = ladc::Resolution{options->height, options->width};
    }
    config.validate();
    const auto index = ladc::ingest_dataset(data_dir, config.resolution);
    ladc::extract_concepts(index, *runner->runner, config, out_dir);
  });
}

ladc_status ladc_score(ladc_runner* runner, const char* out_dir, size_t workers,
                       size_t* skipped_images) {
  return guarded([&] {
    require(runner && out_dir, "ladc_score: null argument");
    const auto analysis = ladc::load_analysis(out_dir);
    const auto result = ladc::score_concepts(analysis.index, *runner->runner, analysis.model, out_dir,
                                             analysis.config.batch_size, workers ? workers : 1);
    ladc::save_score(result, ladc::ArtifactPaths{out_dir});
    if (skipped_images) *skipped_images = result.skipped_images;
  });
}

ladc_status ladc_report(const char* out_dir, size_t max_examples, double lambda) {
  return guarded([&] {
    require(out_dir != nullptr, "ladc_report: null argument");
    ladc::ReportOptions opts;
    if (max_examples) opts.max_examples = max_examples;
    if (lambda >= 0.0) {
      require(lambda <= 1.0, "ladc_report: lambda must lie in [0, 1]");
      opts.lambda = lambda;
    }
    ladc::generate_report(out_dir, opts);
  });
}

ladc_status ladc_localize(ladc_runner* runner, const char* out_dir, const char* image_png,
                          size_t concept_index, const char* mask_png, size_t* pixel_count) {
  return guarded([&] {
    require(runner && out_dir && image_png && mask_png, "ladc_localize: null argument");
    const auto image = ladc::read_png_rgb(image_png);
    const auto mask = ladc::localize_image(out_dir, *runner->runner, image, concept_index,
                                           std::filesystem::path(image_png).filename().string());
    ladc::write_mask_png(mask.mask, mask_png);
    if (pixel_count) *pixel_count = mask.area();
  });
}

ladc_status ladc_recorded_runner(const char* out_dir, char* buf, size_t buf_len, size_t* needed) {
  return guarded([&] {
    require(out_dir != nullptr, "ladc_recorded_runner: null argument");
    const std::string spec = ladc::load_analysis(out_dir).config.runner_spec;
    if (needed) *needed = spec.size();
    if (buf && buf_len) {
      const std::size_t n = std::min(buf_len - 1, spec.size());
      std::memcpy(buf, spec.data(), n);
      buf[n] = '\0';
    }
  });
}

void ladc_synth_options_init(ladc_synth_options* o) {
  if (!o) return;
  o->n_classes = 3;
  o->count = 40;
  o->size = 128;
  o->seed = 0;
  o->entangled = 0;
}

ladc_status ladc_synth(const ladc_synth_options* options, const char* out_dir) {
  return guarded([&] {
    require(options && out_dir, "ladc_synth: null argument");
    ladc::SynthOptions o;
    o.n_classes = options->n_classes;
    o.count = options->count;
    o.size = options->size;
    o.seed = options->seed;
    o.entangled = options->entangled != 0;
    ladc::synth_dataset(o, out_dir);
  });
}

ladc_status ladc_resize(const char* data_dir, const char* out_dir, size_t height, size_t width,
                        size_t* written) {
  return guarded([&] {
    require(data_dir && out_dir && height && width, "ladc_resize: bad argument");
    const auto n = ladc::resize_dataset(data_dir, out_dir, {height, width});
    if (written) *written = n;
  });
}

}  // extern "C"
