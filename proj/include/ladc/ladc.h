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


/* C interface to the ladc concept-extraction library.
 *
 * All functions return an ladc_status. On failure, ladc_last_error() returns
 * a message describing the most recent error on the calling thread. Objects
 * are opaque handles released with their matching *_free / *_close call.
 */
#ifndef LADC_LADC_H_
#define LADC_LADC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LADC_API __declspec(dllexport)
#else
#define LADC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ladc_status {
  LADC_OK = 0,
  LADC_ERR_INVALID_ARGUMENT = 1,
  LADC_ERR_SHAPE = 2,
  LADC_ERR_NON_FINITE = 3,
  LADC_ERR_BAD_MAGIC = 10,
  LADC_ERR_BAD_VERSION = 11,
  LADC_ERR_BAD_DTYPE = 12,
  LADC_ERR_TRUNCATED = 13,
  LADC_ERR_DIM_OVERFLOW = 14,
  LADC_ERR_INVALID_SHAPE = 15,
  LADC_ERR_IO = 20,
  LADC_ERR_DATASET = 21,
  LADC_ERR_IMAGE_DECODE = 22,
  LADC_ERR_UNKNOWN_LAYER = 30,
  LADC_ERR_LAYER_CONFIG = 31,
  LADC_ERR_UNDEFINED_GRADIENT = 32,
  LADC_ERR_RUNNER_TIMEOUT = 40,
  LADC_ERR_RUNNER_PROTOCOL = 41,
  LADC_ERR_RUNNER_REPLY = 42,
  LADC_ERR_RUNNER_EXITED = 43,
  LADC_ERR_RUNNER_FAILED = 44,
  LADC_ERR_INTERNAL = 99
} ladc_status;

/* Coarse failure classes, matching the CLI exit codes. */
typedef enum ladc_error_class {
  LADC_CLASS_OK = 0,
  LADC_CLASS_USAGE = 1,
  LADC_CLASS_DATA = 2,
  LADC_CLASS_RUNNER = 3
} ladc_error_class;

LADC_API const char* ladc_version(void);
LADC_API const char* ladc_last_error(void);
LADC_API const char* ladc_status_name(ladc_status status);
LADC_API ladc_error_class ladc_status_class(ladc_status status);

/* ---- Tensors (LTNS files) ---------------------------------------------- */

typedef struct ladc_tensor ladc_tensor;

LADC_API ladc_status ladc_tensor_create(const size_t* shape, size_t ndim, const float* data,
                                        ladc_tensor** out);
LADC_API ladc_status ladc_tensor_read(const char* path, ladc_tensor** out);
LADC_API ladc_status ladc_tensor_write(const ladc_tensor* tensor, const char* path);
LADC_API size_t ladc_tensor_ndim(const ladc_tensor* tensor);
LADC_API size_t ladc_tensor_dim(const ladc_tensor* tensor, size_t axis);
LADC_API size_t ladc_tensor_size(const ladc_tensor* tensor);
LADC_API const float* ladc_tensor_data(const ladc_tensor* tensor);
LADC_API void ladc_tensor_free(ladc_tensor* tensor);

/* ---- Importance primitives --------------------------------------------- */

/* g(y) = sqrt(sum_{i,j} (y_i - y_j)^2); n >= 2. */
LADC_API ladc_status ladc_wrapper_g(const float* logits, size_t n, double* out);
/* dg/dy into grad[n]; LADC_ERR_UNDEFINED_GRADIENT when g(y) == 0. */
LADC_API ladc_status ladc_wrapper_g_grad(const float* logits, size_t n, double* grad);

/* ---- Model runners ------------------------------------------------------ */

typedef struct ladc_runner ladc_runner;

/* The built-in analytic toy CNN (layers "a1", "a2"). */
LADC_API ladc_status ladc_runner_open_toy(size_t n_classes, ladc_runner** out);
/* An external concept-runner/1 process started with /bin/sh -c command.
 * handshake_timeout_ms <= 0 selects the default. */
LADC_API ladc_status ladc_runner_open_command(const char* command, int handshake_timeout_ms,
                                              ladc_runner** out);
LADC_API void ladc_runner_close(ladc_runner* runner);
LADC_API ladc_status ladc_runner_counts(const ladc_runner* runner, uint64_t* forward,
                                        uint64_t* gradient);
LADC_API size_t ladc_runner_n_classes(const ladc_runner* runner);

/* Serves the toy model over concept-runner/1 on stdin/stdout until EOF. */
LADC_API ladc_status ladc_serve_toy_runner(size_t n_classes);

/* ---- Pipeline ----------------------------------------------------------- */

typedef struct ladc_extract_options {
  const char* layers; /* comma separated layer ids */
  size_t n_concepts;
  size_t batch_size;
  double lambda;
  size_t epochs;
  uint64_t seed;
  int standardize;
  int shuffle_batches;
  size_t height; /* 0: take the resolution from the first image */
  size_t width;
  size_t workers;
  const char* runner_spec; /* recorded in extraction.json; may be NULL */
} ladc_extract_options;

LADC_API void ladc_extract_options_init(ladc_extract_options* options);

LADC_API ladc_status ladc_extract(ladc_runner* runner, const char* data_dir, const char* out_dir,
                                  const ladc_extract_options* options);
/* Scores an extracted analysis; skipped (g == 0) image count optional. */
LADC_API ladc_status ladc_score(ladc_runner* runner, const char* out_dir, size_t workers,
                                size_t* skipped_images);
LADC_API ladc_status ladc_report(const char* out_dir, size_t max_examples, double lambda);
/* Writes the concept's mask of image_png as a 1-bit PNG to mask_png. */
LADC_API ladc_status ladc_localize(ladc_runner* runner, const char* out_dir, const char* image_png,
                                   size_t concept_index, const char* mask_png,
                                   size_t* pixel_count);
/* Runner spec recorded by a previous extraction ("toy" or a command).
 * Copies at most buf_len - 1 bytes; returns the full length in *needed. */
LADC_API ladc_status ladc_recorded_runner(const char* out_dir, char* buf, size_t buf_len,
                                          size_t* needed);

typedef struct ladc_synth_options {
  size_t n_classes;
  size_t count;
  size_t size;
  uint64_t seed;
  int entangled;
} ladc_synth_options;

LADC_API void ladc_synth_options_init(ladc_synth_options* options);
LADC_API ladc_status ladc_synth(const ladc_synth_options* options, const char* out_dir);
LADC_API ladc_status ladc_resize(const char* data_dir, const char* out_dir, size_t height,
                                 size_t width, size_t* written);

#ifdef __cplusplus
}
#endif

#endif /* LADC_LADC_H_ */
