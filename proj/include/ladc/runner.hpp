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

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ladc/lad.hpp"
#include "ladc/tensor.hpp"

namespace ladc {

// Model evaluations, counted per image.
struct EvalCounter {
  std::uint64_t forward_count = 0;
  std::uint64_t gradient_count = 0;
};

// Input gradient of g(f(x)) for one image. `grad` is empty when g(f(x)) == 0,
// where the gradient is undefined.
struct GradResult {
  double g = 0.0;
  std::optional<Tensor> grad;

  bool defined() const { return grad.has_value(); }
};

struct RunnerInfo {
  std::string protocol;
  std::vector<std::string> layers;
  std::size_t n_classes = 0;
  // Raw JSON of the runner's declared input normalization, or empty.
  std::string input_normalization;
};

// Every model evaluation in the pipeline goes through a ModelRunner. The
// public entry points validate requests and maintain the evaluation counter;
// implementations only provide the do_* hooks.
class ModelRunner {
 public:
  virtual ~ModelRunner() = default;

  virtual const RunnerInfo& info() const = 0;

  // Activations of `layer_ids` for each image; forward_count += images.size().
  std::vector<ActivationSet> activations(std::span<const Tensor> images,
                                         const std::vector<std::string>& layer_ids,
                                         std::span<const std::string> image_ids = {});
  // Raw logits; forward_count += images.size().
  std::vector<std::vector<float>> logits(std::span<const Tensor> images);
  // grad_x g(f(x)); gradient_count += images.size().
  std::vector<GradResult> grad_g(std::span<const Tensor> images);

  const EvalCounter& counter() const { return counter_; }

 protected:
  // Result [image][layer], layers in request order.
  virtual std::vector<std::vector<Tensor>> do_activations(
      std::span<const Tensor> images, const std::vector<std::string>& layer_ids) = 0;
  virtual std::vector<std::vector<float>> do_logits(std::span<const Tensor> images) = 0;
  virtual std::vector<GradResult> do_grad_g(std::span<const Tensor> images) = 0;

 private:
  EvalCounter counter_;
};

// Fixed analytic CNN: a1 = relu(conv1x1(x)) with identity colour filters,
// a2 = 2x2 average pooling of a1, logits = W^T * global_average(a2) with a
// 3 x n_k head whose columns are distinct (class 0 reads red, 1 green,
// 2 blue, further classes mix channels).
class ToyModel {
 public:
  explicit ToyModel(std::size_t n_classes);

  std::size_t n_classes() const { return n_classes_; }
  // Head weight for colour channel c and class k.
  double head(std::size_t c, std::size_t k) const { return head_[c * n_classes_ + k]; }

  static std::vector<std::string> layer_names() { return {"a1", "a2"}; }

  Tensor layer_a1(const Tensor& image) const;
  Tensor layer_a2(const Tensor& image) const;
  std::vector<double> logits(const Tensor& image) const;
  // Analytic chain rule through head, pooling, ReLU and the 1x1 conv.
  GradResult grad_g(const Tensor& image) const;

 private:
  void check_image(const Tensor& image) const;

  std::size_t n_classes_;
  std::vector<double> head_;
};

class ToyRunner final : public ModelRunner {
 public:
  explicit ToyRunner(std::size_t n_classes);

  const RunnerInfo& info() const override { return info_; }
  const ToyModel& model() const { return model_; }

 protected:
  std::vector<std::vector<Tensor>> do_activations(
      std::span<const Tensor> images, const std::vector<std::string>& layer_ids) override;
  std::vector<std::vector<float>> do_logits(std::span<const Tensor> images) override;
  std::vector<GradResult> do_grad_g(std::span<const Tensor> images) override;

 private:
  ToyModel model_;
  RunnerInfo info_;
};

inline constexpr const char* kRunnerProtocol = "concept-runner/1";
inline constexpr const char* kRunnerEnvVar = "CONCEPT_RUNNER_CMD";

struct SubprocessOptions {
  std::string command;  // run through /bin/sh -c
  std::chrono::milliseconds handshake_timeout{30000};
  // Zero means wait indefinitely for each reply.
  std::chrono::milliseconds request_timeout{0};
  // Directory for exchanged tensor files; a fresh temporary one when empty.
  std::string work_dir;
};

// Talks concept-runner/1 to an external process over its stdin/stdout:
// one JSON request line in, one JSON reply line out, tensors exchanged as
// LTNS files. Requests are issued strictly sequentially.
class SubprocessRunner final : public ModelRunner {
 public:
  explicit SubprocessRunner(SubprocessOptions options);
  ~SubprocessRunner() override;

  SubprocessRunner(const SubprocessRunner&) = delete;
  SubprocessRunner& operator=(const SubprocessRunner&) = delete;

  const RunnerInfo& info() const override;
  // Whatever the runner has written to stderr so far.
  std::string stderr_text() const;

 protected:
  std::vector<std::vector<Tensor>> do_activations(
      std::span<const Tensor> images, const std::vector<std::string>& layer_ids) override;
  std::vector<std::vector<float>> do_logits(std::span<const Tensor> images) override;
  std::vector<GradResult> do_grad_g(std::span<const Tensor> images) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Serves any in-process runner over the concept-runner/1 protocol until the
// input stream closes. Failed requests answer {"ok":false} and the loop
// continues.
void serve_protocol(ModelRunner& backend, std::istream& in, std::ostream& out);

}  // namespace ladc
