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


// Scripted concept-runner/1 peer for subprocess tests.
//   fake_runner echo       identity layer "x"; logits = per-channel sums; grad = image
//   fake_runner v2         advertises the wrong protocol
//   fake_runner silent     never completes the handshake
//   fake_runner exit       handshakes, then exits on the first request
//   fake_runner garbage    handshakes, then answers with a non-JSON line
//   fake_runner refuse     handshakes, then answers every request with ok:false
//   fake_runner flat       like echo, but logits are all equal so g == 0
#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include "json.hpp"
#include "ladc/runner.hpp"

namespace {

using ladc::GradResult;
using ladc::Tensor;

class EchoRunner final : public ladc::ModelRunner {
 public:
  explicit EchoRunner(bool flat) : flat_(flat) {
    info_.protocol = ladc::kRunnerProtocol;
    info_.layers = {"x"};
    info_.n_classes = 3;
  }
  const ladc::RunnerInfo& info() const override { return info_; }

 protected:
  std::vector<std::vector<Tensor>> do_activations(std::span<const Tensor> images,
                                                  const std::vector<std::string>&) override {
    std::vector<std::vector<Tensor>> out;
    for (const auto& im : images) out.push_back({im});
    return out;
  }
  std::vector<std::vector<float>> do_logits(std::span<const Tensor> images) override {
    std::vector<std::vector<float>> out;
    for (const auto& im : images) out.push_back(sums(im));
    return out;
  }
  std::vector<GradResult> do_grad_g(std::span<const Tensor> images) override {
    std::vector<GradResult> out;
    for (const auto& im : images) {
      GradResult r;
      if (!flat_) {
        r.g = 1.0;
        r.grad = im;
      }
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  std::vector<float> sums(const Tensor& im) const {
    std::vector<float> s(3, 0.0f);
    if (flat_) return s;
    const auto d = im.data();
    for (std::size_t i = 0; i < d.size(); ++i) s[i % 3] += d[i];
    return s;
  }
  bool flat_;
  ladc::RunnerInfo info_;
};

void hello() {
  std::cout << nlohmann::json{{"protocol", ladc::kRunnerProtocol}, {"layers", {"x"}}, {"n_k", 3}}.dump()
            << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";
  std::string line;
  if (mode == "echo" || mode == "flat") {
    EchoRunner runner(mode == "flat");
    ladc::serve_protocol(runner, std::cin, std::cout);
    return 0;
  }
  if (mode == "v2") {
    std::cout << R"({"protocol":"concept-runner/2","layers":["x"],"n_k":3})" << std::endl;
    while (std::getline(std::cin, line)) {
    }
    return 0;
  }
  if (mode == "silent") {
    std::cerr << "loading weights forever" << std::endl;
    std::this_thread::sleep_for(std::chrono::seconds(30));
    return 0;
  }
  hello();
  if (mode == "exit") {
    std::getline(std::cin, line);
    std::cerr << "fatal: out of device memory" << std::endl;
    return 7;
  }
  while (std::getline(std::cin, line)) {
    if (mode == "garbage") {
      std::cout << "this is not json" << std::endl;
    } else {
      std::cout << R"({"ok":false,"error":"model exploded"})" << std::endl;
    }
  }
  return 0;
}
