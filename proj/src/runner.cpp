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


#include "ladc/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <istream>
#include <ostream>
#include <set>

#include "json.hpp"
#include "ladc/error.hpp"
#include "ladc/importance.hpp"

namespace ladc {

using json = nlohmann::json;

std::vector<ActivationSet> ModelRunner::activations(std::span<const Tensor> images,
                                                    const std::vector<std::string>& layer_ids,
                                                    std::span<const std::string> image_ids) {
  if (images.empty()) fail(ErrorCode::kInvalidArgument, "activations: no images");
  if (layer_ids.empty()) fail(ErrorCode::kInvalidArgument, "activations: no layers requested");
  if (!image_ids.empty() && image_ids.size() != images.size()) {
    fail(ErrorCode::kInvalidArgument, "activations: image id count mismatch");
  }
  const auto& known = info().layers;
  for (const auto& id : layer_ids) {
    if (std::find(known.begin(), known.end(), id) == known.end()) {
      std::string list;
      for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
      fail(ErrorCode::kUnknownLayer, "unknown layer '" + id + "'; runner provides: " + list);
    }
  }
  auto raw = do_activations(images, layer_ids);
  counter_.forward_count += images.size();
  if (raw.size() != images.size()) {
    fail(ErrorCode::kRunnerMalformedReply, "runner returned activations for " +
                                               std::to_string(raw.size()) + " of " +
                                               std::to_string(images.size()) + " images");
  }
  std::vector<ActivationSet> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (raw[i].size() != layer_ids.size()) {
      fail(ErrorCode::kRunnerMalformedReply, "runner returned wrong number of layers");
    }
    out[i].source_image_id = image_ids.empty() ? std::to_string(i) : image_ids[i];
    out[i].input_resolution = {images[i].shape()[0], images[i].shape()[1]};
    for (std::size_t l = 0; l < layer_ids.size(); ++l) {
      out[i].layers.push_back({layer_ids[l], std::move(raw[i][l])});
    }
  }
  return out;
}

std::vector<std::vector<float>> ModelRunner::logits(std::span<const Tensor> images) {
  if (images.empty()) fail(ErrorCode::kInvalidArgument, "logits: no images");
  auto out = do_logits(images);
  counter_.forward_count += images.size();
  return out;
}

std::vector<GradResult> ModelRunner::grad_g(std::span<const Tensor> images) {
  if (images.empty()) fail(ErrorCode::kInvalidArgument, "grad_g: no images");
  if (info().n_classes < 2) {
    fail(ErrorCode::kInvalidArgument, "grad_g: model must produce at least 2 logits");
  }
  auto out = do_grad_g(images);
  counter_.gradient_count += images.size();
  if (out.size() != images.size()) {
    fail(ErrorCode::kRunnerMalformedReply, "runner returned gradients for " +
                                               std::to_string(out.size()) + " of " +
                                               std::to_string(images.size()) + " images");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].grad && out[i].grad->shape() != images[i].shape()) {
      fail(ErrorCode::kRunnerMalformedReply, "gradient shape " + out[i].grad->shape_string() +
                                                 " differs from input " +
                                                 images[i].shape_string());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

ToyModel::ToyModel(std::size_t n_classes) : n_classes_(n_classes), head_(3 * n_classes, 0.0) {
  if (n_classes < 1) fail(ErrorCode::kInvalidArgument, "toy model needs at least one class");
  for (std::size_t k = 0; k < n_classes; ++k) {
    head_[(k % 3) * n_classes + k] = 1.0;
    if (k >= 3) head_[((k + 1) % 3) * n_classes + k] = 0.5 * static_cast<double>(k / 3);
  }
}

void ToyModel::check_image(const Tensor& image) const {
  if (image.rank() != 3 || image.channels() != 3 || image.height() < 2 || image.width() < 2) {
    fail(ErrorCode::kShapeMismatch,
         "toy model expects an H x W x 3 image with H, W >= 2, got " + image.shape_string());
  }
}

Tensor ToyModel::layer_a1(const Tensor& image) const {
  check_image(image);
  Tensor a1 = image;
  for (float& v : a1.mutable_data()) v = std::max(v, 0.0f);
  return a1;
}

Tensor ToyModel::layer_a2(const Tensor& image) const {
  const Tensor a1 = layer_a1(image);
  const std::size_t h2 = a1.height() / 2, w2 = a1.width() / 2;
  Tensor a2({h2, w2, 3});
  for (std::size_t i = 0; i < h2; ++i) {
    for (std::size_t j = 0; j < w2; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double s = static_cast<double>(a1.at(2 * i, 2 * j, c)) + a1.at(2 * i, 2 * j + 1, c) +
                         a1.at(2 * i + 1, 2 * j, c) + a1.at(2 * i + 1, 2 * j + 1, c);
        a2.at(i, j, c) = static_cast<float>(s * 0.25);
      }
    }
  }
  return a2;
}

std::vector<double> ToyModel::logits(const Tensor& image) const {
  check_image(image);
  // Global average of the pooled map, computed from a1 in double precision.
  const std::size_t h2 = image.height() / 2, w2 = image.width() / 2;
  double pooled[3] = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < 2 * h2; ++i) {
    for (std::size_t j = 0; j < 2 * w2; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        pooled[c] += std::max(0.0, static_cast<double>(image.at(i, j, c)));
      }
    }
  }
  const double n = 4.0 * static_cast<double>(h2 * w2);
  std::vector<double> y(n_classes_, 0.0);
  for (std::size_t k = 0; k < n_classes_; ++k) {
    for (std::size_t c = 0; c < 3; ++c) y[k] += head(c, k) * (pooled[c] / n);
  }
  return y;
}

GradResult ToyModel::grad_g(const Tensor& image) const {
  const auto y = logits(image);
  GradResult result;
  result.g = wrapper_g(std::span<const double>(y));
  if (result.g == 0.0) return result;
  const auto dy = grad_g_wrt_logits(std::span<const double>(y));

  const std::size_t h2 = image.height() / 2, w2 = image.width() / 2;
  const double n = 4.0 * static_cast<double>(h2 * w2);
  double dpix[3];  // dg / d a1 for any pixel inside the pooled region
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < n_classes_; ++k) s += head(c, k) * dy[k];
    dpix[c] = s / n;
  }
  Tensor grad(image.shape());
  for (std::size_t i = 0; i < 2 * h2; ++i) {
    for (std::size_t j = 0; j < 2 * w2; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        if (image.at(i, j, c) > 0.0f) grad.at(i, j, c) = static_cast<float>(dpix[c]);
      }
    }
  }
  result.grad = std::move(grad);
  return result;
}

ToyRunner::ToyRunner(std::size_t n_classes) : model_(n_classes) {
  info_.protocol = kRunnerProtocol;
  info_.layers = ToyModel::layer_names();
  info_.n_classes = n_classes;
  info_.input_normalization = R"({"mean":[0,0,0],"std":[1,1,1],"range":[0,1]})";
}

std::vector<std::vector<Tensor>> ToyRunner::do_activations(
    std::span<const Tensor> images, const std::vector<std::string>& layer_ids) {
  std::vector<std::vector<Tensor>> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (const auto& id : layer_ids) {
      out[i].push_back(id == "a1" ? model_.layer_a1(images[i]) : model_.layer_a2(images[i]));
    }
  }
  return out;
}

std::vector<std::vector<float>> ToyRunner::do_logits(std::span<const Tensor> images) {
  std::vector<std::vector<float>> out;
  for (const auto& img : images) {
    const auto y = model_.logits(img);
    out.emplace_back(y.begin(), y.end());
  }
  return out;
}

std::vector<GradResult> ToyRunner::do_grad_g(std::span<const Tensor> images) {
  std::vector<GradResult> out;
  for (const auto& img : images) out.push_back(model_.grad_g(img));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string file_safe(const std::string& s) {
  std::string out;
  for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-') ? ch : '_';
  return out;
}

json handle_request(ModelRunner& backend, const json& req) {
  const std::string kind = req.at("kind").get<std::string>();
  const auto paths = req.at("images").get<std::vector<std::string>>();
  const std::filesystem::path out_dir = req.at("out_dir").get<std::string>();
  std::filesystem::create_directories(out_dir);

  std::vector<Tensor> images;
  images.reserve(paths.size());
  for (const auto& p : paths) images.push_back(load_tensor(p));

  json tensors = json::object();
  auto emit = [&](const std::string& name, const std::string& file, const Tensor& t) {
    const auto path = out_dir / file;
    save_tensor(t, path);
    tensors[name] = path.string();
  };

  if (kind == "activations") {
    const auto layers = req.at("layers").get<std::vector<std::string>>();
    auto acts = backend.activations(images, layers);
    for (std::size_t i = 0; i < acts.size(); ++i) {
      for (const auto& l : acts[i].layers) {
        emit(std::to_string(i) + "/" + l.layer_id,
             "img" + std::to_string(i) + "_" + file_safe(l.layer_id) + ".ltns", l.activation);
      }
    }
  } else if (kind == "logits") {
    auto ys = backend.logits(images);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      emit(std::to_string(i) + "/logits", "img" + std::to_string(i) + "_logits.ltns",
           Tensor({ys[i].size()}, ys[i]));
    }
  } else if (kind == "grad_g") {
    auto grads = backend.grad_g(images);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      emit(std::to_string(i) + "/g", "img" + std::to_string(i) + "_g.ltns",
           Tensor({1}, {static_cast<float>(grads[i].g)}));
      if (grads[i].grad) {
        emit(std::to_string(i) + "/grad", "img" + std::to_string(i) + "_grad.ltns",
             *grads[i].grad);
      }
    }
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown request kind '" + kind + "'");
  }
  return json{{"ok", true}, {"tensors", tensors}};
}

}  // namespace

void serve_protocol(ModelRunner& backend, std::istream& in, std::ostream& out) {
  const auto& info = backend.info();
  json hello{{"protocol", kRunnerProtocol},
             {"layers", info.layers},
             {"n_k", info.n_classes}};
  if (!info.input_normalization.empty()) {
    hello["input_normalization"] = json::parse(info.input_normalization);
  }
  out << hello.dump() << "\n" << std::flush;

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json reply;
    try {
      reply = handle_request(backend, json::parse(line));
    } catch (const std::exception& e) {
      reply = json{{"ok", false}, {"error", e.what()}};
    }
    out << reply.dump() << "\n" << std::flush;
  }
}

}  // namespace ladc
