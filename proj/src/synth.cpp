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


#include "ladc/synth.hpp"

#include <fstream>
#include <random>

#include "json.hpp"
#include "ladc/error.hpp"
#include "ladc/png_io.hpp"

namespace ladc {

using json = nlohmann::json;

namespace {

struct NamedColor {
  const char* name;
  std::array<float, 3> rgb;
};

constexpr NamedColor kPalette[] = {
    {"red", {1, 0, 0}},    {"green", {0, 1, 0}}, {"blue", {0, 0, 1}},
    {"yellow", {1, 1, 0}}, {"cyan", {0, 1, 1}},  {"magenta", {1, 0, 1}},
};

std::size_t stripe_thickness(std::size_t size) { return std::max<std::size_t>(2, size / 16); }
constexpr std::size_t kStripeCount = 3;

// Footprint (w, h) of a cue.
std::pair<std::size_t, std::size_t> footprint(const CueSpec& cue, std::size_t size) {
  switch (cue.shape) {
    case CueShape::kSquare: {
      const std::size_t side = size / 5;
      return {side, side};
    }
    case CueShape::kDisk: {
      const std::size_t d = 2 * (size / 9) + 1;
      return {d, d};
    }
    case CueShape::kStripes: {
      const std::size_t t = stripe_thickness(size);
      return {size / 4, kStripeCount * t + (kStripeCount - 1) * cue.spacing};
    }
  }
  return {0, 0};
}

void paint(SynthImage& img, const CueSpec& cue, std::size_t x0, std::size_t y0, std::size_t size) {
  const auto [w, h] = footprint(cue, size);
  const std::size_t t = stripe_thickness(size);
  const double r = static_cast<double>(size / 9);
  for (std::size_t dy = 0; dy < h; ++dy) {
    for (std::size_t dx = 0; dx < w; ++dx) {
      bool on = true;
      if (cue.shape == CueShape::kDisk) {
        const double cx = static_cast<double>(dx) - r, cy = static_cast<double>(dy) - r;
        on = cx * cx + cy * cy <= r * r;
      } else if (cue.shape == CueShape::kStripes) {
        on = dy % (t + cue.spacing) < t;
      }
      if (!on) continue;
      for (std::size_t c = 0; c < 3; ++c) img.image.at(y0 + dy, x0 + dx, c) = cue.color[c];
      img.mask.at(y0 + dy, x0 + dx, 0) = 1.0f;
    }
  }
}

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {  // [lo, hi]
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

void validate(const SynthOptions& o) {
  if (o.n_classes < 2) fail(ErrorCode::kInvalidArgument, "synth: need at least 2 classes");
  if (o.size < 32) fail(ErrorCode::kInvalidArgument, "synth: image size must be at least 32");
  if (o.count < 4) fail(ErrorCode::kInvalidArgument, "synth: need at least 4 images per class");
}

}  // namespace

const char* cue_shape_name(CueShape s) {
  switch (s) {
    case CueShape::kSquare: return "square";
    case CueShape::kDisk: return "disk";
    case CueShape::kStripes: return "stripes";
  }
  return "?";
}

std::vector<CueSpec> synth_class_cues(const SynthOptions& options) {
  validate(options);
  const std::size_t t = stripe_thickness(options.size);
  std::vector<CueSpec> cues;
  for (std::size_t k = 0; k < options.n_classes; ++k) {
    const auto& col = kPalette[k % std::size(kPalette)];
    const auto shape = static_cast<CueShape>((k + k / std::size(kPalette)) % 3);
    CueSpec cue{shape, col.name, col.rgb, shape == CueShape::kStripes ? t : 0};
    if (options.entangled && k < 2) {
      cue = CueSpec{CueShape::kStripes, kPalette[0].name, kPalette[0].rgb, k == 0 ? t : 2 * t};
    }
    cues.push_back(cue);
  }
  return cues;
}

std::string synth_class_name(std::size_t k, const CueSpec& cue) {
  std::string idx = std::to_string(k);
  if (idx.size() < 2) idx = "0" + idx;
  std::string name = "c" + idx + "_" + cue.color_name + "_" + cue_shape_name(cue.shape);
  if (cue.shape == CueShape::kStripes) name += "_s" + std::to_string(cue.spacing);
  return name;
}

SynthImage synth_render(const SynthOptions& options, std::size_t k, std::size_t i) {
  const auto cues = synth_class_cues(options);
  const CueSpec& cue = cues.at(k);
  const std::size_t size = options.size;
  // Per-image stream so any image can be regenerated on its own.
  std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                    static_cast<std::uint32_t>(options.seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(i)};
  std::mt19937_64 rng(seq);

  SynthImage img{Tensor({size, size, 3}), Tensor({size, size, 1}), {}};
  const auto [w, h] = footprint(cue, size);
  const std::size_t margin = 2;
  const bool single = options.entangled && k < 2;
  const std::size_t wanted = single ? 1 : draw(rng, 1, 2);
  for (std::size_t attempt = 0; attempt < 50 && img.boxes.size() < wanted; ++attempt) {
    const std::size_t x = draw(rng, margin, size - margin - w);
    const std::size_t y = draw(rng, margin, size - margin - h);
    bool clear = true;
    for (const auto& b : img.boxes) {
      // Keep a gap of one stripe thickness between cues.
      const std::size_t gap = stripe_thickness(size);
      if (x < b[0] + b[2] + gap && b[0] < x + w + gap && y < b[1] + b[3] + gap &&
          b[1] < y + h + gap) {
        clear = false;
      }
    }
    if (!clear) continue;
    paint(img, cue, x, y, size);
    img.boxes.push_back({x, y, w, h});
  }
  return img;
}

std::filesystem::path synth_dataset(const SynthOptions& options, const std::filesystem::path& out) {
  const auto cues = synth_class_cues(options);
  namespace fs = std::filesystem;
  json manifest{{"generator", "ladc-synth"},
                {"seed", options.seed},
                {"size", options.size},
                {"count_per_class", options.count},
                {"entangled", options.entangled},
                {"classes", json::array()},
                {"images", json::array()}};
  for (std::size_t k = 0; k < cues.size(); ++k) {
    const std::string name = synth_class_name(k, cues[k]);
    manifest["classes"].push_back({{"name", name},
                                   {"shape", cue_shape_name(cues[k].shape)},
                                   {"color", cues[k].color},
                                   {"spacing", cues[k].spacing}});
    fs::create_directories(out / "images" / name);
    fs::create_directories(out / "masks" / name);
    for (std::size_t i = 0; i < options.count; ++i) {
      std::string file = std::to_string(i);
      file = std::string(4 - std::min<std::size_t>(4, file.size()), '0') + file + ".png";
      const SynthImage img = synth_render(options, k, i);
      const fs::path image_rel = fs::path("images") / name / file;
      const fs::path mask_rel = fs::path("masks") / name / file;
      write_png(img.image, out / image_rel);
      write_mask_png(img.mask, out / mask_rel);
      json boxes = json::array();
      for (const auto& b : img.boxes) {
        boxes.push_back({{"x", b[0]}, {"y", b[1]}, {"w", b[2]}, {"h", b[3]}});
      }
      manifest["images"].push_back({{"image", image_rel.generic_string()},
                                    {"mask", mask_rel.generic_string()},
                                    {"class", k},
                                    {"class_name", name},
                                    {"cues", boxes}});
    }
  }
  const fs::path manifest_path = out / "manifest.json";
  std::ofstream f(manifest_path);
  if (!f) fail(ErrorCode::kIo, "cannot write " + manifest_path.string());
  f << manifest.dump(2) << "\n";
  return manifest_path;
}

}  // namespace ladc
