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


#include "ladc/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "ladc/error.hpp"
#include "ladc/png_io.hpp"

namespace ladc {

namespace {

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png";
}

std::string res_string(Resolution r) {
  return std::to_string(r.height) + "x" + std::to_string(r.width);
}

}  // namespace

Resolution png_dimensions(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kImageDecode, "unreadable image " + path.string() + ": " + msg);
  }
  Resolution r{image.height, image.width};
  png_image_free(&image);
  return r;
}

DatasetIndex ingest_dataset(const fs::path& root, std::optional<Resolution> target) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    fail(ErrorCode::kDataset, "dataset root " + root.string() + " is not a directory");
  }
  DatasetIndex index;
  index.root = root;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) index.classes.push_back(e.path().filename().string());
  }
  std::sort(index.classes.begin(), index.classes.end());
  if (index.classes.size() < 2) {
    fail(ErrorCode::kDataset, "dataset " + root.string() + " has " +
                                  std::to_string(index.classes.size()) +
                                  " class directories; at least 2 are required");
  }

  for (std::size_t k = 0; k < index.classes.size(); ++k) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(root / index.classes[k])) {
      if (e.is_regular_file() && is_png(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                return a.filename().string() < b.filename().string();
              });
    if (files.empty()) {
      fail(ErrorCode::kDataset, "class directory " + (root / index.classes[k]).string() +
                                    " holds no PNG images");
    }
    for (auto& f : files) {
      index.images.push_back({f, k, index.classes[k] + "/" + f.filename().string()});
    }
  }

  for (const auto& entry : index.images) {
    const Resolution r = png_dimensions(entry.path);
    if (!target) target = r;
    if (r.height < target->height || r.width < target->width) {
      fail(ErrorCode::kDataset, "image " + entry.path.string() + " is " + res_string(r) +
                                    ", below the target resolution " + res_string(*target));
    }
    if (!(r == *target)) {
      fail(ErrorCode::kDataset, "image " + entry.path.string() + " is " + res_string(r) +
                                    ", expected " + res_string(*target) +
                                    "; downsize the dataset first with the resize command");
    }
  }
  index.resolution = *target;
  return index;
}

Tensor load_image(const DatasetIndex& index, std::size_t i) {
  const auto& entry = index.images.at(i);
  Tensor img = read_png_rgb(entry.path);
  if (img.height() != index.resolution.height || img.width() != index.resolution.width) {
    fail(ErrorCode::kDataset, "image " + entry.path.string() + " changed resolution since ingest");
  }
  return img;
}

Tensor area_downscale(const Tensor& src, Resolution target) {
  if (src.rank() != 3) fail(ErrorCode::kShapeMismatch, "area_downscale: expected H x W x C");
  const std::size_t h = src.height(), w = src.width(), c = src.channels();
  if (target.height == 0 || target.width == 0 || target.height > h || target.width > w) {
    fail(ErrorCode::kInvalidArgument, "area_downscale: target " + res_string(target) +
                                          " must be within source " + src.shape_string());
  }
  // Per-axis coverage weights of source cells over each output cell.
  auto weights = [](std::size_t n_src, std::size_t n_dst) {
    std::vector<std::vector<std::pair<std::size_t, double>>> wts(n_dst);
    const double scale = static_cast<double>(n_src) / static_cast<double>(n_dst);
    for (std::size_t o = 0; o < n_dst; ++o) {
      const double lo = o * scale, hi = (o + 1) * scale;
      for (auto s = static_cast<std::size_t>(std::floor(lo));
           s < n_src && static_cast<double>(s) < hi; ++s) {
        const double cover = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
        if (cover > 0.0) wts[o].emplace_back(s, cover / scale);
      }
    }
    return wts;
  };
  const auto wy = weights(h, target.height);
  const auto wx = weights(w, target.width);
  Tensor out({target.height, target.width, c});
  for (std::size_t i = 0; i < target.height; ++i) {
    for (std::size_t j = 0; j < target.width; ++j) {
      for (std::size_t k = 0; k < c; ++k) {
        double acc = 0.0;
        for (auto [sy, fy] : wy[i]) {
          for (auto [sx, fx] : wx[j]) acc += fy * fx * src.at(sy, sx, k);
        }
        out.at(i, j, k) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

std::size_t resize_dataset(const fs::path& root, const fs::path& out, Resolution target) {
  std::size_t written = 0;
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) class_dirs.push_back(e.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  for (const auto& dir : class_dirs) {
    const fs::path dst_dir = out / dir.filename();
    fs::create_directories(dst_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && is_png(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const Tensor img = read_png_rgb(f);
      if (img.height() < target.height || img.width() < target.width) {
        fail(ErrorCode::kDataset, "image " + f.string() + " is smaller than " + res_string(target));
      }
      write_png(area_downscale(img, target), dst_dir / f.filename());
      ++written;
    }
  }
  return written;
}

}  // namespace ladc
