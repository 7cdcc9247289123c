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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ladc/tensor.hpp"

namespace ladc {

namespace fs = std::filesystem;

struct DatasetEntry {
  fs::path path;
  std::size_t class_index = 0;
  std::string id;  // "<class>/<file name>"
};

// root/<class>/*.png, classes and files in lexicographic order.
struct DatasetIndex {
  fs::path root;
  std::vector<std::string> classes;
  std::vector<DatasetEntry> images;
  Resolution resolution;

  std::size_t n_classes() const { return classes.size(); }
  std::size_t size() const { return images.size(); }
};

// Probes every image header. Images must all match `target` (or the first
// image when no target is given); larger images must be shrunk beforehand
// with resize_dataset.
DatasetIndex ingest_dataset(const fs::path& root,
                            std::optional<Resolution> target = std::nullopt);

// Decodes entry i as H x W x 3 in [0, 1] and checks its resolution.
Tensor load_image(const DatasetIndex& index, std::size_t i);

Resolution png_dimensions(const fs::path& path);

// Box-filter (area average) downscale; target must not exceed the source.
Tensor area_downscale(const Tensor& src, Resolution target);

// Copies root/<class>/*.png to out/<class>/ resized to `target` by area
// averaging. Returns the number of images written.
std::size_t resize_dataset(const fs::path& root, const fs::path& out, Resolution target);

}  // namespace ladc
