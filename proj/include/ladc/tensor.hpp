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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ladc {

// Dense row-major float tensor. Image-like tensors are H x W x C with the
// channel axis last, so the C values of one pixel are contiguous.
class Tensor {
 public:
  Tensor() = default;
  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);
  // Validates shape (nonempty, every dim >= 1), size and finiteness.
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  static Tensor filled(std::vector<std::size_t> shape, float value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }
  std::vector<float> release() && { return std::move(data_); }

  // Image accessors; require rank 3.
  std::size_t height() const;
  std::size_t width() const;
  std::size_t channels() const;

  float at(std::size_t row, std::size_t col, std::size_t ch) const {
    return data_[(row * shape_[1] + col) * shape_[2] + ch];
  }
  float& at(std::size_t row, std::size_t col, std::size_t ch) {
    return data_[(row * shape_[1] + col) * shape_[2] + ch];
  }
  // The C channel values of pixel (row, col).
  std::span<const float> pixel(std::size_t row, std::size_t col) const {
    return std::span<const float>(data_).subspan(
        (row * shape_[1] + col) * shape_[2], shape_[2]);
  }

  // Bitwise comparison of shape and payload.
  bool bit_equal(const Tensor& other) const;

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

struct Resolution {
  std::size_t height = 0;
  std::size_t width = 0;

  bool operator==(const Resolution&) const = default;
};

// Resample an H x W x C tensor onto a larger or equal grid. Output pixel
// (i, j) samples the source at u = (i + 0.5) * h / H - 0.5 (likewise for
// columns), clamped to the source extent, with bilinear weights over the four
// integer neighbours. Downscaling is rejected.
Tensor bilinear_upscale(const Tensor& src, Resolution target);

// Concatenate H x W x c_k tensors along the channel axis in list order.
Tensor concat_channels(std::span<const Tensor> parts);

// Inverse of concat_channels: split into consecutive channel groups.
std::vector<Tensor> split_channels(const Tensor& src,
                                   std::span<const std::size_t> channel_counts);

// Per-channel running mean / sum of squared deviations (Welford, with Chan's
// pairwise merge).
class StreamingStats {
 public:
  StreamingStats() = default;
  explicit StreamingStats(std::size_t channels);

  // Adds every pixel of an H x W x C tensor (or every row of an N x C one).
  void add(const Tensor& t);
  void add_sample(std::span<const float> values);
  void merge(const StreamingStats& other);

  std::size_t channels() const { return mean_.size(); }
  std::uint64_t count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& m2() const { return m2_; }
  // Population variance m2 / count.
  std::vector<double> variance() const;
  std::vector<double> stddev() const;

 private:
  std::uint64_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// LTNS tensor files: "LTNS", version 0x01, dtype 0x01 (f32), ndim as u8,
// ndim little-endian u32 dimensions, then little-endian f32 data row-major.
inline constexpr char kTensorMagic[4] = {'L', 'T', 'N', 'S'};
inline constexpr std::uint8_t kTensorVersion = 0x01;
inline constexpr std::uint8_t kTensorDtypeF32 = 0x01;

void write_tensor(const Tensor& t, std::ostream& sink);
Tensor read_tensor(std::istream& source);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace ladc
