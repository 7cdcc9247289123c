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


#include "ladc/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "ladc/error.hpp"

namespace ladc {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
  if (shape.empty()) fail(ErrorCode::kInvalidShape, "tensor shape is empty");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) fail(ErrorCode::kInvalidShape, "tensor dimension of size 0");
    if (n > std::numeric_limits<std::size_t>::max() / d) {
      fail(ErrorCode::kDimensionOverflow, "tensor element count overflows");
    }
    n *= d;
  }
  return n;
}

void require_rank3(const Tensor& t, const char* what) {
  if (t.rank() != 3) {
    fail(ErrorCode::kShapeMismatch,
         std::string(what) + ": expected H x W x C tensor, got " +
             t.shape_string());
  }
}

}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "bad version";
    case ErrorCode::kBadDtype: return "bad dtype";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kDimensionOverflow: return "dimension overflow";
    case ErrorCode::kInvalidShape: return "invalid shape";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kDataset: return "dataset error";
    case ErrorCode::kImageDecode: return "image decode error";
    case ErrorCode::kUnknownLayer: return "unknown layer";
    case ErrorCode::kLayerConfigMismatch: return "layer configuration mismatch";
    case ErrorCode::kUndefinedGradient: return "undefined gradient";
    case ErrorCode::kRunnerHandshakeTimeout: return "runner handshake timeout";
    case ErrorCode::kRunnerProtocolMismatch: return "runner protocol mismatch";
    case ErrorCode::kRunnerMalformedReply: return "malformed runner reply";
    case ErrorCode::kRunnerExited: return "runner exited";
    case ErrorCode::kRunnerFailed: return "runner request failed";
  }
  return "unknown error";
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (checked_product(shape_) != data_.size()) {
    fail(ErrorCode::kShapeMismatch, "shape " + shape_string() + " needs " +
                                        std::to_string(checked_product(shape_)) +
                                        " values, got " +
                                        std::to_string(data_.size()));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "tensor contains NaN/Inf");
  }
}

Tensor Tensor::filled(std::vector<std::size_t> shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::size_t Tensor::height() const {
  require_rank3(*this, "height");
  return shape_[0];
}
std::size_t Tensor::width() const {
  require_rank3(*this, "width");
  return shape_[1];
}
std::size_t Tensor::channels() const {
  require_rank3(*this, "channels");
  return shape_[2];
}

bool Tensor::bit_equal(const Tensor& other) const {
  return shape_ == other.shape_ && data_.size() == other.data_.size() &&
         (data_.empty() || std::memcmp(data_.data(), other.data_.data(),
                                       data_.size() * sizeof(float)) == 0);
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

Tensor bilinear_upscale(const Tensor& src, Resolution target) {
  require_rank3(src, "bilinear_upscale");
  const std::size_t h = src.height(), w = src.width(), c = src.channels();
  if (target.height < h || target.width < w) {
    fail(ErrorCode::kInvalidArgument,
         "bilinear_upscale: target " + std::to_string(target.height) + "x" +
             std::to_string(target.width) + " smaller than source " +
             src.shape_string());
  }
  if (target.height == h && target.width == w) return src;

  Tensor out({target.height, target.width, c});
  const double sy = static_cast<double>(h) / static_cast<double>(target.height);
  const double sx = static_cast<double>(w) / static_cast<double>(target.width);

  // Column sampling positions are shared by every row.
  std::vector<std::size_t> x0(target.width), x1(target.width);
  std::vector<double> fx(target.width);
  for (std::size_t j = 0; j < target.width; ++j) {
    double v = std::clamp((static_cast<double>(j) + 0.5) * sx - 0.5, 0.0,
                          static_cast<double>(w - 1));
    x0[j] = static_cast<std::size_t>(std::floor(v));
    x1[j] = std::min(x0[j] + 1, w - 1);
    fx[j] = v - static_cast<double>(x0[j]);
  }

  for (std::size_t i = 0; i < target.height; ++i) {
    double u = std::clamp((static_cast<double>(i) + 0.5) * sy - 0.5, 0.0,
                          static_cast<double>(h - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(u));
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = u - static_cast<double>(y0);
    for (std::size_t j = 0; j < target.width; ++j) {
      for (std::size_t k = 0; k < c; ++k) {
        // lerp form keeps constants exact and stays inside [min, max].
        const double a = src.at(y0, x0[j], k), b = src.at(y0, x1[j], k);
        const double p = src.at(y1, x0[j], k), q = src.at(y1, x1[j], k);
        const double top = a + fx[j] * (b - a);
        const double bottom = p + fx[j] * (q - p);
        out.at(i, j, k) = static_cast<float>(top + fy * (bottom - top));
      }
    }
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) fail(ErrorCode::kInvalidArgument, "concat_channels: no parts");
  for (const Tensor& p : parts) require_rank3(p, "concat_channels");
  const std::size_t h = parts[0].height(), w = parts[0].width();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.height() != h || p.width() != w) {
      fail(ErrorCode::kShapeMismatch, "concat_channels: spatial dims " +
                                          p.shape_string() + " vs " +
                                          parts[0].shape_string());
    }
    total += p.channels();
  }
  if (parts.size() == 1) return parts[0];

  std::vector<float> data(h * w * total);
  float* dst = data.data();
  for (std::size_t px = 0; px < h * w; ++px) {
    for (const Tensor& p : parts) {
      const std::size_t c = p.channels();
      std::memcpy(dst, p.data().data() + px * c, c * sizeof(float));
      dst += c;
    }
  }
  return Tensor({h, w, total}, std::move(data));
}

std::vector<Tensor> split_channels(const Tensor& src,
                                   std::span<const std::size_t> channel_counts) {
  require_rank3(src, "split_channels");
  std::size_t total = 0;
  for (std::size_t c : channel_counts) total += c;
  if (total != src.channels() || channel_counts.empty()) {
    fail(ErrorCode::kShapeMismatch, "split_channels: channel counts do not sum to " +
                                        std::to_string(src.channels()));
  }
  const std::size_t h = src.height(), w = src.width();
  std::vector<Tensor> out;
  std::size_t offset = 0;
  for (std::size_t c : channel_counts) {
    std::vector<float> data(h * w * c);
    for (std::size_t px = 0; px < h * w; ++px) {
      std::memcpy(data.data() + px * c, src.data().data() + px * total + offset,
                  c * sizeof(float));
    }
    out.emplace_back(std::vector<std::size_t>{h, w, c}, std::move(data));
    offset += c;
  }
  return out;
}

// ---------------------------------------------------------------------------

StreamingStats::StreamingStats(std::size_t channels)
    : mean_(channels, 0.0), m2_(channels, 0.0) {}

void StreamingStats::add_sample(std::span<const float> values) {
  if (values.size() != mean_.size()) {
    fail(ErrorCode::kShapeMismatch, "StreamingStats: sample has " +
                                        std::to_string(values.size()) +
                                        " channels, expected " +
                                        std::to_string(mean_.size()));
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double delta = values[k] - mean_[k];
    mean_[k] += delta / n;
    m2_[k] += delta * (values[k] - mean_[k]);
  }
}

void StreamingStats::add(const Tensor& t) {
  const std::size_t c = t.shape().back();
  if (mean_.empty() && count_ == 0) {
    mean_.assign(c, 0.0);
    m2_.assign(c, 0.0);
  }
  const auto data = t.data();
  for (std::size_t off = 0; off < data.size(); off += c) {
    add_sample(data.subspan(off, c));
  }
}

void StreamingStats::merge(const StreamingStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  if (other.mean_.size() != mean_.size()) {
    fail(ErrorCode::kShapeMismatch, "StreamingStats: merging different widths");
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double delta = other.mean_[k] - mean_[k];
    mean_[k] += delta * nb / n;
    m2_[k] += other.m2_[k] + delta * delta * na * nb / n;
  }
  count_ += other.count_;
}

std::vector<double> StreamingStats::variance() const {
  std::vector<double> v(mean_.size(), 0.0);
  if (count_ == 0) return v;
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = std::max(0.0, m2_[k] / static_cast<double>(count_));
  }
  return v;
}

std::vector<double> StreamingStats::stddev() const {
  std::vector<double> v = variance();
  for (double& x : v) x = std::sqrt(x);
  return v;
}

// ---------------------------------------------------------------------------

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255) {
    fail(ErrorCode::kInvalidShape, "write_tensor: rank must be in [1, 255]");
  }
  std::vector<std::uint8_t> out;
  out.reserve(7 + 4 * t.rank() + 4 * t.size());
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  out.push_back(kTensorVersion);
  out.push_back(kTensorDtypeF32);
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      fail(ErrorCode::kDimensionOverflow, "write_tensor: dimension exceeds u32");
    }
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail(ErrorCode::kTruncated, "LTNS: missing magic");
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "LTNS: bad magic bytes");
  }
  if (bytes.size() < 7) fail(ErrorCode::kTruncated, "LTNS: truncated header");
  if (bytes[4] != kTensorVersion) {
    fail(ErrorCode::kBadVersion, "LTNS: unsupported version " + std::to_string(bytes[4]));
  }
  if (bytes[5] != kTensorDtypeF32) {
    fail(ErrorCode::kBadDtype, "LTNS: unsupported dtype " + std::to_string(bytes[5]));
  }
  const std::size_t ndim = bytes[6];
  if (ndim == 0) fail(ErrorCode::kInvalidShape, "LTNS: zero dimensions");
  if (bytes.size() < 7 + 4 * ndim) fail(ErrorCode::kTruncated, "LTNS: truncated shape");
  std::vector<std::size_t> shape(ndim);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    shape[i] = get_u32(bytes.data() + 7 + 4 * i);
    if (shape[i] == 0) fail(ErrorCode::kInvalidShape, "LTNS: dimension of size 0");
    // Payload must fit in a byte count addressable by size_t.
    if (count > (std::numeric_limits<std::uint64_t>::max() / 4) / shape[i] ||
        count * shape[i] > std::numeric_limits<std::size_t>::max() / 4) {
      fail(ErrorCode::kDimensionOverflow, "LTNS: dimension product overflows");
    }
    count *= shape[i];
  }
  const std::size_t header = 7 + 4 * ndim;
  if (bytes.size() - header < count * 4) {
    fail(ErrorCode::kTruncated, "LTNS: payload has " +
                                    std::to_string(bytes.size() - header) +
                                    " bytes, expected " + std::to_string(count * 4));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes.data() + header + 4 * i));
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const Tensor& t, std::ostream& sink) {
  const auto bytes = encode_tensor(t);
  sink.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!sink) fail(ErrorCode::kIo, "write_tensor: stream write failed");
}

Tensor read_tensor(std::istream& source) {
  // Read the header first so a stream can hold several tensors back to back.
  std::uint8_t head[7];
  source.read(reinterpret_cast<char*>(head), 4);
  if (source.gcount() < 4) fail(ErrorCode::kTruncated, "LTNS: missing magic");
  if (std::memcmp(head, kTensorMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "LTNS: bad magic bytes");
  }
  source.read(reinterpret_cast<char*>(head + 4), 3);
  if (source.gcount() < 3) fail(ErrorCode::kTruncated, "LTNS: truncated header");
  std::vector<std::uint8_t> bytes(head, head + 7);
  const std::size_t ndim = head[6];
  bytes.resize(7 + 4 * ndim);
  source.read(reinterpret_cast<char*>(bytes.data() + 7),
              static_cast<std::streamsize>(4 * ndim));
  if (static_cast<std::size_t>(source.gcount()) < 4 * ndim) {
    // Let decode_tensor classify version/dtype problems before truncation.
    bytes.resize(7 + static_cast<std::size_t>(source.gcount()));
    return decode_tensor(bytes);
  }
  std::uint64_t count = 1;
  bool overflow = false;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::uint64_t d = get_u32(bytes.data() + 7 + 4 * i);
    if (d != 0 && count > (std::numeric_limits<std::uint64_t>::max() / 4) / d) {
      overflow = true;
      break;
    }
    count *= d;
  }
  if (overflow || ndim == 0 || count == 0 || head[4] != kTensorVersion ||
      head[5] != kTensorDtypeF32 ||
      count > std::numeric_limits<std::size_t>::max() / 4) {
    return decode_tensor(bytes);  // raises the matching error
  }
  const std::size_t header = bytes.size();
  bytes.resize(header + count * 4);
  source.read(reinterpret_cast<char*>(bytes.data() + header),
              static_cast<std::streamsize>(count * 4));
  bytes.resize(header + static_cast<std::size_t>(source.gcount()));
  return decode_tensor(bytes);
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_tensor(t, out);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace ladc
