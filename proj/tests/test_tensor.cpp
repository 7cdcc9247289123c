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


#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ladc/error.hpp"
#include "ladc/tensor.hpp"
#include "test_util.hpp"

using namespace ladc;
using ladc::testing::random_tensor;

namespace {

// Straight evaluation of the half-pixel sampling rule, one output value at a time.
double upscale_oracle(const Tensor& src, std::size_t H, std::size_t W, std::size_t i, std::size_t j,
                      std::size_t c) {
  const double h = static_cast<double>(src.height()), w = static_cast<double>(src.width());
  double u = (i + 0.5) * h / static_cast<double>(H) - 0.5;
  double v = (j + 0.5) * w / static_cast<double>(W) - 0.5;
  u = std::clamp(u, 0.0, h - 1.0);
  v = std::clamp(v, 0.0, w - 1.0);
  const auto r0 = static_cast<std::size_t>(std::floor(u));
  const auto c0 = static_cast<std::size_t>(std::floor(v));
  const std::size_t r1 = std::min(r0 + 1, src.height() - 1);
  const std::size_t c1 = std::min(c0 + 1, src.width() - 1);
  const double fu = u - r0, fv = v - c0;
  return (1 - fu) * (1 - fv) * src.at(r0, c0, c) + (1 - fu) * fv * src.at(r0, c1, c) +
         fu * (1 - fv) * src.at(r1, c0, c) + fu * fv * src.at(r1, c1, c);
}

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_tensor(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode unexpectedly succeeded");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("tensor construction validates shape, size and finiteness") {
  CHECK_THROWS_AS(Tensor({2, 0, 3}), Error);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), Error);
  CHECK_THROWS_AS(Tensor({1}, {std::numeric_limits<float>::quiet_NaN()}), Error);
  CHECK_THROWS_AS(Tensor({1}, {std::numeric_limits<float>::infinity()}), Error);
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.height() == 2);
  CHECK(t.width() == 3);
  CHECK(t.channels() == 4);
}

TEST_CASE("bilinear upscale: identity, constants and the 2x2 to 4x4 reference") {
  Tensor src({2, 2, 1}, {0, 1, 2, 3});
  CHECK(bilinear_upscale(src, {2, 2}).bit_equal(src));

  const Tensor up = bilinear_upscale(src, {4, 4});
  CHECK(up.at(0, 0, 0) == 0.0f);
  CHECK(up.at(3, 3, 0) == 3.0f);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(up.at(i, j, 0) == doctest::Approx(upscale_oracle(src, 4, 4, i, j, 0)).epsilon(1e-6));
    }
  }
  // u = 1.5 * 2 / 4 - 0.5 = 0.25 for row 1; v clamps to 0 for column 0.
  CHECK(up.at(1, 0, 0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(bilinear_upscale(src, {1, 4}), Error);

  const Tensor five = Tensor::filled({3, 5, 2}, 5.0f);
  const Tensor five_up = bilinear_upscale(five, {7, 11});
  for (float v : five_up.data()) CHECK(v == 5.0f);
}

TEST_CASE("bilinear upscale matches the nested-loop oracle and stays in range") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t h = 1 + rng() % 6, w = 1 + rng() % 6, c = 1 + rng() % 3;
    const std::size_t H = h + rng() % 9, W = w + rng() % 9;
    const Tensor src = random_tensor({h, w, c}, rng);
    const Tensor up = bilinear_upscale(src, {H, W});
    REQUIRE(up.shape() == std::vector<std::size_t>{H, W, c});
    for (std::size_t ch = 0; ch < c; ++ch) {
      float lo = 1e9f, hi = -1e9f;
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          lo = std::min(lo, src.at(i, j, ch));
          hi = std::max(hi, src.at(i, j, ch));
        }
      }
      for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
          const float v = up.at(i, j, ch);
          CHECK(v >= lo);
          CHECK(v <= hi);
          CHECK(std::abs(v - upscale_oracle(src, H, W, i, j, ch)) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("concat and split channels") {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor({4, 5, 1}, rng), b = random_tensor({4, 5, 2}, rng);
  const Tensor parts[] = {a, b};
  const Tensor cat = concat_channels(parts);
  REQUIRE(cat.channels() == 3);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(cat.at(i, j, 0) == a.at(i, j, 0));
      CHECK(cat.at(i, j, 1) == b.at(i, j, 0));
      CHECK(cat.at(i, j, 2) == b.at(i, j, 1));
    }
  }
  const Tensor one[] = {a};
  CHECK(concat_channels(one).bit_equal(a));

  const std::size_t counts[] = {1, 2};
  const auto split = split_channels(cat, counts);
  REQUIRE(split.size() == 2);
  CHECK(split[0].bit_equal(a));
  CHECK(split[1].bit_equal(b));
  CHECK(concat_channels(split).bit_equal(cat));

  const Tensor bad[] = {a, random_tensor({4, 4, 1}, rng)};
  CHECK_THROWS_AS(concat_channels(bad), Error);
}

TEST_CASE("streaming stats: two-pass oracle and merge of halves") {
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor({6, 7, 3}, rng, -3.0f, 8.0f);
  const Tensor y = random_tensor({4, 9, 3}, rng, -1.0f, 2.0f);
  StreamingStats whole;
  whole.add(x);
  whole.add(y);
  StreamingStats left, right;
  left.add(x);
  right.add(y);
  left.merge(right);

  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const Tensor* t : {&x, &y}) {
      for (std::size_t p = 0; p < t->size() / 3; ++p, ++n) sum += t->data()[p * 3 + c];
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const Tensor* t : {&x, &y}) {
      for (std::size_t p = 0; p < t->size() / 3; ++p) ss += std::pow(t->data()[p * 3 + c] - mean, 2);
    }
    CHECK(whole.count() == n);
    CHECK(whole.mean()[c] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(whole.variance()[c] == doctest::Approx(ss / n).epsilon(1e-9));
    CHECK(left.mean()[c] == doctest::Approx(whole.mean()[c]).epsilon(1e-5));
    CHECK(left.m2()[c] == doctest::Approx(whole.m2()[c]).epsilon(1e-5));
  }
}

TEST_CASE("streaming stats merge is associative") {
  std::mt19937_64 rng(8);
  StreamingStats a, b, c;
  a.add(random_tensor({3, 3, 2}, rng, 0, 10));
  b.add(random_tensor({2, 5, 2}, rng, -5, 1));
  c.add(random_tensor({4, 1, 2}, rng, 2, 3));
  StreamingStats ab_c = a;
  ab_c.merge(b);
  ab_c.merge(c);
  StreamingStats bc = b;
  bc.merge(c);
  StreamingStats a_bc = a;
  a_bc.merge(bc);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(ab_c.mean()[k] == doctest::Approx(a_bc.mean()[k]).epsilon(1e-5));
    CHECK(ab_c.m2()[k] == doctest::Approx(a_bc.m2()[k]).epsilon(1e-5));
    CHECK(ab_c.variance()[k] >= 0.0);
  }
  StreamingStats empty;
  StreamingStats merged = a;
  merged.merge(empty);
  CHECK(merged.count() == a.count());
}

TEST_CASE("LTNS layout of a one-element tensor") {
  const auto bytes = encode_tensor(Tensor({1}, {0.0f}));
  const std::vector<std::uint8_t> expected{'L', 'T', 'N', 'S', 0x01, 0x01, 0x01, 0x01, 0x00, 0x00, 0x00,
                                           0x00, 0x00, 0x00, 0x00};
  CHECK(bytes == expected);
  const auto two = encode_tensor(Tensor({1}, {1.0f}));
  // 1.0f is 0x3f800000, written little-endian.
  CHECK(two[11] == 0x00);
  CHECK(two[12] == 0x00);
  CHECK(two[13] == 0x80);
  CHECK(two[14] == 0x3f);
}

TEST_CASE("LTNS round-trip is bit-exact") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 20; ++i) {
    const Tensor t = random_tensor({3, 4, 2}, rng, -1e6f, 1e6f);
    CHECK(decode_tensor(encode_tensor(t)).bit_equal(t));
    std::stringstream ss;
    write_tensor(t, ss);
    CHECK(read_tensor(ss).bit_equal(t));
  }
  ladc::testing::TempDir dir("ltns");
  const Tensor t = random_tensor({5, 1, 7, 2}, rng);
  save_tensor(t, dir / "t.ltns");
  CHECK(load_tensor(dir / "t.ltns").bit_equal(t));
  // Negative zero and subnormals survive.
  const Tensor odd({3}, {-0.0f, 1e-40f, -3.5f});
  const Tensor back = decode_tensor(encode_tensor(odd));
  CHECK(std::memcmp(back.data().data(), odd.data().data(), 12) == 0);
}

TEST_CASE("LTNS decode errors are distinct") {
  const auto good = encode_tensor(Tensor({2, 2}, {1, 2, 3, 4}));
  auto bytes = good;
  std::memcpy(bytes.data(), "XXXX", 4);
  CHECK(decode_error(bytes) == ErrorCode::kBadMagic);
  bytes = good;
  bytes[4] = 0x02;
  CHECK(decode_error(bytes) == ErrorCode::kBadVersion);
  bytes = good;
  bytes[5] = 0x02;
  CHECK(decode_error(bytes) == ErrorCode::kBadDtype);
  bytes = good;
  bytes.pop_back();
  CHECK(decode_error(bytes) == ErrorCode::kTruncated);
  CHECK(decode_error({'L', 'T', 'N'}) == ErrorCode::kTruncated);
  // Dimension product overflowing 64 bits.
  std::vector<std::uint8_t> huge{'L', 'T', 'N', 'S', 1, 1, 3};
  for (int d = 0; d < 3; ++d) {
    for (int k = 0; k < 4; ++k) huge.push_back(0xff);
  }
  CHECK(decode_error(huge) == ErrorCode::kDimensionOverflow);
  std::vector<std::uint8_t> zero_dim{'L', 'T', 'N', 'S', 1, 1, 1, 0, 0, 0, 0};
  CHECK(decode_error(zero_dim) == ErrorCode::kInvalidShape);
  // Non-finite payload.
  auto nan = encode_tensor(Tensor({1}, {0.0f}));
  nan[13] = 0xc0;
  nan[14] = 0x7f;
  CHECK(decode_error(nan) == ErrorCode::kNonFinite);
}
