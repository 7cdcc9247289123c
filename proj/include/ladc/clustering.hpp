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
#include <functional>
#include <span>
#include <vector>

#include "ladc/tensor.hpp"

namespace ladc {

// Row-major set of equal-length descriptor vectors.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<float> data);

  // Rows of an N x D tensor, or the pixels of an H x W x D tensor.
  static PointSet from_tensor(const Tensor& t);
  Tensor to_tensor() const;

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return dim_ ? data_.size() / dim_ : 0; }
  bool empty() const { return data_.empty(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * dim_, dim_);
  }
  void append(std::span<const float> point);
  void append(const PointSet& other);

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

// The n_c concept centroids.
class CentroidSet {
 public:
  CentroidSet() = default;
  CentroidSet(std::size_t count, std::size_t dim, std::vector<float> data);

  static CentroidSet from_tensor(const Tensor& t);  // n_c x D
  Tensor to_tensor() const;

  std::size_t count() const { return count_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> centroid(std::size_t j) const {
    return std::span<const float>(data_).subspan(j * dim_, dim_);
  }
  std::span<float> centroid(std::size_t j) {
    return std::span<float>(data_).subspan(j * dim_, dim_);
  }
  std::span<const float> data() const { return data_; }

  bool bit_equal(const CentroidSet& other) const;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

// Per-centroid bookkeeping for the 1/count learning rate.
struct ClusterFitState {
  std::vector<std::uint64_t> counts;
  std::uint64_t rng_seed = 0;
  std::uint64_t batch_index = 0;

  static ClusterFitState fresh(std::size_t n_c, std::uint64_t seed) {
    return ClusterFitState{std::vector<std::uint64_t>(n_c, 0), seed, 0};
  }
};

double squared_distance(std::span<const float> a, std::span<const float> b);

// Index of the nearest centroid by squared Euclidean distance; ties go to the
// lowest index.
std::size_t assign_nearest(const CentroidSet& centroids, std::span<const float> vec);

// k-means++ seeding; deterministic for a fixed (sample, n_c, seed).
CentroidSet init_centroids(const PointSet& sample, std::size_t n_c, std::uint64_t seed);

// One minibatch step: all points are assigned against the centroids as they
// stood at the start of the batch, then each centroid moves toward its points
// in batch order with learning rate 1 / (cumulative assignment count).
void minibatch_update(ClusterFitState& state, CentroidSet& centroids,
                      const PointSet& batch, std::size_t workers = 1);

// Mean squared distance from each point to its nearest centroid.
double inertia(const CentroidSet& centroids, const PointSet& points);

// A replayable sequence of descriptor batches. Every epoch walks the same
// batches again, so sources are expected to be cheap to re-read (in memory or
// spilled to disk).
class BatchStream {
 public:
  virtual ~BatchStream() = default;
  virtual std::size_t batch_count() const = 0;
  virtual PointSet batch(std::size_t index) const = 0;
};

class InMemoryBatchStream final : public BatchStream {
 public:
  explicit InMemoryBatchStream(std::vector<PointSet> batches)
      : batches_(std::move(batches)) {}
  std::size_t batch_count() const override { return batches_.size(); }
  PointSet batch(std::size_t index) const override { return batches_.at(index); }

 private:
  std::vector<PointSet> batches_;
};

struct FitOptions {
  std::size_t n_concepts = 20;
  std::uint64_t seed = 0;
  std::size_t epochs = 10;
  std::size_t workers = 1;
  // Visit batches in a seed-driven random order each epoch.
  bool shuffle_batches = false;
  // Called after each epoch with the epoch number (1-based).
  std::function<void(std::size_t, const CentroidSet&)> on_epoch;
};

struct FitSummary {
  ClusterFitState state;
  std::size_t reseeded = 0;
  std::size_t total_points = 0;
};

CentroidSet fit_stream(const BatchStream& batches, const FitOptions& options,
                       FitSummary* summary = nullptr);

}  // namespace ladc
