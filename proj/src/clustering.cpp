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


#include "ladc/clustering.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

#include "ladc/error.hpp"
#include "ladc/parallel.hpp"

namespace ladc {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    fail(ErrorCode::kShapeMismatch, std::string(what) + ": vector has dimension " +
                                        std::to_string(got) + ", centroids have " +
                                        std::to_string(want));
  }
}

// Nearest centroid and its squared distance.
std::pair<std::size_t, double> nearest(const CentroidSet& c, std::span<const float> v) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c.count(); ++j) {
    const double d = squared_distance(c.centroid(j), v);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return {best, best_d};
}

// Points seen during one epoch that lie farthest from their centroid; used to
// revive centroids that attracted no point in that epoch.
class FarthestPoints {
 public:
  explicit FarthestPoints(std::size_t capacity) : capacity_(capacity) {}

  void offer(double distance, std::span<const float> point) {
    if (distance <= 0.0) return;
    if (entries_.size() == capacity_ && distance <= entries_.back().first) return;
    for (const auto& e : entries_) {
      if (std::equal(e.second.begin(), e.second.end(), point.begin(), point.end(),
                     [](float a, float b) {
                       return std::memcmp(&a, &b, sizeof(float)) == 0;
                     })) {
        return;
      }
    }
    auto pos = std::upper_bound(
        entries_.begin(), entries_.end(), distance,
        [](double d, const auto& e) { return d > e.first; });
    entries_.insert(pos, {distance, std::vector<float>(point.begin(), point.end())});
    if (entries_.size() > capacity_) entries_.pop_back();
  }

  const std::vector<std::pair<double, std::vector<float>>>& entries() const {
    return entries_;
  }

 private:
  std::size_t capacity_;
  std::vector<std::pair<double, std::vector<float>>> entries_;  // descending
};

struct EpochTracker {
  std::vector<std::uint64_t> assigned;
  FarthestPoints farthest;
};

void update_batch(ClusterFitState& state, CentroidSet& centroids, const PointSet& batch,
                  std::size_t workers, EpochTracker* tracker) {
  if (batch.empty()) fail(ErrorCode::kInvalidArgument, "minibatch_update: empty batch");
  require_dim(batch.dim(), centroids.dim(), "minibatch_update");
  if (state.counts.size() != centroids.count()) {
    fail(ErrorCode::kInvalidArgument, "minibatch_update: state tracks " +
                                          std::to_string(state.counts.size()) +
                                          " centroids, set has " +
                                          std::to_string(centroids.count()));
  }
  const std::size_t n = batch.rows();
  std::vector<std::uint32_t> label(n);
  std::vector<double> dist(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto [j, d] = nearest(centroids, batch.row(i));
    label[i] = static_cast<std::uint32_t>(j);
    dist[i] = d;
  });

  const std::size_t dim = centroids.dim();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = label[i];
    const std::uint64_t count = ++state.counts[j];
    const double rate = 1.0 / static_cast<double>(count);
    auto c = centroids.centroid(j);
    auto x = batch.row(i);
    for (std::size_t k = 0; k < dim; ++k) {
      c[k] = static_cast<float>(c[k] + rate * (static_cast<double>(x[k]) - c[k]));
    }
    if (tracker) {
      ++tracker->assigned[j];
      tracker->farthest.offer(dist[i], x);
    }
  }
  ++state.batch_index;
}

bool matches_any_centroid(const CentroidSet& c, std::span<const float> p) {
  for (std::size_t j = 0; j < c.count(); ++j) {
    if (std::memcmp(c.centroid(j).data(), p.data(), p.size() * sizeof(float)) == 0) {
      return true;
    }
  }
  return false;
}

}  // namespace

PointSet::PointSet(std::size_t dim, std::vector<float> data)
    : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0 || data_.size() % dim_ != 0) {
    fail(ErrorCode::kShapeMismatch, "PointSet: data length " + std::to_string(data_.size()) +
                                        " is not a multiple of dimension " +
                                        std::to_string(dim_));
  }
}

PointSet PointSet::from_tensor(const Tensor& t) {
  const std::size_t dim = t.shape().back();
  return PointSet(dim, std::vector<float>(t.data().begin(), t.data().end()));
}

Tensor PointSet::to_tensor() const { return Tensor({rows(), dim_}, data_); }

void PointSet::append(std::span<const float> point) {
  if (dim_ == 0) dim_ = point.size();
  if (point.size() != dim_) {
    fail(ErrorCode::kShapeMismatch, "PointSet::append: dimension mismatch");
  }
  data_.insert(data_.end(), point.begin(), point.end());
}

void PointSet::append(const PointSet& other) {
  if (other.empty()) return;
  if (dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) fail(ErrorCode::kShapeMismatch, "PointSet::append: dimension mismatch");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

CentroidSet::CentroidSet(std::size_t count, std::size_t dim, std::vector<float> data)
    : count_(count), dim_(dim), data_(std::move(data)) {
  if (count_ == 0 || dim_ == 0 || data_.size() != count_ * dim_) {
    fail(ErrorCode::kShapeMismatch, "CentroidSet: expected " + std::to_string(count) + "x" +
                                        std::to_string(dim) + " values");
  }
}

CentroidSet CentroidSet::from_tensor(const Tensor& t) {
  if (t.rank() != 2) {
    fail(ErrorCode::kShapeMismatch, "centroid tensor must be n_c x D, got " + t.shape_string());
  }
  return CentroidSet(t.shape()[0], t.shape()[1],
                     std::vector<float>(t.data().begin(), t.data().end()));
}

Tensor CentroidSet::to_tensor() const { return Tensor({count_, dim_}, data_); }

bool CentroidSet::bit_equal(const CentroidSet& other) const {
  return count_ == other.count_ && dim_ == other.dim_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += d * d;
  }
  return s;
}

std::size_t assign_nearest(const CentroidSet& centroids, std::span<const float> vec) {
  require_dim(vec.size(), centroids.dim(), "assign_nearest");
  return nearest(centroids, vec).first;
}

CentroidSet init_centroids(const PointSet& sample, std::size_t n_c, std::uint64_t seed) {
  if (n_c == 0) fail(ErrorCode::kInvalidArgument, "init_centroids: n_c must be positive");
  const std::size_t n = sample.rows();
  if (n < n_c) {
    fail(ErrorCode::kInvalidArgument, "init_centroids: " + std::to_string(n) +
                                          " samples for " + std::to_string(n_c) + " centroids");
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> chosen(n, false);
  std::vector<std::size_t> picks;
  picks.reserve(n_c);

  std::size_t first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  picks.push_back(first);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(sample.row(i), sample.row(first));

  while (picks.size() < n_c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      std::size_t last_positive = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] <= 0.0) continue;
        acc += d2[i];
        last_positive = i;
        if (acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = last_positive;
    } else {
      // Every remaining point coincides with a chosen one.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    picks.push_back(pick);
    chosen[pick] = true;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(sample.row(i), sample.row(pick)));
    }
  }

  std::vector<float> data;
  data.reserve(n_c * sample.dim());
  for (std::size_t p : picks) {
    auto r = sample.row(p);
    data.insert(data.end(), r.begin(), r.end());
  }
  return CentroidSet(n_c, sample.dim(), std::move(data));
}

void minibatch_update(ClusterFitState& state, CentroidSet& centroids, const PointSet& batch,
                      std::size_t workers) {
  update_batch(state, centroids, batch, workers, nullptr);
}

double inertia(const CentroidSet& centroids, const PointSet& points) {
  if (points.empty()) return 0.0;
  require_dim(points.dim(), centroids.dim(), "inertia");
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) s += nearest(centroids, points.row(i)).second;
  return s / static_cast<double>(points.rows());
}

CentroidSet fit_stream(const BatchStream& batches, const FitOptions& options,
                       FitSummary* summary) {
  const std::size_t n_batches = batches.batch_count();
  if (n_batches == 0) fail(ErrorCode::kInvalidArgument, "fit_stream: no batches");
  if (options.n_concepts == 0) fail(ErrorCode::kInvalidArgument, "fit_stream: n_c must be positive");

  PointSet sample = batches.batch(0);
  for (std::size_t b = 1; sample.rows() < options.n_concepts && b < n_batches; ++b) {
    sample.append(batches.batch(b));
  }
  if (sample.rows() < options.n_concepts) {
    fail(ErrorCode::kInvalidArgument, "fit_stream: " + std::to_string(sample.rows()) +
                                          " descriptors for " +
                                          std::to_string(options.n_concepts) + " concepts");
  }
  CentroidSet centroids = init_centroids(sample, options.n_concepts, options.seed);
  sample = PointSet();

  ClusterFitState state = ClusterFitState::fresh(options.n_concepts, options.seed);
  std::vector<std::size_t> order(n_batches);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 order_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::size_t reseeded = 0;
  std::size_t total_points = 0;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    if (options.shuffle_batches) {
      for (std::size_t i = n_batches; i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(
                                    uniform01(order_rng) * static_cast<double>(i))]);
      }
    }
    EpochTracker tracker{std::vector<std::uint64_t>(options.n_concepts, 0),
                         FarthestPoints(options.n_concepts)};
    std::size_t points = 0;
    for (std::size_t b : order) {
      PointSet batch = batches.batch(b);
      if (batch.empty()) continue;
      points += batch.rows();
      update_batch(state, centroids, batch, options.workers, &tracker);
    }
    total_points = points;

    std::size_t next = 0;
    const auto& candidates = tracker.farthest.entries();
    for (std::size_t j = 0; j < options.n_concepts; ++j) {
      if (tracker.assigned[j] != 0) continue;
      while (next < candidates.size() && matches_any_centroid(centroids, candidates[next].second)) {
        ++next;
      }
      if (next == candidates.size()) break;
      std::copy(candidates[next].second.begin(), candidates[next].second.end(),
                centroids.centroid(j).begin());
      ++next;
      ++reseeded;
    }
    if (options.on_epoch) options.on_epoch(epoch, centroids);
  }

  if (summary) {
    summary->state = std::move(state);
    summary->reseeded = reseeded;
    summary->total_points = total_points;
  }
  return centroids;
}

}  // namespace ladc
