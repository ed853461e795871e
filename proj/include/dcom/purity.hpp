#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dcom/coverage.hpp"
#include "dcom/embedding.hpp"
#include "dcom/parallel.hpp"

namespace dcom {

namespace detail {
inline constexpr const char* kPurityModule = "pseudo-purity";

inline double squared_distance_to(std::span<const float> x, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double diff = static_cast<double>(x[j]) - c[j];
    s += diff * diff;
  }
  return s;
}
}  // namespace detail

struct KMeansResult {
  std::vector<Label> labels;
  std::vector<std::vector<double>> centroids;
  /// Within-cluster sum of squares after every update step.
  std::vector<double> sse_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd's k-means with farthest-first seeding. The first centre is a
/// seed-chosen point; each further centre is the point farthest from its
/// nearest centre (lowest index on ties). A cluster that goes empty takes the
/// point farthest from its own centroid among clusters with more than one
/// member.
inline KMeansResult kmeans(const EmbeddingSet& set, std::size_t k, std::uint64_t seed,
                           std::size_t max_iters = 100) {
  using detail::kPurityModule;
  const std::size_t n = set.size();
  const std::size_t d = set.dim();
  detail::require(k > 0, Errc::InvalidArgument, kPurityModule, "k must be positive");
  detail::require(k <= n, Errc::InvalidArgument, kPurityModule,
                  "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  detail::require(max_iters > 0, Errc::InvalidArgument, kPurityModule,
                  "max_iters must be positive");

  auto point_as_centroid = [&](std::size_t i) {
    auto r = set.row(i);
    return std::vector<double>(r.begin(), r.end());
  };

  KMeansResult result;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  result.centroids.push_back(point_as_centroid(pick(rng)));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (result.centroids.size() < k) {
    const auto& last = result.centroids.back();
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], detail::squared_distance_to(set.row(i), last));
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    result.centroids.push_back(point_as_centroid(far));
  }

  std::vector<Label> assign(n, -1);
  std::vector<double> own(n, 0.0);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = detail::squared_distance_to(set.row(i), result.centroids[c]);
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (assign[i] != static_cast<Label>(best)) changed = true;
      assign[i] = static_cast<Label>(best);
      own[i] = best_d;
    }

    std::vector<std::size_t> sizes(k, 0);
    for (Label a : assign) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t donor = n;
      double donor_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assign[i]] > 1 && own[i] > donor_d) {
          donor_d = own[i];
          donor = i;
        }
      }
      --sizes[assign[donor]];
      assign[donor] = static_cast<Label>(c);
      own[donor] = 0.0;
      sizes[c] = 1;
      changed = true;
    }

    if (!changed && iter > 0) {
      result.converged = true;
      break;
    }

    for (auto& c : result.centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = set.row(i);
      auto& c = result.centroids[assign[i]];
      for (std::size_t j = 0; j < d; ++j) c[j] += r[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (auto& v : result.centroids[c]) v /= static_cast<double>(sizes[c]);
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sse += detail::squared_distance_to(set.row(i), result.centroids[assign[i]]);
    }
    result.sse_history.push_back(sse);
    result.iterations = iter + 1;
  }
  result.labels = std::move(assign);
  return result;
}

inline std::vector<Label> kmeans_cluster(const EmbeddingSet& set, std::size_t k,
                                         std::uint64_t seed, std::size_t max_iters = 100) {
  return kmeans(set, k, seed, max_iters).labels;
}

/// True iff every point within delta of `center` (the centre included) carries
/// the centre's label.
inline bool is_pure_ball(const EmbeddingSet& set, std::span<const Label> labels,
                         std::size_t center, double delta) {
  detail::require(labels.size() == set.size(), Errc::LengthMismatch, detail::kPurityModule,
                  "one label per point required");
  detail::require(center < set.size(), Errc::InvalidArgument, detail::kPurityModule,
                  "center out of range");
  auto c = set.row(center);
  for (std::size_t x = 0; x < set.size(); ++x) {
    if (labels[x] != labels[center] && detail::in_ball(set.row(x), c, delta)) return false;
  }
  return true;
}

struct PurityCurve {
  std::vector<double> grid;
  std::vector<double> purity;
};

/// delta_i = i * step for i = 1..floor(max / step).
inline std::vector<double> uniform_delta_grid(double step = 0.05, double max = 2.0) {
  detail::require(step > 0.0 && max >= step, Errc::InvalidArgument, detail::kPurityModule,
                  "grid needs 0 < step <= max");
  const auto count = static_cast<std::size_t>(std::floor(max / step + 1e-9));
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = static_cast<double>(i + 1) * step;
  return grid;
}

/// Fraction of centres whose delta-ball is pure, for each delta in the grid.
/// A ball around c is pure exactly when the nearest differently labelled point
/// lies strictly beyond delta, so one distance pass per centre serves the
/// whole grid and the curve is non-increasing by construction.
inline PurityCurve estimate_purity_curve(const EmbeddingSet& set, std::span<const Label> labels,
                                         std::span<const double> grid,
                                         std::optional<std::span<const Index>> sample = std::nullopt,
                                         std::size_t threads = thread_budget()) {
  using detail::kPurityModule;
  detail::require(!grid.empty(), Errc::EmptyInput, kPurityModule, "empty delta grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    detail::require(grid[i] > 0.0 && (i == 0 || grid[i] > grid[i - 1]), Errc::InvalidArgument,
                    kPurityModule, "grid must be positive and strictly increasing");
  }
  detail::require(labels.size() == set.size(), Errc::LengthMismatch, kPurityModule,
                  "one label per point required");
  Label top = -1;
  for (Label l : labels) {
    detail::require(l >= 0, Errc::InvalidArgument, kPurityModule, "purity needs known labels");
    top = std::max(top, l);
  }

  std::vector<Index> centers;
  if (sample) {
    centers.assign(sample->begin(), sample->end());
    detail::require(centers.size() >= static_cast<std::size_t>(top + 1), Errc::InvalidArgument,
                    kPurityModule,
                    "sample of " + std::to_string(centers.size()) + " centres is smaller than " +
                        std::to_string(top + 1) + " classes");
  } else {
    centers.resize(set.size());
    std::iota(centers.begin(), centers.end(), Index{0});
  }
  detail::require(!centers.empty(), Errc::EmptyInput, kPurityModule, "no centres");

  std::vector<double> impure_at(centers.size(), std::numeric_limits<double>::infinity());
  parallel_for_chunks(centers.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t ci = begin; ci < end; ++ci) {
      const Index c = centers[ci];
      detail::require(c < set.size(), Errc::InvalidArgument, kPurityModule,
                      "sample index out of range");
      auto crow = set.row(c);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t x = 0; x < set.size(); ++x) {
        if (labels[x] == labels[c]) continue;
        best = std::min(best, euclidean_distance(set.row(x), crow));
      }
      impure_at[ci] = best;
    }
  });

  PurityCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.purity.reserve(grid.size());
  for (double delta : grid) {
    std::size_t pure = 0;
    for (double r : impure_at) pure += r > delta ? 1 : 0;
    curve.purity.push_back(static_cast<double>(pure) / static_cast<double>(centers.size()));
  }
  return curve;
}

/// Largest grid delta whose purity is at least alpha.
inline double select_initial_delta(const PurityCurve& curve, double alpha = 0.95) {
  using detail::kPurityModule;
  detail::require(alpha > 0.0 && alpha < 1.0, Errc::InvalidArgument, kPurityModule,
                  "alpha must lie in (0, 1)");
  detail::require(!curve.grid.empty() && curve.grid.size() == curve.purity.size(),
                  Errc::LengthMismatch, kPurityModule, "malformed purity curve");
  for (std::size_t i = curve.grid.size(); i-- > 0;) {
    if (curve.purity[i] >= alpha) return curve.grid[i];
  }
  throw Error(Errc::NoDeltaMeetsAlpha, kPurityModule,
              "purity at the smallest delta " + std::to_string(curve.grid.front()) +
                  " is already below alpha");
}

/// The `count` points with the most neighbours inside the median pairwise
/// distance (lowest index on ties), ascending. The median is exact for
/// n <= 2000 and estimated from 200000 seeded random pairs above that.
inline std::vector<Index> densest_points(const EmbeddingSet& set, std::size_t count,
                                         std::uint64_t seed = 0,
                                         std::size_t threads = thread_budget()) {
  const std::size_t n = set.size();
  detail::require(count > 0 && count <= n, Errc::InvalidArgument, detail::kPurityModule,
                  "densest count must lie in [1, n]");
  detail::require(n >= 2, Errc::InvalidArgument, detail::kPurityModule,
                  "density needs at least two points");
  std::vector<double> pair_d;
  if (n <= 2000) {
    pair_d.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) pair_d.push_back(distance(set, i, j));
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    pair_d.reserve(200000);
    while (pair_d.size() < 200000) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (i != j) pair_d.push_back(distance(set, i, j));
    }
  }
  auto mid = pair_d.begin() + static_cast<std::ptrdiff_t>(pair_d.size() / 2);
  std::nth_element(pair_d.begin(), mid, pair_d.end());
  const double median = *mid;

  std::vector<std::size_t> density(n, 0);
  parallel_for_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && detail::in_ball(set.row(i), set.row(j), median)) ++density[i];
      }
    }
  });
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return density[a] > density[b]; });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace dcom
