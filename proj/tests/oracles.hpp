#pragma once

// From-scratch reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "dcom/engine.hpp"

namespace dcom::test {

inline double brute_coverage(const EmbeddingSet& s, std::span<const Index> labeled,
                             std::span<const double> deltas) {
  std::size_t covered = 0;
  for (std::size_t x = 0; x < s.size(); ++x) {
    bool hit = false;
    for (std::size_t i = 0; i < labeled.size() && !hit; ++i) {
      hit = x == labeled[i] || distance(s, x, labeled[i]) <= deltas[i];
    }
    covered += hit;
  }
  return double(covered) / double(s.size());
}

inline double linear_scan_radius(std::size_t steps, double resolution,
                                 const std::function<double(double)>& purity, double tau) {
  double best = resolution;
  for (std::size_t i = 1; i <= steps; ++i) {
    if (purity(double(i) * resolution) > tau) best = double(i) * resolution;
  }
  return best;
}

/// Replays a selection and recomputes the acquisition score of every candidate
/// at every step directly from distances. Returns the number of steps whose
/// pick was not the (lowest-index) maximiser.
inline std::size_t greedy_violations(const EmbeddingSet& s, const PoolState& pool,
                                     std::span<const double> confidence,
                                     const std::vector<Index>& picks, double competence,
                                     double radius) {
  const std::size_t n = s.size();
  std::vector<bool> dead_target(n, false), dead_source(n, false);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t i = 0; i < pool.labeled.size(); ++i) {
      if (x == pool.labeled[i] || distance(s, x, pool.labeled[i]) <= pool.deltas[i]) dead_target[x] = true;
    }
  }
  for (Index l : pool.labeled) dead_source[l] = true;
  std::vector<double> m(confidence.begin(), confidence.end());
  if (m.empty()) m.assign(pool.unlabeled.size(), 1.0);
  std::vector<bool> chosen(n, false);
  std::size_t violations = 0;
  for (Index pick : picks) {
    std::vector<std::size_t> degree(pool.unlabeled.size(), 0);
    std::size_t top = 0;
    for (std::size_t i = 0; i < pool.unlabeled.size(); ++i) {
      const Index u = pool.unlabeled[i];
      if (dead_source[u]) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (v != u && !dead_target[v] && distance(s, u, v) <= radius) ++degree[i];
      }
      top = std::max(top, degree[i]);
    }
    double best = -1.0;
    Index best_index = 0;
    for (std::size_t i = 0; i < pool.unlabeled.size(); ++i) {
      const Index u = pool.unlabeled[i];
      if (chosen[u]) continue;
      const double odr = top == 0 ? 0.0 : double(degree[i]) / double(top);
      const double r = competence * (1.0 - m[i]) + (1.0 - competence) * odr;
      if (r > best || (r == best && u < best_index)) {
        best = r;
        best_index = u;
      }
    }
    if (best_index != pick) ++violations;
    chosen[pick] = true;
    dead_target[pick] = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (distance(s, pick, v) <= radius) dead_target[v] = true;
    }
    for (std::size_t i = 0; i < pool.unlabeled.size(); ++i) {
      if (pool.unlabeled[i] == pick) m[i] = 1.0;
    }
  }
  return violations;
}

}  // namespace dcom::test
