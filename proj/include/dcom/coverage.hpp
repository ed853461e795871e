#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dcom/embedding.hpp"
#include "dcom/parallel.hpp"

namespace dcom {

namespace detail {
inline constexpr const char* kCoverageModule = "coverage-graph";

/// Squared-distance cutoff for the early-exit kernel. Loose enough that any
/// pair with sqrt(s) <= radius survives; the exact test is applied afterwards.
inline double early_exit_limit(double radius) {
  return radius * radius * (1.0 + 1e-9) + 1e-300;
}

/// Exact closed-ball test that agrees with within_radius for every pair.
inline bool in_ball(std::span<const float> a, std::span<const float> b, double radius) {
  const double s = squared_distance_bounded(a, b, early_exit_limit(radius));
  return std::sqrt(s) <= radius;
}
}  // namespace detail

struct Edge {
  Index source;
  Index target;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Directed radius graph over all points: (u, v) for u != v with
/// distance(u, v) <= radius. The construction-time edge list is kept sorted by
/// (source, target); pruning only ever removes edges, and both prune rules act
/// per node (drop every edge into a covered node, drop every edge out of a
/// labeled node), so the live edge set is the construction set filtered by two
/// node masks.
class RadiusGraph {
 public:
  RadiusGraph() = default;

  RadiusGraph(double radius, std::size_t n, std::vector<std::size_t> row_offsets,
              std::vector<Index> targets)
      : radius_(radius),
        offsets_(std::move(row_offsets)),
        targets_(std::move(targets)),
        out_degree_(n),
        incoming_removed_(n, false),
        outgoing_removed_(n, false) {
    detail::require(offsets_.size() == n + 1 && offsets_.back() == targets_.size(),
                    Errc::InvalidArgument, detail::kCoverageModule, "malformed row offsets");
    for (std::size_t u = 0; u < n; ++u) out_degree_[u] = offsets_[u + 1] - offsets_[u];
  }

  double radius() const noexcept { return radius_; }
  std::size_t size() const noexcept { return out_degree_.size(); }

  /// Points within radius of u at construction, excluding u, ascending.
  std::span<const Index> ball(std::size_t u) const {
    return {targets_.data() + offsets_[u], targets_.data() + offsets_[u + 1]};
  }

  std::size_t out_degree(std::size_t u) const { return out_degree_[u]; }
  const std::vector<std::size_t>& out_degrees() const noexcept { return out_degree_; }

  std::size_t edge_count() const {
    std::size_t total = 0;
    for (auto d : out_degree_) total += d;
    return total;
  }

  /// Live edges in (source, target) order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (std::size_t u = 0; u < size(); ++u) {
      if (outgoing_removed_[u]) continue;
      for (Index v : ball(u)) {
        if (!incoming_removed_[v]) out.push_back({static_cast<Index>(u), v});
      }
    }
    return out;
  }

  bool incoming_removed(std::size_t v) const { return incoming_removed_[v]; }
  bool outgoing_removed(std::size_t u) const { return outgoing_removed_[u]; }

  /// Removes every edge whose target is v. The graph is symmetric at
  /// construction, so the sources of those edges are exactly ball(v).
  void remove_incoming(std::size_t v) {
    if (incoming_removed_[v]) return;
    incoming_removed_[v] = true;
    for (Index u : ball(v)) {
      if (!outgoing_removed_[u]) --out_degree_[u];
    }
  }

  void remove_outgoing(std::size_t u) {
    outgoing_removed_[u] = true;
    out_degree_[u] = 0;
  }

 private:
  double radius_ = 0.0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Index> targets_;
  std::vector<std::size_t> out_degree_;
  std::vector<bool> incoming_removed_;
  std::vector<bool> outgoing_removed_;
};

/// Exact radius graph. Pairs are visited once (u < v) with an early-exit
/// distance kernel; rows may be computed in parallel (DCOM_THREADS) without
/// changing the result.
inline RadiusGraph build_radius_graph(const EmbeddingSet& set, double delta,
                                      std::size_t threads = thread_budget()) {
  detail::require(delta > 0.0 && std::isfinite(delta), Errc::InvalidArgument,
                  detail::kCoverageModule, "radius must be positive and finite");
  const std::size_t n = set.size();
  std::vector<std::vector<Index>> upper(n);
  parallel_for_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      auto a = set.row(u);
      for (std::size_t v = u + 1; v < n; ++v) {
        if (detail::in_ball(a, set.row(v), delta)) upper[u].push_back(static_cast<Index>(v));
      }
    }
  });

  std::vector<std::size_t> degree(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    degree[u] += upper[u].size();
    for (Index v : upper[u]) ++degree[v];
  }
  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) offsets[u + 1] = offsets[u] + degree[u];

  // Filling rows in ascending u keeps each row sorted: row v first receives
  // its lower neighbours (ascending u < v), then its own upper list.
  std::vector<Index> targets(offsets[n]);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t u = 0; u < n; ++u) {
    for (Index v : upper[u]) {
      targets[cursor[u]++] = v;
      targets[cursor[v]++] = static_cast<Index>(u);
    }
    std::vector<Index>().swap(upper[u]);
  }
  return RadiusGraph(delta, n, std::move(offsets), std::move(targets));
}

struct CoverageState {
  std::vector<bool> covered;
  std::size_t covered_count = 0;
  double probability = 0.0;
};

/// Union of closed balls B(x_i, delta_i) over the labeled points; labeled
/// points are always covered.
inline CoverageState covered_set(const EmbeddingSet& set, std::span<const Index> labeled,
                                 std::span<const double> deltas) {
  detail::require(labeled.size() == deltas.size(), Errc::LengthMismatch, detail::kCoverageModule,
                  std::to_string(labeled.size()) + " labeled points but " +
                      std::to_string(deltas.size()) + " radii");
  for (double d : deltas) {
    detail::require(d > 0.0, Errc::InvalidArgument, detail::kCoverageModule,
                    "radii must be positive");
  }
  const std::size_t n = set.size();
  CoverageState state;
  state.covered.assign(n, false);
  for (Index i : labeled) {
    detail::require(i < n, Errc::InvalidArgument, detail::kCoverageModule,
                    "labeled index out of range");
    state.covered[i] = true;
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (state.covered[x]) continue;
    auto row = set.row(x);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      if (detail::in_ball(row, set.row(labeled[i]), deltas[i])) {
        state.covered[x] = true;
        break;
      }
    }
  }
  state.covered_count = static_cast<std::size_t>(
      std::count(state.covered.begin(), state.covered.end(), true));
  state.probability = n == 0 ? 0.0 : static_cast<double>(state.covered_count) / static_cast<double>(n);
  return state;
}

inline void prune_incoming_for_covered(RadiusGraph& graph, const std::vector<bool>& covered) {
  detail::require(covered.size() == graph.size(), Errc::LengthMismatch, detail::kCoverageModule,
                  "covered mask length differs from graph size");
  for (std::size_t v = 0; v < covered.size(); ++v) {
    if (covered[v]) graph.remove_incoming(v);
  }
}

inline void prune_outgoing_for_labeled(RadiusGraph& graph, std::span<const Index> labeled) {
  for (Index u : labeled) {
    detail::require(u < graph.size(), Errc::InvalidArgument, detail::kCoverageModule,
                    "labeled index out of range");
    graph.remove_outgoing(u);
  }
}

/// Out-degree divided by the largest out-degree among the candidates; all
/// zeros when that maximum is zero.
inline std::vector<double> out_degree_rank(const RadiusGraph& graph,
                                           std::span<const Index> candidates) {
  detail::require(!candidates.empty(), Errc::EmptyInput, detail::kCoverageModule,
                  "no candidates to rank");
  std::size_t top = 0;
  for (Index c : candidates) top = std::max(top, graph.out_degree(c));
  std::vector<double> rank(candidates.size(), 0.0);
  if (top == 0) return rank;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    rank[i] = static_cast<double>(graph.out_degree(candidates[i])) / static_cast<double>(top);
  }
  return rank;
}

}  // namespace dcom
