#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcom/coverage.hpp"
#include "dcom/engine.hpp"
#include "dcom/learners.hpp"

namespace dcom {

namespace detail {
inline constexpr const char* kBaselinesModule = "baselines";
}

enum class StrategyKind { random, margin, entropy, maxprob, coreset, probcover, dcom };

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::random: return "random";
    case StrategyKind::margin: return "margin";
    case StrategyKind::entropy: return "entropy";
    case StrategyKind::maxprob: return "maxprob";
    case StrategyKind::coreset: return "coreset";
    case StrategyKind::probcover: return "probcover";
    case StrategyKind::dcom: return "dcom";
  }
  return "unknown";
}

inline StrategyKind parse_strategy_kind(std::string_view name) {
  for (auto k : {StrategyKind::random, StrategyKind::margin, StrategyKind::entropy,
                 StrategyKind::maxprob, StrategyKind::coreset, StrategyKind::probcover,
                 StrategyKind::dcom}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::InvalidArgument, detail::kBaselinesModule,
              "unknown strategy '" + std::string(name) + "'");
}

struct StrategySpec {
  StrategyKind kind = StrategyKind::dcom;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
};

/// q distinct points drawn uniformly without replacement.
inline std::vector<Index> select_random(const PoolState& pool, std::size_t q, std::uint64_t seed) {
  detail::check_query_size(pool, q);
  std::vector<Index> u = pool.unlabeled;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: only the first q slots are drawn.
  for (std::size_t i = 0; i < q; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, u.size() - 1);
    std::swap(u[i], u[pick(rng)]);
  }
  u.resize(q);
  return u;
}

/// The q most uncertain points: lowest margin, highest entropy, or highest
/// 1 - max p. `probs` rows are aligned with pool.unlabeled.
inline std::vector<Index> select_by_uncertainty(const PoolState& pool, const SoftmaxMatrix& probs,
                                                UncertaintyKind kind, std::size_t q) {
  detail::require(kind != UncertaintyKind::gradnorm, Errc::InvalidArgument,
                  detail::kBaselinesModule, "gradnorm is not a standalone baseline");
  detail::require(probs.rows() == pool.unlabeled.size(), Errc::LengthMismatch,
                  detail::kBaselinesModule,
                  std::to_string(probs.rows()) + " probability rows for " +
                      std::to_string(pool.unlabeled.size()) + " unlabelled points");
  detail::check_query_size(pool, q);
  const auto scores = uncertainty_scores(probs, kind);
  // Sort key: higher = more uncertain.
  std::vector<double> key(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    key[i] = kind == UncertaintyKind::margin ? -scores[i] : scores[i];
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] > key[b];
    return pool.unlabeled[a] < pool.unlabeled[b];
  });
  std::vector<Index> out(q);
  for (std::size_t i = 0; i < q; ++i) out[i] = pool.unlabeled[order[i]];
  return out;
}

/// Greedy k-centre: repeatedly take the unlabelled point farthest from every
/// labelled or already chosen point. From an empty L the first pick is the
/// lowest unlabelled index.
inline std::vector<Index> select_coreset(const EmbeddingSet& set, const PoolState& pool,
                                         std::size_t q) {
  detail::check_query_size(pool, q);
  const auto& u = pool.unlabeled;
  std::vector<double> nearest(u.size(), std::numeric_limits<double>::infinity());
  std::vector<bool> taken(u.size(), false);
  auto absorb = [&](Index centre) {
    auto c = set.row(centre);
    for (std::size_t i = 0; i < u.size(); ++i) {
      nearest[i] = std::min(nearest[i], euclidean_distance(set.row(u[i]), c));
    }
  };
  for (Index l : pool.labeled) absorb(l);

  std::vector<Index> out;
  out.reserve(q);
  for (std::size_t step = 0; step < q; ++step) {
    std::size_t best = u.size();
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (taken[i]) continue;
      if (best == u.size() || nearest[i] > nearest[best] ||
          (nearest[i] == nearest[best] && u[i] < u[best])) {
        best = i;
      }
    }
    taken[best] = true;
    out.push_back(u[best]);
    absorb(u[best]);
  }
  return out;
}

/// Fixed-radius max-coverage greedy: every labelled point covers a delta0 ball,
/// and candidates are ranked by out-degree alone.
inline QueryResult probcover_query(const EmbeddingSet& set, const PoolState& pool, double delta0,
                                   std::size_t q) {
  detail::require(delta0 > 0.0, Errc::InvalidArgument, detail::kBaselinesModule,
                  "delta0 must be positive");
  detail::check_query_size(pool, q);
  const std::vector<double> radii(pool.labeled.size(), delta0);
  const CoverageState coverage = covered_set(set, pool.labeled, radii);
  RadiusGraph graph = build_radius_graph(set, delta0);
  prune_incoming_for_covered(graph, coverage.covered);
  prune_outgoing_for_labeled(graph, pool.labeled);
  QueryResult result = detail::greedy_select(graph, pool.unlabeled, 0.0,
                                             std::vector<double>(pool.unlabeled.size(), 1.0), q);
  result.coverage_before = coverage.probability;
  return result;
}

inline std::vector<Index> select_probcover(const EmbeddingSet& set, const PoolState& pool,
                                           double delta0, std::size_t q) {
  return probcover_query(set, pool, delta0, q).selected;
}

}  // namespace dcom
