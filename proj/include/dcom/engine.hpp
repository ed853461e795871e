#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcom/coverage.hpp"
#include "dcom/embedding.hpp"
#include "dcom/learners.hpp"

namespace dcom {

namespace detail {
inline constexpr const char* kEngineModule = "dcom-engine";
}

/// Labelled indices L (with revealed labels and per-point radii, both aligned
/// with L) and the unlabelled remainder U.
struct PoolState {
  std::vector<Index> labeled;
  std::vector<Label> labels;
  std::vector<Index> unlabeled;
  std::vector<double> deltas;

  static PoolState all_unlabeled(std::size_t n) {
    PoolState p;
    p.unlabeled.resize(n);
    std::iota(p.unlabeled.begin(), p.unlabeled.end(), Index{0});
    return p;
  }

  std::vector<LabeledPoint> labeled_points() const {
    detail::require(labels.size() == labeled.size(), Errc::InconsistentPool, detail::kEngineModule,
                    "labels are not aligned with the labelled set");
    std::vector<LabeledPoint> out(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) out[i] = {labeled[i], labels[i]};
    return out;
  }

  /// Checks disjointness, that L and U partition [0, n), and radius alignment.
  /// `delta_count` is the expected |deltas| (defaults to |L|).
  void validate(std::size_t n, std::optional<std::size_t> delta_count = std::nullopt) const {
    using detail::kEngineModule;
    detail::require(labeled.size() + unlabeled.size() == n, Errc::InconsistentPool, kEngineModule,
                    "|L| + |U| = " + std::to_string(labeled.size() + unlabeled.size()) +
                        " but the dataset has " + std::to_string(n) + " points");
    std::vector<char> seen(n, 0);
    for (auto list : {&labeled, &unlabeled}) {
      for (Index i : *list) {
        detail::require(i < n, Errc::InconsistentPool, kEngineModule, "pool index out of range");
        detail::require(!seen[i], Errc::InconsistentPool, kEngineModule,
                        "index " + std::to_string(i) + " appears twice in the pool");
        seen[i] = 1;
      }
    }
    detail::require(labels.empty() || labels.size() == labeled.size(), Errc::InconsistentPool,
                    kEngineModule, "labels are not aligned with the labelled set");
    detail::require(deltas.size() == delta_count.value_or(labeled.size()),
                    Errc::InconsistentPool, kEngineModule, "radii are not aligned with L");
    for (double d : deltas) {
      detail::require(d > 0.0, Errc::InconsistentPool, kEngineModule, "radii must be positive");
    }
  }
};

struct DComConfig {
  double delta0 = 0.3;
  double delta_max = 0.6;
  double tau_slope = 0.2;
  double tau_intercept = 0.4;
  double logistic_a = 0.9;
  double logistic_k = 30.0;
  double delta_resolution = 0.05;
  std::uint64_t seed = 0;
  /// Source of the per-point confidence M(x); margin is the reference choice.
  UncertaintyKind high_objective = UncertaintyKind::margin;

  /// delta_max = 2 * delta0; logistic midpoint 0.9 below 50 classes, 0.8 from
  /// 50 classes up; slope 30; tau = 0.2 * coverage + 0.4; resolution 0.05.
  static DComConfig defaults_for(double delta0, std::size_t num_classes) {
    DComConfig c;
    c.delta0 = delta0;
    c.delta_max = 2.0 * delta0;
    c.logistic_a = num_classes >= 50 ? 0.8 : 0.9;
    return c;
  }

  void validate() const {
    using detail::kEngineModule;
    detail::require(delta0 > 0.0 && delta0 <= delta_max, Errc::InvalidArgument, kEngineModule,
                    "need 0 < delta0 <= delta_max");
    detail::require(delta_resolution > 0.0 && delta_resolution <= delta_max,
                    Errc::InvalidArgument, kEngineModule,
                    "need 0 < delta_resolution <= delta_max");
    detail::require(logistic_a > 0.0 && logistic_a < 1.0, Errc::InvalidArgument, kEngineModule,
                    "logistic midpoint a must lie in (0, 1)");
    detail::require(logistic_k > 0.0 && std::isfinite(logistic_k), Errc::InvalidArgument,
                    kEngineModule, "logistic steepness k must be positive");
    detail::require(std::isfinite(tau_slope) && std::isfinite(tau_intercept),
                    Errc::InvalidArgument, kEngineModule, "tau coefficients must be finite");
  }
};

/// Logistic transform of coverage probability, rescaled so coverage 1 maps to 1:
///   S = (1 + e^{-k(1-a)}) / (1 + e^{-k(P-a)})
inline double competence_score(double coverage_p, double a, double k) {
  using detail::kEngineModule;
  detail::require(coverage_p >= 0.0 && coverage_p <= 1.0, Errc::InvalidArgument, kEngineModule,
                  "coverage probability must lie in [0, 1]");
  detail::require(a > 0.0 && a < 1.0, Errc::InvalidArgument, kEngineModule,
                  "logistic midpoint a must lie in (0, 1)");
  detail::require(k > 0.0 && std::isfinite(k), Errc::InvalidArgument, kEngineModule,
                  "logistic steepness k must be positive");
  return (1.0 + std::exp(-k * (1.0 - a))) / (1.0 + std::exp(-k * (coverage_p - a)));
}

/// Purity threshold for radius expansion: slope * coverage_old + intercept.
inline double compute_tau(double coverage_old, double slope, double intercept) {
  detail::require(coverage_old >= 0.0 && coverage_old <= 1.0, Errc::InvalidArgument,
                  detail::kEngineModule, "coverage probability must lie in [0, 1]");
  return slope * coverage_old + intercept;
}

struct QueryResult {
  std::vector<Index> selected;
  double coverage_before = 0.0;
  double competence = 0.0;
  double radius = 0.0;
  /// (selected index, its R value) for each greedy step.
  std::vector<std::pair<Index, double>> per_step_scores;
};

namespace detail {

/// Greedy loop shared by DCoM and ProbCover. `confidence` is aligned with
/// `candidates` and is overwritten with 1 for every pick; the ball of each
/// pick (itself included) loses its incoming edges.
inline QueryResult greedy_select(RadiusGraph& graph, std::span<const Index> candidates,
                                 double competence, std::vector<double> confidence,
                                 std::size_t q) {
  QueryResult result;
  result.competence = competence;
  result.radius = graph.radius();
  std::vector<bool> chosen(graph.size(), false);
  for (std::size_t step = 0; step < q; ++step) {
    const auto odr = out_degree_rank(graph, candidates);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_pos = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (chosen[candidates[i]]) continue;
      const double r = competence * (1.0 - confidence[i]) + (1.0 - competence) * odr[i];
      if (r > best || (r == best && candidates[i] < candidates[best_pos])) {
        best = r;
        best_pos = i;
      }
    }
    const Index pick = candidates[best_pos];
    chosen[pick] = true;
    result.selected.push_back(pick);
    result.per_step_scores.emplace_back(pick, best);
    graph.remove_incoming(pick);
    for (Index v : graph.ball(pick)) graph.remove_incoming(v);
    confidence[best_pos] = 1.0;
  }
  return result;
}

inline void check_query_size(const PoolState& pool, std::size_t q) {
  detail::require(q > 0, Errc::InvalidArgument, kEngineModule, "query size must be positive");
  if (q > pool.unlabeled.size()) {
    throw Error(Errc::PoolExhausted, kEngineModule,
                "query of " + std::to_string(q) + " from " +
                    std::to_string(pool.unlabeled.size()) + " unlabelled points");
  }
}

}  // namespace detail

/// One round of DCoM query selection. `confidence` is M(x) over
/// pool.unlabeled (normalized margins, 1 = confident); it is ignored and taken
/// as all ones while L is empty.
inline QueryResult dcom_select(const EmbeddingSet& set, const PoolState& pool,
                               std::span<const double> confidence, std::size_t q,
                               const DComConfig& config) {
  using detail::kEngineModule;
  config.validate();
  pool.validate(set.size());
  detail::check_query_size(pool, q);

  std::vector<double> m(pool.unlabeled.size(), 1.0);
  double competence = 0.0;
  double radius = config.delta0;
  CoverageState coverage = covered_set(set, pool.labeled, pool.deltas);
  if (!pool.labeled.empty()) {
    detail::require(confidence.size() == pool.unlabeled.size(), Errc::LengthMismatch,
                    kEngineModule, "confidence must have one entry per unlabelled point");
    m.assign(confidence.begin(), confidence.end());
    competence = competence_score(coverage.probability, config.logistic_a, config.logistic_k);
    radius = std::accumulate(pool.deltas.begin(), pool.deltas.end(), 0.0) /
             static_cast<double>(pool.deltas.size());
  }

  RadiusGraph graph = build_radius_graph(set, radius);
  prune_incoming_for_covered(graph, coverage.covered);
  prune_outgoing_for_labeled(graph, pool.labeled);
  QueryResult result = detail::greedy_select(graph, pool.unlabeled, competence, std::move(m), q);
  result.coverage_before = coverage.probability;
  return result;
}

/// Labels the radius search sees: revealed labels on L, predictions on U.
inline std::vector<Label> effective_labels(std::size_t n, const PoolState& pool,
                                           std::span<const Label> predicted) {
  using detail::kEngineModule;
  detail::require(pool.labels.size() == pool.labeled.size(), Errc::InconsistentPool,
                  kEngineModule, "labels are not aligned with the labelled set");
  detail::require(predicted.size() == pool.unlabeled.size(), Errc::LengthMismatch, kEngineModule,
                  "one prediction per unlabelled point required");
  std::vector<Label> out(n, kUnknownLabel);
  for (std::size_t i = 0; i < pool.labeled.size(); ++i) out[pool.labeled[i]] = pool.labels[i];
  for (std::size_t i = 0; i < pool.unlabeled.size(); ++i) out[pool.unlabeled[i]] = predicted[i];
  return out;
}

/// Fraction of points within delta of `center` (the centre excluded) whose
/// label matches the centre's; 1 for an empty ball.
inline double ball_purity_predicted(const EmbeddingSet& set, std::span<const Label> labels,
                                    std::size_t center, double delta) {
  detail::require(labels.size() == set.size(), Errc::LengthMismatch, detail::kEngineModule,
                  "one label per point required");
  auto c = set.row(center);
  std::size_t members = 0, matching = 0;
  for (std::size_t x = 0; x < set.size(); ++x) {
    if (x == center || !detail::in_ball(set.row(x), c, delta)) continue;
    ++members;
    if (labels[x] == labels[center]) ++matching;
  }
  return members == 0 ? 1.0 : static_cast<double>(matching) / static_cast<double>(members);
}

/// Number of radii on the search grid {r, 2r, ..., K r} with K r <= delta_max.
inline std::size_t radius_grid_size(double resolution, double delta_max) {
  return static_cast<std::size_t>(std::floor(delta_max / resolution + 1e-9));
}

/// Largest grid radius i * resolution (1 <= i <= steps) whose purity exceeds
/// tau, assuming purity is non-increasing in the radius. Falls back to the
/// smallest grid radius when none passes.
inline double binary_search_radius(std::size_t steps, double resolution,
                                   const std::function<double(double)>& purity, double tau) {
  detail::require(steps > 0, Errc::InvalidArgument, detail::kEngineModule,
                  "radius grid is empty");
  auto radius = [&](std::size_t i) { return static_cast<double>(i) * resolution; };
  if (!(purity(radius(1)) > tau)) return radius(1);
  std::size_t lo = 1, hi = steps;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (purity(radius(mid)) > tau) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return radius(lo);
}

/// Radius expansion for a freshly labelled query set. `pool` is the state
/// after labelling: Q occupies the trailing |Q| entries of pool.labeled (in Q
/// order) and pool.deltas still holds the |L| - |Q| radii of the older points.
/// `predicted` is aligned with pool.unlabeled. Returns pool.deltas extended by
/// one radius per new point.
inline std::vector<double> expand_delta(const EmbeddingSet& set, const PoolState& pool,
                                        std::span<const Index> query,
                                        std::span<const Label> predicted, double coverage_old,
                                        const DComConfig& config) {
  using detail::kEngineModule;
  config.validate();
  detail::require(query.size() <= pool.labeled.size(), Errc::InconsistentPool, kEngineModule,
                  "query larger than the labelled set");
  pool.validate(set.size(), pool.labeled.size() - query.size());
  const std::size_t first_new = pool.labeled.size() - query.size();
  for (std::size_t i = 0; i < query.size(); ++i) {
    detail::require(pool.labeled[first_new + i] == query[i], Errc::InconsistentPool,
                    kEngineModule, "query must be the trailing entries of the labelled set");
  }

  const double tau = compute_tau(coverage_old, config.tau_slope, config.tau_intercept);
  const auto labels = effective_labels(set.size(), pool, predicted);
  const std::size_t steps = radius_grid_size(config.delta_resolution, config.delta_max);

  std::vector<double> deltas = pool.deltas;
  std::vector<std::pair<double, bool>> neighbours;
  neighbours.reserve(set.size());
  std::vector<std::size_t> matching_prefix;
  for (Index v : query) {
    // Sorted (distance, label matches) pairs make every purity query a binary
    // search over the same distances ball_purity_predicted would compute.
    neighbours.clear();
    auto c = set.row(v);
    for (std::size_t x = 0; x < set.size(); ++x) {
      if (x == v) continue;
      neighbours.emplace_back(euclidean_distance(set.row(x), c), labels[x] == labels[v]);
    }
    std::sort(neighbours.begin(), neighbours.end());
    matching_prefix.assign(neighbours.size() + 1, 0);
    for (std::size_t i = 0; i < neighbours.size(); ++i) {
      matching_prefix[i + 1] = matching_prefix[i] + (neighbours[i].second ? 1 : 0);
    }
    auto purity = [&](double delta) {
      const auto members = static_cast<std::size_t>(
          std::upper_bound(neighbours.begin(), neighbours.end(), delta,
                           [](double d, const auto& p) { return d < p.first; }) -
          neighbours.begin());
      if (members == 0) return 1.0;
      return static_cast<double>(matching_prefix[members]) / static_cast<double>(members);
    };
    deltas.push_back(binary_search_radius(steps, config.delta_resolution, purity, tau));
  }
  return deltas;
}

/// Hands out ground-truth labels one index at a time and records every read.
class LabelOracle {
 public:
  explicit LabelOracle(std::vector<Label> truth) : truth_(std::move(truth)) {}

  Label reveal(Index i) {
    detail::require(i < truth_.size(), Errc::InvalidArgument, detail::kEngineModule,
                    "oracle index out of range");
    log_.push_back(i);
    return truth_[i];
  }

  const std::vector<Index>& log() const noexcept { return log_; }
  std::size_t size() const noexcept { return truth_.size(); }

 private:
  std::vector<Label> truth_;
  std::vector<Index> log_;
};

/// M(x) over `targets` from a learner's outputs, 1 = confident. For margin this
/// is the min-max normalized top-two gap; for the uncertainty-style scores it
/// is one minus the normalized score.
inline std::vector<double> confidence_from_learner(const Learner& learner, const EmbeddingSet& set,
                                                   std::span<const Index> targets,
                                                   UncertaintyKind kind) {
  if (targets.empty()) return {};
  const auto probs = predict_softmax(learner, set, targets);
  const GradientContext ctx{learner, set, targets};
  auto scores = normalize_unit_interval(
      uncertainty_scores(probs, kind, kind == UncertaintyKind::gradnorm ? &ctx : nullptr));
  if (kind != UncertaintyKind::margin) {
    for (double& s : scores) s = 1.0 - s;
  }
  return scores;
}

/// Trains on the pool's labels; a single-class pool yields a constant predictor.
inline Learner fit_pool(const EmbeddingSet& set, const PoolState& pool, const LearnerSpec& spec,
                        std::size_t num_classes) {
  const auto points = pool.labeled_points();
  try {
    return train_learner(set, points, spec, num_classes);
  } catch (const Error& e) {
    if (e.code() != Errc::SingleClass) throw;
    return Learner::constant(points.front().label,
                             std::max<std::size_t>(num_classes, points.front().label + 1),
                             set.dim());
  }
}

struct IterationMetrics {
  double coverage_before = 0.0;
  double competence_used = 0.0;
  double coverage_after = 0.0;
  double competence_after = 0.0;
  double delta_mean = 0.0;
  double delta_std = 0.0;
};

inline std::pair<double, double> mean_and_std(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

struct IterationResult {
  QueryResult query;
  PoolState pool;
  Learner learner;
  IterationMetrics metrics;
};

/// select -> reveal labels -> retrain -> predict on U -> expand radii.
/// `previous` is the learner trained at the end of the last iteration; when
/// absent and L is non-empty, one is trained on the current pool first.
inline IterationResult run_iteration(const EmbeddingSet& set, const PoolState& pool,
                                     LabelOracle& oracle, const LearnerSpec& learner_spec,
                                     std::size_t q, const DComConfig& config,
                                     std::size_t num_classes,
                                     const std::optional<Learner>& previous = std::nullopt) {
  detail::require(oracle.size() == set.size(), Errc::LengthMismatch, detail::kEngineModule,
                  "oracle does not cover the dataset");
  std::vector<double> confidence;
  if (!pool.labeled.empty()) {
    const Learner current = previous ? *previous : fit_pool(set, pool, learner_spec, num_classes);
    confidence = confidence_from_learner(current, set, pool.unlabeled, config.high_objective);
  }

  IterationResult out;
  out.query = dcom_select(set, pool, confidence, q, config);

  out.pool = pool;
  std::vector<bool> picked(set.size(), false);
  for (Index i : out.query.selected) {
    picked[i] = true;
    out.pool.labeled.push_back(i);
    out.pool.labels.push_back(oracle.reveal(i));
  }
  std::erase_if(out.pool.unlabeled, [&](Index i) { return picked[i]; });

  out.learner = fit_pool(set, out.pool, learner_spec, num_classes);
  const auto predicted = predict_labels(out.learner, set, out.pool.unlabeled);
  out.pool.deltas = expand_delta(set, out.pool, out.query.selected, predicted,
                                 out.query.coverage_before, config);

  auto& m = out.metrics;
  m.coverage_before = out.query.coverage_before;
  m.competence_used = out.query.competence;
  m.coverage_after = covered_set(set, out.pool.labeled, out.pool.deltas).probability;
  m.competence_after = competence_score(m.coverage_after, config.logistic_a, config.logistic_k);
  std::tie(m.delta_mean, m.delta_std) = mean_and_std(out.pool.deltas);
  return out;
}

}  // namespace dcom
