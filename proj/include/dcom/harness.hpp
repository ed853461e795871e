#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dcom/baselines.hpp"
#include "dcom/coverage.hpp"
#include "dcom/engine.hpp"
#include "dcom/io.hpp"
#include "dcom/learners.hpp"
#include "dcom/parallel.hpp"
#include "dcom/purity.hpp"

namespace dcom {

namespace detail {
inline constexpr const char* kHarnessModule = "harness-cli";
}

struct DataSource {
  std::filesystem::path embeddings;
  std::filesystem::path labels;
  std::optional<MixtureSpec> mixture;
  /// L2-normalize rows before anything else; the default radius grid assumes it.
  bool normalize = true;
};

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Initial-radius estimation settings used when dcom.delta0 is "auto".
struct InitDeltaSpec {
  double alpha = 0.95;
  double grid_step = 0.05;
  double grid_max = 2.0;
  /// Restrict purity centres to this many densest points; 0 keeps all.
  std::size_t densest = 0;
  std::size_t kmeans_iters = 100;
};

struct ExperimentConfig {
  DataSource data;
  SplitSpec split;
  StrategySpec strategy;
  LearnerSpec learner;
  DComConfig dcom;
  bool auto_delta0 = true;
  bool auto_delta_max = true;
  bool auto_logistic_a = true;
  InitDeltaSpec init_delta;
  /// Query sizes per iteration; cumulative budgets 10..50, 100, 200.
  std::vector<std::size_t> schedule{10, 10, 10, 10, 10, 50, 100};
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output = "dcom_report";
  /// Wall-clock seconds make reports non-reproducible, so they are recorded
  /// only on request and written as 0 otherwise.
  bool record_timing = false;
};

struct ExperimentRecord {
  std::uint64_t run_seed = 0;
  std::string strategy;
  std::size_t iteration = 0;
  std::size_t budget = 0;
  double accuracy = 0.0;
  double coverage = 0.0;
  double competence = 0.0;
  double delta_mean = 0.0;
  double delta_std = 0.0;
  double seconds = 0.0;
  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known,
                                const std::string& where) {
  if (!obj.is_object()) throw Error(Errc::Parse, kHarnessModule, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(Errc::Parse, kHarnessModule, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline UncertaintyKind parse_uncertainty_kind(const std::string& name) {
  for (auto k : {UncertaintyKind::margin, UncertaintyKind::entropy, UncertaintyKind::maxprob,
                 UncertaintyKind::gradnorm}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::Parse, kHarnessModule, "unknown uncertainty kind '" + name + "'");
}

inline LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "linear_probe") return LearnerKind::linear_probe;
  if (name == "nearest_class_mean") return LearnerKind::nearest_class_mean;
  throw Error(Errc::Parse, kHarnessModule, "unknown learner kind '" + name + "'");
}

}  // namespace detail

inline MixtureSpec parse_mixture_spec(const nlohmann::json& j) {
  detail::reject_unknown_keys(j,
                              {"num_classes", "points_per_class", "dim", "class_separation",
                               "within_std", "seed"},
                              "data.mixture");
  MixtureSpec m;
  detail::read_if(j, "num_classes", m.num_classes);
  detail::read_if(j, "points_per_class", m.points_per_class);
  detail::read_if(j, "dim", m.dim);
  detail::read_if(j, "class_separation", m.class_separation);
  detail::read_if(j, "within_std", m.within_std);
  detail::read_if(j, "seed", m.seed);
  m.validate();
  return m;
}

/// Reads DComConfig fields from a JSON object. Returns which of delta0,
/// delta_max and logistic_a were given explicitly.
inline std::tuple<bool, bool, bool> parse_dcom_fields(const nlohmann::json& j, DComConfig& c,
                                                      InitDeltaSpec* init = nullptr) {
  detail::reject_unknown_keys(j,
                              {"delta0", "delta_max", "tau_slope", "tau_intercept", "logistic_a",
                               "logistic_k", "delta_resolution", "high_objective", "seed",
                               "alpha", "grid_step", "grid_max", "densest", "kmeans_iters"},
                              "dcom");
  bool has_delta0 = false, has_delta_max = false, has_a = false;
  if (j.contains("delta0") && !(j.at("delta0").is_string() && j.at("delta0") == "auto")) {
    c.delta0 = j.at("delta0").get<double>();
    has_delta0 = true;
  }
  if (j.contains("delta_max")) {
    c.delta_max = j.at("delta_max").get<double>();
    has_delta_max = true;
  }
  if (j.contains("logistic_a")) {
    c.logistic_a = j.at("logistic_a").get<double>();
    has_a = true;
  }
  detail::read_if(j, "tau_slope", c.tau_slope);
  detail::read_if(j, "tau_intercept", c.tau_intercept);
  detail::read_if(j, "logistic_k", c.logistic_k);
  detail::read_if(j, "delta_resolution", c.delta_resolution);
  detail::read_if(j, "seed", c.seed);
  if (j.contains("high_objective")) {
    c.high_objective = detail::parse_uncertainty_kind(j.at("high_objective").get<std::string>());
  }
  if (init != nullptr) {
    detail::read_if(j, "alpha", init->alpha);
    detail::read_if(j, "grid_step", init->grid_step);
    detail::read_if(j, "grid_max", init->grid_max);
    detail::read_if(j, "densest", init->densest);
    detail::read_if(j, "kmeans_iters", init->kmeans_iters);
  }
  return {has_delta0, has_delta_max, has_a};
}

/// Every key has a default; the minimal config is
///   {"data": {...}, "strategy": {"kind": "dcom"}}
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  using detail::kHarnessModule;
  try {
    detail::reject_unknown_keys(j,
                                {"data", "split", "strategy", "learner", "dcom", "schedule",
                                 "repetitions", "seed", "output", "record_timing"},
                                "config");
    ExperimentConfig c;
    detail::require(j.contains("data"), Errc::Parse, kHarnessModule, "config needs a data section");
    const auto& data = j.at("data");
    detail::reject_unknown_keys(data, {"embeddings", "labels", "mixture", "normalize"}, "data");
    if (data.contains("mixture")) c.data.mixture = parse_mixture_spec(data.at("mixture"));
    if (data.contains("embeddings")) c.data.embeddings = data.at("embeddings").get<std::string>();
    if (data.contains("labels")) c.data.labels = data.at("labels").get<std::string>();
    detail::read_if(data, "normalize", c.data.normalize);
    detail::require(c.data.mixture.has_value() != !c.data.embeddings.empty(), Errc::Parse,
                    kHarnessModule, "data needs exactly one of 'mixture' or 'embeddings'");

    if (j.contains("split")) {
      detail::reject_unknown_keys(j.at("split"), {"test_fraction", "seed"}, "split");
      detail::read_if(j.at("split"), "test_fraction", c.split.test_fraction);
      detail::read_if(j.at("split"), "seed", c.split.seed);
    }
    detail::require(c.split.test_fraction > 0.0 && c.split.test_fraction < 1.0, Errc::Parse,
                    kHarnessModule, "split.test_fraction must lie in (0, 1)");

    if (j.contains("strategy")) {
      const auto& s = j.at("strategy");
      detail::reject_unknown_keys(s, {"kind", "params", "seed"}, "strategy");
      if (s.contains("kind")) c.strategy.kind = parse_strategy_kind(s.at("kind").get<std::string>());
      if (s.contains("params")) c.strategy.params = s.at("params").get<std::map<std::string, double>>();
      detail::read_if(s, "seed", c.strategy.seed);
    }

    if (j.contains("learner")) {
      const auto& l = j.at("learner");
      detail::reject_unknown_keys(
          l, {"kind", "learning_rate", "epochs", "l2_penalty", "temperature", "seed"}, "learner");
      if (l.contains("kind")) c.learner.kind = detail::parse_learner_kind(l.at("kind").get<std::string>());
      detail::read_if(l, "learning_rate", c.learner.learning_rate);
      detail::read_if(l, "epochs", c.learner.epochs);
      detail::read_if(l, "l2_penalty", c.learner.l2_penalty);
      detail::read_if(l, "temperature", c.learner.temperature);
      detail::read_if(l, "seed", c.learner.seed);
    }
    c.learner.validate();

    if (j.contains("dcom")) {
      auto [d0, dmax, a] = parse_dcom_fields(j.at("dcom"), c.dcom, &c.init_delta);
      c.auto_delta0 = !d0;
      c.auto_delta_max = !dmax;
      c.auto_logistic_a = !a;
    }
    // ProbCover's radius may also come from strategy.params.delta0.
    if (auto it = c.strategy.params.find("delta0"); it != c.strategy.params.end() && c.auto_delta0) {
      c.dcom.delta0 = it->second;
      c.auto_delta0 = false;
    }

    if (j.contains("schedule")) c.schedule = j.at("schedule").get<std::vector<std::size_t>>();
    detail::require(!c.schedule.empty(), Errc::Parse, kHarnessModule, "schedule is empty");
    for (auto q : c.schedule) {
      detail::require(q > 0, Errc::Parse, kHarnessModule, "schedule entries must be positive");
    }
    detail::read_if(j, "repetitions", c.repetitions);
    detail::require(c.repetitions >= 1, Errc::Parse, kHarnessModule, "repetitions must be >= 1");
    detail::read_if(j, "seed", c.seed);
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    detail::read_if(j, "record_timing", c.record_timing);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, kHarnessModule, std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, detail::kHarnessModule, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, detail::kHarnessModule, path.string() + ": " + e.what());
  }
  auto config = parse_experiment_config(j);
  // Relative data paths resolve against the config file's directory.
  auto base = path.parent_path();
  if (!config.data.embeddings.empty() && config.data.embeddings.is_relative()) {
    config.data.embeddings = base / config.data.embeddings;
  }
  if (!config.data.labels.empty() && config.data.labels.is_relative()) {
    config.data.labels = base / config.data.labels;
  }
  return config;
}

// ---------------------------------------------------------------------------
// Experiment loop

inline double evaluate_accuracy(const Learner& learner, const EmbeddingSet& set,
                                std::span<const Index> test) {
  detail::require(!test.empty(), Errc::EmptyTestSet, detail::kHarnessModule, "empty test set");
  const auto predicted = predict_labels(learner, set, test);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Label truth = set.label(test[i]);
    detail::require(truth >= 0, Errc::InvalidArgument, detail::kHarnessModule,
                    "test point " + std::to_string(test[i]) + " has no label");
    correct += predicted[i] == truth ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

inline EmbeddingSet load_data(const DataSource& source) {
  EmbeddingSet set = source.mixture ? gen_gaussian_mixture(*source.mixture)
                                    : io::load_dataset(source.embeddings, source.labels);
  if (source.normalize) set = l2_normalize(set);
  detail::require(set.has_labels(), Errc::InvalidArgument, detail::kHarnessModule,
                  "experiments need a label file to act as the annotation oracle");
  for (Label l : set.labels()) {
    detail::require(l >= 0, Errc::InvalidArgument, detail::kHarnessModule,
                    "experiments need every point labelled");
  }
  return set;
}

/// Stratified split: each class contributes round(test_fraction * size) of
/// its points (at least one when the class has two or more) to the test side.
inline std::pair<std::vector<Index>, std::vector<Index>> stratified_split(
    std::span<const Label> labels, double test_fraction, std::uint64_t seed) {
  std::map<Label, std::vector<Index>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<Index>(i));
  std::mt19937_64 rng(seed);
  std::vector<Index> train, test;
  for (auto& [label, members] : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(members[i - 1], members[pick(rng)]);
    }
    auto k = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    if (members.size() >= 2) k = std::clamp<std::size_t>(k, 1, members.size() - 1);
    else k = 0;
    test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

/// k-means pseudo-labels with k = num_classes, then the largest grid radius
/// whose purity stays at or above alpha.
inline double estimate_initial_delta(const EmbeddingSet& set, std::size_t num_classes,
                                     const InitDeltaSpec& spec, std::uint64_t seed) {
  const auto pseudo = kmeans_cluster(set, num_classes, seed, spec.kmeans_iters);
  const auto grid = uniform_delta_grid(spec.grid_step, spec.grid_max);
  std::optional<std::vector<Index>> sample;
  if (spec.densest > 0) sample = densest_points(set, std::min(spec.densest, set.size()), seed);
  const auto curve = sample ? estimate_purity_curve(set, pseudo, grid, std::span<const Index>(*sample))
                            : estimate_purity_curve(set, pseudo, grid);
  return select_initial_delta(curve, spec.alpha);
}

/// Observer for each finished iteration: (repetition, iteration, pool, oracle).
using IterationHook =
    std::function<void(std::size_t, std::size_t, const PoolState&, const LabelOracle&)>;

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::vector<ExperimentRecord> run_repetition(const ExperimentConfig& config,
                                                    const EmbeddingSet& full, std::size_t rep,
                                                    const IterationHook& hook) {
  const std::uint64_t run_seed = config.seed + rep;
  const std::size_t classes = full.num_classes();
  auto [train_idx, test_idx] =
      stratified_split(full.labels(), config.split.test_fraction, config.split.seed + rep);

  std::size_t total = 0;
  for (auto q : config.schedule) total += q;
  if (total > train_idx.size()) {
    throw Error(Errc::PoolExhausted, kHarnessModule,
                "schedule needs " + std::to_string(total) + " labels but the training pool has " +
                    std::to_string(train_idx.size()));
  }

  // The engine sees unlabeled training rows; labels flow only through the oracle.
  EmbeddingSet train = full.subset(train_idx);
  LabelOracle oracle(train.labels());
  train.clear_labels();
  const EmbeddingSet test = full.subset(test_idx);
  std::vector<Index> test_rows(test.size());
  std::iota(test_rows.begin(), test_rows.end(), Index{0});

  DComConfig dcfg = config.dcom;
  if (config.auto_delta0) {
    dcfg.delta0 = estimate_initial_delta(train, classes, config.init_delta, run_seed);
  }
  if (config.auto_delta_max) dcfg.delta_max = 2.0 * dcfg.delta0;
  if (config.auto_logistic_a) dcfg.logistic_a = classes >= 50 ? 0.8 : 0.9;
  dcfg.seed = run_seed;
  dcfg.validate();

  LearnerSpec lspec = config.learner;
  lspec.seed = run_seed;
  const StrategyKind kind = config.strategy.kind;

  PoolState pool = PoolState::all_unlabeled(train.size());
  std::optional<Learner> learner;
  std::vector<ExperimentRecord> records;
  for (std::size_t it = 0; it < config.schedule.size(); ++it) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t q = config.schedule[it];
    const std::uint64_t step_seed = mix_seed(run_seed ^ config.strategy.seed, it);

    if (kind == StrategyKind::dcom) {
      auto result = run_iteration(train, pool, oracle, lspec, q, dcfg, classes, learner);
      pool = std::move(result.pool);
      learner = std::move(result.learner);
    } else {
      std::vector<Index> picks;
      switch (kind) {
        case StrategyKind::random:
          picks = select_random(pool, q, step_seed);
          break;
        case StrategyKind::margin:
        case StrategyKind::entropy:
        case StrategyKind::maxprob:
          // No model exists before the first labels; start from a random draw.
          if (!learner) {
            picks = select_random(pool, q, step_seed);
          } else {
            const auto probs = predict_softmax(*learner, train, pool.unlabeled);
            const auto u = kind == StrategyKind::margin    ? UncertaintyKind::margin
                           : kind == StrategyKind::entropy ? UncertaintyKind::entropy
                                                           : UncertaintyKind::maxprob;
            picks = select_by_uncertainty(pool, probs, u, q);
          }
          break;
        case StrategyKind::coreset:
          picks = select_coreset(train, pool, q);
          break;
        case StrategyKind::probcover:
          picks = select_probcover(train, pool, dcfg.delta0, q);
          break;
        case StrategyKind::dcom:
          break;
      }
      std::vector<bool> picked(train.size(), false);
      for (Index i : picks) {
        picked[i] = true;
        pool.labeled.push_back(i);
        pool.labels.push_back(oracle.reveal(i));
        pool.deltas.push_back(dcfg.delta0);
      }
      std::erase_if(pool.unlabeled, [&](Index i) { return picked[i]; });
      learner = fit_pool(train, pool, lspec, classes);
    }

    ExperimentRecord rec;
    rec.run_seed = run_seed;
    rec.strategy = std::string(to_string(kind));
    rec.iteration = it;
    rec.budget = pool.labeled.size();
    rec.accuracy = evaluate_accuracy(*learner, test, test_rows);
    rec.coverage = covered_set(train, pool.labeled, pool.deltas).probability;
    rec.competence = competence_score(rec.coverage, dcfg.logistic_a, dcfg.logistic_k);
    std::tie(rec.delta_mean, rec.delta_std) = mean_and_std(pool.deltas);
    if (config.record_timing) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    records.push_back(std::move(rec));
    if (hook) hook(rep, it, pool, oracle);
  }
  return records;
}

}  // namespace detail

/// Runs every repetition (seed_i = seed + i) of the configured strategy.
/// Repetitions run in parallel when DCOM_THREADS > 1 and no hook is given;
/// the records come back in (repetition, iteration) order either way.
inline std::vector<ExperimentRecord> run_al_loop(const ExperimentConfig& config,
                                                 const IterationHook& hook = {}) {
  const EmbeddingSet full = load_data(config.data);
  std::vector<std::vector<ExperimentRecord>> per_rep(config.repetitions);
  auto run = [&](std::size_t rep) {
    try {
      per_rep[rep] = detail::run_repetition(config, full, rep, hook);
    } catch (const Error& e) {
      throw Error(e.code(), e.module(),
                  std::string(e.what()) + " (repetition " + std::to_string(rep) + ")");
    }
  };
  const std::size_t threads = hook ? 1 : thread_budget();
  parallel_for_chunks(config.repetitions, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t rep = begin; rep < end; ++rep) run(rep);
  });
  std::vector<ExperimentRecord> records;
  for (auto& r : per_rep) records.insert(records.end(), r.begin(), r.end());
  return records;
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr const char* kRecordsHeader =
    "run_seed,strategy,iteration,budget,accuracy,coverage,competence,delta_mean,delta_std,seconds";

inline std::string records_to_csv(std::span<const ExperimentRecord> records) {
  using io::detail::format_number;
  std::ostringstream out;
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << r.run_seed << ',' << r.strategy << ',' << r.iteration << ',' << r.budget << ','
        << format_number(r.accuracy) << ',' << format_number(r.coverage) << ','
        << format_number(r.competence) << ',' << format_number(r.delta_mean) << ','
        << format_number(r.delta_std) << ',' << format_number(r.seconds) << '\n';
  }
  return out.str();
}

inline std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& path) {
  using io::detail::parse_number;
  auto lines = io::detail::read_lines(path);
  if (lines.empty() || lines[0] != kRecordsHeader) {
    throw Error(Errc::Parse, detail::kHarnessModule, path.string() + ": unexpected header");
  }
  std::vector<ExperimentRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = io::detail::split_fields(lines[i]);
    const std::string where = "in " + path.string() + " line " + std::to_string(i + 1);
    if (f.size() != 10) throw Error(Errc::Parse, detail::kHarnessModule, "expected 10 fields " + where);
    ExperimentRecord r;
    r.run_seed = parse_number<std::uint64_t>(f[0], where);
    r.strategy = std::string(f[1]);
    r.iteration = parse_number<std::size_t>(f[2], where);
    r.budget = parse_number<std::size_t>(f[3], where);
    r.accuracy = parse_number<double>(f[4], where);
    r.coverage = parse_number<double>(f[5], where);
    r.competence = parse_number<double>(f[6], where);
    r.delta_mean = parse_number<double>(f[7], where);
    r.delta_std = parse_number<double>(f[8], where);
    r.seconds = parse_number<double>(f[9], where);
    out.push_back(std::move(r));
  }
  return out;
}

/// Mean and standard error (sample standard deviation / sqrt(count)); the
/// error is zero for a single value.
inline std::pair<double, double> mean_and_standard_error(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

/// Per (strategy, budget) mean +- standard error across repetitions.
inline nlohmann::json summarize(std::span<const ExperimentRecord> records) {
  std::map<std::pair<std::string, std::size_t>, std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : records) groups[{r.strategy, r.budget}].push_back(&r);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, members] : groups) {
    auto column = [&](double ExperimentRecord::*field) {
      std::vector<double> xs;
      for (auto* m : members) xs.push_back(m->*field);
      return mean_and_standard_error(xs);
    };
    auto [acc, acc_se] = column(&ExperimentRecord::accuracy);
    auto [cov, cov_se] = column(&ExperimentRecord::coverage);
    auto [comp, comp_se] = column(&ExperimentRecord::competence);
    auto [dm, dm_se] = column(&ExperimentRecord::delta_mean);
    rows.push_back({{"strategy", key.first},
                    {"budget", key.second},
                    {"repetitions", members.size()},
                    {"accuracy_mean", acc},
                    {"accuracy_se", acc_se},
                    {"coverage_mean", cov},
                    {"coverage_se", cov_se},
                    {"competence_mean", comp},
                    {"competence_se", comp_se},
                    {"delta_mean", dm},
                    {"delta_mean_se", dm_se}});
  }
  return {{"groups", rows}};
}

/// Writes <dir>/records.csv and <dir>/summary.json.
inline void write_report(std::span<const ExperimentRecord> records,
                         const std::filesystem::path& dir) {
  using detail::kHarnessModule;
  detail::require(!records.empty(), Errc::EmptyInput, kHarnessModule, "no records to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, kHarnessModule, "cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream csv(dir / "records.csv", std::ios::binary | std::ios::trunc);
    if (!csv || !(csv << records_to_csv(records))) {
      throw Error(Errc::Io, kHarnessModule, "cannot write " + (dir / "records.csv").string());
    }
  }
  std::ofstream js(dir / "summary.json", std::ios::trunc);
  if (!js || !(js << summarize(records).dump(2) << '\n')) {
    throw Error(Errc::Io, kHarnessModule, "cannot write " + (dir / "summary.json").string());
  }
}

}  // namespace dcom
