#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dcom/baselines.hpp"
#include "dcom/engine.hpp"
#include "dcom/harness.hpp"
#include "dcom/io.hpp"
#include "dcom/purity.hpp"

// Subcommands:
//   init-delta   purity curve (delta,purity CSV) and the chosen initial radius
//   select       one query round from a pool file
//   expand-delta radii for a freshly labelled query
//   run-loop     full experiment from a JSON config
//   report       merge record CSVs and summarize them
//
// Exit status: 0 success, 2 usage error, 1 runtime error.

namespace dcom::cli {

namespace detail {

using json = nlohmann::json;
using dcom::detail::kHarnessModule;

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, kHarnessModule, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, kHarnessModule, path.string() + ": " + e.what());
  }
}

/// Pool file: {"labeled": [...], "labels": [...], "deltas": [...],
///             "unlabeled"?: [...], "confidence"?: [...], "predicted"?: [...],
///             "query"?: [...]}
/// `unlabeled` defaults to the ascending complement of `labeled`.
struct PoolFile {
  PoolState pool;
  std::vector<double> confidence;
  std::vector<Label> predicted;
  std::vector<Index> query;
};

inline PoolFile read_pool(const std::filesystem::path& path, std::size_t n) {
  PoolFile f;
  if (path.empty()) {
    f.pool = PoolState::all_unlabeled(n);
    return f;
  }
  const json j = read_json(path);
  try {
    dcom::detail::reject_unknown_keys(
        j, {"labeled", "labels", "deltas", "unlabeled", "confidence", "predicted", "query"},
        "pool file");
    dcom::detail::read_if(j, "labeled", f.pool.labeled);
    dcom::detail::read_if(j, "labels", f.pool.labels);
    dcom::detail::read_if(j, "deltas", f.pool.deltas);
    dcom::detail::read_if(j, "confidence", f.confidence);
    dcom::detail::read_if(j, "predicted", f.predicted);
    dcom::detail::read_if(j, "query", f.query);
    if (j.contains("unlabeled")) {
      f.pool.unlabeled = j.at("unlabeled").get<std::vector<Index>>();
    } else {
      std::vector<bool> in_l(n, false);
      for (Index i : f.pool.labeled) {
        if (i < n) in_l[i] = true;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (!in_l[i]) f.pool.unlabeled.push_back(static_cast<Index>(i));
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, kHarnessModule, path.string() + ": " + e.what());
  }
  return f;
}

inline json pool_to_json(const PoolState& pool) {
  return {{"labeled", pool.labeled},
          {"labels", pool.labels},
          {"deltas", pool.deltas},
          {"unlabeled", pool.unlabeled}};
}

struct DComFlags {
  std::string config;
  std::optional<double> delta0, delta_max, tau_slope, tau_intercept, a, k, resolution;
  std::string objective;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON file with DCoM parameters (root or 'dcom' key)");
    cmd->add_option("--delta0", delta0, "initial radius");
    cmd->add_option("--delta-max", delta_max, "largest radius for expansion (default 2*delta0)");
    cmd->add_option("--tau-slope", tau_slope, "purity threshold slope");
    cmd->add_option("--tau-intercept", tau_intercept, "purity threshold intercept");
    cmd->add_option("--logistic-a", a, "competence midpoint");
    cmd->add_option("--logistic-k", k, "competence steepness");
    cmd->add_option("--resolution", resolution, "radius search resolution");
    cmd->add_option("--objective", objective, "confidence source: margin|entropy|maxprob|gradnorm");
  }

  DComConfig resolve(std::size_t num_classes) const {
    DComConfig c;
    bool has_d0 = false, has_dmax = false, has_a = false;
    if (!config.empty()) {
      json j = read_json(config);
      if (j.contains("dcom")) j = j.at("dcom");
      try {
        std::tie(has_d0, has_dmax, has_a) = parse_dcom_fields(j, c);
      } catch (const json::exception& e) {
        throw Error(Errc::Parse, kHarnessModule, config + ": " + e.what());
      }
    }
    if (delta0) { c.delta0 = *delta0; has_d0 = true; }
    if (delta_max) { c.delta_max = *delta_max; has_dmax = true; }
    if (a) { c.logistic_a = *a; has_a = true; }
    if (tau_slope) c.tau_slope = *tau_slope;
    if (tau_intercept) c.tau_intercept = *tau_intercept;
    if (k) c.logistic_k = *k;
    if (resolution) c.delta_resolution = *resolution;
    if (!objective.empty()) c.high_objective = dcom::detail::parse_uncertainty_kind(objective);
    dcom::detail::require(has_d0, Errc::InvalidArgument, kHarnessModule,
                          "an initial radius is required (--delta0 or config)");
    if (!has_dmax) c.delta_max = 2.0 * c.delta0;
    if (!has_a) c.logistic_a = num_classes >= 50 ? 0.8 : 0.9;
    c.validate();
    return c;
  }
};

inline std::size_t infer_classes(std::size_t flag, const PoolState& pool) {
  if (flag > 0) return flag;
  Label top = -1;
  for (Label l : pool.labels) top = std::max(top, l);
  return static_cast<std::size_t>(top + 1);
}

inline void print_summary(std::ostream& out, std::span<const ExperimentRecord> records) {
  const auto summary = summarize(records);
  out << "strategy,budget,repetitions,accuracy_mean,accuracy_se,coverage_mean\n";
  for (const auto& g : summary.at("groups")) {
    out << g.at("strategy").get<std::string>() << ',' << g.at("budget").get<std::size_t>() << ','
        << g.at("repetitions").get<std::size_t>() << ','
        << io::detail::format_number(g.at("accuracy_mean").get<double>()) << ','
        << io::detail::format_number(g.at("accuracy_se").get<double>()) << ','
        << io::detail::format_number(g.at("coverage_mean").get<double>()) << '\n';
  }
}

}  // namespace detail

inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                        std::ostream& err) {
  using detail::json;
  CLI::App app{"Coverage-and-margin active learning query selection"};
  app.name(args.empty() ? "dcom" : args.front());
  app.require_subcommand(1);

  // init-delta
  auto* init = app.add_subcommand("init-delta", "estimate the purity curve and initial radius");
  std::string init_emb;
  std::size_t init_classes = 0, init_densest = 0, init_iters = 100;
  double init_alpha = 0.95, init_step = 0.05, init_max = 2.0;
  std::uint64_t init_seed = 0;
  bool init_raw = false;
  init->add_option("--embeddings", init_emb, "DCM1 or CSV embedding file")->required();
  init->add_option("--classes", init_classes, "number of k-means clusters")->required()->check(CLI::PositiveNumber);
  init->add_option("--alpha", init_alpha, "purity threshold");
  init->add_option("--seed", init_seed, "k-means seed");
  init->add_option("--grid-step", init_step, "radius grid step");
  init->add_option("--grid-max", init_max, "largest grid radius");
  init->add_option("--densest", init_densest, "use only the N densest points as centres (0 = all)");
  init->add_option("--kmeans-iters", init_iters, "k-means iteration cap");
  init->add_flag("--raw", init_raw, "skip L2 normalization");

  // select
  auto* sel = app.add_subcommand("select", "choose one query set");
  std::string sel_emb, sel_pool, sel_strategy = "dcom";
  std::size_t sel_q = 0, sel_classes = 0;
  std::uint64_t sel_seed = 0;
  bool sel_raw = false;
  detail::DComFlags sel_flags;
  sel->add_option("--embeddings", sel_emb, "DCM1 or CSV embedding file")->required();
  sel->add_option("--pool", sel_pool, "pool JSON (default: everything unlabelled)");
  sel->add_option("--q", sel_q, "query size")->required()->check(CLI::PositiveNumber);
  sel->add_option("--strategy", sel_strategy, "dcom|probcover|random|margin|entropy|maxprob|coreset");
  sel->add_option("--classes", sel_classes, "class count for learner-based strategies");
  sel->add_option("--seed", sel_seed, "seed for random selection");
  sel->add_flag("--raw", sel_raw, "skip L2 normalization");
  sel_flags.attach(sel);

  // expand-delta
  auto* exp = app.add_subcommand("expand-delta", "radii for a freshly labelled query");
  std::string exp_emb, exp_pool;
  std::optional<double> exp_cov;
  std::size_t exp_classes = 0;
  bool exp_raw = false;
  detail::DComFlags exp_flags;
  exp->add_option("--embeddings", exp_emb, "DCM1 or CSV embedding file")->required();
  exp->add_option("--pool", exp_pool, "pool JSON whose 'query' lists the trailing labelled points")->required();
  exp->add_option("--coverage-old", exp_cov, "coverage before the query (default: recomputed)");
  exp->add_option("--classes", exp_classes, "class count for the learner");
  exp->add_flag("--raw", exp_raw, "skip L2 normalization");
  exp_flags.attach(exp);

  // run-loop
  auto* loop = app.add_subcommand("run-loop", "run an experiment from a JSON config");
  std::string loop_config, loop_output;
  loop->add_option("--config", loop_config, "experiment config JSON")->required();
  loop->add_option("--output", loop_output, "report directory (overrides config)");

  // report
  auto* rep = app.add_subcommand("report", "merge record CSVs and summarize");
  std::vector<std::string> rep_records;
  std::string rep_output;
  rep->add_option("--records", rep_records, "records.csv files")->required();
  rep->add_option("--output", rep_output, "directory for merged records.csv and summary.json");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  auto load = [](const std::string& path, bool raw) {
    auto set = io::read_embedding_file(path);
    return raw ? set : l2_normalize(set);
  };

  try {
    if (*init) {
      const auto set = load(init_emb, init_raw);
      const auto pseudo = kmeans_cluster(set, init_classes, init_seed, init_iters);
      const auto grid = uniform_delta_grid(init_step, init_max);
      std::optional<std::vector<Index>> sample;
      if (init_densest > 0) sample = densest_points(set, std::min(init_densest, set.size()), init_seed);
      const auto curve = sample
                             ? estimate_purity_curve(set, pseudo, grid, std::span<const Index>(*sample))
                             : estimate_purity_curve(set, pseudo, grid);
      out << "delta,purity\n";
      for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << io::detail::format_number(curve.grid[i]) << ','
            << io::detail::format_number(curve.purity[i]) << '\n';
      }
      out << "delta0," << io::detail::format_number(select_initial_delta(curve, init_alpha)) << '\n';
      return 0;
    }

    if (*sel) {
      const auto set = load(sel_emb, sel_raw);
      auto file = detail::read_pool(sel_pool, set.size());
      const auto kind = parse_strategy_kind(sel_strategy);
      const std::size_t classes = detail::infer_classes(sel_classes, file.pool);
      json result = {{"strategy", sel_strategy}};
      auto train = [&] { return fit_pool(set, file.pool, LearnerSpec{}, classes); };
      switch (kind) {
        case StrategyKind::dcom: {
          const auto cfg = sel_flags.resolve(classes);
          std::vector<double> confidence = file.confidence;
          if (!file.pool.labeled.empty() && confidence.empty()) {
            confidence = confidence_from_learner(train(), set, file.pool.unlabeled, cfg.high_objective);
          }
          const auto q = dcom_select(set, file.pool, confidence, sel_q, cfg);
          result["selected"] = q.selected;
          result["coverage_before"] = q.coverage_before;
          result["competence"] = q.competence;
          result["radius"] = q.radius;
          break;
        }
        case StrategyKind::probcover: {
          const auto cfg = sel_flags.resolve(classes);
          const auto q = probcover_query(set, file.pool, cfg.delta0, sel_q);
          result["selected"] = q.selected;
          result["coverage_before"] = q.coverage_before;
          result["radius"] = q.radius;
          break;
        }
        case StrategyKind::random:
          result["selected"] = select_random(file.pool, sel_q, sel_seed);
          break;
        case StrategyKind::coreset:
          result["selected"] = select_coreset(set, file.pool, sel_q);
          break;
        case StrategyKind::margin:
        case StrategyKind::entropy:
        case StrategyKind::maxprob: {
          const auto probs = predict_softmax(train(), set, file.pool.unlabeled);
          const auto u = kind == StrategyKind::margin    ? UncertaintyKind::margin
                         : kind == StrategyKind::entropy ? UncertaintyKind::entropy
                                                         : UncertaintyKind::maxprob;
          result["selected"] = select_by_uncertainty(file.pool, probs, u, sel_q);
          break;
        }
      }
      out << result.dump() << '\n';
      return 0;
    }

    if (*exp) {
      const auto set = load(exp_emb, exp_raw);
      auto file = detail::read_pool(exp_pool, set.size());
      const std::size_t classes = detail::infer_classes(exp_classes, file.pool);
      const auto cfg = exp_flags.resolve(classes);
      dcom::detail::require(file.query.size() <= file.pool.labeled.size(), Errc::InconsistentPool,
                            dcom::detail::kHarnessModule, "query larger than the labelled set");
      const std::size_t old_count = file.pool.labeled.size() - file.query.size();
      double coverage_old = 0.0;
      if (exp_cov) {
        coverage_old = *exp_cov;
      } else {
        coverage_old = covered_set(set, std::span(file.pool.labeled).first(old_count),
                                   file.pool.deltas)
                           .probability;
      }
      std::vector<Label> predicted = file.predicted;
      if (predicted.empty()) predicted = predict_labels(fit_pool(set, file.pool, LearnerSpec{}, classes), set, file.pool.unlabeled);
      file.pool.deltas = expand_delta(set, file.pool, file.query, predicted, coverage_old, cfg);
      json result = detail::pool_to_json(file.pool);
      result["tau"] = compute_tau(coverage_old, cfg.tau_slope, cfg.tau_intercept);
      out << result.dump() << '\n';
      return 0;
    }

    if (*loop) {
      auto config = load_experiment_config(loop_config);
      if (!loop_output.empty()) config.output = loop_output;
      const auto records = run_al_loop(config);
      write_report(records, config.output);
      detail::print_summary(out, records);
      out << "report: " << (config.output / "records.csv").string() << ", "
          << (config.output / "summary.json").string() << '\n';
      return 0;
    }

    if (*rep) {
      std::vector<ExperimentRecord> records;
      for (const auto& path : rep_records) {
        auto part = read_records_csv(path);
        records.insert(records.end(), part.begin(), part.end());
      }
      dcom::detail::require(!records.empty(), Errc::EmptyInput, dcom::detail::kHarnessModule,
                            "no records in the given files");
      if (!rep_output.empty()) write_report(records, rep_output);
      detail::print_summary(out, records);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: [" << dcom::detail::kHarnessModule << "] " << e.what() << '\n';
    return 1;
  }
  return 2;
}

inline int cli_dispatch(int argc, char** argv) {
  return cli_dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace dcom::cli
