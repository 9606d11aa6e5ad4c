// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffopt/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "diffopt/bench.hpp"
#include "diffopt/io.hpp"

namespace diffopt {

namespace fs = std::filesystem;

namespace {

json optional_real(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// --- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::string task = "branin-ellipse";
  int n = 6000;
  std::uint64_t seed = 0;
  std::string out;
  bool labels = false;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  if (a.task != "branin-ellipse") throw ConfigError("unknown task \"" + a.task + "\"");
  if (a.n < 1) throw ConfigError("n must be positive");
  const auto pts = gen_ellipse_dataset(a.n, a.seed);
  std::vector<double> ys;
  if (a.labels) {
    const auto h = Objective::branin();
    for (const auto& p : pts) ys.push_back(objective_value(h, p));
  }
  write_text(a.out, points_to_csv(pts, a.labels ? &ys : nullptr));
  out << "wrote " << pts.size() << " points to " << a.out << "\n";
  return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string mode = "score";
  std::string out;
  std::optional<int> epochs;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.config);
  if (a.epochs) cfg.train.epochs = *a.epochs;
  cfg.train.validate();
  if (cfg.dataset.empty()) throw ConfigError("config: dataset path is required for train");
  const auto data = read_points_csv(cfg.dataset);
  ScoreMode mode;
  if (a.mode == "score") mode = ScoreMode::score;
  else if (a.mode == "energy") mode = ScoreMode::energy;
  else throw ConfigError("--mode must be score or energy");
  const auto result = train_score(data.points, cfg.network, cfg.schedule, mode, cfg.train);
  save_model(a.out, result.model);
  out << "final_loss " << format_real(result.loss_history.back()) << "\n";
  return kExitOk;
}

// --- train-surrogate ----------------------------------------------------------

struct SurrogateArgs {
  std::string config;
  std::string out;
};

int cmd_train_surrogate(const SurrogateArgs& a, std::ostream& out) {
  const RunConfig cfg = load_run_config(a.config);
  if (cfg.dataset.empty()) throw ConfigError("config: dataset path is required for train-surrogate");
  const auto data = read_points_csv(cfg.dataset);
  if (!data.labels) throw ConfigError(cfg.dataset + ": surrogate training needs a y column");
  const auto fit = surrogate_train(data.points, *data.labels, cfg.surrogate_network, cfg.surrogate_train);
  write_text(a.out, dump_json(surrogate_to_json(std::get<Surrogate>(fit.objective.kind))));
  out << "final_loss " << format_real(fit.loss_history.back()) << "\n";
  return kExitOk;
}

// --- sample -----------------------------------------------------------------

struct SampleArgs {
  std::string config;
  std::string out;
  std::string model;
  bool mh = false;
  std::optional<int> stage1_steps;
  std::optional<int> stage2_steps;
  std::optional<int> num_chains;
  std::optional<int> record_every;
  std::optional<std::uint64_t> seed;
};

std::string trajectory_to_csv(const std::vector<TrajectoryPoint>& rows, Eigen::Index dim) {
  std::string s = "chain,step,stage";
  for (Eigen::Index i = 0; i < dim; ++i) s += ",x" + std::to_string(i);
  s += '\n';
  for (const auto& r : rows) {
    s += std::to_string(r.chain) + ',' + std::to_string(r.step) + ',' + std::to_string(r.stage);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) s += ',' + format_real(r.x[i]);
    s += '\n';
  }
  return s;
}

int cmd_sample(const SampleArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.model.empty()) cfg.model = a.model;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.mh) cfg.sampler.use_mh = true;
  if (a.stage1_steps) cfg.sampler.stage1_steps = *a.stage1_steps;
  if (a.stage2_steps) cfg.sampler.stage2_steps = *a.stage2_steps;
  if (a.num_chains) cfg.sampler.num_chains = *a.num_chains;
  if (a.record_every) cfg.sampler.record_every = *a.record_every;
  if (a.seed) cfg.sampler.seed = *a.seed;
  if (cfg.model.empty()) throw ConfigError("config: model path is required for sample");
  if (cfg.output_dir.empty()) throw ConfigError("sample: an output directory is required");

  const DiffusionModel model = load_model(cfg.model);
  const auto experts = build_experts(cfg.experts);
  SamplerConfig sc = cfg.sampler;
  sc.threads = threads_from_env();
  const SampleSet set = sample(model, experts, sc);

  const fs::path dir = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "samples.csv", points_to_csv(set.final_points));
  if (cfg.sampler.record_every > 0) write_text(dir / "trajectory.csv", trajectory_to_csv(set.trajectory, model.dim()));

  RunConfig manifest = cfg;
  manifest.run_info = json{{"command", "sample"},
                           {"num_chains", static_cast<int>(set.final_points.size())},
                           {"num_diverged", set.num_diverged},
                           {"acceptance_rate", optional_real(set.acceptance_rate)},
                           {"diagnostics", set.diagnostics}};
  write_text(dir / "run-manifest.json", dump_json(run_config_to_json(manifest)));

  for (const auto& d : set.diagnostics) err << "diverged: " << d << "\n";
  out << "wrote " << set.final_points.size() << " samples to " << (dir / "samples.csv").string() << "\n";
  if (set.acceptance_rate) out << "acceptance_rate " << format_real(*set.acceptance_rate) << "\n";
  if (set.num_diverged == static_cast<int>(set.final_points.size())) {
    err << "every chain diverged\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string samples;
  std::string task = "branin-ellipse";
  bool with_halfspaces = false;
  std::string out;
  int topk = 10;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.task != "branin-ellipse") throw ConfigError("unknown task \"" + a.task + "\"");
  const auto table = read_points_csv(a.samples);
  if (table.points.front().size() != 2) throw ConfigError(a.samples + ": branin-ellipse samples are 2-D");
  const auto halfspaces = branin_known_constraints();
  const bool with_h = a.with_halfspaces;
  const auto feasible = [&](const VectorXd& x) { return in_ellipse(x) && (!with_h || satisfies(halfspaces, x)); };
  const auto r = compute_metrics(table.points, Objective::branin(), feasible, branin_minimizers(), a.topk);

  static const char* mode_names[] = {"(-pi,12.275)", "(pi,2.275)", "(9.42478,2.475)"};
  json modes = json::object();
  for (std::size_t i = 0; i < r.mode_counts.size(); ++i) modes[mode_names[i]] = r.mode_counts[i];
  json j = {{"task", a.task},
            {"with_halfspaces", with_h},
            {"num_samples", r.num_samples},
            {"num_valid", r.num_valid},
            {"num_feasible", r.num_feasible},
            {"feasibility_rate", r.feasibility_rate},
            {"best_feasible_value", optional_real(r.best_feasible_value)},
            {"topk", r.topk},
            {"topk_mean", optional_real(r.topk_mean)},
            {"mode_radius", kModeRadius},
            {"mode_counts", modes},
            {"other_count", r.other_count},
            {"infeasible_count", r.infeasible_count}};
  write_text(a.out, dump_json(j));
  out << "feasibility_rate " << format_real(r.feasibility_rate) << "\n";
  if (r.best_feasible_value) out << "best_feasible_value " << format_real(*r.best_feasible_value) << "\n";
  return kExitOk;
}

// --- oracle -----------------------------------------------------------------

struct OracleArgs {
  std::string task = "double-well";
  std::vector<double> betas{0.0, 5.0, 20.0, 50.0};
  double tilt = 1.0;
  int cells = 40000;
  std::string out;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  if (a.task != "double-well") throw ConfigError("unknown task \"" + a.task + "\"");
  if (a.cells < 2) throw ConfigError("--cells must be at least 2");
  for (double b : a.betas) {
    if (!(b >= 0)) throw ConfigError("--beta values must be non-negative");
  }
  json cases = json::array();
  const std::pair<const char*, double> specs[] = {{"symmetric", 0.0}, {"asymmetric", a.tilt}};
  for (const auto& [name, tilt] : specs) {
    DoubleWellCase c;
    c.tilt = tilt;
    c.cells = a.cells;
    json rows = json::array();
    for (double beta : a.betas) {
      const auto r = double_well_oracle(c, beta);
      const double rel = std::abs(r.observed_ratio - r.predicted_ratio) / std::abs(r.predicted_ratio);
      rows.push_back({{"beta", beta},
                      {"observed_ratio", r.observed_ratio},
                      {"predicted_ratio", r.predicted_ratio},
                      {"p_mass_ratio", r.p_mass_ratio},
                      {"relative_error", rel}});
      out << name << " beta=" << format_real(beta) << " observed=" << format_real(r.observed_ratio)
          << " predicted=" << format_real(r.predicted_ratio) << "\n";
    }
    cases.push_back({{"name", name}, {"tilt", tilt}, {"results", rows}});
  }
  const DoubleWellCase defaults;
  json j = {{"task", a.task}, {"cells", a.cells}, {"radius", defaults.radius}, {"cases", cases}};
  write_text(a.out, dump_json(j));
  return kExitOk;
}

}  // namespace

int threads_from_env() {
  const char* v = std::getenv("DIFFOPT_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0) throw ConfigError("DIFFOPT_THREADS must be a non-negative integer");
  return static_cast<int>(n);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion-prior sampling for constrained black-box optimization", "diffopt"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a benchmark dataset as CSV");
  gen_cmd->add_option("--task", gen.task, "Benchmark task")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Number of points")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
  gen_cmd->add_flag("--labels", gen.labels, "Append a y column with objective values");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a score or energy model");
  train_cmd->add_option("--config", train.config, "Run config JSON")->required();
  train_cmd->add_option("--mode", train.mode, "score or energy")->check(CLI::IsMember({"score", "energy"}));
  train_cmd->add_option("--out", train.out, "Output model JSON")->required();
  train_cmd->add_option("--epochs", train.epochs, "Override the configured epoch count");

  SurrogateArgs sur;
  auto* sur_cmd = app.add_subcommand("train-surrogate", "Fit a regression surrogate to labelled data");
  sur_cmd->add_option("--config", sur.config, "Run config JSON")->required();
  sur_cmd->add_option("--out", sur.out, "Output surrogate JSON")->required();

  SampleArgs smp;
  auto* smp_cmd = app.add_subcommand("sample", "Draw samples from prior x objectives");
  smp_cmd->add_option("--config", smp.config, "Run config or manifest JSON")->required();
  smp_cmd->add_option("--out", smp.out, "Output directory (overrides output_dir)");
  smp_cmd->add_option("--model", smp.model, "Model JSON (overrides model)");
  smp_cmd->add_flag("--mh", smp.mh, "Metropolis-adjust Stage II");
  smp_cmd->add_option("--stage1-steps", smp.stage1_steps);
  smp_cmd->add_option("--stage2-steps", smp.stage2_steps);
  smp_cmd->add_option("--num-chains", smp.num_chains);
  smp_cmd->add_option("--record-every", smp.record_every);
  smp_cmd->add_option("--seed", smp.seed);

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Score a sample set");
  ev_cmd->add_option("--samples", ev.samples, "Samples CSV")->required();
  ev_cmd->add_option("--task", ev.task, "Benchmark task")->capture_default_str();
  ev_cmd->add_flag("--with-halfspaces", ev.with_halfspaces, "Also require the known linear constraints");
  ev_cmd->add_option("--out", ev.out, "Output metrics JSON")->required();
  ev_cmd->add_option("--topk", ev.topk, "Top-k size")->capture_default_str();

  OracleArgs orc;
  auto* orc_cmd = app.add_subcommand("oracle", "Lattice check of low-temperature mode weights");
  orc_cmd->add_option("--task", orc.task, "Oracle task")->capture_default_str();
  orc_cmd->add_option("--beta", orc.betas, "Comma-separated inverse temperatures")->delimiter(',');
  orc_cmd->add_option("--tilt", orc.tilt, "Prior log-slope for the asymmetric case")->capture_default_str();
  orc_cmd->add_option("--cells", orc.cells, "Lattice cells")->capture_default_str();
  orc_cmd->add_option("--out", orc.out, "Output report JSON")->required();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("diffopt");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, out);
    if (*train_cmd) return cmd_train(train, out);
    if (*sur_cmd) return cmd_train_surrogate(sur, out);
    if (*smp_cmd) return cmd_sample(smp, out, err);
    if (*ev_cmd) return cmd_eval(ev, out);
    if (*orc_cmd) return cmd_oracle(orc, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace diffopt
