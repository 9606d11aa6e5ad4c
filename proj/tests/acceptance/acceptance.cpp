// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Pass criterion numbers to run a subset.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "diffopt/bench.hpp"
#include "diffopt/cli.hpp"
#include "diffopt/io.hpp"

using namespace diffopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double rel_err(const VectorXd& a, const VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

VectorXd normal_vec(Eigen::Index n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  VectorXd v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != kExitOk) std::cerr << "  [" << args.front() << " exited " << code << "] " << err.str();
  return code;
}

class Workspace {
 public:
  Workspace() : root_(fs::temp_directory_path() / ("diffopt_acceptance_" + std::to_string(::getpid()))) {
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~Workspace() { fs::remove_all(root_); }
  std::string operator/(const std::string& name) const { return (root_ / name).string(); }

 private:
  fs::path root_;
};

json source_config(const std::string& name) {
  return json::parse(read_text(fs::path(DIFFOPT_SOURCE_DIR) / "configs" / name));
}

json metrics_of(const Workspace& ws, const std::string& run, bool halfspaces) {
  std::vector<std::string> args = {"eval", "--samples", ws / (run + "/samples.csv"), "--task", "branin-ellipse",
                                   "--out", ws / (run + "/metrics.json")};
  if (halfspaces) args.push_back("--with-halfspaces");
  if (cli(args) != kExitOk) return json();
  return json::parse(read_text(ws / (run + "/metrics.json")));
}

// The shared Branin experiment: data, one score model, and the runs built on it.
class BraninExperiment {
 public:
  explicit BraninExperiment(const Workspace& ws) : ws_(ws) {}

  // Data generation excluded; training plus the combined sampling run.
  bool prepare() {
    if (prepared_) return ok_;
    prepared_ = true;
    if (cli({"gen-data", "--task", "branin-ellipse", "--n", "6000", "--seed", "0", "--out", ws_ / "data.csv"}) !=
        kExitOk) {
      return ok_ = false;
    }
    config_ = write_config("branin.json", "run_combined");
    const auto start = std::chrono::steady_clock::now();
    ok_ = cli({"train", "--config", config_, "--mode", "score", "--out", ws_ / "model.json"}) == kExitOk &&
          cli({"sample", "--config", config_, "--out", ws_ / "run_combined"}) == kExitOk;
    seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return ok_;
  }

  std::string write_config(const std::string& source, const std::string& run) const {
    json j = source_config(source);
    j["dataset"] = ws_ / "data.csv";
    j["model"] = ws_ / "model.json";
    j["output_dir"] = ws_ / run;
    const auto path = ws_ / (run + ".config.json");
    write_text(path, dump_json(j));
    return path;
  }

  const std::string& config() const { return config_; }
  double seconds() const { return seconds_; }
  const Workspace& ws() const { return ws_; }

 private:
  const Workspace& ws_;
  std::string config_;
  bool prepared_ = false;
  bool ok_ = false;
  double seconds_ = 0.0;
};

Outcome branin_unknown_constraint(BraninExperiment& ex) {
  Outcome o;
  if (!ex.prepare()) return {false, "pipeline failed"};
  const json m = metrics_of(ex.ws(), "run_combined", false);
  const auto samples = read_points_csv(ex.ws() / "run_combined/samples.csv").points;
  const VectorXd infeasible_min = branin_minimizers()[2];
  int near = 0;
  for (const auto& x : samples) near += x.allFinite() && (x - infeasible_min).norm() <= 1.5;
  const double near_frac = static_cast<double>(near) / static_cast<double>(samples.size());
  const double feas = m["feasibility_rate"].get<double>();
  const double best = m["best_feasible_value"].is_null() ? INFINITY : m["best_feasible_value"].get<double>();
  o.require(samples.size() == 500, "samples=" + std::to_string(samples.size()));
  o.require(feas >= 0.90, "feasibility=" + num(feas) + " (>=0.90)");
  o.require(best <= 0.5, "best=" + num(best) + " (<=0.5)");
  o.require(near_frac <= 0.02, "near (9.42478,2.475)=" + num(near_frac) + " (<=0.02)");
  o.require(ex.seconds() <= 900.0, "train+sample " + num(ex.seconds()) + "s (<=900)");
  return o;
}

Outcome branin_known_constraint(BraninExperiment& ex) {
  Outcome o;
  if (!ex.prepare()) return {false, "pipeline failed"};
  const auto config = ex.write_config("branin_known_constraints.json", "run_known");
  if (cli({"sample", "--config", config}) != kExitOk) return {false, "sample failed"};
  const json m = metrics_of(ex.ws(), "run_known", true);
  const int feasible = m["num_feasible"].get<int>();
  o.require(feasible > 0, "feasible=" + std::to_string(feasible));
  const double denom = std::max(feasible, 1);
  const double lower = m["mode_counts"]["(pi,2.275)"].get<int>() / denom;
  const double upper = m["mode_counts"]["(-pi,12.275)"].get<int>() / denom;
  o.require(lower >= 0.80, "share at (pi,2.275)=" + num(lower) + " (>=0.80)");
  o.require(upper <= 0.05, "share at (-pi,12.275)=" + num(upper) + " (<=0.05)");
  return o;
}

Outcome score_recovery() {
  Outcome o;
  std::mt19937_64 rng(2026);
  const double sd = 0.5;
  std::vector<VectorXd> data;
  for (int i = 0; i < 5000; ++i) data.push_back(normal_vec(2, rng, sd));
  const MlpSpec spec{{3, 64, 64, 2}, Activation::relu, {TimeInput::Kind::scalar_concat}};
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.seed = 1;
  const auto model = train_score(data, spec, NoiseSchedule{}, ScoreMode::score, cfg).model;

  // The perturbed marginal of the standardized data is Gaussian with known moments.
  const auto& tr = model.transform;
  const VectorXd mu_z = (-tr.mean).cwiseQuotient(tr.std);
  const VectorXd var_z = (sd * sd) * tr.std.cwiseProduct(tr.std).cwiseInverse();
  const auto c = vp_coeffs(model.schedule, model.t_min);
  const VectorXd denom = (c.alpha * c.alpha) * var_z.array() + c.sigma * c.sigma;

  // 90% of the mass of N(0, sd^2 I) lies within sd * sqrt(-2 ln 0.1).
  const double radius = sd * std::sqrt(-2.0 * std::log(0.1));
  double err2 = 0.0, ref2 = 0.0;
  int used = 0;
  while (used < 4000) {
    const VectorXd x = normal_vec(2, rng, sd);
    if (x.norm() > radius) continue;
    const VectorXd z = tr.forward(x);
    const VectorXd exact = -(z - c.alpha * mu_z).cwiseQuotient(denom);
    const VectorXd learned = score_at(model, z, model.t_min);
    err2 += (learned - exact).squaredNorm();
    ref2 += exact.squaredNorm();
    ++used;
  }
  const double rel = std::sqrt(err2 / ref2);
  o.require(rel <= 0.15, "relative L2 at t_min=" + num(rel) + " (<=0.15) over radius " + num(radius));
  return o;
}

Outcome mala_stationarity() {
  Outcome o;
  const LangevinTarget target(
      {GaussianExpert{1.0}, BoltzmannExpert{Objective::quadratic(VectorXd::Zero(2)), 1.0}}, 2);
  std::mt19937_64 rng(5);
  std::vector<VectorXd> init;
  for (int i = 0; i < 1000; ++i) init.push_back(normal_vec(2, rng));
  // Spacing of 500 steps is one relaxation time of the continuous dynamics.
  const auto run = run_langevin(target, init, 1e-3, 5000, 50, 500, true, 11, 0);
  VectorXd s = VectorXd::Zero(2), q = VectorXd::Zero(2);
  for (const auto& x : run.samples) {
    s += x;
    q += x.cwiseProduct(x);
  }
  const double n = static_cast<double>(run.samples.size());
  const VectorXd mean = s / n;
  const VectorXd var = q / n - mean.cwiseProduct(mean);
  o.require(run.samples.size() == 50000, "samples=" + std::to_string(run.samples.size()));
  for (int i = 0; i < 2; ++i) {
    o.require(std::abs(mean[i]) <= 0.02, "mean" + std::to_string(i) + "=" + num(mean[i]));
    o.require(var[i] >= 0.475 && var[i] <= 0.525, "var" + std::to_string(i) + "=" + num(var[i]));
  }
  o.require(run.acceptance_rate >= 0.4 && run.acceptance_rate <= 0.99,
            "acceptance=" + num(run.acceptance_rate) + " (in [0.4,0.99])");
  return o;
}

Outcome low_temperature_oracle() {
  Outcome o;
  const DoubleWellCase asym{1.0};
  std::vector<double> errs;
  for (double beta : {5.0, 20.0, 50.0}) {
    const auto r = double_well_oracle(asym, beta);
    errs.push_back(std::abs(r.observed_ratio - r.predicted_ratio) / r.predicted_ratio);
  }
  o.require(errs[2] <= 0.10, "beta=50 relative error=" + num(errs[2]) + " (<=0.10)");
  o.require(errs[0] > errs[1] && errs[1] > errs[2],
            "errors " + num(errs[0]) + " > " + num(errs[1]) + " > " + num(errs[2]));
  const auto sym = double_well_oracle(DoubleWellCase{0.0}, 50.0);
  o.require(std::abs(sym.observed_ratio - 1.0) <= 1e-6, "symmetric ratio=" + num(sym.observed_ratio));
  return o;
}

// Worst relative error of f's gradient against central differences.
struct GradCheck {
  double worst = 0.0;
  int count = 0;
  void add(const VectorXd& analytic, const std::function<double(const VectorXd&)>& f, const VectorXd& at,
           double eps = 1e-6) {
    worst = std::max(worst, rel_err(analytic, finite_diff_grad(f, at, eps)));
    ++count;
  }
};

double min_hidden_preact(const ParamSet<double>& p, const MlpSpec& spec, const VectorXd& x, double t) {
  const VectorXd times = VectorXd::Constant(1, t);
  const auto tape = mlp_forward<double>(p, spec, x, &times);
  double m = INFINITY;
  for (std::size_t l = 1; l + 1 < tape.pre.size(); ++l) m = std::min(m, tape.pre[l].cwiseAbs().minCoeff());
  return m;
}

DiffusionModel random_model(ScoreMode mode, Activation act, OutputScaling scaling, std::uint64_t seed) {
  DiffusionModel m;
  m.spec = {{3, 12, 10, 2}, act, {TimeInput::Kind::scalar_concat}};
  m.params = mlp_init(m.spec, seed);
  m.mode = mode;
  m.scaling = scaling;
  m.transform = StandardizeTransform::identity(2);
  m.validate();
  return m;
}

Outcome gradient_suite() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ut(0.05, 0.95);

  for (auto act : {Activation::tanh, Activation::relu}) {
    const double tol = act == Activation::tanh ? 1e-4 : 1e-3;
    const std::string tag = act == Activation::tanh ? "tanh" : "relu";
    GradCheck net, loss;
    for (int trial = 0; net.count < 20 && trial < 2000; ++trial) {
      const auto m = random_model(ScoreMode::score, act, OutputScaling::none, 300 + trial);
      const VectorXd x = normal_vec(2, rng);
      const double t = ut(rng);
      if (act == Activation::relu && min_hidden_preact(m.params, m.spec, x, t) < 1e-4) continue;
      const VectorXd u = normal_vec(2, rng);
      const auto [pg, xg] = mlp_backprop(m.params, m.spec, x, t, u);
      net.add(pg.flat(), [&](const VectorXd& f) { return u.dot(mlp_apply(ParamSet<double>::from_flat(m.spec, f), m.spec, x, t)); },
              m.params.flat());
      net.add(xg, [&](const VectorXd& xx) { return u.dot(mlp_apply(m.params, m.spec, xx, t)); }, x);
    }
    o.require(net.count == 20 && net.worst <= tol, tag + " network param/input " + num(net.worst));

    for (auto mode : {ScoreMode::score, ScoreMode::energy}) {
      for (auto scaling : {OutputScaling::none, OutputScaling::inv_sigma}) {
        GradCheck g;
        for (int trial = 0; g.count < 10 && trial < 2000; ++trial) {
          const auto m = random_model(mode, act, scaling, 900 + trial);
          const MatrixXd x0 = normal_vec(2, rng);
          const MatrixXd eps = normal_vec(2, rng);
          const VectorXd t = VectorXd::Constant(1, ut(rng));
          const auto c = vp_coeffs(m.schedule, t[0]);
          const VectorXd xt = c.alpha * x0.col(0) + c.sigma * eps.col(0);
          if (act == Activation::relu && min_hidden_preact(m.params, m.spec, xt, t[0]) < 1e-3) continue;
          const auto lg = dsm_loss_and_grads(m, x0, t, eps);
          g.add(lg.grads.flat(),
                [&](const VectorXd& f) {
                  auto mm = m;
                  mm.params = ParamSet<double>::from_flat(m.spec, f);
                  return dsm_loss_and_grads(mm, x0, t, eps).loss;
                },
                m.params.flat(), act == Activation::relu ? 1e-7 : 1e-6);
        }
        loss.worst = std::max(loss.worst, g.worst);
        loss.count += g.count;
      }
    }
    o.require(loss.count == 40 && loss.worst <= tol, tag + " training loss (score+energy) " + num(loss.worst));
  }

  // Surrogate: network parameters and the input gradient used for guidance.
  GradCheck sur;
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 500; ++i) {
    xs.push_back(normal_vec(2, rng));
    ys.push_back(branin_eval_grad(xs.back()).first);
  }
  TrainConfig quick;
  quick.epochs = 2;
  const auto fit = surrogate_train(xs, ys, {{2, 16, 16, 1}, Activation::tanh, {}}, quick);
  const auto& s = std::get<Surrogate>(fit.objective.kind);
  for (int i = 0; i < 10; ++i) {
    const VectorXd x = normal_vec(2, rng);
    sur.add(objective_grad(fit.objective, x), [&](const VectorXd& xx) { return objective_value(fit.objective, xx); },
            x);
    const VectorXd u = VectorXd::Ones(1);
    const auto [pg, xg] = mlp_backprop(s.params, s.spec, x, std::nullopt, u);
    sur.add(pg.flat(), [&](const VectorXd& f) { return mlp_apply(ParamSet<double>::from_flat(s.spec, f), s.spec, x)[0]; },
            s.params.flat());
  }
  o.require(sur.worst <= 1e-4, "surrogate param/input " + num(sur.worst));

  // Expert gradients against their log densities; hinge points kept off the boundaries.
  GradCheck experts;
  const std::vector<Expert> es = {GaussianExpert{2.0}, BoltzmannExpert{Objective::branin(), 5.0},
                                  HingeExpert{branin_known_constraints(), 10.0}};
  for (int i = 0; i < 10; ++i) {
    const VectorXd x = v2(-2.0, 6.0) + normal_vec(2, rng, 3.0);
    bool near_boundary = false;
    for (const auto& h : branin_known_constraints()) near_boundary |= std::abs(h.normal.dot(x) - h.offset) < 1e-3;
    for (const auto& e : es) {
      if (std::holds_alternative<HingeExpert>(e) && near_boundary) continue;
      experts.add(expert_grad(e, x), [&](const VectorXd& xx) { return expert_log_density(e, xx); }, x);
    }
  }
  o.require(experts.worst <= 1e-4, "expert log densities " + num(experts.worst));
  return o;
}

Outcome energy_score_consistency() {
  Outcome o;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ut(0.01, 1.0);
  double worst = 0.0;
  int n = 0;
  for (auto scaling : {OutputScaling::none, OutputScaling::inv_sigma}) {
    const auto m = random_model(ScoreMode::energy, Activation::tanh, scaling, 4);
    for (int i = 0; i < 20; ++i, ++n) {
      const VectorXd x = normal_vec(2, rng);
      const double t = ut(rng);
      const VectorXd fd = finite_diff_grad([&](const VectorXd& xx) { return energy_at(m, xx, t); }, x, 1e-6);
      worst = std::max(worst, rel_err(score_at(m, x, t), fd));
    }
  }
  o.require(n == 40 && worst <= 1e-5, "worst relative error " + num(worst) + " (<=1e-5)");
  return o;
}

Outcome exact_invariants() {
  Outcome o;
  const NoiseSchedule sched;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = sched.horizon * i / 999.0;
    const auto c = vp_coeffs(sched, t);
    worst = std::max(worst, std::abs(c.alpha * c.alpha + c.sigma * c.sigma - 1.0));
  }
  o.require(worst <= 1e-12, "max |alpha^2+sigma^2-1|=" + num(worst));

  std::mt19937_64 rng(8);
  const std::vector<Expert> es = {GaussianExpert{1.5}, BoltzmannExpert{Objective::branin(), 5.0},
                                  HingeExpert{branin_known_constraints(), 10.0},
                                  BoltzmannExpert{Objective::quadratic(v2(1.0, 2.0), 3.0), 0.5}};
  bool additive = true;
  for (int i = 0; i < 100; ++i) {
    const VectorXd x = normal_vec(2, rng, 5.0);
    VectorXd sum = VectorXd::Zero(2);
    for (const auto& e : es) sum += expert_grad(e, x);
    additive &= product_grad(es, x) == sum;
  }
  o.require(additive, "product_grad additivity");

  DiffusionModel m = random_model(ScoreMode::score, Activation::tanh, OutputScaling::inv_sigma, 5);
  m.transform = {v2(0.5, 7.0), v2(3.0, 4.0)};
  SamplerConfig sc;
  sc.stage1_steps = 200;
  sc.stage1_dt = 0.005;
  sc.stage2_steps = 100;
  sc.num_chains = 16;
  sc.record_every = 10;
  sc.seed = 3;
  Objective shifted = Objective::branin();
  shifted.offset = 123.25;
  const auto a = sample(m, {BoltzmannExpert{Objective::branin(), 5.0}}, sc);
  const auto b = sample(m, {BoltzmannExpert{shifted, 5.0}}, sc);
  bool same = a.final_points == b.final_points && a.trajectory.size() == b.trajectory.size();
  for (std::size_t i = 0; same && i < a.trajectory.size(); ++i) same = a.trajectory[i].x == b.trajectory[i].x;
  o.require(same, "offset leaves seeded trajectories bit-identical");

  const BetaSchedule expo{BetaSchedule::Kind::exponential, 7.0, 3.0};
  o.require(beta_at(expo, sched.horizon, sched.horizon) == 0.0, "exponential beta at T is 0");
  return o;
}

Outcome cli_determinism(const Workspace& ws) {
  Outcome o;
  // Each command runs twice with the same arguments; outputs must match byte for byte.
  const auto twice = [&](const std::string& what, const std::vector<std::string>& args,
                         const std::vector<std::string>& files) {
    bool same = cli(args) == kExitOk;
    std::vector<std::string> first;
    for (const auto& f : files) first.push_back(same ? read_text(ws / f) : "");
    same = same && cli(args) == kExitOk;
    for (std::size_t i = 0; same && i < files.size(); ++i) same = read_text(ws / files[i]) == first[i];
    o.require(same, what);
  };

  twice("gen-data", {"gen-data", "--n", "500", "--labels", "--seed", "9", "--out", ws / "det_data.csv"},
        {"det_data.csv"});

  json cfg = {{"dataset", ws / "det_data.csv"},
              {"seed", 4},
              {"network", {{"layer_widths", {3, 32, 32, 2}}, {"activation", "relu"}}},
              {"train", {{"epochs", 5}, {"output_scaling", "inv_sigma"}}},
              {"sampler", {{"num_chains", 40}, {"stage1_steps", 200}, {"stage1_dt", 0.005}, {"stage2_steps", 50},
                           {"record_every", 25}}},
              {"experts", {{{"kind", "boltzmann"}, {"beta", 5.0}, {"objective", {{"kind", "branin"}}}},
                           {{"kind", "hinge"},
                            {"beta_prime", 10.0},
                            {"halfspaces",
                             {{{"normal", {-1.5, 1.0}}, {"offset", 7.5}}, {{"normal", {1.5, 1.0}}, {"offset", 15.0}}}}}}},
              {"surrogate", {{"network", {{"layer_widths", {2, 16, 1}}, {"activation", "tanh"}}}, {"train", {{"epochs", 5}}}}}};
  const auto config = ws / "det_config.json";
  write_text(config, dump_json(cfg));

  twice("train score", {"train", "--config", config, "--mode", "score", "--out", ws / "det_score.json"},
        {"det_score.json"});
  twice("train energy", {"train", "--config", config, "--mode", "energy", "--out", ws / "det_energy.json"},
        {"det_energy.json"});
  twice("train-surrogate", {"train-surrogate", "--config", config, "--out", ws / "det_surrogate.json"},
        {"det_surrogate.json"});
  twice("sample", {"sample", "--config", config, "--model", ws / "det_score.json", "--out", ws / "det_run"},
        {"det_run/samples.csv", "det_run/trajectory.csv", "det_run/run-manifest.json"});
  twice("sample with MH",
        {"sample", "--config", config, "--model", ws / "det_energy.json", "--mh", "--out", ws / "det_mh"},
        {"det_mh/samples.csv", "det_mh/trajectory.csv", "det_mh/run-manifest.json"});
  twice("sample replayed from its manifest", {"sample", "--config", ws / "det_run/run-manifest.json"},
        {"det_run/samples.csv", "det_run/trajectory.csv", "det_run/run-manifest.json"});
  twice("eval", {"eval", "--samples", ws / "det_run/samples.csv", "--with-halfspaces", "--out", ws / "det_metrics.json"},
        {"det_metrics.json"});
  twice("oracle", {"oracle", "--task", "double-well", "--cells", "4000", "--out", ws / "det_oracle.json"},
        {"det_oracle.json"});
  return o;
}

Outcome ablations(BraninExperiment& ex) {
  Outcome o;
  if (!ex.prepare()) return {false, "pipeline failed"};
  const auto& ws = ex.ws();
  const auto& config = ex.config();
  const bool ran = cli({"sample", "--config", config, "--stage2-steps", "0", "--out", ws / "run_stage1"}) == kExitOk &&
                   cli({"sample", "--config", config, "--stage1-steps", "0", "--out", ws / "run_stage2"}) == kExitOk;
  if (!ran) return {false, "sampling failed"};

  // MH needs an energy model; a smaller one keeps this affordable.
  json energy_cfg = json::parse(read_text(config));
  energy_cfg["network"]["layer_widths"] = {3, 64, 64, 2};
  energy_cfg["train"]["epochs"] = 200;
  const auto energy_config = ws / "energy.config.json";
  write_text(energy_config, dump_json(energy_cfg));
  if (cli({"train", "--config", energy_config, "--mode", "energy", "--out", ws / "energy.json"}) != kExitOk ||
      cli({"sample", "--config", energy_config, "--model", ws / "energy.json", "--mh", "--out", ws / "run_mh"}) !=
          kExitOk) {
    return {false, "MH run failed"};
  }

  double feas[4];
  const char* runs[] = {"run_stage1", "run_stage2", "run_combined", "run_mh"};
  const char* names[] = {"stage1-only", "stage2-only", "combined", "combined+MH"};
  for (int i = 0; i < 4; ++i) {
    const json m = metrics_of(ws, runs[i], false);
    feas[i] = m["feasibility_rate"].get<double>();
    o.require(m["num_samples"].get<int>() == 500, std::string(names[i]) + " feasibility=" + num(feas[i]));
  }
  const json manifest = json::parse(read_text(ws / "run_mh/run-manifest.json"));
  const double acc = manifest["run_info"]["acceptance_rate"].get<double>();
  o.require(acc >= 0.0 && acc <= 1.0, "MH acceptance=" + num(acc));
  o.require(feas[2] >= feas[1], "combined >= stage2-only");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  Workspace ws;
  BraninExperiment branin(ws);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"branin unknown constraint", [&] { return branin_unknown_constraint(branin); }},
      {"branin known constraints", [&] { return branin_known_constraint(branin); }},
      {"score recovery", score_recovery},
      {"MALA stationarity", mala_stationarity},
      {"low-temperature oracle", low_temperature_oracle},
      {"gradient suite", gradient_suite},
      {"energy-score consistency", energy_score_consistency},
      {"exact invariants", exact_invariants},
      {"CLI determinism", [&] { return cli_determinism(ws); }},
      {"ablations", [&] { return ablations(branin); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!wanted(n)) continue;
    Outcome r;
    const auto start = std::chrono::steady_clock::now();
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << criteria[i].first << ", " << num(secs)
              << "s): " << r.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
