// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffopt/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace diffopt {

Rng chain_rng(std::uint64_t seed, std::uint64_t chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain), static_cast<std::uint32_t>(chain >> 32), 0x6466u};
  return Rng(seq);
}

void BetaSchedule::validate() const {
  if (!(beta_max >= 0)) throw std::invalid_argument("beta_max must be non-negative");
  if (kind == Kind::exponential && !(rate > 0)) throw std::invalid_argument("rate must be positive");
  if (kind == Kind::reciprocal && !(beta0 > 0)) throw std::invalid_argument("beta0 must be positive");
}

double beta_at(const BetaSchedule& s, double tau, double horizon) {
  if (!(tau >= 0.0 && tau <= horizon)) {
    throw std::invalid_argument("beta_at: tau=" + std::to_string(tau) + " outside [0, T]");
  }
  switch (s.kind) {
    case BetaSchedule::Kind::constant:
      return s.beta_max;
    case BetaSchedule::Kind::linear:
      return s.beta_max * (horizon - tau) / horizon;
    case BetaSchedule::Kind::exponential:
      return s.beta_max * -std::expm1(-s.rate * (horizon - tau));
    case BetaSchedule::Kind::reciprocal: {
      const double t = horizon - tau;
      return t > 1.0 / s.beta0 ? 1.0 / t : 0.0;
    }
  }
  return 0.0;
}

void SamplerConfig::validate(double horizon) const {
  schedule.validate();
  if (stage1_steps < 0 || stage2_steps < 0) throw std::invalid_argument("step counts must be non-negative");
  if (!(stage1_dt > 0) || !(stage2_dt > 0)) throw std::invalid_argument("step sizes must be positive");
  if (stage1_steps > 0 && std::abs(stage1_steps * stage1_dt - horizon) > 1e-9 * horizon) {
    throw std::invalid_argument("stage1_steps * stage1_dt must equal the schedule horizon");
  }
  if (num_chains < 1) throw std::invalid_argument("num_chains must be positive");
  if (record_every < 0) throw std::invalid_argument("record_every must be non-negative");
  if (!(grad_clip > 0)) throw std::invalid_argument("grad_clip must be positive");
  if (!(stage2_beta >= 0)) throw std::invalid_argument("stage2_beta must be non-negative");
  if (threads < 0) throw std::invalid_argument("threads must be non-negative");
}

LangevinTarget::LangevinTarget(std::vector<Expert> experts, StandardizeTransform transform)
    : experts_(std::move(experts)), transform_(std::move(transform)) {
  if (experts_.empty()) throw std::invalid_argument("LangevinTarget: no experts");
}

LangevinTarget::LangevinTarget(std::vector<Expert> experts, Eigen::Index dim)
    : LangevinTarget(std::move(experts), StandardizeTransform::identity(dim)) {}

bool LangevinTarget::native_prior(const Expert& e) const {
  const auto* p = std::get_if<PriorExpert>(&e);
  return p && p->model->transform.mean == transform_.mean && p->model->transform.std == transform_.std;
}

VectorXd LangevinTarget::grad(const VectorXd& z) const {
  if (z.size() != dim()) throw std::invalid_argument("LangevinTarget: dimension mismatch");
  const VectorXd x = transform_.inverse(z);
  VectorXd g = VectorXd::Zero(dim());
  for (const auto& e : experts_) {
    if (native_prior(e)) {
      g += score_at(*std::get<PriorExpert>(e).model, z, 0.0);
    } else {
      g += transform_.std.cwiseProduct(expert_grad(e, x));
    }
  }
  return g;
}

double LangevinTarget::log_density_diff(const VectorXd& to, const VectorXd& from) const {
  const VectorXd xt = transform_.inverse(to);
  const VectorXd xf = transform_.inverse(from);
  double acc = 0.0;
  for (const auto& e : experts_) {
    if (native_prior(e)) {
      const auto& m = *std::get<PriorExpert>(e).model;
      acc += energy_at(m, to, 0.0) - energy_at(m, from, 0.0);
    } else {
      acc += expert_log_density_diff(e, xt, xf);
    }
  }
  return acc;
}

bool LangevinTarget::has_log_density() const {
  return std::all_of(experts_.begin(), experts_.end(), [](const Expert& e) { return diffopt::has_log_density(e); });
}

namespace {

VectorXd draw_normal(Eigen::Index d, Rng& rng, std::normal_distribution<double>& normal) {
  VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
  return z;
}

VectorXd nan_vector(Eigen::Index d) { return VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN()); }

double proposal_log_ratio(const VectorXd& x, const VectorXd& gx, const VectorXd& xh, const VectorXd& gh, double dt) {
  // log N(x | xh + dt gh, 2dt) - log N(xh | x + dt gx, 2dt)
  const double reverse = (x - xh - dt * gh).squaredNorm();
  const double forward = (xh - x - dt * gx).squaredNorm();
  return (forward - reverse) / (4.0 * dt);
}

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  int workers = threads == 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency())) : threads;
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  }
}

void check_objectives(const std::vector<Expert>& objectives) {
  for (const auto& e : objectives) {
    if (is_prior(e)) throw std::invalid_argument("objectives must not include the prior expert");
  }
}

// Raw-space gradient of the Stage I guidance experts with Boltzmann weights
// replaced by `beta`.
VectorXd guidance_grad(const std::vector<Expert>& objectives, const VectorXd& x, double beta) {
  VectorXd g = VectorXd::Zero(x.size());
  for (const auto& e : objectives) {
    if (const auto* b = std::get_if<BoltzmannExpert>(&e)) {
      g -= beta * objective_grad(b->objective, x);
    } else {
      g += expert_grad(e, x);
    }
  }
  return g;
}

std::vector<Expert> stage2_experts(const DiffusionModel& model, const std::vector<Expert>& objectives, double beta) {
  std::vector<Expert> experts;
  experts.emplace_back(PriorExpert{std::make_shared<const DiffusionModel>(model)});
  for (const auto& e : objectives) {
    if (const auto* b = std::get_if<BoltzmannExpert>(&e)) {
      experts.emplace_back(BoltzmannExpert{b->objective, beta});
    } else {
      experts.push_back(e);
    }
  }
  return experts;
}

struct ChainOutcome {
  VectorXd state;  // standardized
  bool diverged = false;
  std::string diagnostic;
  std::vector<TrajectoryPoint> trajectory;
  long proposed = 0;
  long accepted = 0;
};

class ChainRunner {
 public:
  ChainRunner(const DiffusionModel& model, const std::vector<Expert>& objectives, const SamplerConfig& config,
              const LangevinTarget* stage2)
      : model_(model), objectives_(objectives), config_(config), stage2_(stage2) {}

  ChainOutcome run(int chain) const {
    ChainOutcome out;
    Rng rng = chain_rng(config_.seed, static_cast<std::uint64_t>(chain));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto d = model_.dim();
    VectorXd z = draw_normal(d, rng, normal);

    const auto record = [&](int stage, int step, const VectorXd& state) {
      if (config_.record_every > 0 && step % config_.record_every == 0) {
        out.trajectory.push_back({chain, step, stage, model_.transform.inverse(state)});
      }
    };
    const auto diverge = [&](int stage, int step) {
      out.diverged = true;
      out.diagnostic = "chain " + std::to_string(chain) + " diverged in stage " + std::to_string(stage) +
                       " at step " + std::to_string(step);
      out.state = nan_vector(d);
      return out;
    };

    const auto& sched = model_.schedule;
    const double horizon = sched.horizon;
    const double dt1 = config_.stage1_dt;
    for (int k = 0; k < config_.stage1_steps; ++k) {
      const double tau = horizon - k * dt1;
      const double beta = beta_at(config_.schedule, tau, horizon);
      VectorXd guidance = VectorXd::Zero(d);
      if (!objectives_.empty()) {
        const VectorXd x = model_.transform.inverse(z);
        guidance = model_.transform.std.cwiseProduct(guidance_grad(objectives_, x, beta));
        const double norm = guidance.norm();
        if (norm > config_.grad_clip) guidance *= config_.grad_clip / norm;
      }
      const double g2 = sched.beta(tau);
      const VectorXd drift = -sched.drift_coeff(tau) * z + g2 * score_at(model_, z, tau) + guidance;
      z += drift * dt1;
      if (config_.inject_noise) z += std::sqrt(g2 * dt1) * draw_normal(d, rng, normal);
      if (!z.allFinite()) return diverge(1, k + 1);
      record(1, k + 1, z);
    }

    if (stage2_ != nullptr && config_.stage2_steps > 0) {
      const double dt2 = config_.stage2_dt;
      VectorXd gz = stage2_->grad(z);
      for (int k = 0; k < config_.stage2_steps; ++k) {
        if (!gz.allFinite()) return diverge(2, k);
        const VectorXd proposal = ula_propose(z, gz, dt2, draw_normal(d, rng, normal));
        if (!proposal.allFinite()) return diverge(2, k + 1);
        VectorXd gp = stage2_->grad(proposal);
        if (config_.use_mh) {
          ++out.proposed;
          const double log_u = std::log(uniform(rng));
          const double log_acc =
              stage2_->log_density_diff(proposal, z) + proposal_log_ratio(z, gz, proposal, gp, dt2);
          if (log_acc > log_u) {
            ++out.accepted;
            z = proposal;
            gz = std::move(gp);
          }
        } else {
          z = proposal;
          gz = std::move(gp);
        }
        record(2, k + 1, z);
      }
    }
    out.state = z;
    return out;
  }

 private:
  const DiffusionModel& model_;
  const std::vector<Expert>& objectives_;
  const SamplerConfig& config_;
  const LangevinTarget* stage2_;
};

std::vector<ChainOutcome> run_chains(const DiffusionModel& model, const std::vector<Expert>& objectives,
                                     const SamplerConfig& config, const LangevinTarget* stage2) {
  std::vector<ChainOutcome> outcomes(config.num_chains);
  ChainRunner runner(model, objectives, config, stage2);
  parallel_for(config.num_chains, config.threads, [&](int c) { outcomes[c] = runner.run(c); });
  return outcomes;
}

}  // namespace

VectorXd ula_propose(const VectorXd& x, const VectorXd& grad, double dt, const VectorXd& noise) {
  if (!(dt > 0)) throw std::invalid_argument("ula: dt must be positive");
  if (grad.size() != x.size() || noise.size() != x.size()) throw std::invalid_argument("ula: dimension mismatch");
  return x + grad * dt + std::sqrt(2.0 * dt) * noise;
}

VectorXd ula_step(const LangevinTarget& target, const VectorXd& x, double dt, Rng& rng) {
  const VectorXd g = target.grad(x);
  if (!g.allFinite()) throw NumericalError("ula_step: non-finite gradient");
  std::normal_distribution<double> normal(0.0, 1.0);
  return ula_propose(x, g, dt, draw_normal(x.size(), rng, normal));
}

double mala_log_acceptance(const LangevinTarget& target, const VectorXd& x, const VectorXd& proposal, double dt) {
  if (!target.has_log_density()) throw std::invalid_argument("MH requires every expert to expose a log density");
  const VectorXd gx = target.grad(x);
  const VectorXd gp = target.grad(proposal);
  return target.log_density_diff(proposal, x) + proposal_log_ratio(x, gx, proposal, gp, dt);
}

MalaStep mala_step(const LangevinTarget& target, const VectorXd& x, double dt, Rng& rng) {
  if (!target.has_log_density()) throw std::invalid_argument("MH requires every expert to expose a log density");
  const VectorXd proposal = ula_step(target, x, dt, rng);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double log_u = std::log(uniform(rng));
  if (mala_log_acceptance(target, x, proposal, dt) > log_u) return {proposal, true};
  return {x, false};
}

StageOneResult stage1_run(const DiffusionModel& model, const std::vector<Expert>& objectives,
                          const SamplerConfig& config) {
  model.validate();
  config.validate(model.schedule.horizon);
  check_objectives(objectives);
  StageOneResult result;
  for (auto& o : run_chains(model, objectives, config, nullptr)) {
    result.states.push_back(std::move(o.state));
    std::move(o.trajectory.begin(), o.trajectory.end(), std::back_inserter(result.trajectory));
    if (o.diverged) result.diagnostics.push_back(std::move(o.diagnostic));
  }
  return result;
}

SampleSet sample(const DiffusionModel& model, const std::vector<Expert>& objectives, const SamplerConfig& config) {
  model.validate();
  config.validate(model.schedule.horizon);
  check_objectives(objectives);
  if (config.use_mh && model.mode != ScoreMode::energy) {
    throw std::invalid_argument("MH requires energy model");
  }
  const LangevinTarget stage2(stage2_experts(model, objectives, config.stage2_beta), model.transform);
  if (config.use_mh && !stage2.has_log_density()) {
    throw std::invalid_argument("MH requires every expert to expose a log density");
  }

  SampleSet set;
  set.config = config;
  long proposed = 0;
  long accepted = 0;
  for (auto& o : run_chains(model, objectives, config, &stage2)) {
    if (o.diverged) {
      ++set.num_diverged;
      set.diagnostics.push_back(std::move(o.diagnostic));
      set.final_points.push_back(o.state);
    } else {
      set.final_points.push_back(model.transform.inverse(o.state));
    }
    std::move(o.trajectory.begin(), o.trajectory.end(), std::back_inserter(set.trajectory));
    proposed += o.proposed;
    accepted += o.accepted;
  }
  if (config.use_mh && proposed > 0) {
    set.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  }
  return set;
}

LangevinRun run_langevin(const LangevinTarget& target, const std::vector<VectorXd>& init, double dt, int burn_in,
                         int num_kept, int keep_every, bool use_mh, std::uint64_t seed, int threads) {
  if (use_mh && !target.has_log_density()) {
    throw std::invalid_argument("MH requires every expert to expose a log density");
  }
  if (burn_in < 0 || num_kept < 0 || keep_every < 1) throw std::invalid_argument("run_langevin: bad step counts");
  const int chains = static_cast<int>(init.size());
  std::vector<std::vector<VectorXd>> kept(chains);
  std::vector<long> acc(chains, 0);
  parallel_for(chains, threads, [&](int c) {
    Rng rng = chain_rng(seed, static_cast<std::uint64_t>(c));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    VectorXd x = init[c];
    VectorXd gx = target.grad(x);
    const int total = burn_in + num_kept * keep_every;
    for (int k = 0; k < total; ++k) {
      const VectorXd proposal = ula_propose(x, gx, dt, draw_normal(x.size(), rng, normal));
      VectorXd gp = target.grad(proposal);
      bool take = true;
      if (use_mh) {
        const double log_u = std::log(uniform(rng));
        take = target.log_density_diff(proposal, x) + proposal_log_ratio(x, gx, proposal, gp, dt) > log_u;
      }
      if (take) {
        x = proposal;
        gx = std::move(gp);
      }
      if (k >= burn_in) {
        if (take) ++acc[c];
        if ((k - burn_in + 1) % keep_every == 0) kept[c].push_back(x);
      }
    }
  });
  LangevinRun run;
  long total_acc = 0;
  for (int c = 0; c < chains; ++c) {
    std::move(kept[c].begin(), kept[c].end(), std::back_inserter(run.samples));
    total_acc += acc[c];
  }
  const long post = static_cast<long>(chains) * num_kept * keep_every;
  run.acceptance_rate = post > 0 ? static_cast<double>(total_acc) / static_cast<double>(post) : 1.0;
  return run;
}

}  // namespace diffopt
