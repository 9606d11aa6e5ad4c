// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

// Two-stage sampler for product-of-experts targets.
//
// Stage I integrates the reverse-time VP SDE with an annealed objective
// guidance term (Euler-Maruyama). Stage II runs unadjusted or
// Metropolis-adjusted Langevin dynamics on prior x objectives. Both stages
// live in the prior's standardized coordinates; raw-space expert gradients
// are chain-ruled in through the diagonal transform.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "diffopt/experts.hpp"

namespace diffopt {

using Rng = std::mt19937_64;

/// Independent stream for one chain.
Rng chain_rng(std::uint64_t seed, std::uint64_t chain);

/// Inverse temperature as a function of diffusion time tau (tau runs from T
/// down to 0 during Stage I).
struct BetaSchedule {
  enum class Kind { constant, linear, exponential, reciprocal };
  Kind kind = Kind::constant;
  double beta_max = 0.0;
  double rate = 100.0;  // exponential
  double beta0 = 1.0;   // reciprocal

  void validate() const;
  bool operator==(const BetaSchedule&) const = default;
};

double beta_at(const BetaSchedule& schedule, double tau, double horizon);

struct SamplerConfig {
  int stage1_steps = 1000;
  double stage1_dt = 1e-3;
  int stage2_steps = 0;
  double stage2_dt = 1e-4;
  double stage2_beta = 5.0;
  BetaSchedule schedule{BetaSchedule::Kind::constant, 5.0};
  bool use_mh = false;
  int num_chains = 500;
  std::uint64_t seed = 0;
  int record_every = 0;     // 0 keeps final states only
  double grad_clip = 1e3;   // Stage I guidance norm ceiling, standardized units
  bool inject_noise = true; // false drops the Brownian term in Stage I
  int threads = 1;          // 0 = hardware concurrency

  void validate(double horizon) const;
  bool operator==(const SamplerConfig&) const = default;
};

/// The Langevin target in the working coordinates z of `transform`
/// (x = mean + std * z). Experts are evaluated in raw space; a prior whose
/// transform matches is evaluated directly in z.
class LangevinTarget {
 public:
  LangevinTarget(std::vector<Expert> experts, StandardizeTransform transform);
  /// Identity coordinates of dimension `dim`.
  LangevinTarget(std::vector<Expert> experts, Eigen::Index dim);

  VectorXd grad(const VectorXd& z) const;
  double log_density_diff(const VectorXd& to, const VectorXd& from) const;
  bool has_log_density() const;

  const StandardizeTransform& transform() const { return transform_; }
  const std::vector<Expert>& experts() const { return experts_; }
  Eigen::Index dim() const { return transform_.dim(); }

 private:
  bool native_prior(const Expert& e) const;

  std::vector<Expert> experts_;
  StandardizeTransform transform_;
};

/// x + grad * dt + sqrt(2 dt) * noise.
VectorXd ula_propose(const VectorXd& x, const VectorXd& grad, double dt, const VectorXd& noise);
VectorXd ula_step(const LangevinTarget& target, const VectorXd& x, double dt, Rng& rng);

/// Log Metropolis-Hastings ratio for moving x -> proposal under the
/// Langevin proposal N(x + dt grad(x), 2 dt I).
double mala_log_acceptance(const LangevinTarget& target, const VectorXd& x, const VectorXd& proposal, double dt);

struct MalaStep {
  VectorXd x;
  bool accepted;
};
MalaStep mala_step(const LangevinTarget& target, const VectorXd& x, double dt, Rng& rng);

struct TrajectoryPoint {
  int chain;
  int step;
  int stage;  // 1 or 2
  VectorXd x; // raw space
};

struct StageOneResult {
  std::vector<VectorXd> states;  // standardized; NaN when diverged
  std::vector<TrajectoryPoint> trajectory;
  std::vector<std::string> diagnostics;
};

struct SampleSet {
  std::vector<VectorXd> final_points;  // raw space; NaN rows for diverged chains
  std::vector<TrajectoryPoint> trajectory;
  std::optional<double> acceptance_rate;
  int num_diverged = 0;
  std::vector<std::string> diagnostics;
  SamplerConfig config;
};

/// Stage I only. `objectives` must not contain a prior expert.
StageOneResult stage1_run(const DiffusionModel& model, const std::vector<Expert>& objectives,
                          const SamplerConfig& config);

/// Stage I then Stage II. Boltzmann experts use the annealed beta in Stage I
/// and `stage2_beta` in Stage II; other experts keep their own weights.
SampleSet sample(const DiffusionModel& model, const std::vector<Expert>& objectives, const SamplerConfig& config);

/// Multi-chain Langevin on an arbitrary target, chains started at `init`.
/// Used for the analytic calibration targets; returns every `keep_every`-th
/// state after `burn_in` steps.
struct LangevinRun {
  std::vector<VectorXd> samples;
  double acceptance_rate = 1.0;
};
LangevinRun run_langevin(const LangevinTarget& target, const std::vector<VectorXd>& init, double dt, int burn_in,
                         int num_kept, int keep_every, bool use_mh, std::uint64_t seed, int threads = 1);

}  // namespace diffopt
