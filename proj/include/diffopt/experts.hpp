// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

// Objectives and "experts": the factors of an unnormalized product density
//   pi(x) ∝ p(x) ∏_i exp(-beta_i h_i(x)) × penalties.
// Every expert exposes a log-density gradient in raw coordinates; most also
// expose the log-density value.

#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "diffopt/diffusion.hpp"

namespace diffopt {

/// Branin-Hoo function on R^2.
struct Branin {};

/// scale * 1/2 |x - center|^2.
struct Quadratic {
  VectorXd center;
  double scale = 1.0;
};

/// A trained regressor h(x) = y_mean + y_std * NN((x - mean) / std).
struct Surrogate {
  MlpSpec spec;
  ParamSet<double> params;
  StandardizeTransform x_transform;
  double y_mean = 0.0;
  double y_std = 1.0;
};

struct Objective {
  std::variant<Branin, Quadratic, Surrogate> kind;
  double offset = 0.0;  // added to the value; never to the gradient

  static Objective branin() { return {Branin{}, 0.0}; }
  static Objective quadratic(VectorXd center, double scale = 1.0) {
    return {Quadratic{std::move(center), scale}, 0.0};
  }
};

std::pair<double, VectorXd> branin_eval_grad(const VectorXd& x);

double objective_value(const Objective& h, const VectorXd& x);
VectorXd objective_grad(const Objective& h, const VectorXd& x);

/// Constraint normal . x <= offset.
struct Halfspace {
  VectorXd normal;
  double offset = 0.0;
};

struct PriorExpert {
  std::shared_ptr<const DiffusionModel> model;
};

/// Analytic N(0, variance * I) prior, for calibrating samplers.
struct GaussianExpert {
  double variance = 1.0;
};

struct BoltzmannExpert {
  Objective objective;
  double beta = 1.0;
};

/// Squared-hinge penalty: log q = -beta' sum_j max(0, a_j.x - b_j)^2 / 2.
struct HingeExpert {
  std::vector<Halfspace> halfspaces;
  double beta_prime = 10.0;
};

using Expert = std::variant<PriorExpert, GaussianExpert, BoltzmannExpert, HingeExpert>;

bool has_log_density(const Expert& e);
bool is_prior(const Expert& e);

VectorXd expert_grad(const Expert& e, const VectorXd& x);
double expert_log_density(const Expert& e, const VectorXd& x);
/// log q(to) - log q(from), with constant offsets cancelled exactly.
double expert_log_density_diff(const Expert& e, const VectorXd& to, const VectorXd& from);

VectorXd product_grad(std::span<const Expert> experts, const VectorXd& x);
double product_log_density(std::span<const Expert> experts, const VectorXd& x);
double product_log_density_diff(std::span<const Expert> experts, const VectorXd& to, const VectorXd& from);

struct SurrogateFit {
  Objective objective;
  std::vector<double> loss_history;
};

/// Mean-squared-error regression in standardized x and y coordinates.
SurrogateFit surrogate_train(const std::vector<VectorXd>& xs, const std::vector<double>& ys, const MlpSpec& spec,
                             const TrainConfig& config);

}  // namespace diffopt
