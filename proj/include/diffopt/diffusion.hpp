// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

// Variance-preserving diffusion: noise schedule, denoising score matching for
// score- and energy-parameterized networks, and score/energy evaluation.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "diffopt/ndmath.hpp"

namespace diffopt {

/// Linear VP schedule: beta(t) = noise_min + (t / horizon) (noise_max - noise_min).
struct NoiseSchedule {
  double noise_min = 0.01;
  double noise_max = 2.0;
  double horizon = 1.0;

  void validate() const;
  double beta(double t) const { return noise_min + (t / horizon) * (noise_max - noise_min); }
  /// Forward drift coefficient: f(x, t) = drift_coeff(t) * x.
  double drift_coeff(double t) const { return -0.5 * beta(t); }
  double diffusion(double t) const;

  bool operator==(const NoiseSchedule&) const = default;
};

struct VpCoeffs {
  double alpha;
  double sigma;
};

/// Marginal x_t = alpha_t x_0 + sigma_t eps.
VpCoeffs vp_coeffs(const NoiseSchedule& schedule, double t);

VectorXd perturb(const VectorXd& x0, double t, const VectorXd& eps, const NoiseSchedule& schedule);

/// Per-dimension affine map to zero mean / unit variance.
struct StandardizeTransform {
  VectorXd mean;
  VectorXd std;

  static constexpr double kMinStd = 1e-8;

  static StandardizeTransform identity(Eigen::Index dim);
  static StandardizeTransform fit(const std::vector<VectorXd>& data);

  Eigen::Index dim() const { return mean.size(); }
  VectorXd forward(const VectorXd& x) const;
  VectorXd inverse(const VectorXd& z) const;
  MatrixXd forward_batch(const MatrixXd& x) const;
};

enum class ScoreMode { score, energy };

/// Optional time-dependent output scale c(t): the model score is c(t) times
/// the raw parameterization. inv_sigma uses c(t) = 1 / sigma_t.
enum class OutputScaling { none, inv_sigma };

class EnergyUnavailable : public std::logic_error {
 public:
  EnergyUnavailable() : std::logic_error("energy unavailable: model uses score parameterization") {}
};

/// A trained (or freshly initialized) score / energy network. Works in
/// standardized coordinates; `transform` maps raw data there.
struct DiffusionModel {
  MlpSpec spec;
  ParamSet<double> params;
  NoiseSchedule schedule;
  ScoreMode mode = ScoreMode::score;
  StandardizeTransform transform;
  double t_min = 1e-3;
  OutputScaling scaling = OutputScaling::none;

  Eigen::Index dim() const { return spec.data_width(); }
  void validate() const;
  double output_scale(double t) const;
  double clamp_time(double t) const;
};

/// Score in standardized space, t clamped to >= t_min.
VectorXd score_at(const DiffusionModel& model, const VectorXd& x, double t);
/// Column batch version; one time per column.
MatrixXd score_batch(const DiffusionModel& model, const MatrixXd& x, const VectorXd& times);

/// E(x, t) = -1/2 c(t) |NN(x, t)|^2. Throws EnergyUnavailable in score mode.
double energy_at(const DiffusionModel& model, const VectorXd& x, double t);

struct LossAndGrads {
  double loss;
  ParamSet<double> grads;
};

/// Mean over the batch of sigma_t^2 |s(x_t, t) + eps / sigma_t|^2 with
/// x_t = alpha_t x0 + sigma_t eps. Columns of `x0` and `eps` are samples.
LossAndGrads dsm_loss_and_grads(const DiffusionModel& model, const MatrixXd& x0, const VectorXd& times,
                                const MatrixXd& eps);

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double t_min = 1e-3;
  OutputScaling scaling = OutputScaling::none;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  DiffusionModel model;
  std::vector<double> loss_history;  // mean loss per epoch
};

TrainResult train_score(const std::vector<VectorXd>& dataset, const MlpSpec& spec, const NoiseSchedule& schedule,
                        ScoreMode mode, const TrainConfig& config);

}  // namespace diffopt
