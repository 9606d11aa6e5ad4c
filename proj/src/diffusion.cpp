// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffopt/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace diffopt {

void NoiseSchedule::validate() const {
  if (!(noise_min > 0) || !(noise_max > 0)) throw std::invalid_argument("noise bounds must be positive");
  if (!(noise_min < noise_max)) throw std::invalid_argument("noise_min must be below noise_max");
  if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
}

double NoiseSchedule::diffusion(double t) const { return std::sqrt(beta(t)); }

VpCoeffs vp_coeffs(const NoiseSchedule& schedule, double t) {
  if (!(t >= 0.0 && t <= schedule.horizon)) {
    throw std::invalid_argument("vp_coeffs: t=" + std::to_string(t) + " outside [0, T]");
  }
  const double log_alpha = -0.25 * t * t * (schedule.noise_max - schedule.noise_min) / schedule.horizon -
                           0.5 * t * schedule.noise_min;
  const double alpha = std::exp(log_alpha);
  // 1 - alpha^2 = -expm1(2 log_alpha) keeps sigma accurate for small t.
  return {alpha, std::sqrt(-std::expm1(2.0 * log_alpha))};
}

VectorXd perturb(const VectorXd& x0, double t, const VectorXd& eps, const NoiseSchedule& schedule) {
  if (x0.size() != eps.size()) throw std::invalid_argument("perturb: dimension mismatch");
  const auto [alpha, sigma] = vp_coeffs(schedule, t);
  return alpha * x0 + sigma * eps;
}

StandardizeTransform StandardizeTransform::identity(Eigen::Index dim) {
  return {VectorXd::Zero(dim), VectorXd::Ones(dim)};
}

StandardizeTransform StandardizeTransform::fit(const std::vector<VectorXd>& data) {
  if (data.empty()) throw std::invalid_argument("cannot fit a transform to an empty dataset");
  const auto d = data.front().size();
  VectorXd mean = VectorXd::Zero(d);
  for (const auto& x : data) {
    if (x.size() != d) throw std::invalid_argument("dataset vectors differ in dimension");
    mean += x;
  }
  mean /= static_cast<double>(data.size());
  VectorXd var = VectorXd::Zero(d);
  for (const auto& x : data) var += (x - mean).cwiseAbs2();
  var /= static_cast<double>(data.size());
  return {mean, var.cwiseSqrt().cwiseMax(kMinStd)};
}

VectorXd StandardizeTransform::forward(const VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("transform: dimension mismatch");
  return (x - mean).cwiseQuotient(std);
}

VectorXd StandardizeTransform::inverse(const VectorXd& z) const {
  if (z.size() != dim()) throw std::invalid_argument("transform: dimension mismatch");
  return mean + z.cwiseProduct(std);
}

MatrixXd StandardizeTransform::forward_batch(const MatrixXd& x) const {
  if (x.rows() != dim()) throw std::invalid_argument("transform: dimension mismatch");
  return (x.colwise() - mean).array().colwise() / std.array();
}

void DiffusionModel::validate() const {
  spec.validate();
  schedule.validate();
  if (spec.output_width() != spec.data_width()) {
    throw std::invalid_argument("diffusion network output width must equal the data dimension");
  }
  if (spec.time_input.kind == TimeInput::Kind::none) {
    throw std::invalid_argument("diffusion network needs a time input");
  }
  if (params.size() != ParamSet<double>(spec).size()) throw std::invalid_argument("params do not match spec");
  if (transform.dim() != dim()) throw std::invalid_argument("transform dimension mismatch");
  if (!(t_min > 0 && t_min < schedule.horizon)) throw std::invalid_argument("t_min must lie in (0, T)");
}

double DiffusionModel::clamp_time(double t) const {
  if (!(t >= 0.0 && t <= schedule.horizon)) {
    throw std::invalid_argument("time " + std::to_string(t) + " outside [0, T]");
  }
  return std::max(t, t_min);
}

double DiffusionModel::output_scale(double t) const {
  if (scaling == OutputScaling::none) return 1.0;
  return 1.0 / vp_coeffs(schedule, t).sigma;
}

namespace {

VectorXd network_times(const DiffusionModel& model, const VectorXd& times) {
  return times / model.schedule.horizon;
}

}  // namespace

MatrixXd score_batch(const DiffusionModel& model, const MatrixXd& x, const VectorXd& times) {
  if (x.rows() != model.dim()) throw std::invalid_argument("score: dimension mismatch");
  if (times.size() != x.cols()) throw std::invalid_argument("score: times/batch mismatch");
  VectorXd t(times.size());
  VectorXd scale(times.size());
  for (Eigen::Index j = 0; j < times.size(); ++j) {
    t[j] = model.clamp_time(times[j]);
    scale[j] = model.output_scale(t[j]);
  }
  const VectorXd nt = network_times(model, t);
  auto tape = mlp_forward<double>(model.params, model.spec, x, &nt);
  if (model.mode == ScoreMode::score) {
    return tape.output() * scale.asDiagonal();
  }
  // grad_x of -1/2 c |NN|^2 is -c J^T NN.
  auto g = mlp_backward<double>(model.params, model.spec, tape, tape.output());
  return -(g.input * scale.asDiagonal());
}

VectorXd score_at(const DiffusionModel& model, const VectorXd& x, double t) {
  return score_batch(model, x, VectorXd::Constant(1, t)).col(0);
}

double energy_at(const DiffusionModel& model, const VectorXd& x, double t) {
  if (model.mode != ScoreMode::energy) throw EnergyUnavailable();
  if (x.size() != model.dim()) throw std::invalid_argument("energy: dimension mismatch");
  const double tc = model.clamp_time(t);
  const VectorXd nn = mlp_apply<double>(model.params, model.spec, x, tc / model.schedule.horizon);
  return -0.5 * model.output_scale(tc) * nn.squaredNorm();
}

LossAndGrads dsm_loss_and_grads(const DiffusionModel& model, const MatrixXd& x0, const VectorXd& times,
                                const MatrixXd& eps) {
  const auto n = x0.cols();
  if (x0.rows() != model.dim() || eps.rows() != x0.rows() || eps.cols() != n || times.size() != n) {
    throw std::invalid_argument("dsm_loss_and_grads: shape mismatch");
  }
  if (n == 0) throw std::invalid_argument("dsm_loss_and_grads: empty batch");
  VectorXd alpha(n), sigma(n), scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (times[j] < model.t_min) {
      throw std::invalid_argument("dsm_loss_and_grads: time below t_min");
    }
    const auto c = vp_coeffs(model.schedule, times[j]);
    alpha[j] = c.alpha;
    sigma[j] = c.sigma;
    scale[j] = model.output_scale(times[j]);
  }
  const MatrixXd xt = x0 * alpha.asDiagonal() + eps * sigma.asDiagonal();
  const VectorXd nt = network_times(model, times);
  auto tape = mlp_forward<double>(model.params, model.spec, xt, &nt);

  MatrixXd score;
  MlpGrads<double> input_pass;
  if (model.mode == ScoreMode::score) {
    score = tape.output() * scale.asDiagonal();
  } else {
    input_pass = mlp_backward<double>(model.params, model.spec, tape, tape.output());
    score = -(input_pass.input * scale.asDiagonal());
  }

  const MatrixXd residual = score * sigma.asDiagonal() + eps;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double loss = residual.squaredNorm() * inv_n;
  // d loss / d score, column j: 2 sigma_j r_j / n; folded with the output scale.
  const VectorXd col_factor = (2.0 * inv_n) * sigma.cwiseProduct(scale);
  const MatrixXd adj = residual * col_factor.asDiagonal();

  if (model.mode == ScoreMode::score) {
    auto g = mlp_backward<double>(model.params, model.spec, tape, adj);
    return {loss, std::move(g.params)};
  }
  // <adj, -J^T NN> = -<J adj, NN>: differentiate the tangent-carrying pass.
  auto tt = mlp_forward_tangent<double>(model.params, model.spec, xt, &nt, adj);
  auto g = mlp_backward_tangent<double>(model.params, model.spec, tt, tt.tangent(), tt.output());
  g.flat() = -g.flat();
  return {loss, std::move(g)};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (!(learning_rate >= 0)) throw std::invalid_argument("learning_rate must be non-negative");
  if (!(t_min > 0)) throw std::invalid_argument("t_min must be positive");
}

TrainResult train_score(const std::vector<VectorXd>& dataset, const MlpSpec& spec, const NoiseSchedule& schedule,
                        ScoreMode mode, const TrainConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("train_score: empty dataset");
  config.validate();
  if (static_cast<int>(dataset.size()) < config.batch_size) {
    throw std::invalid_argument("train_score: dataset smaller than batch_size");
  }

  DiffusionModel model;
  model.spec = spec;
  model.schedule = schedule;
  model.mode = mode;
  model.transform = StandardizeTransform::fit(dataset);
  model.t_min = config.t_min;
  model.scaling = config.scaling;
  model.params = mlp_init(spec, config.seed);
  model.validate();

  const auto d = model.dim();
  const auto n = static_cast<Eigen::Index>(dataset.size());
  MatrixXd data(d, n);
  for (Eigen::Index j = 0; j < n; ++j) data.col(j) = model.transform.forward(dataset[j]);

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(model.t_min, schedule.horizon);
  AdamState adam = AdamState::fresh(model.params.size(), config.learning_rate);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  result.loss_history.reserve(config.epochs);
  MatrixXd batch, eps;
  VectorXd times;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const auto m = std::min<Eigen::Index>(config.batch_size, n - start);
      batch.resize(d, m);
      eps.resize(d, m);
      times.resize(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        batch.col(j) = data.col(order[start + j]);
        times[j] = uniform(rng);
        for (Eigen::Index i = 0; i < d; ++i) eps(i, j) = normal(rng);
      }
      auto [loss, grads] = dsm_loss_and_grads(model, batch, times, eps);
      if (!std::isfinite(loss) || !grads.flat().allFinite()) {
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      }
      adam_step(model.params.flat(), grads.flat(), adam);
      epoch_loss += loss;
      ++batches;
    }
    result.loss_history.push_back(epoch_loss / batches);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace diffopt
