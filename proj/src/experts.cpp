// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffopt/experts.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace diffopt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kPi = std::numbers::pi;

void check_dim(const VectorXd& x, Eigen::Index d, const char* what) {
  if (x.size() != d) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(d) + ", got " +
                                std::to_string(x.size()));
  }
}

double surrogate_raw(const Surrogate& s, const VectorXd& x) {
  const VectorXd z = s.x_transform.forward(x);
  return s.y_mean + s.y_std * mlp_apply<double>(s.params, s.spec, z)[0];
}

VectorXd surrogate_grad(const Surrogate& s, const VectorXd& x) {
  const VectorXd z = s.x_transform.forward(x);
  auto [pg, ig] = mlp_backprop<double>(s.params, s.spec, z, std::nullopt, VectorXd::Ones(1));
  return s.y_std * ig.cwiseQuotient(s.x_transform.std);
}

// Objective value without its constant offset.
double base_value(const Objective& h, const VectorXd& x) {
  return std::visit(Overloaded{
                        [&](const Branin&) { return branin_eval_grad(x).first; },
                        [&](const Quadratic& q) {
                          check_dim(x, q.center.size(), "quadratic");
                          return 0.5 * q.scale * (x - q.center).squaredNorm();
                        },
                        [&](const Surrogate& s) { return surrogate_raw(s, x); },
                    },
                    h.kind);
}

double hinge_penalty(const HingeExpert& e, const VectorXd& x) {
  double acc = 0.0;
  for (const auto& hs : e.halfspaces) {
    check_dim(x, hs.normal.size(), "halfspace");
    const double v = std::max(0.0, hs.normal.dot(x) - hs.offset);
    acc += v * v;
  }
  return 0.5 * e.beta_prime * acc;
}

}  // namespace

std::pair<double, VectorXd> branin_eval_grad(const VectorXd& x) {
  check_dim(x, 2, "branin");
  constexpr double a = 1.0;
  const double b = 5.1 / (4.0 * kPi * kPi);
  const double c = 5.0 / kPi;
  constexpr double r = 6.0;
  constexpr double s = 10.0;
  const double t = 1.0 / (8.0 * kPi);
  const double x1 = x[0];
  const double x2 = x[1];
  const double inner = x2 - b * x1 * x1 + c * x1 - r;
  const double value = a * inner * inner + s * (1.0 - t) * std::cos(x1) + s;
  VectorXd grad(2);
  grad[0] = 2.0 * a * inner * (-2.0 * b * x1 + c) - s * (1.0 - t) * std::sin(x1);
  grad[1] = 2.0 * a * inner;
  return {value, grad};
}

double objective_value(const Objective& h, const VectorXd& x) { return base_value(h, x) + h.offset; }

VectorXd objective_grad(const Objective& h, const VectorXd& x) {
  return std::visit(Overloaded{
                        [&](const Branin&) { return branin_eval_grad(x).second; },
                        [&](const Quadratic& q) -> VectorXd {
                          check_dim(x, q.center.size(), "quadratic");
                          return q.scale * (x - q.center);
                        },
                        [&](const Surrogate& s) { return surrogate_grad(s, x); },
                    },
                    h.kind);
}

bool has_log_density(const Expert& e) {
  if (const auto* p = std::get_if<PriorExpert>(&e)) return p->model->mode == ScoreMode::energy;
  return true;
}

bool is_prior(const Expert& e) { return std::holds_alternative<PriorExpert>(e); }

VectorXd expert_grad(const Expert& e, const VectorXd& x) {
  return std::visit(Overloaded{
                        [&](const PriorExpert& p) -> VectorXd {
                          const auto& m = *p.model;
                          check_dim(x, m.dim(), "prior");
                          return score_at(m, m.transform.forward(x), 0.0).cwiseQuotient(m.transform.std);
                        },
                        [&](const GaussianExpert& g) -> VectorXd { return -x / g.variance; },
                        [&](const BoltzmannExpert& b) -> VectorXd { return -b.beta * objective_grad(b.objective, x); },
                        [&](const HingeExpert& h) -> VectorXd {
                          VectorXd g = VectorXd::Zero(x.size());
                          for (const auto& hs : h.halfspaces) {
                            check_dim(x, hs.normal.size(), "halfspace");
                            const double v = hs.normal.dot(x) - hs.offset;
                            if (v > 0) g -= h.beta_prime * v * hs.normal;
                          }
                          return g;
                        },
                    },
                    e);
}

double expert_log_density(const Expert& e, const VectorXd& x) {
  return std::visit(Overloaded{
                        [&](const PriorExpert& p) {
                          const auto& m = *p.model;
                          check_dim(x, m.dim(), "prior");
                          return energy_at(m, m.transform.forward(x), 0.0);
                        },
                        [&](const GaussianExpert& g) { return -0.5 * x.squaredNorm() / g.variance; },
                        [&](const BoltzmannExpert& b) { return -b.beta * objective_value(b.objective, x); },
                        [&](const HingeExpert& h) { return -hinge_penalty(h, x); },
                    },
                    e);
}

double expert_log_density_diff(const Expert& e, const VectorXd& to, const VectorXd& from) {
  if (const auto* b = std::get_if<BoltzmannExpert>(&e)) {
    return -b->beta * (base_value(b->objective, to) - base_value(b->objective, from));
  }
  return expert_log_density(e, to) - expert_log_density(e, from);
}

VectorXd product_grad(std::span<const Expert> experts, const VectorXd& x) {
  if (experts.empty()) throw std::invalid_argument("product_grad: no experts");
  VectorXd g = expert_grad(experts.front(), x);
  for (std::size_t i = 1; i < experts.size(); ++i) {
    VectorXd gi = expert_grad(experts[i], x);
    if (gi.size() != g.size()) throw std::invalid_argument("product_grad: experts disagree on dimension");
    g += gi;
  }
  return g;
}

double product_log_density(std::span<const Expert> experts, const VectorXd& x) {
  if (experts.empty()) throw std::invalid_argument("product_log_density: no experts");
  double acc = 0.0;
  for (const auto& e : experts) acc += expert_log_density(e, x);
  return acc;
}

double product_log_density_diff(std::span<const Expert> experts, const VectorXd& to, const VectorXd& from) {
  double acc = 0.0;
  for (const auto& e : experts) acc += expert_log_density_diff(e, to, from);
  return acc;
}

SurrogateFit surrogate_train(const std::vector<VectorXd>& xs, const std::vector<double>& ys, const MlpSpec& spec,
                             const TrainConfig& config) {
  if (xs.empty()) throw std::invalid_argument("surrogate_train: empty dataset");
  if (xs.size() != ys.size()) throw std::invalid_argument("surrogate_train: x/y count mismatch");
  config.validate();
  if (xs.size() < 2 * static_cast<std::size_t>(config.batch_size)) {
    throw std::invalid_argument("surrogate_train: needs at least 2 * batch_size samples");
  }
  spec.validate();
  if (spec.time_input.kind != TimeInput::Kind::none || spec.output_width() != 1) {
    throw std::invalid_argument("surrogate network must be time-free with a scalar output");
  }

  Surrogate s;
  s.spec = spec;
  s.x_transform = StandardizeTransform::fit(xs);
  if (s.x_transform.dim() != spec.data_width()) throw std::invalid_argument("surrogate: input width mismatch");
  const auto n = static_cast<Eigen::Index>(xs.size());
  const double y_mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
  double y_var = 0.0;
  for (double y : ys) y_var += (y - y_mean) * (y - y_mean);
  s.y_mean = y_mean;
  s.y_std = std::max(std::sqrt(y_var / static_cast<double>(n)), StandardizeTransform::kMinStd);
  s.params = mlp_init(spec, config.seed);

  const auto d = s.x_transform.dim();
  MatrixXd z(d, n);
  VectorXd target(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    z.col(j) = s.x_transform.forward(xs[j]);
    target[j] = (ys[j] - s.y_mean) / s.y_std;
  }

  std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);
  AdamState adam = AdamState::fresh(s.params.size(), config.learning_rate);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  SurrogateFit fit;
  MatrixXd batch;
  MatrixXd y;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const auto m = std::min<Eigen::Index>(config.batch_size, n - start);
      batch.resize(d, m);
      y.resize(1, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        batch.col(j) = z.col(order[start + j]);
        y(0, j) = target[order[start + j]];
      }
      auto tape = mlp_forward<double>(s.params, spec, batch);
      const MatrixXd residual = tape.output() - y;
      const double loss = residual.squaredNorm() / static_cast<double>(m);
      if (!std::isfinite(loss)) {
        throw NumericalError("surrogate training diverged at epoch " + std::to_string(epoch));
      }
      auto g = mlp_backward<double>(s.params, spec, tape, (2.0 / static_cast<double>(m)) * residual);
      adam_step(s.params.flat(), g.params.flat(), adam);
      epoch_loss += loss;
      ++batches;
    }
    fit.loss_history.push_back(epoch_loss / batches);
  }
  fit.objective = Objective{std::move(s), 0.0};
  return fit;
}

}  // namespace diffopt
