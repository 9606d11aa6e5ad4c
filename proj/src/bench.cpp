// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffopt/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace diffopt {

bool in_ellipse(const VectorXd& x, const EllipseRegion& region) {
  if (x.size() != 2) throw std::invalid_argument("in_ellipse: expected a 2-vector");
  if (!x.allFinite()) return false;
  const double th = region.tilt_deg * std::numbers::pi / 180.0;
  const double dx = x[0] - region.center[0];
  const double dy = x[1] - region.center[1];
  // Rotate by -tilt into the ellipse frame.
  const double u = std::cos(th) * dx + std::sin(th) * dy;
  const double v = -std::sin(th) * dx + std::cos(th) * dy;
  const double a = u / region.semi_axes[0];
  const double b = v / region.semi_axes[1];
  return a * a + b * b <= 1.0;
}

std::vector<VectorXd> gen_ellipse_dataset(int n, std::uint64_t seed, const EllipseRegion& region) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  const double th = region.tilt_deg * std::numbers::pi / 180.0;
  const double a = region.semi_axes[0];
  const double b = region.semi_axes[1];
  const double half_w = std::hypot(a * std::cos(th), b * std::sin(th));
  const double half_h = std::hypot(a * std::sin(th), b * std::cos(th));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(region.center[0] - half_w, region.center[0] + half_w);
  std::uniform_real_distribution<double> uy(region.center[1] - half_h, region.center[1] + half_h);
  std::vector<VectorXd> out;
  out.reserve(n);
  VectorXd p(2);
  while (static_cast<int>(out.size()) < n) {
    p[0] = ux(rng);
    p[1] = uy(rng);
    if (in_ellipse(p, region)) out.push_back(p);
  }
  return out;
}

const std::vector<VectorXd>& branin_minimizers() {
  static const std::vector<VectorXd> m = {
      (VectorXd(2) << -std::numbers::pi, 12.275).finished(),
      (VectorXd(2) << std::numbers::pi, 2.275).finished(),
      (VectorXd(2) << 9.42478, 2.475).finished(),
  };
  return m;
}

std::vector<Halfspace> branin_known_constraints() {
  return {
      {(VectorXd(2) << -1.5, 1.0).finished(), 7.5},
      {(VectorXd(2) << 1.5, 1.0).finished(), 15.0},
  };
}

bool satisfies(const std::vector<Halfspace>& halfspaces, const VectorXd& x) {
  if (!x.allFinite()) return false;
  return std::all_of(halfspaces.begin(), halfspaces.end(),
                     [&](const Halfspace& h) { return h.normal.dot(x) <= h.offset; });
}

MetricsReport compute_metrics(const std::vector<VectorXd>& samples, const Objective& objective,
                              const std::function<bool(const VectorXd&)>& feasible,
                              const std::vector<VectorXd>& minimizers, int topk, double mode_radius) {
  if (samples.empty()) throw std::invalid_argument("compute_metrics: no samples");
  if (topk < 1) throw std::invalid_argument("compute_metrics: topk must be positive");
  MetricsReport r;
  r.num_samples = static_cast<int>(samples.size());
  r.topk = topk;
  r.mode_counts.assign(minimizers.size(), 0);
  std::vector<double> values;
  for (const auto& x : samples) {
    const bool finite = x.allFinite();
    if (finite) ++r.num_valid;
    if (!finite || !feasible(x)) {
      ++r.infeasible_count;
      continue;
    }
    values.push_back(objective_value(objective, x));
    std::size_t nearest = minimizers.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < minimizers.size(); ++i) {
      const double dist = (x - minimizers[i]).norm();
      if (dist < best_d) {
        best_d = dist;
        nearest = i;
      }
    }
    if (nearest < minimizers.size() && best_d <= mode_radius) {
      ++r.mode_counts[nearest];
    } else {
      ++r.other_count;
    }
  }
  r.num_feasible = static_cast<int>(values.size());
  r.feasibility_rate = static_cast<double>(r.num_feasible) / static_cast<double>(r.num_samples);
  if (!values.empty()) {
    std::sort(values.begin(), values.end());
    r.best_feasible_value = values.front();
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(topk), values.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += values[i];
    r.topk_mean = acc / static_cast<double>(k);
  }
  return r;
}

MatrixXd hessian_fd(const std::function<double(const VectorXd&)>& h, const VectorXd& x, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("hessian_fd: eps must be positive");
  const auto d = x.size();
  MatrixXd H(d, d);
  VectorXd p = x;
  const double f0 = h(x);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      double v;
      if (i == j) {
        p[i] = x[i] + eps;
        const double up = h(p);
        p[i] = x[i] - eps;
        const double down = h(p);
        p[i] = x[i];
        v = (up - 2.0 * f0 + down) / (eps * eps);
      } else {
        auto at = [&](double si, double sj) {
          p[i] = x[i] + si * eps;
          p[j] = x[j] + sj * eps;
          const double f = h(p);
          p[i] = x[i];
          p[j] = x[j];
          return f;
        };
        v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * eps * eps);
      }
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  if (!H.allFinite()) throw NumericalError("hessian_fd: non-finite entries");
  return H;
}

MatrixXd RegularLattice::points() const {
  const auto d = dim();
  if (static_cast<Eigen::Index>(counts.size()) != d || upper.size() != d) {
    throw std::invalid_argument("lattice: inconsistent dimensions");
  }
  Eigen::Index total = 1;
  for (int c : counts) {
    if (c < 1) throw std::invalid_argument("lattice: counts must be positive");
    total *= c;
  }
  MatrixXd pts(d, total);
  for (Eigen::Index k = 0; k < total; ++k) {
    Eigen::Index rem = k;
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::Index idx = rem % counts[i];
      rem /= counts[i];
      const double step = (upper[i] - lower[i]) / counts[i];
      pts(i, k) = lower[i] + (static_cast<double>(idx) + 0.5) * step;
    }
  }
  return pts;
}

double RegularLattice::cell_volume() const {
  double v = 1.0;
  for (Eigen::Index i = 0; i < dim(); ++i) v *= (upper[i] - lower[i]) / counts[i];
  return v;
}

OracleResult lattice_mode_oracle(const std::function<double(const VectorXd&)>& h,
                                const std::function<double(const VectorXd&)>& log_p, const RegularLattice& lattice,
                                double beta, const std::vector<VectorXd>& minimizers, double radius) {
  if (!(beta >= 0)) throw std::invalid_argument("grid oracle: beta must be non-negative");
  const MatrixXd pts = lattice.points();
  const auto m = pts.cols();
  VectorXd logw(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const VectorXd x = pts.col(k);
    logw[k] = log_p(x) - beta * h(x);
  }
  const double top = logw.maxCoeff();
  if (!std::isfinite(top)) {
    throw NumericalError("grid oracle: density vanishes on the whole lattice; accumulate in the log domain");
  }
  OracleResult r;
  r.probabilities = (logw.array() - top).exp();
  const double total = r.probabilities.sum();
  if (!(total > 0) || !std::isfinite(total)) {
    throw NumericalError("grid oracle: zero total mass; accumulate in the log domain");
  }
  r.probabilities /= total;

  double weight_sum = 0.0;
  for (const auto& xs : minimizers) {
    double mass = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if ((pts.col(k) - xs).norm() <= radius) mass += r.probabilities[k];
    }
    r.masses.push_back(mass);
    const double det = hessian_fd(h, xs).determinant();
    if (!(det > 0)) throw NumericalError("grid oracle: Hessian at a minimizer is not positive definite");
    const double a = std::exp(log_p(xs)) / std::sqrt(det);
    r.laplace_weights.push_back(a);
    weight_sum += a;
  }
  for (double a : r.laplace_weights) r.predicted.push_back(a / weight_sum);
  return r;
}

DoubleWellReport double_well_oracle(const DoubleWellCase& c, double beta) {
  const auto h = [](const VectorXd& x) {
    const double u = x[0] * x[0] - 1.0;
    return u * u;
  };
  const double tilt = c.tilt;
  const auto log_p = [tilt](const VectorXd& x) { return tilt * x[0]; };
  RegularLattice lattice{VectorXd::Constant(1, -2.0), VectorXd::Constant(1, 2.0), {c.cells}};
  const std::vector<VectorXd> minima = {VectorXd::Constant(1, 1.0), VectorXd::Constant(1, -1.0)};
  const auto r = lattice_mode_oracle(h, log_p, lattice, beta, minima, c.radius);
  const auto r0 = lattice_mode_oracle(h, log_p, lattice, 0.0, minima, c.radius);
  return {beta, r.masses[0] / r.masses[1], r.laplace_weights[0] / r.laplace_weights[1],
          r0.masses[0] / r0.masses[1]};
}

}  // namespace diffopt
