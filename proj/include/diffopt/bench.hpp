// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

// The tilted-ellipse Branin benchmark with its metrics. Also a brute-force
// lattice oracle for the low-temperature limit of p(x) exp(-beta h(x)).

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diffopt/experts.hpp"

namespace diffopt {

struct EllipseRegion {
  VectorXd center = (VectorXd(2) << -0.2, 7.5).finished();
  VectorXd semi_axes = (VectorXd(2) << 3.6, 8.0).finished();
  double tilt_deg = 25.0;  // counterclockwise
};

bool in_ellipse(const VectorXd& x, const EllipseRegion& region = {});

/// Uniform over the region by rejection from the rotated bounding box.
std::vector<VectorXd> gen_ellipse_dataset(int n, std::uint64_t seed, const EllipseRegion& region = {});

/// The three global minimizers of Branin and its minimum value.
const std::vector<VectorXd>& branin_minimizers();
inline constexpr double kBraninMinimum = 0.397887;

/// x2 <= 1.5 x1 + 7.5 and x2 <= -1.5 x1 + 15, as normal . x <= offset.
std::vector<Halfspace> branin_known_constraints();
bool satisfies(const std::vector<Halfspace>& halfspaces, const VectorXd& x);

struct MetricsReport {
  int num_samples = 0;
  int num_valid = 0;  // finite samples
  int num_feasible = 0;
  double feasibility_rate = 0.0;
  std::optional<double> best_feasible_value;  // absent when nothing is feasible
  int topk = 10;
  std::optional<double> topk_mean;
  std::vector<int> mode_counts;  // per minimizer, feasible samples only
  int other_count = 0;           // feasible samples near no minimizer
  int infeasible_count = 0;      // includes non-finite samples
};

inline constexpr double kModeRadius = 1.0;

MetricsReport compute_metrics(const std::vector<VectorXd>& samples, const Objective& objective,
                              const std::function<bool(const VectorXd&)>& feasible,
                              const std::vector<VectorXd>& minimizers, int topk = 10,
                              double mode_radius = kModeRadius);

/// Symmetrized central second differences.
MatrixXd hessian_fd(const std::function<double(const VectorXd&)>& h, const VectorXd& x, double eps = 1e-4);

/// Cell centers of an axis-aligned lattice.
struct RegularLattice {
  VectorXd lower;
  VectorXd upper;
  std::vector<int> counts;

  Eigen::Index dim() const { return lower.size(); }
  MatrixXd points() const;
  double cell_volume() const;
};

struct OracleResult {
  VectorXd probabilities;               // normalized over lattice points
  std::vector<double> masses;           // within `radius` of each minimizer
  std::vector<double> predicted;        // a_i / sum a_j
  std::vector<double> laplace_weights;  // a_i = p(x_i) det(H_i)^{-1/2}
};

/// Exact lattice normalization of exp(log_p - beta h), accumulated in the log
/// domain, against the low-temperature mixture weights.
OracleResult lattice_mode_oracle(const std::function<double(const VectorXd&)>& h,
                                const std::function<double(const VectorXd&)>& log_p, const RegularLattice& lattice,
                                double beta, const std::vector<VectorXd>& minimizers, double radius);

/// The 1-D double well (x^2 - 1)^2 on [-2, 2] with log p(x) = tilt * x.
struct DoubleWellCase {
  double tilt = 0.0;
  int cells = 40000;
  double radius = 0.5;
};

struct DoubleWellReport {
  double beta;
  double observed_ratio;   // mass(+1) / mass(-1)
  double predicted_ratio;  // a_+ / a_-
  double p_mass_ratio;     // same ratio under p alone
};

DoubleWellReport double_well_oracle(const DoubleWellCase& c, double beta);

}  // namespace diffopt
