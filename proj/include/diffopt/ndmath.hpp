// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

// Small dense feedforward networks with exact reverse-mode gradients.
//
// Everything here is templated on the scalar type and operates on Eigen
// column batches: a batch of n inputs is a (width x n) matrix. The single
// vector entry points are thin wrappers over the batched ones.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

namespace diffopt {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;

/// Raised when a computation produces NaN or Inf.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { relu, tanh };

struct TimeInput {
  enum class Kind { none, scalar_concat, fourier_concat };
  Kind kind = Kind::none;
  int num_features = 0;  // fourier only, even
  double scale = 1.0;    // fourier only

  bool operator==(const TimeInput&) const = default;

  int width() const {
    switch (kind) {
      case Kind::none: return 0;
      case Kind::scalar_concat: return 1;
      case Kind::fourier_concat: return num_features;
    }
    return 0;
  }
};

/// Layer widths include the time embedding in the input width.
struct MlpSpec {
  std::vector<int> layer_widths;
  Activation activation = Activation::relu;
  TimeInput time_input;

  int num_layers() const { return static_cast<int>(layer_widths.size()) - 1; }
  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  int time_width() const { return time_input.width(); }
  int data_width() const { return input_width() - time_width(); }

  void validate() const {
    if (layer_widths.size() < 2) {
      throw std::invalid_argument("MlpSpec needs at least 2 layer widths");
    }
    for (int w : layer_widths) {
      if (w < 1) throw std::invalid_argument("MlpSpec widths must be >= 1");
    }
    if (time_input.kind == TimeInput::Kind::fourier_concat &&
        (time_input.num_features <= 0 || time_input.num_features % 2 != 0)) {
      throw std::invalid_argument("fourier num_features must be positive and even");
    }
    if (time_input.kind == TimeInput::Kind::fourier_concat && !(time_input.scale > 0)) {
      throw std::invalid_argument("fourier scale must be positive");
    }
    if (data_width() < 1) {
      throw std::invalid_argument("input width must exceed the time embedding width");
    }
  }

  bool operator==(const MlpSpec&) const = default;
};

/// All weights and biases in one flat vector. Layer l stores its weight
/// (out x in, column-major) followed by its bias.
template <typename Scalar>
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(const MlpSpec& spec) {
    spec.validate();
    Eigen::Index offset = 0;
    for (int l = 0; l < spec.num_layers(); ++l) {
      LayerShape s{spec.layer_widths[l + 1], spec.layer_widths[l], offset, 0};
      offset += static_cast<Eigen::Index>(s.rows) * s.cols;
      s.bias_offset = offset;
      offset += s.rows;
      shapes_.push_back(s);
    }
    data_ = Vec<Scalar>::Zero(offset);
  }

  static ParamSet from_flat(const MlpSpec& spec, const Vec<Scalar>& flat) {
    ParamSet p(spec);
    if (flat.size() != p.size()) {
      throw std::invalid_argument("flat parameter vector has length " + std::to_string(flat.size()) +
                                  ", expected " + std::to_string(p.size()));
    }
    p.data_ = flat;
    return p;
  }

  Eigen::Index size() const { return data_.size(); }
  int num_layers() const { return static_cast<int>(shapes_.size()); }

  Vec<Scalar>& flat() { return data_; }
  const Vec<Scalar>& flat() const { return data_; }

  Eigen::Map<Mat<Scalar>> weight(int l) {
    const auto& s = shapes_[l];
    return {data_.data() + s.weight_offset, s.rows, s.cols};
  }
  Eigen::Map<const Mat<Scalar>> weight(int l) const {
    const auto& s = shapes_[l];
    return {data_.data() + s.weight_offset, s.rows, s.cols};
  }
  Eigen::Map<Vec<Scalar>> bias(int l) {
    const auto& s = shapes_[l];
    return {data_.data() + s.bias_offset, s.rows};
  }
  Eigen::Map<const Vec<Scalar>> bias(int l) const {
    const auto& s = shapes_[l];
    return {data_.data() + s.bias_offset, s.rows};
  }

  ParamSet zeros_like() const {
    ParamSet p = *this;
    p.data_.setZero();
    return p;
  }

  ParamSet& operator+=(const ParamSet& other) {
    data_ += other.data_;
    return *this;
  }

 private:
  struct LayerShape {
    int rows;
    int cols;
    Eigen::Index weight_offset;
    Eigen::Index bias_offset;
  };
  std::vector<LayerShape> shapes_;
  Vec<Scalar> data_;
};

namespace detail {

template <typename Scalar>
using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Arr<Scalar> activate(Activation a, const Mat<Scalar>& z) {
  if (a == Activation::relu) return z.array().max(Scalar(0));
  return z.array().tanh();
}

// The relu derivative at 0 is taken as 0.
template <typename Scalar>
Arr<Scalar> activate_d1(Activation a, const Mat<Scalar>& z) {
  if (a == Activation::relu) return (z.array() > Scalar(0)).template cast<Scalar>();
  return Scalar(1) - z.array().tanh().square();
}

template <typename Scalar>
Arr<Scalar> activate_d2(Activation a, const Mat<Scalar>& z) {
  if (a == Activation::relu) return Arr<Scalar>::Zero(z.rows(), z.cols());
  Arr<Scalar> th = z.array().tanh();
  return Scalar(-2) * th * (Scalar(1) - th.square());
}

}  // namespace detail

/// Time features for a row of (already normalized) times.
template <typename Scalar>
Mat<Scalar> embed_time(const MlpSpec& spec, const Vec<Scalar>& times) {
  const auto n = times.size();
  switch (spec.time_input.kind) {
    case TimeInput::Kind::none:
      return Mat<Scalar>(0, n);
    case TimeInput::Kind::scalar_concat:
      return times.transpose();
    case TimeInput::Kind::fourier_concat: {
      // Frequencies scale * (k + 1), k < num_features / 2.
      const int half = spec.time_input.num_features / 2;
      Mat<Scalar> out(2 * half, n);
      for (int k = 0; k < half; ++k) {
        const Scalar w = Scalar(2 * std::numbers::pi * spec.time_input.scale * (k + 1));
        out.row(k) = (w * times.array()).sin().transpose();
        out.row(half + k) = (w * times.array()).cos().transpose();
      }
      return out;
    }
  }
  return {};
}

/// Activations of one forward pass. act[0] is the full network input (data
/// rows then time rows); act[L] is the (linear) output.
template <typename Scalar>
struct MlpTape {
  std::vector<Mat<Scalar>> pre;
  std::vector<Mat<Scalar>> act;
  const Mat<Scalar>& output() const { return act.back(); }
};

template <typename Scalar>
struct MlpGrads {
  ParamSet<Scalar> params;
  Mat<Scalar> input;  // data rows only
};

template <typename Scalar>
Mat<Scalar> assemble_input(const MlpSpec& spec, const Mat<Scalar>& x, const Vec<Scalar>* times) {
  if (x.rows() != spec.data_width()) {
    throw std::invalid_argument("input has " + std::to_string(x.rows()) + " rows, network expects " +
                                std::to_string(spec.data_width()));
  }
  const bool wants_time = spec.time_input.kind != TimeInput::Kind::none;
  if (wants_time != (times != nullptr)) {
    throw std::invalid_argument(wants_time ? "network requires a time input"
                                           : "network takes no time input");
  }
  if (!wants_time) return x;
  if (times->size() != x.cols()) throw std::invalid_argument("times/batch size mismatch");
  Mat<Scalar> in(spec.input_width(), x.cols());
  in.topRows(x.rows()) = x;
  in.bottomRows(spec.time_width()) = embed_time(spec, *times);
  return in;
}

template <typename Scalar>
MlpTape<Scalar> mlp_forward(const ParamSet<Scalar>& params, const MlpSpec& spec, const Mat<Scalar>& x,
                            const Vec<Scalar>* times = nullptr) {
  MlpTape<Scalar> tape;
  const int L = spec.num_layers();
  tape.pre.reserve(L + 1);
  tape.act.reserve(L + 1);
  tape.pre.emplace_back();
  tape.act.push_back(assemble_input(spec, x, times));
  for (int l = 0; l < L; ++l) {
    Mat<Scalar> z = params.weight(l) * tape.act.back();
    z.colwise() += params.bias(l);
    if (l + 1 < L) {
      tape.act.push_back(detail::activate<Scalar>(spec.activation, z).matrix());
    } else {
      tape.act.push_back(z);
    }
    tape.pre.push_back(std::move(z));
  }
  return tape;
}

/// Gradients of sum_j <upstream_j, out_j> over the batch.
template <typename Scalar>
MlpGrads<Scalar> mlp_backward(const ParamSet<Scalar>& params, const MlpSpec& spec, const MlpTape<Scalar>& tape,
                              const Mat<Scalar>& upstream) {
  const int L = spec.num_layers();
  if (upstream.rows() != spec.output_width() || upstream.cols() != tape.output().cols()) {
    throw std::invalid_argument("upstream shape does not match network output");
  }
  MlpGrads<Scalar> g{params.zeros_like(), {}};
  Mat<Scalar> adj = upstream;  // adjoint of pre[l + 1]
  for (int l = L - 1; l >= 0; --l) {
    g.params.weight(l).noalias() = adj * tape.act[l].transpose();
    g.params.bias(l) = adj.rowwise().sum();
    Mat<Scalar> adj_in = params.weight(l).transpose() * adj;
    if (l > 0) {
      adj = (adj_in.array() * detail::activate_d1<Scalar>(spec.activation, tape.pre[l])).matrix();
    } else {
      g.input = adj_in.topRows(spec.data_width());
    }
  }
  return g;
}

/// Forward pass carrying a tangent along the data inputs (time tangent 0).
template <typename Scalar>
struct MlpTangentTape {
  MlpTape<Scalar> base;
  std::vector<Mat<Scalar>> dpre;
  std::vector<Mat<Scalar>> dact;
  const Mat<Scalar>& output() const { return base.output(); }
  const Mat<Scalar>& tangent() const { return dact.back(); }
};

template <typename Scalar>
MlpTangentTape<Scalar> mlp_forward_tangent(const ParamSet<Scalar>& params, const MlpSpec& spec,
                                           const Mat<Scalar>& x, const Vec<Scalar>* times,
                                           const Mat<Scalar>& direction) {
  if (direction.rows() != x.rows() || direction.cols() != x.cols()) {
    throw std::invalid_argument("tangent direction shape mismatch");
  }
  MlpTangentTape<Scalar> tt;
  tt.base = mlp_forward(params, spec, x, times);
  const int L = spec.num_layers();
  tt.dpre.emplace_back();
  Mat<Scalar> d0 = Mat<Scalar>::Zero(spec.input_width(), x.cols());
  d0.topRows(x.rows()) = direction;
  tt.dact.push_back(std::move(d0));
  for (int l = 0; l < L; ++l) {
    Mat<Scalar> dz = params.weight(l) * tt.dact.back();
    if (l + 1 < L) {
      tt.dact.push_back(
          (dz.array() * detail::activate_d1<Scalar>(spec.activation, tt.base.pre[l + 1])).matrix());
    } else {
      tt.dact.push_back(dz);
    }
    tt.dpre.push_back(std::move(dz));
  }
  return tt;
}

/// Parameter gradient of sum_j <adj_out_j, out_j> + <adj_tangent_j, tangent_j>
/// (reverse mode over the tangent-carrying forward pass).
template <typename Scalar>
ParamSet<Scalar> mlp_backward_tangent(const ParamSet<Scalar>& params, const MlpSpec& spec,
                                      const MlpTangentTape<Scalar>& tt, const Mat<Scalar>& adj_out,
                                      const Mat<Scalar>& adj_tangent) {
  const int L = spec.num_layers();
  const auto& base = tt.base;
  ParamSet<Scalar> g = params.zeros_like();
  Mat<Scalar> az = adj_out;       // adjoint of pre[l + 1]
  Mat<Scalar> adz = adj_tangent;  // adjoint of dpre[l + 1]
  for (int l = L - 1; l >= 0; --l) {
    g.weight(l).noalias() = az * base.act[l].transpose();
    g.weight(l).noalias() += adz * tt.dact[l].transpose();
    g.bias(l) = az.rowwise().sum();
    if (l == 0) break;
    Mat<Scalar> aa = params.weight(l).transpose() * az;
    Mat<Scalar> ada = params.weight(l).transpose() * adz;
    const auto& z = base.pre[l];
    const auto d1 = detail::activate_d1<Scalar>(spec.activation, z);
    const auto d2 = detail::activate_d2<Scalar>(spec.activation, z);
    az = (aa.array() * d1 + ada.array() * d2 * tt.dpre[l].array()).matrix();
    adz = (ada.array() * d1).matrix();
  }
  return g;
}

// Single-point conveniences.

// Scalar is taken from the parameter set so that Eigen expressions and plain
// doubles convert at the call site.
template <typename T>
using NoDeduce = std::type_identity_t<T>;

template <typename Scalar>
Vec<Scalar> mlp_apply(const ParamSet<Scalar>& params, const MlpSpec& spec, const NoDeduce<Vec<Scalar>>& x,
                      std::optional<NoDeduce<Scalar>> t = std::nullopt) {
  Vec<Scalar> times;
  if (t) times = Vec<Scalar>::Constant(1, *t);
  return mlp_forward<Scalar>(params, spec, x, t ? &times : nullptr).output().col(0);
}

template <typename Scalar>
std::pair<ParamSet<Scalar>, Vec<Scalar>> mlp_backprop(const ParamSet<Scalar>& params, const MlpSpec& spec,
                                                      const NoDeduce<Vec<Scalar>>& x,
                                                      std::optional<NoDeduce<Scalar>> t,
                                                      const NoDeduce<Vec<Scalar>>& upstream) {
  Vec<Scalar> times;
  if (t) times = Vec<Scalar>::Constant(1, *t);
  auto tape = mlp_forward<Scalar>(params, spec, x, t ? &times : nullptr);
  if (upstream.size() != spec.output_width()) throw std::invalid_argument("upstream length mismatch");
  auto g = mlp_backward<Scalar>(params, spec, tape, upstream);
  return {std::move(g.params), g.input.col(0)};
}

/// Fan-in scaled normal weights (He for relu, Xavier-style 1/fan_in for tanh), zero biases.
inline ParamSet<double> mlp_init(const MlpSpec& spec, std::uint64_t seed) {
  ParamSet<double> p(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < p.num_layers(); ++l) {
    auto w = p.weight(l);
    const double gain = spec.activation == Activation::relu ? 2.0 : 1.0;
    const double sd = std::sqrt(gain / static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = sd * normal(rng);
    }
  }
  return p;
}

/// Adam with bias correction.
struct AdamState {
  VectorXd first_moment;
  VectorXd second_moment;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState fresh(Eigen::Index n, double learning_rate) {
    AdamState s;
    s.first_moment = VectorXd::Zero(n);
    s.second_moment = VectorXd::Zero(n);
    s.learning_rate = learning_rate;
    return s;
  }
};

inline void adam_step(VectorXd& params, const VectorXd& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++state.step;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= state.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.epsilon);
}

/// Central differences; used as an oracle.
inline VectorXd finite_diff_grad(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                                 double eps) {
  if (!(eps > 0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("finite_diff_grad: non-finite function value");
    }
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

}  // namespace diffopt
