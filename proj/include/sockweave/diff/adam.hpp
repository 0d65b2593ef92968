#pragma once

#include "sockweave/diff/tensor.hpp"

#include <cmath>

namespace sockweave::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  using Vector = typename Tensor<Scalar>::Vector;

  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;

  AdamState() = default;
  AdamState(AdamConfig cfg, const TensorList<Scalar>& params) : config(cfg) {
    for (const auto& p : params) {
      first_moment.push_back(Vector::Zero(p.size()));
      second_moment.push_back(Vector::Zero(p.size()));
    }
  }
};

/// One bias-corrected Adam update over `params`, then zeroes their gradients.
template <typename Scalar>
void adam_step(TensorList<Scalar>& params, AdamState<Scalar>& state) {
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw std::invalid_argument("adam_step: parameter " + std::to_string(i) + " with shape " +
                                  to_string(params[i].shape()) + " has no gradient");
    }
    if (state.first_moment[i].size() != params[i].size()) {
      throw std::invalid_argument("adam_step: moment buffer " + std::to_string(i) + " does not match parameter shape " +
                                  to_string(params[i].shape()));
    }
  }
  const auto& cfg = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const auto b1 = static_cast<Scalar>(cfg.beta1), b2 = static_cast<Scalar>(cfg.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, t));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, t));
  const auto lr = static_cast<Scalar>(cfg.learning_rate), eps = static_cast<Scalar>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = params[i].grad();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    params[i].mutable_value().array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    params[i].zero_grad();
  }
}

}  // namespace sockweave::diff
