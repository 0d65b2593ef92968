#pragma once

#include "sockweave/diff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace sockweave::diff {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;    // entries with |analytic| above the floor
  std::size_t worst_param = 0;
  Index worst_index = 0;
};

struct GradCheckOptions {
  double step = 1e-4;
  double floor = 1e-6;
  // Probe at most this many entries per parameter (evenly strided); 0 = all.
  Index max_entries_per_param = 0;
  // Test hook: scales the first analytic entry that is above the floor.
  double corrupt_factor = 1.0;
};

/// Central-difference check of reverse-mode gradients. `loss_fn` must rebuild
/// the graph from the current parameter values on every call.
inline GradCheckResult finite_diff_check(const std::function<Tensor<double>()>& loss_fn,
                                         TensorList<double>& params, const GradCheckOptions& opts = {}) {
  for (auto& p : params) p.zero_grad();
  {
    auto loss = loss_fn();
    backward(loss);
    release_graph(loss);
  }
  GradCheckResult result;
  bool corrupted = false;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    if (!p.has_grad()) p.mutable_grad();
    const typename Tensor<double>::Vector analytic = p.grad();
    const Index n = p.size();
    const Index stride = (opts.max_entries_per_param > 0 && n > opts.max_entries_per_param)
                             ? (n + opts.max_entries_per_param - 1) / opts.max_entries_per_param
                             : 1;
    for (Index i = 0; i < n; i += stride) {
      double a = analytic[i];
      if (!corrupted && opts.corrupt_factor != 1.0 && std::abs(a) > opts.floor) {
        a *= opts.corrupt_factor;
        corrupted = true;
      }
      const double saved = p.mutable_value()[i];
      double plus = 0.0, minus = 0.0;
      {
        NoGradGuard guard;
        p.mutable_value()[i] = saved + opts.step;
        plus = loss_fn().item();
        p.mutable_value()[i] = saved - opts.step;
        minus = loss_fn().item();
      }
      p.mutable_value()[i] = saved;
      const double central = (plus - minus) / (2.0 * opts.step);
      if (std::abs(a) <= opts.floor) continue;
      const double err = std::abs(a - central) / std::max(std::abs(a), std::abs(central));
      ++result.checked;
      if (err > result.max_relative_error || !std::isfinite(err)) {
        result.max_relative_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        result.worst_param = pi;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace sockweave::diff
