#pragma once

#include <string>
#include <vector>

namespace sockweave::trainer {

enum class GradScale { toy, full };

struct GradComponent {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

struct GradSuiteOptions {
  GradScale scale = GradScale::toy;
  double tolerance = 1e-4;
  // Test hook: multiplies one analytic gradient entry of every component.
  double corrupt_factor = 1.0;
  std::uint64_t seed = 7;
};

/// Central-difference checks in double precision over every op kind and the
/// model pieces, ending with the whole teacher-forced loss.
std::vector<GradComponent> run_grad_suite(const GradSuiteOptions& options);

}  // namespace sockweave::trainer
