#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "irm/tape.hpp"

namespace irm::nn {

struct GradCheckOptions {
  double tolerance = 1e-4;
  // Central-difference step is step * max(1, |x|) for each coordinate.
  double step = 1e-6;
  // Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  // Keeps coordinates whose true gradient is ~0 from dividing noise by noise.
  double denominator_floor = 1e-3;
};

struct ParameterCheck {
  std::string name;
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<ParameterCheck> parameters;
  double tolerance = 0.0;
  bool pass = false;
  std::string diagnostic;  // first problem found, empty on success

  double worst() const;
};

// Builds a scalar loss on a fresh tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

// Analytic gradients via Tape::backward compared against central finite
// differences, one coordinate at a time.
GradCheckReport grad_check(std::span<Parameter* const> params, const LossBuilder& loss,
                           const GradCheckOptions& options = {});

// Same comparison against caller-supplied analytic gradients (one matrix per
// parameter, same shapes).
GradCheckReport compare_gradients(std::span<Parameter* const> params, const LossBuilder& loss,
                                  std::span<const Matrix> analytic,
                                  const GradCheckOptions& options = {});

}  // namespace irm::nn
