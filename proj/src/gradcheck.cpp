#include "irm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irm/errors.hpp"

namespace irm::nn {
namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape(false);
  Var out = loss(tape);
  if (out.rows() != 1 || out.cols() != 1) throw ShapeError("grad_check loss must be 1x1");
  return out.value()(0, 0);
}

}  // namespace

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& p : parameters) w = std::max(w, p.max_relative_error);
  return w;
}

GradCheckReport grad_check(std::span<Parameter* const> params, const LossBuilder& loss,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  Tape tape(true);
  Var out = loss(tape);
  tape.backward(out);
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);
  return compare_gradients(params, loss, analytic, options);
}

GradCheckReport compare_gradients(std::span<Parameter* const> params, const LossBuilder& loss,
                                  std::span<const Matrix> analytic,
                                  const GradCheckOptions& options) {
  if (analytic.size() != params.size()) {
    throw ValidationError("compare_gradients: one analytic gradient per parameter required");
  }
  GradCheckReport report;
  report.tolerance = options.tolerance;
  report.pass = true;

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    const Matrix& a = analytic[k];
    if (a.rows() != p.value.rows() || a.cols() != p.value.cols()) {
      throw ShapeError("analytic gradient shape mismatch for " + p.name);
    }
    ParameterCheck check{p.name, 0.0};
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      double& x = p.value.data()[i];
      const double original = x;
      const double h = options.step * std::max(1.0, std::abs(original));
      x = original + h;
      const double plus = evaluate(loss);
      x = original - h;
      const double minus = evaluate(loss);
      x = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double exact = a.data()[i];

      if (!std::isfinite(numeric) || !std::isfinite(exact)) {
        check.max_relative_error = std::numeric_limits<double>::infinity();
        if (report.diagnostic.empty()) {
          report.diagnostic = p.name + "[" + std::to_string(i) + "]: non-finite gradient";
        }
        continue;
      }
      const double denom =
          std::max({std::abs(exact), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(exact - numeric) / denom;
      if (rel > check.max_relative_error) check.max_relative_error = rel;
    }
    if (!(check.max_relative_error <= options.tolerance)) {
      report.pass = false;
      if (report.diagnostic.empty()) {
        report.diagnostic = p.name + ": max relative error " +
                            std::to_string(check.max_relative_error) + " exceeds tolerance";
      }
    }
    report.parameters.push_back(std::move(check));
  }
  return report;
}

}  // namespace irm::nn
