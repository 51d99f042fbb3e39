#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irm/gradcheck.hpp"

namespace irm {

struct GradCheckSuiteOptions {
  int seeds = 20;
  std::uint64_t base_seed = 1;
  Eigen::Index d_model = 8;
  int heads = 2;
  nn::GradCheckOptions check;
};

struct OpCheck {
  std::string op;
  std::uint64_t seed = 0;
  nn::GradCheckReport report;
};

// Names of the checked operations, in run order.
const std::vector<std::string>& gradcheck_ops();

// Finite-difference checks of every differentiable operation of the model
// (linear, attention, verification, relation classifier, relation loss,
// projection, compressor, enhancement, proxy decoder) at small random sizes,
// once per seed. Attention output projections are randomized so that every
// parameter receives a nonzero gradient.
std::vector<OpCheck> run_gradcheck_suite(const GradCheckSuiteOptions& options);

nlohmann::json to_json(const OpCheck& check);

}  // namespace irm
