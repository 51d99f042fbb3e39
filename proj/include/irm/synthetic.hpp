#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irm/dataset.hpp"

namespace irm {

// Generator for the toy clue-relevance corpus. Each question names one
// object word from the "relevant" vocabulary; relevant clues mention that
// same word, irrelevant clues only words from a disjoint distractor
// vocabulary. The number of relevant clues per item varies from zero to all
// of them, so set-level labels still pin down which clues are relevant.
struct SyntheticOptions {
  std::size_t count = 20;
  std::uint64_t seed = 2024;
  std::size_t min_clues = 2;
  std::size_t max_clues = 5;
  double sigma = kDefaultSigma;
  std::string id_prefix = "syn";
};

std::vector<IVQAItem> make_synthetic_dataset(const SyntheticOptions& options);

const std::vector<std::string>& relevant_vocabulary();
const std::vector<std::string>& distractor_vocabulary();

}  // namespace irm
