#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "irm/tape.hpp"

namespace irm {

// Lowercased alphanumeric word tokens ("Don't stop!" -> {"don", "t", "stop"}).
std::vector<std::string> tokenize(std::string_view text);

// First whitespace-delimited word with surrounding punctuation removed,
// original case kept ("  Why did..." -> "Why").
std::string first_word(std::string_view text);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);

// Deterministic word-embedding layer: every token maps to a fixed Gaussian
// vector derived from a stable hash of (salt, token), scaled by 1/sqrt(dim).
// Identical text always embeds identically, on every platform.
class TokenEmbedder {
 public:
  TokenEmbedder(Eigen::Index dim, std::uint64_t salt = 0);

  Eigen::Index dim() const { return dim_; }

  Eigen::RowVectorXd embed_token(std::string_view token) const;

  // [tokens x dim]. Throws ValidationError on text with no tokens.
  nn::Matrix embed(std::string_view text) const;

 private:
  Eigen::Index dim_;
  std::uint64_t salt_;
};

}  // namespace irm
