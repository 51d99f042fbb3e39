#include "irm/text.hpp"

#include <cctype>
#include <cmath>

#include "irm/errors.hpp"
#include "irm/random.hpp"

namespace irm {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::string first_word(std::string_view text) {
  std::size_t b = 0;
  while (b < text.size() && !std::isalnum(static_cast<unsigned char>(text[b]))) ++b;
  std::size_t e = b;
  while (e < text.size() && std::isalnum(static_cast<unsigned char>(text[e]))) ++e;
  return std::string(text.substr(b, e - b));
}

TokenEmbedder::TokenEmbedder(Eigen::Index dim, std::uint64_t salt) : dim_(dim), salt_(salt) {
  if (dim < 1) throw ValidationError("embedding dimension must be positive");
}

Eigen::RowVectorXd TokenEmbedder::embed_token(std::string_view token) const {
  Rng rng(hash_combine(salt_, stable_hash(token)));
  const double s = 1.0 / std::sqrt(static_cast<double>(dim_));
  Eigen::RowVectorXd v(dim_);
  for (Eigen::Index i = 0; i < dim_; ++i) v(i) = rng.normal() * s;
  return v;
}

nn::Matrix TokenEmbedder::embed(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw ValidationError("cannot embed text without tokens");
  nn::Matrix out(static_cast<Eigen::Index>(tokens.size()), dim_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = embed_token(tokens[i]);
  }
  return out;
}

}  // namespace irm
