#pragma once

#include <optional>
#include <string>
#include <vector>

#include "irm/random.hpp"
#include "irm/tape.hpp"

namespace irm::nn {

// Token matrix plus optional per-unit segments (one per clue, say).
struct EmbeddingSeq {
  Matrix data;
  std::vector<Segment> boundaries;

  Eigen::Index tokens() const { return data.rows(); }
  Eigen::Index width() const { return data.cols(); }

  // Throws ValidationError unless boundaries are ordered, disjoint and inside
  // [0, tokens). Requires tokens >= 1 unless allow_empty.
  void validate(bool allow_empty = false) const;
};

// y = x W^T + b with W stored [out x in].
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out);

  Eigen::Index in_features() const { return weight.value.cols(); }
  Eigen::Index out_features() const { return weight.value.rows(); }

  // Uniform in +-1/sqrt(fan_in) for both weight and bias.
  void init_uniform(Rng& rng);
  void set_zero();

  Var forward(Tape& tape, Var x);
  Matrix forward(const Matrix& x);

  std::vector<Parameter*> parameters() { return {&weight, &bias}; }
};

// Multi-head scaled dot-product attention block with an optional residual
// connection around it. No positional terms and no feed-forward sublayer.
struct AttentionBlock {
  Linear query;
  Linear key;
  Linear value;
  Linear output;
  int head_count = 1;
  bool residual = true;

  AttentionBlock() = default;
  AttentionBlock(const std::string& name, Eigen::Index d_model, int heads, bool residual = true);

  Eigen::Index d_model() const { return query.in_features(); }

  // q/k/v projections uniform, output projection zero, so a fresh residual
  // block is the identity map.
  void init(Rng& rng);

  std::vector<Parameter*> parameters();
};

// Per-head attention weights, [query tokens x kv tokens] each.
using AttentionWeights = std::vector<Matrix>;

Var cross_attention(Tape& tape, AttentionBlock& block, Var query, Var kv,
                    AttentionWeights* weights = nullptr);
Var self_attention(Tape& tape, AttentionBlock& block, Var seq,
                   AttentionWeights* weights = nullptr);

// Value-level forms. The output keeps the query's boundaries.
EmbeddingSeq cross_attention(AttentionBlock& block, const EmbeddingSeq& query,
                             const EmbeddingSeq& kv, AttentionWeights* weights = nullptr);
EmbeddingSeq self_attention(AttentionBlock& block, const EmbeddingSeq& seq,
                            AttentionWeights* weights = nullptr);

// Row i = mean of the tokens in boundary i. Throws if there are no boundaries.
Matrix mean_pool_segments(const EmbeddingSeq& seq);

// Two-class softmax cross-entropy.
double binary_cross_entropy(double logit0, double logit1, int label);

}  // namespace irm::nn
