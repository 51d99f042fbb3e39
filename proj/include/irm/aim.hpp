#pragma once

#include <span>
#include <string>
#include <vector>

#include "irm/dataset.hpp"
#include "irm/hungarian.hpp"
#include "irm/layers.hpp"
#include "irm/text.hpp"

// Action-Intent Module: clue embedding, visual verification of actions,
// clue/question relation classification, the matched relation loss, and
// clue refinement.
namespace irm::aim {

using nn::EmbeddingSeq;
using nn::Matrix;

// Per-clue action and intent tokens, concatenated along the token axis with
// one boundary per clue in both sequences.
struct ClueBank {
  EmbeddingSeq actions;
  EmbeddingSeq intents;
  std::size_t n_clues = 0;

  void validate() const;
};

// [n_clues x 2]; column 0 scores "relevant", column 1 "irrelevant".
struct RelationLogits {
  Matrix scores;

  std::size_t rows() const { return static_cast<std::size_t>(scores.rows()); }
};

struct LossWeights {
  double generation_weight = 1.0;
  double relation_weight = 2.0;
  int epoch = 0;
};

struct AimParams {
  nn::AttentionBlock hallucination;   // actions attend to the global visual input
  nn::AttentionBlock relation_cross;  // intent+question attend to verified+question
  nn::AttentionBlock relation_self;   // intent+question self-attention
  nn::Linear relation_head;           // 2*d_model -> 2

  AimParams() = default;
  AimParams(Eigen::Index d_model, int heads);

  void init(Rng& rng);
  std::vector<nn::Parameter*> parameters();
};

// Empty input gives an empty bank with zero-row matrices of width embedder.dim().
ClueBank embed_clues(std::span<const ClueCandidate> clues, const TokenEmbedder& embedder);

// ---- tape forms (used by training and gradient checks) ---------------------

nn::Var hallucination_verify(nn::Tape& tape, AimParams& params, nn::Var actions,
                             nn::Var visual_global);

// Returns [n_clues x 2] logits. intent_bounds index rows of `intents`.
nn::Var relation_classify(nn::Tape& tape, AimParams& params, nn::Var intents,
                          std::span<const nn::Segment> intent_bounds, nn::Var verified,
                          nn::Var question);

// Matched cross-entropy summed over the assignment. The assignment is computed
// from the current values and treated as constant for backprop.
nn::Var relation_loss(nn::Tape& tape, nn::Var logits, std::span<const int> labels,
                      Assignment* assignment = nullptr);

// ---- value forms -----------------------------------------------------------

// X_I^V: actions queried against the global visual input. Boundaries follow
// the actions.
EmbeddingSeq hallucination_verify(AimParams& params, const ClueBank& bank,
                                  const EmbeddingSeq& visual_global);

RelationLogits relation_classify(AimParams& params, const ClueBank& bank,
                                 const EmbeddingSeq& verified, const EmbeddingSeq& question);

// cost(i, j) = cross-entropy of logits row i against label j, where label 1
// (relevant) is column 0.
Matrix relation_cost(const RelationLogits& logits, std::span<const int> labels);

struct RelationLossResult {
  double loss = 0.0;
  Assignment assignment;  // (prediction, label) pairs
};

RelationLossResult relation_loss(const RelationLogits& logits, std::span<const int> labels);

// Indices kept by the selection rule: scores(i,0) >= scores(i,1). When none
// qualifies, the single clue with the largest scores(i,0) - scores(i,1).
std::vector<std::size_t> select_relevant(const RelationLogits& logits);

struct Refinement {
  ClueBank bank;
  std::vector<std::size_t> kept;  // indices into the input bank, ascending
};

Refinement refine_clues(const ClueBank& bank, const RelationLogits& logits);

// Sub-bank of the given clue indices, in the given order.
ClueBank select_clues(const ClueBank& bank, std::span<const std::size_t> indices);

// generation weight fixed at 1.0; relation weight 2.0 - 0.05 * epoch, floored at 0.
LossWeights loss_schedule(int epoch);
double combined_loss(double generation_loss, double relation_loss, int epoch);

// One line per clue: index, kept/dropped, both logits, then the clue text.
std::string dump_clue_bank(std::span<const ClueCandidate> clues, const RelationLogits& logits,
                           std::span<const std::size_t> kept);

}  // namespace irm::aim
