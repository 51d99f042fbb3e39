#include "irm/aim.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "irm/errors.hpp"

namespace irm::aim {

void ClueBank::validate() const {
  if (actions.boundaries.size() != n_clues || intents.boundaries.size() != n_clues) {
    throw ValidationError("clue bank boundaries do not match n_clues");
  }
  actions.validate(n_clues == 0);
  intents.validate(n_clues == 0);
}

AimParams::AimParams(Eigen::Index d_model, int heads)
    : hallucination("aim.hallucination", d_model, heads),
      relation_cross("aim.relation_cross", d_model, heads),
      relation_self("aim.relation_self", d_model, heads),
      relation_head("aim.relation_head", 2 * d_model, 2) {}

void AimParams::init(Rng& rng) {
  hallucination.init(rng);
  relation_cross.init(rng);
  relation_self.init(rng);
  relation_head.init_uniform(rng);
}

std::vector<nn::Parameter*> AimParams::parameters() {
  std::vector<nn::Parameter*> out;
  for (nn::AttentionBlock* b : {&hallucination, &relation_cross, &relation_self}) {
    auto p = b->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  auto head = relation_head.parameters();
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

namespace {

// Relation label 1 (relevant) is logit column 0.
int relation_column(int label) {
  if (label != 0 && label != 1) throw ValidationError("relation label must be 0 or 1");
  return label == 1 ? 0 : 1;
}

EmbeddingSeq concat_segments(const std::vector<Matrix>& parts, Eigen::Index dim) {
  Eigen::Index rows = 0;
  for (const auto& m : parts) rows += m.rows();
  EmbeddingSeq seq;
  seq.data.resize(rows, dim);
  Eigen::Index at = 0;
  for (const auto& m : parts) {
    seq.data.middleRows(at, m.rows()) = m;
    seq.boundaries.push_back({at, at + m.rows()});
    at += m.rows();
  }
  return seq;
}

Matrix gather(const EmbeddingSeq& seq, std::span<const std::size_t> indices,
              std::vector<nn::Segment>& bounds) {
  Eigen::Index rows = 0;
  for (auto i : indices) rows += seq.boundaries.at(i).size();
  Matrix out(rows, seq.width());
  Eigen::Index at = 0;
  for (auto i : indices) {
    const nn::Segment& s = seq.boundaries[i];
    out.middleRows(at, s.size()) = seq.data.middleRows(s.start, s.size());
    bounds.push_back({at, at + s.size()});
    at += s.size();
  }
  return out;
}

}  // namespace

ClueBank embed_clues(std::span<const ClueCandidate> clues, const TokenEmbedder& embedder) {
  std::vector<Matrix> actions;
  std::vector<Matrix> intents;
  for (const auto& c : clues) {
    if (trim(c.action).empty() || trim(c.intent).empty()) {
      throw ValidationError("clue candidate with empty action or intent");
    }
    actions.push_back(embedder.embed(c.action));
    intents.push_back(embedder.embed(c.intent));
  }
  ClueBank bank;
  bank.actions = concat_segments(actions, embedder.dim());
  bank.intents = concat_segments(intents, embedder.dim());
  bank.n_clues = clues.size();
  return bank;
}

nn::Var hallucination_verify(nn::Tape& tape, AimParams& params, nn::Var actions,
                             nn::Var visual_global) {
  return nn::cross_attention(tape, params.hallucination, actions, visual_global);
}

nn::Var relation_classify(nn::Tape& tape, AimParams& params, nn::Var intents,
                          std::span<const nn::Segment> intent_bounds, nn::Var verified,
                          nn::Var question) {
  if (intent_bounds.empty()) return tape.constant(Matrix(0, 2));
  const nn::Var intent_q_parts[] = {intents, question};
  const nn::Var verified_q_parts[] = {verified, question};
  nn::Var intent_q = nn::concat_rows(intent_q_parts);
  nn::Var verified_q = nn::concat_rows(verified_q_parts);

  nn::Var crossed = nn::cross_attention(tape, params.relation_cross, intent_q, verified_q);
  nn::Var selfed = nn::self_attention(tape, params.relation_self, intent_q);
  const nn::Var feature_parts[] = {crossed, selfed};
  nn::Var features = nn::concat_cols(feature_parts);

  // Only the intent-token positions carry per-clue features.
  nn::Var clue_tokens = nn::slice_rows(features, 0, intents.rows());
  nn::Var pooled = nn::segment_mean(clue_tokens, intent_bounds);
  return params.relation_head.forward(tape, pooled);
}

Matrix relation_cost(const RelationLogits& logits, std::span<const int> labels) {
  if (logits.scores.cols() != 2 && logits.scores.rows() > 0) {
    throw ShapeError("relation logits must have two columns");
  }
  Matrix cost(logits.scores.rows(), static_cast<Eigen::Index>(labels.size()));
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      cost(i, j) = nn::binary_cross_entropy(logits.scores(i, 0), logits.scores(i, 1),
                                            relation_column(labels[static_cast<std::size_t>(j)]));
    }
  }
  return cost;
}

nn::Var relation_loss(nn::Tape& tape, nn::Var logits, std::span<const int> labels,
                      Assignment* assignment) {
  RelationLogits values{logits.value()};
  Assignment matched = hungarian_match(relation_cost(values, labels));
  // Sum in label order.
  std::sort(matched.begin(), matched.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<nn::Var> terms;
  terms.reserve(matched.size());
  for (const auto& [pred, gt] : matched) {
    terms.push_back(nn::cross_entropy(nn::slice_rows(logits, static_cast<Eigen::Index>(pred), 1),
                                      relation_column(labels[gt])));
  }
  if (assignment != nullptr) {
    std::sort(matched.begin(), matched.end());
    *assignment = std::move(matched);
  }
  return nn::sum_scalars(tape, terms);
}

EmbeddingSeq hallucination_verify(AimParams& params, const ClueBank& bank,
                                  const EmbeddingSeq& visual_global) {
  if (visual_global.width() != bank.actions.width()) {
    throw ShapeError("visual input width does not match clue embeddings");
  }
  if (bank.n_clues == 0) return EmbeddingSeq{Matrix(0, bank.actions.width()), {}};
  nn::Tape tape(false);
  nn::Var out = hallucination_verify(tape, params, tape.constant(bank.actions.data),
                                     tape.constant(visual_global.data));
  return EmbeddingSeq{out.value(), bank.actions.boundaries};
}

RelationLogits relation_classify(AimParams& params, const ClueBank& bank,
                                 const EmbeddingSeq& verified, const EmbeddingSeq& question) {
  if (bank.n_clues == 0) return RelationLogits{Matrix(0, 2)};
  nn::Tape tape(false);
  nn::Var out = relation_classify(tape, params, tape.constant(bank.intents.data),
                                  bank.intents.boundaries, tape.constant(verified.data),
                                  tape.constant(question.data));
  return RelationLogits{out.value()};
}

RelationLossResult relation_loss(const RelationLogits& logits, std::span<const int> labels) {
  for (int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("relation labels must be 0 or 1");
  }
  nn::Tape tape(false);
  RelationLossResult result;
  nn::Var loss = relation_loss(tape, tape.constant(logits.scores), labels, &result.assignment);
  result.loss = loss.value()(0, 0);
  return result;
}

std::vector<std::size_t> select_relevant(const RelationLogits& logits) {
  std::vector<std::size_t> kept;
  const Matrix& s = logits.scores;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (s(i, 0) >= s(i, 1)) kept.push_back(static_cast<std::size_t>(i));
  }
  if (kept.empty() && s.rows() > 0) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < s.rows(); ++i) {
      if (s(i, 0) - s(i, 1) > s(best, 0) - s(best, 1)) best = i;
    }
    kept.push_back(static_cast<std::size_t>(best));
  }
  return kept;
}

ClueBank select_clues(const ClueBank& bank, std::span<const std::size_t> indices) {
  ClueBank out;
  out.actions.data = gather(bank.actions, indices, out.actions.boundaries);
  out.intents.data = gather(bank.intents, indices, out.intents.boundaries);
  out.n_clues = indices.size();
  return out;
}

Refinement refine_clues(const ClueBank& bank, const RelationLogits& logits) {
  if (logits.rows() != bank.n_clues) {
    throw ValidationError("refine_clues: " + std::to_string(logits.rows()) + " logit rows for " +
                          std::to_string(bank.n_clues) + " clues");
  }
  Refinement r;
  r.kept = select_relevant(logits);
  r.bank = select_clues(bank, r.kept);
  return r;
}

LossWeights loss_schedule(int epoch) {
  if (epoch < 0) throw ValidationError("epoch must be non-negative");
  LossWeights w;
  w.epoch = epoch;
  w.generation_weight = 1.0;
  w.relation_weight = std::max(0.0, 2.0 - 0.05 * static_cast<double>(epoch));
  return w;
}

double combined_loss(double generation_loss, double relation_loss, int epoch) {
  const LossWeights w = loss_schedule(epoch);
  return w.generation_weight * generation_loss + w.relation_weight * relation_loss;
}

std::string dump_clue_bank(std::span<const ClueCandidate> clues, const RelationLogits& logits,
                           std::span<const std::size_t> kept) {
  std::ostringstream out;
  for (std::size_t i = 0; i < clues.size(); ++i) {
    const bool keep = std::find(kept.begin(), kept.end(), i) != kept.end();
    char scores[64] = "";
    if (i < logits.rows()) {
      std::snprintf(scores, sizeof(scores), "%+.6f %+.6f",
                    logits.scores(static_cast<Eigen::Index>(i), 0),
                    logits.scores(static_cast<Eigen::Index>(i), 1));
    }
    out << i << "\t" << (keep ? "kept" : "dropped") << "\t" << scores << "\t" << clues[i].action
        << " | " << clues[i].intent << "\n";
  }
  return out.str();
}

}  // namespace irm::aim
