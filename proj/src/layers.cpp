#include "irm/layers.hpp"

#include <array>
#include <cmath>

#include "irm/errors.hpp"

namespace irm::nn {

void EmbeddingSeq::validate(bool allow_empty) const {
  if (!allow_empty && data.rows() < 1) throw ValidationError("embedding sequence has no tokens");
  Eigen::Index cursor = 0;
  for (const Segment& s : boundaries) {
    if (s.start < cursor || s.end <= s.start || s.end > data.rows()) {
      throw ValidationError("embedding boundaries must be ordered, disjoint and in range");
    }
    cursor = s.end;
  }
}

Linear::Linear(const std::string& name, Eigen::Index in, Eigen::Index out)
    : weight(name + ".weight", Matrix::Zero(out, in)),
      bias(name + ".bias", Matrix::Zero(1, out)) {}

void Linear::init_uniform(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features()));
  for (Eigen::Index i = 0; i < weight.value.size(); ++i) {
    weight.value.data()[i] = rng.uniform(-bound, bound);
  }
  for (Eigen::Index i = 0; i < bias.value.size(); ++i) {
    bias.value.data()[i] = rng.uniform(-bound, bound);
  }
}

void Linear::set_zero() {
  weight.value.setZero();
  bias.value.setZero();
}

Var Linear::forward(Tape& tape, Var x) {
  if (x.cols() != in_features()) {
    throw ShapeError(weight.name + ": expected " + std::to_string(in_features()) +
                     " input features, got " + std::to_string(x.cols()));
  }
  return add_row(matmul_nt(x, tape.parameter(weight)), tape.parameter(bias));
}

Matrix Linear::forward(const Matrix& x) {
  Tape tape(false);
  return forward(tape, tape.constant(x)).value();
}

AttentionBlock::AttentionBlock(const std::string& name, Eigen::Index d_model, int heads,
                               bool residual_enabled)
    : query(name + ".query", d_model, d_model),
      key(name + ".key", d_model, d_model),
      value(name + ".value", d_model, d_model),
      output(name + ".output", d_model, d_model),
      head_count(heads),
      residual(residual_enabled) {
  if (heads < 1 || d_model % heads != 0) {
    throw ValidationError(name + ": d_model " + std::to_string(d_model) +
                          " is not divisible by head_count " + std::to_string(heads));
  }
}

void AttentionBlock::init(Rng& rng) {
  query.init_uniform(rng);
  key.init_uniform(rng);
  value.init_uniform(rng);
  output.set_zero();
}

std::vector<Parameter*> AttentionBlock::parameters() {
  std::vector<Parameter*> out;
  for (Linear* l : {&query, &key, &value, &output}) {
    auto p = l->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Var cross_attention(Tape& tape, AttentionBlock& block, Var query, Var kv,
                    AttentionWeights* weights) {
  const Eigen::Index d = block.d_model();
  if (query.cols() != d || kv.cols() != d) {
    throw ShapeError("attention d_model mismatch: block " + std::to_string(d) + ", query " +
                     std::to_string(query.cols()) + ", kv " + std::to_string(kv.cols()));
  }
  if (kv.rows() < 1) throw ShapeError("attention over an empty key/value set");

  Var q = block.query.forward(tape, query);
  Var k = block.key.forward(tape, kv);
  Var v = block.value.forward(tape, kv);

  const Eigen::Index head_dim = d / block.head_count;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(block.head_count));
  if (weights != nullptr) weights->clear();
  for (int h = 0; h < block.head_count; ++h) {
    const Eigen::Index at = h * head_dim;
    Var scores = scale(matmul_nt(slice_cols(q, at, head_dim), slice_cols(k, at, head_dim)), inv_sqrt);
    Var attn = softmax_rows(scores);
    if (weights != nullptr) weights->push_back(attn.value());
    heads.push_back(matmul(attn, slice_cols(v, at, head_dim)));
  }
  Var mixed = block.head_count == 1 ? heads.front() : concat_cols(heads);
  Var out = block.output.forward(tape, mixed);
  return block.residual ? add(out, query) : out;
}

Var self_attention(Tape& tape, AttentionBlock& block, Var seq, AttentionWeights* weights) {
  return cross_attention(tape, block, seq, seq, weights);
}

EmbeddingSeq cross_attention(AttentionBlock& block, const EmbeddingSeq& query,
                             const EmbeddingSeq& kv, AttentionWeights* weights) {
  Tape tape(false);
  Var out = cross_attention(tape, block, tape.constant(query.data), tape.constant(kv.data), weights);
  return EmbeddingSeq{out.value(), query.boundaries};
}

EmbeddingSeq self_attention(AttentionBlock& block, const EmbeddingSeq& seq,
                            AttentionWeights* weights) {
  Tape tape(false);
  Var in = tape.constant(seq.data);
  Var out = self_attention(tape, block, in, weights);
  return EmbeddingSeq{out.value(), seq.boundaries};
}

Matrix mean_pool_segments(const EmbeddingSeq& seq) {
  if (seq.boundaries.empty()) throw ValidationError("mean_pool_segments needs boundaries");
  seq.validate();
  Tape tape(false);
  return segment_mean(tape.constant(seq.data), seq.boundaries).value();
}

double binary_cross_entropy(double logit0, double logit1, int label) {
  if (label != 0 && label != 1) throw ValidationError("binary label must be 0 or 1");
  const std::array<double, 2> z{logit0, logit1};
  return cross_entropy(std::span<const double>(z), label);
}

}  // namespace irm::nn
