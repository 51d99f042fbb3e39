#include "irm/vem.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "irm/checkpoint.hpp"
#include "irm/errors.hpp"

namespace irm::vem {

void FrameFeatures::validate() const {
  if (frames.empty()) throw ValidationError("no visual input");
  if (timestamps.size() != frames.size()) {
    throw ValidationError("frame features need exactly one timestamp per frame");
  }
  for (const auto& f : frames) {
    if (f.rows() != tokens_per_frame() || f.cols() != d_visual() || f.size() == 0) {
      throw ShapeError("all frames must share one [tokens x d_visual] shape");
    }
  }
  if (!std::is_sorted(timestamps.begin(), timestamps.end())) {
    throw ValidationError("frame timestamps must be sorted");
  }
}

Matrix FrameFeatures::flattened() const {
  Matrix out(static_cast<Eigen::Index>(frames.size()) * tokens_per_frame(), d_visual());
  Eigen::Index at = 0;
  for (const auto& f : frames) {
    out.middleRows(at, f.rows()) = f;
    at += f.rows();
  }
  return out;
}

CompressorParams::CompressorParams(Eigen::Index n_queries, Eigen::Index d_visual, int heads)
    : queries("vem.compressor.queries", Matrix::Zero(n_queries, d_visual)),
      attention("vem.compressor.attention", d_visual, heads) {
  if (n_queries < 1) throw ValidationError("n_queries must be at least 1");
}

void CompressorParams::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(queries.value.cols()));
  for (Eigen::Index i = 0; i < queries.value.size(); ++i) {
    queries.value.data()[i] = rng.uniform(-bound, bound);
  }
  attention.init(rng);
}

std::vector<nn::Parameter*> CompressorParams::parameters() {
  std::vector<nn::Parameter*> out{&queries};
  auto p = attention.parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

VemParams::VemParams(Eigen::Index n_queries, Eigen::Index d_visual, Eigen::Index d_model,
                     int visual_heads, int heads)
    : compressor(n_queries, d_visual, visual_heads),
      projection("vem.projection", d_visual, d_model),
      enhancement("vem.enhancement", d_model, heads) {}

void VemParams::init(Rng& rng) {
  compressor.init(rng);
  projection.init_uniform(rng);
  enhancement.init(rng);
}

std::vector<nn::Parameter*> VemParams::parameters() {
  std::vector<nn::Parameter*> out = compressor.parameters();
  for (auto* p : projection.parameters()) out.push_back(p);
  for (auto* p : enhancement.parameters()) out.push_back(p);
  return out;
}

std::string compression_instruction(const std::string& question) {
  return "Extract the context clues related to the question: " + question;
}

nn::Var compress_visual(nn::Tape& tape, CompressorParams& params, const Matrix& frame_tokens,
                        const Matrix& instruction_tokens) {
  if (frame_tokens.rows() == 0) throw ValidationError("no visual input");
  const nn::Var kv_parts[] = {tape.constant(frame_tokens), tape.constant(instruction_tokens)};
  nn::Var kv = nn::concat_rows(kv_parts);
  return nn::cross_attention(tape, params.attention, tape.parameter(params.queries), kv);
}

nn::Var project(nn::Tape& tape, nn::Linear& projection, nn::Var compressed) {
  return projection.forward(tape, compressed);
}

nn::Var enhance(nn::Tape& tape, nn::AttentionBlock& block, nn::Var projected,
                nn::Var clue_tokens) {
  return nn::cross_attention(tape, block, projected, clue_tokens);
}

Matrix compress_visual(const FrameFeatures& frames, const std::string& instruction,
                       CompressorParams& params, const TokenEmbedder& instruction_embedder) {
  frames.validate();
  if (instruction_embedder.dim() != frames.d_visual()) {
    throw ShapeError("instruction embedder width does not match d_visual");
  }
  nn::Tape tape(false);
  return compress_visual(tape, params, frames.flattened(), instruction_embedder.embed(instruction))
      .value();
}

Matrix project(nn::Linear& projection, const Matrix& compressed) {
  if (!compressed.allFinite()) throw ValidationError("compressed visual input is not finite");
  return projection.forward(compressed);
}

Matrix enhance(nn::AttentionBlock& block, const Matrix& projected, const aim::ClueBank& refined) {
  if (refined.n_clues == 0) return projected;
  nn::Tape tape(false);
  const nn::Var parts[] = {tape.constant(refined.actions.data), tape.constant(refined.intents.data)};
  nn::Var clues = nn::concat_rows(parts);
  return enhance(tape, block, tape.constant(projected), clues).value();
}

FrameFeatures synthesize_frames(const std::string& video_id, std::span<const double> timestamps,
                                Eigen::Index tokens_per_frame, Eigen::Index d_visual,
                                std::uint64_t seed) {
  const std::uint64_t video_key = hash_combine(seed, stable_hash(video_id));
  Rng video_rng(video_key);
  Eigen::RowVectorXd base(d_visual);
  for (Eigen::Index c = 0; c < d_visual; ++c) base(c) = video_rng.normal();

  FrameFeatures out;
  for (double t : timestamps) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &t, sizeof(bits));
    Rng rng(hash_combine(video_key, bits));
    Matrix frame(tokens_per_frame, d_visual);
    for (Eigen::Index r = 0; r < tokens_per_frame; ++r) {
      for (Eigen::Index c = 0; c < d_visual; ++c) frame(r, c) = 0.5 * base(c) + 0.5 * rng.normal();
    }
    out.frames.push_back(std::move(frame));
    out.timestamps.push_back(t);
  }
  return out;
}

void write_frame_features(const std::filesystem::path& path, const FrameFeatures& features) {
  features.validate();
  NamedArray feats;
  feats.name = "features";
  feats.shape = {static_cast<std::int64_t>(features.frame_count()), features.tokens_per_frame(),
                 features.d_visual()};
  for (const auto& f : features.frames) {
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.cols(); ++c) feats.data.push_back(f(r, c));
    }
  }
  NamedArray stamps;
  stamps.name = "timestamps";
  stamps.shape = {static_cast<std::int64_t>(features.timestamps.size())};
  stamps.data = features.timestamps;
  const NamedArray arrays[] = {feats, stamps};
  write_arrays(path, arrays);
}

FrameFeatures read_frame_features(const std::filesystem::path& path) {
  const NamedArray* feats = nullptr;
  const NamedArray* stamps = nullptr;
  const auto arrays = read_arrays(path);
  for (const auto& a : arrays) {
    if (a.name == "features") feats = &a;
    if (a.name == "timestamps") stamps = &a;
  }
  if (feats == nullptr || stamps == nullptr || feats->shape.size() != 3 || stamps->shape.size() != 1) {
    throw ValidationError(path.string() + ": expected 'features' [n,t,d] and 'timestamps' [n]");
  }
  FrameFeatures out;
  const auto n = feats->shape[0];
  const auto t = feats->shape[1];
  const auto d = feats->shape[2];
  std::size_t k = 0;
  for (std::int64_t f = 0; f < n; ++f) {
    Matrix frame(t, d);
    for (Eigen::Index r = 0; r < t; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) frame(r, c) = feats->data[k++];
    }
    out.frames.push_back(std::move(frame));
  }
  out.timestamps = stamps->data;
  out.validate();
  return out;
}

}  // namespace irm::vem
