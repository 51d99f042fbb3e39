#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irm/aim.hpp"
#include "irm/layers.hpp"
#include "irm/text.hpp"

// Visual Enhancement Module: instruction-conditioned query compression of
// frame tokens, projection into the text width, and clue-conditioned
// enhancement.
namespace irm::vem {

using nn::Matrix;

struct FrameFeatures {
  std::vector<Matrix> frames;  // each [tokens_per_frame x d_visual]
  std::vector<double> timestamps;

  std::size_t frame_count() const { return frames.size(); }
  Eigen::Index tokens_per_frame() const { return frames.empty() ? 0 : frames.front().rows(); }
  Eigen::Index d_visual() const { return frames.empty() ? 0 : frames.front().cols(); }

  // All frames the same shape, one timestamp each, timestamps sorted.
  void validate() const;

  // [n_frames * tokens_per_frame x d_visual], frame-major.
  Matrix flattened() const;
};

struct VisualState {
  Matrix compressed;               // Q_V   [n_queries x d_visual]
  Matrix projected;                // X_V   [n_queries x d_model]
  std::optional<Matrix> enhanced;  // X_V'  same shape as projected
  int iteration = 0;
};

struct CompressorParams {
  nn::Parameter queries;  // learned [n_queries x d_visual]
  nn::AttentionBlock attention;

  CompressorParams() = default;
  CompressorParams(Eigen::Index n_queries, Eigen::Index d_visual, int heads);

  Eigen::Index n_queries() const { return queries.value.rows(); }

  void init(Rng& rng);
  std::vector<nn::Parameter*> parameters();
};

struct VemParams {
  CompressorParams compressor;
  nn::Linear projection;           // d_visual -> d_model
  nn::AttentionBlock enhancement;  // X_V attends to the refined clue tokens

  VemParams() = default;
  VemParams(Eigen::Index n_queries, Eigen::Index d_visual, Eigen::Index d_model, int visual_heads,
            int heads);

  void init(Rng& rng);
  std::vector<nn::Parameter*> parameters();
};

// "Extract the context clues related to the question: <question>"
std::string compression_instruction(const std::string& question);

// ---- tape forms ------------------------------------------------------------

// Learned queries attend over the flattened frame tokens followed by the
// instruction tokens.
nn::Var compress_visual(nn::Tape& tape, CompressorParams& params, const Matrix& frame_tokens,
                        const Matrix& instruction_tokens);
nn::Var project(nn::Tape& tape, nn::Linear& projection, nn::Var compressed);
nn::Var enhance(nn::Tape& tape, nn::AttentionBlock& block, nn::Var projected,
                nn::Var clue_tokens);

// ---- value forms -----------------------------------------------------------

// Throws ValidationError("no visual input") on empty frames.
Matrix compress_visual(const FrameFeatures& frames, const std::string& instruction,
                       CompressorParams& params, const TokenEmbedder& instruction_embedder);

Matrix project(nn::Linear& projection, const Matrix& compressed);

// X_V' = attention(query = X_V, kv = actions ++ intents of the refined bank).
// A bank without clues leaves X_V unchanged.
Matrix enhance(nn::AttentionBlock& block, const Matrix& projected, const aim::ClueBank& refined);

// ---- frame sources ---------------------------------------------------------

// Deterministic stand-in for a visual encoder: each frame's tokens are
// Gaussian draws seeded from (seed, video_id, timestamp). A shared
// per-video component keeps frames of one video correlated.
FrameFeatures synthesize_frames(const std::string& video_id, std::span<const double> timestamps,
                                Eigen::Index tokens_per_frame, Eigen::Index d_visual,
                                std::uint64_t seed);

// Named-array container with "features" [n_frames, tokens, d_visual] and
// "timestamps" [n_frames].
void write_frame_features(const std::filesystem::path& path, const FrameFeatures& features);
FrameFeatures read_frame_features(const std::filesystem::path& path);

}  // namespace irm::vem
