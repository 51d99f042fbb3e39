#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "irm/aim.hpp"
#include "irm/vem.hpp"

namespace irm {

struct ModelConfig {
  Eigen::Index d_model = 256;
  int head_count = 4;
  Eigen::Index d_visual = 64;
  int visual_head_count = 4;
  Eigen::Index n_queries = 32;
  Eigen::Index tokens_per_frame = 4;
  std::size_t frame_count = 8;

  void validate() const;
};

// Every trainable piece of the clue-reasoning stack plus the two frozen
// word-embedding tables (text at d_model, instruction at d_visual).
struct IrmModel {
  ModelConfig config;
  aim::AimParams aim;
  vem::VemParams vem;
  TokenEmbedder text_embedder;
  TokenEmbedder instruction_embedder;

  explicit IrmModel(const ModelConfig& cfg);

  // Uniform +-1/sqrt(fan_in) everywhere except the attention output
  // projections, which start at zero.
  static IrmModel create(const ModelConfig& cfg, std::uint64_t seed);

  std::vector<nn::Parameter*> parameters();
  void zero_grad();

  void save(const std::filesystem::path& path);
  void load(const std::filesystem::path& path);
};

struct IterationResult {
  vem::VisualState visual;
  aim::RelationLogits logits;              // from the last pass
  aim::ClueBank refined;                   // from the last pass
  std::vector<std::size_t> kept;           // indices into the original candidates
  std::vector<std::vector<std::size_t>> kept_history;  // one entry per pass
};

// Pass 0 verifies actions against X_V = f_P(Q_V), classifies, refines and
// enhances. Each of the `extra_iterations` further passes repeats
// verification with the previous X_V' as the visual input, re-selecting from
// the original candidates, and re-enhances X_V. Throws on extra_iterations < 0.
IterationResult run_iterations(IrmModel& model, const vem::FrameFeatures& frames,
                               std::span<const ClueCandidate> candidates,
                               const std::string& question, int extra_iterations);

}  // namespace irm
