#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irm/backend.hpp"
#include "irm/model.hpp"

namespace irm {

struct TrainConfig {
  int steps = 200;
  int batch_size = 8;
  double learning_rate = 1e-2;
  int train_items = 200;
  int eval_items = 40;
  int answer_buckets = 64;  // output width of the proxy decoder
  double generation_weight = 1.0;
  double relation_weight = 2.0;
  double relation_decay = 0.05;  // per epoch
};

struct InferConfig {
  // "dataset": clues stored with each item; "file": clue_file JSONL keyed by
  // item id; "generate": ask the backend.
  std::string clue_source = "dataset";
  std::filesystem::path clue_file;
  bool record_latency = false;
  int workers = 1;
  std::filesystem::path checkpoint;
};

struct RunConfig {
  std::uint64_t seed = 2024;
  std::vector<std::uint64_t> seeds = {2024, 2025, 2026};
  std::filesystem::path out_dir = "irm-out";
  int iterations = 0;  // extra AIM/VEM passes
  double sigma = kDefaultSigma;
  double noise_ratio = 0.5;
  ModelConfig model;
  reasoner::BackendConfig backend;
  TrainConfig train;
  InferConfig infer;

  void validate() const;
  nlohmann::json to_json() const;
};

// Flat INI document, one section per concern:
//   [run] seed, seeds, out_dir, iterations
//   [dataset] sigma, noise_ratio
//   [model] d_model, head_count, d_visual, visual_head_count, n_queries,
//           tokens_per_frame, frame_count
//   [backend] kind, endpoint, model, timeout, max_in_flight, retry_budget,
//             backoff, temperature, credential_env, mock_script
//   [train] steps, batch_size, learning_rate, train_items, eval_items,
//           answer_buckets, generation_weight, relation_weight, relation_decay
//   [infer] clue_source, clue_file, record_latency, workers, checkpoint
// Unknown keys are errors. Missing keys keep their defaults.
RunConfig load_config(const std::filesystem::path& path);
void apply_config_text(RunConfig& config, const std::string& ini_text);

}  // namespace irm
