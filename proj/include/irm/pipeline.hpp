#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "irm/backend.hpp"
#include "irm/eval.hpp"
#include "irm/model.hpp"

namespace irm {

using ClueTable = std::map<std::string, std::vector<ClueCandidate>>;

// JSONL lines {"item_id": ..., "clues": [{"action": ..., "intent": ...}]}.
ClueTable read_clue_file(const std::filesystem::path& path);
void write_clue_file(const std::filesystem::path& path, const ClueTable& clues,
                     const nlohmann::json& header = nullptr);

enum class ClueSource { dataset, file, generate };
ClueSource clue_source_from_string(std::string_view name);

struct InferenceOptions {
  int iterations = 0;
  ClueSource clue_source = ClueSource::dataset;
  const ClueTable* clue_table = nullptr;  // required for ClueSource::file
  bool record_latency = false;
  int workers = 1;
  std::uint64_t seed = 2024;  // frame synthesis
};

// Text stand-in for the sampled frames handed to the clue generator: one
// short numeric digest per frame.
reasoner::VisualContext visual_context(const vem::FrameFeatures& frames);

vem::FrameFeatures item_frames(const IrmModel& model, const IVQAItem& item, std::uint64_t seed);

// Frames, clues, AIM/VEM iterations, prompt, completion, answer parsing.
// Backend failures are recorded on the returned record instead of thrown.
eval::PredictionRecord infer_item(IrmModel& model, const IVQAItem& item,
                                  reasoner::ChatBackend& backend, const InferenceOptions& options);

// Output order follows the input regardless of the worker count.
std::vector<eval::PredictionRecord> run_inference(IrmModel& model, std::span<const IVQAItem> items,
                                                  reasoner::ChatBackend& backend,
                                                  const InferenceOptions& options);

}  // namespace irm
