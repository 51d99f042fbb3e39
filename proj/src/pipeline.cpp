#include "irm/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "irm/errors.hpp"
#include "irm/prompts.hpp"
#include "irm/text.hpp"

namespace irm {

ClueTable read_clue_file(const std::filesystem::path& path) {
  ClueTable table;
  for (const auto& j : read_jsonl(path)) {
    if (!j.contains("item_id") || !j.contains("clues")) {
      throw ValidationError(path.string() + ": clue lines need item_id and clues");
    }
    std::vector<ClueCandidate> clues;
    for (const auto& c : j.at("clues")) {
      clues.push_back({c.at("action").get<std::string>(), c.at("intent").get<std::string>()});
    }
    table[j.at("item_id").get<std::string>()] = std::move(clues);
  }
  return table;
}

void write_clue_file(const std::filesystem::path& path, const ClueTable& clues,
                     const nlohmann::json& header) {
  std::vector<nlohmann::json> lines;
  for (const auto& [id, list] : clues) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : list) arr.push_back({{"action", c.action}, {"intent", c.intent}});
    lines.push_back({{"item_id", id}, {"clues", arr}});
  }
  write_jsonl(path, lines, header);
}

ClueSource clue_source_from_string(std::string_view name) {
  if (name == "dataset") return ClueSource::dataset;
  if (name == "file") return ClueSource::file;
  if (name == "generate") return ClueSource::generate;
  throw ValidationError("unknown clue source '" + std::string(name) + "'");
}

reasoner::VisualContext visual_context(const vem::FrameFeatures& frames) {
  reasoner::VisualContext ctx;
  ctx.timestamps = frames.timestamps;
  for (const auto& f : frames.frames) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "feature digest mean %.3f spread %.3f", f.mean(),
                  std::sqrt((f.array() - f.mean()).square().mean()));
    ctx.captions.emplace_back(buf);
  }
  return ctx;
}

vem::FrameFeatures item_frames(const IrmModel& model, const IVQAItem& item, std::uint64_t seed) {
  const auto visible = visible_timeline(item.duration, item.excluded_spans);
  const auto stamps = sample_frames(visible, model.config.frame_count);
  return vem::synthesize_frames(item.video_id, stamps, model.config.tokens_per_frame,
                                model.config.d_visual, seed);
}

eval::PredictionRecord infer_item(IrmModel& model, const IVQAItem& item,
                                  reasoner::ChatBackend& backend, const InferenceOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  eval::PredictionRecord record;
  record.item_id = item.id;
  record.question = item.question;
  record.gold_index = item.answer_index;
  record.gold_text = item.gold_text();
  record.question_first_word = first_word(item.question);

  try {
    const vem::FrameFeatures frames = item_frames(model, item, options.seed);

    std::vector<ClueCandidate> candidates;
    switch (options.clue_source) {
      case ClueSource::dataset:
        candidates = item.clue_candidates();
        break;
      case ClueSource::file: {
        if (options.clue_table == nullptr) throw ValidationError("no clue file loaded");
        const auto it = options.clue_table->find(item.id);
        if (it == options.clue_table->end()) {
          throw ValidationError("clue file has no entry for item " + item.id);
        }
        candidates = it->second;
        break;
      }
      case ClueSource::generate:
        candidates =
            reasoner::generate_clue_candidates(visual_context(frames), item.question, backend).clues;
        break;
    }

    const IterationResult iter =
        run_iterations(model, frames, candidates, item.question, options.iterations);
    std::vector<ClueCandidate> refined;
    for (std::size_t i : iter.kept) refined.push_back(candidates[i]);
    record.kept_clues = iter.kept;

    if (!item.options.empty()) {
      const auto prompt = reasoner::build_mc_prompt(item, refined);
      record.predicted_text = backend.complete(prompt).text;
      const auto parsed =
          reasoner::parse_option(record.predicted_text, static_cast<int>(item.options.size()));
      record.predicted_index = parsed.option_index;
      record.parse_status = std::string(reasoner::to_string(parsed.status));
    } else {
      const auto prompt = reasoner::build_open_prompt(item, refined);
      record.predicted_text = backend.complete(prompt).text;
      record.parse_status = "ok";
    }
  } catch (const TransportError& e) {
    record.error = std::string("transport: ") + e.what();
    record.parse_status = "failed";
  } catch (const ProtocolError& e) {
    record.error = "protocol (HTTP " + std::to_string(e.status()) + "): " + e.what();
    record.parse_status = "failed";
  } catch (const ValidationError& e) {
    record.error = std::string("validation: ") + e.what();
    record.parse_status = "failed";
  }
  if (options.record_latency) {
    record.latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return record;
}

std::vector<eval::PredictionRecord> run_inference(IrmModel& model, std::span<const IVQAItem> items,
                                                  reasoner::ChatBackend& backend,
                                                  const InferenceOptions& options) {
  std::vector<eval::PredictionRecord> out(items.size());
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(items.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) out[i] = infer_item(model, items[i], backend, options);
    return out;
  }
  // Value-level forward passes only read the parameters.
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < items.size(); i = next++) {
        out[i] = infer_item(model, items[i], backend, options);
      }
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace irm
