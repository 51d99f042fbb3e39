#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irm/backend.hpp"
#include "irm/dataset.hpp"

namespace irm::eval {

struct PredictionRecord {
  std::string item_id;
  std::string question;
  std::optional<int> predicted_index;
  std::string predicted_text;  // raw model reply
  std::string parse_status;    // "ok" | "ambiguous" | "none" | "failed"
  std::optional<int> gold_index;
  std::string gold_text;
  std::vector<int> gold_labels;  // PSAV: every acceptable strategy index
  std::string question_first_word;
  double latency = 0.0;
  std::string error;  // set when the backend failed for this item
  std::vector<std::size_t> kept_clues;

  bool operator==(const PredictionRecord&) const = default;
};

nlohmann::json record_to_json(const PredictionRecord& record);
PredictionRecord record_from_json(const nlohmann::json& j);

// Line-delimited records behind a {"_header": ...} line; written atomically.
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records,
                       const nlohmann::json& header);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path,
                                               nlohmann::json* header = nullptr);

// 100 * correct / total. Missing predictions count as wrong. Throws on an
// empty list or a record without gold_index.
double mc_accuracy(std::span<const PredictionRecord> records);

struct JudgeVerdict {
  double score = 0.0;  // [0, 5]
  bool correct = false;
};

class AnswerJudge {
 public:
  virtual ~AnswerJudge() = default;
  virtual JudgeVerdict judge(const std::string& question, const std::string& prediction,
                             const std::string& gold) = 0;
};

// Token-multiset F1 over lowercase alphanumeric tokens. 0 when either side
// has no tokens.
double token_f1(const std::string& prediction, const std::string& gold);

// score = round(5 * F1), correct = F1 >= 0.5.
class MockJudge : public AnswerJudge {
 public:
  JudgeVerdict judge(const std::string& question, const std::string& prediction,
                     const std::string& gold) override;
};

reasoner::PromptBundle build_answer_judge_prompt(const std::string& question,
                                                 const std::string& prediction,
                                                 const std::string& gold);
// Reads "score: <0-5>, correct: <yes|no>"; throws ProtocolError otherwise.
JudgeVerdict parse_judge_reply(const std::string& reply);

class ChatJudge : public AnswerJudge {
 public:
  explicit ChatJudge(reasoner::ChatBackend& backend) : backend_(backend) {}
  JudgeVerdict judge(const std::string& question, const std::string& prediction,
                     const std::string& gold) override;

 private:
  reasoner::ChatBackend& backend_;
};

struct OpenEndedResult {
  double mean_score = 0.0;
  double accuracy = 0.0;  // percent judged correct
  std::size_t judged = 0;
  std::vector<std::string> exclusions;  // "<item_id>: <reason>"
};

// Items whose judgement throws are excluded and listed, never dropped
// silently. Throws when nothing could be judged.
OpenEndedResult open_ended_eval(std::span<const PredictionRecord> records, AnswerJudge& judge);

inline constexpr int kPsavLabelCount = 12;

struct PsavMetrics {
  double recall = 0.0;
  double accuracy = 0.0;
};

// Accuracy: prediction inside the gold set. Recall: per-item share of the
// gold set covered by the prediction, averaged over items.
PsavMetrics psav_metrics(std::span<const PredictionRecord> records);

// Appends ceil(ratio * n) clues to every item with n clues, drawn from items
// of other videos and flagged noisy. Per-item draws depend only on
// (seed, item id), so the result does not depend on item order.
std::vector<IVQAItem> noisy_augment(std::span<const IVQAItem> items, double ratio,
                                    std::uint64_t seed);
std::vector<IVQAItem> remove_noise(std::span<const IVQAItem> items);

struct RobustnessReport {
  double vanilla_accuracy = 0.0;
  double noisy_accuracy = 0.0;
  double drop = 0.0;

  nlohmann::json to_json() const;
};

RobustnessReport robustness_report(double vanilla_accuracy, double noisy_accuracy);
// Throws ValidationError unless both runs cover the same item ids.
RobustnessReport robustness_report(std::span<const PredictionRecord> vanilla,
                                   std::span<const PredictionRecord> noisy);

// "why" | "what" | "how" | "other".
std::string question_type(std::string_view first_word);

struct TypeBreakdown {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;
};

std::map<std::string, TypeBreakdown> breakdown_by_question_type(
    std::span<const PredictionRecord> records);

// Sample Pearson correlation. Throws on length mismatch, fewer than two
// points or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct SeedAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single seed
  std::vector<double> values;
};

SeedAggregate aggregate_seeds(std::span<const double> values);

}  // namespace irm::eval
