#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace irm {

// Closed interval of video time in seconds. Also used for the open
// complement intervals returned by visible_timeline().
struct TimeSpan {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool operator==(const TimeSpan&) const = default;
};

using EvidenceSpan = TimeSpan;

struct ClueCandidate {
  std::string action;
  std::string intent;

  bool operator==(const ClueCandidate&) const = default;
};

struct ClueAnnotation {
  std::string action;
  std::string intent;
  EvidenceSpan source_span;
  std::optional<int> relation_label;  // 0 or 1 once annotated
  // Set by noisy_augment() on clues borrowed from an unrelated video.
  bool noisy = false;
  std::string source_video_id;

  ClueCandidate candidate() const { return {action, intent}; }
  bool operator==(const ClueAnnotation&) const = default;
};

struct IVQAItem {
  std::string id;
  std::string video_id;
  double duration = 0.0;
  std::vector<EvidenceSpan> excluded_spans;
  std::string question;
  std::vector<std::string> options;  // empty for the open-ended subset
  std::optional<int> answer_index;
  std::string answer;  // gold answer text; options[answer_index] when empty
  std::vector<ClueAnnotation> clues;
  bool open_ended_eligible = false;
  bool annotation_incomplete = false;
  nlohmann::json extra = nlohmann::json::object();  // unknown source fields

  std::string gold_text() const;
  std::vector<ClueCandidate> clue_candidates() const;
  bool operator==(const IVQAItem&) const = default;
};

// Throws ValidationError describing the first broken invariant.
void validate_span(const EvidenceSpan& span, double duration);
void validate_item(const IVQAItem& item);

// ---- masking ---------------------------------------------------------------

inline constexpr double kDefaultSigma = 20.0;

// [max(0, start - duration/sigma), min(duration, end + duration/sigma)]
EvidenceSpan extend_span(const EvidenceSpan& span, double duration, double sigma = kDefaultSigma);

// Sorted union of possibly overlapping spans.
std::vector<TimeSpan> merge_spans(std::span<const TimeSpan> spans);

// Complement of the excluded union inside [0, duration]; sorted, disjoint,
// non-empty.
std::vector<TimeSpan> visible_timeline(double duration, std::span<const EvidenceSpan> excluded);

// k timestamps at bin midpoints of the concatenated visible coordinate.
std::vector<double> sample_frames(std::span<const TimeSpan> visible, std::size_t k);

// ---- filters ---------------------------------------------------------------

// Bumped whenever the timestamp pattern list changes.
inline constexpr const char* kTemporalPatternVersion = "1";

bool answer_has_timestamp(const std::string& answer);
// true = exclude: the gold answer names a time.
bool filter_temporal_answer(const IVQAItem& item);
// true = exclude: question starts with "when" or "where".
bool filter_wh_insufficient(const IVQAItem& item);

// Touching endpoints do not count as overlap.
bool spans_overlap(const EvidenceSpan& a, const EvidenceSpan& b);
bool check_clue_eligibility(const EvidenceSpan& context_span,
                            std::span<const EvidenceSpan> excluded);

// ---- relation annotation ---------------------------------------------------

// Labels each clue as contributing (1) or not (0) to answering `question`.
// Implementations return raw text; see annotate_relations for the grammar.
class RelationJudge {
 public:
  virtual ~RelationJudge() = default;
  virtual std::string judge(const std::string& question,
                            std::span<const ClueCandidate> clues) = 0;
};

// Replays a fixed list of responses in order; for tests and dry runs.
class ScriptedRelationJudge : public RelationJudge {
 public:
  explicit ScriptedRelationJudge(std::vector<std::string> responses)
      : responses_(std::move(responses)) {}

  std::string judge(const std::string& question, std::span<const ClueCandidate> clues) override;

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
};

struct RelationAnnotation {
  std::vector<std::optional<int>> labels;  // one per clue
  std::vector<std::string> errors;         // "clue 2: ..." entries

  bool complete() const { return errors.empty(); }
};

// Expects one 0/1 token per clue, separated by commas or whitespace. Missing
// or malformed tokens become per-clue errors; nothing is defaulted.
RelationAnnotation annotate_relations(std::span<const ClueCandidate> clues,
                                      const std::string& question, RelationJudge& judge);

// ---- statistics ------------------------------------------------------------

struct DatasetStats {
  std::size_t item_count = 0;
  std::map<double, std::size_t> duration_histogram;        // 30 s buckets, lower bound
  std::map<double, std::size_t> evidence_ratio_histogram;  // 0.1 buckets, lower bound
  std::map<std::string, std::size_t> question_first_word_histogram;
  std::map<std::size_t, std::size_t> clues_per_item_histogram;
  double relation_positive_fraction = 0.0;  // over labeled clues

  nlohmann::json to_json() const;
};

inline constexpr double kDurationBucketSeconds = 30.0;
inline constexpr double kEvidenceRatioBucket = 0.1;

// Excluded union measure over duration.
double evidence_ratio(const IVQAItem& item);

DatasetStats compute_statistics(std::span<const IVQAItem> items);

// Bar charts of the four histograms as a standalone SVG document.
std::string render_stats_svg(const DatasetStats& stats);

// ---- persistence -----------------------------------------------------------

nlohmann::json item_to_json(const IVQAItem& item);
IVQAItem item_from_json(const nlohmann::json& j);

// Line-delimited: optional {"_header": {...}} first line, then one item per
// line. Reading validates every item and reports the offending line.
void write_dataset(const std::filesystem::path& path, std::span<const IVQAItem> items,
                   const nlohmann::json& header = nullptr);
std::vector<IVQAItem> read_dataset(const std::filesystem::path& path);

// Serializes `lines` (plus optional header) as JSONL and writes atomically.
void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> lines,
                 const nlohmann::json& header = nullptr);
// Returns record lines; header lines are skipped.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

// ---- source adapters and the build pipeline --------------------------------

struct ContextQa {
  std::string action;  // declarative rewrite (or the raw context question)
  std::string intent;  // context answer
  EvidenceSpan span;
  std::optional<int> relation_label;
  bool needs_rewrite = false;  // action still holds the raw context question
};

// One grounded-VQA annotation: question, answer, options, and the grounded
// evidence spans. Keys not understood by the adapter land in `passthrough`.
struct SourceRecord {
  std::string id;
  std::string video_id;
  double duration = 0.0;
  std::string question;
  std::vector<std::string> options;
  std::optional<int> answer_index;
  std::string answer;
  std::vector<EvidenceSpan> evidence;
  std::vector<ContextQa> context;
  bool open_ended_eligible = false;
  nlohmann::json passthrough = nlohmann::json::object();
};

// Accepts the common grounded-VQA layouts: evidence under "spans",
// "location", "timestamps" or "relevant_windows"; options under "options",
// "choices" or "candidates"; answer as text ("answer") and/or index
// ("answer_index", "answer_idx"). Context pairs come from "clues"
// ({action, intent, span}) or "context_qa" ({question, answer, span}).
SourceRecord source_from_json(const nlohmann::json& j);
std::vector<SourceRecord> read_source(const std::filesystem::path& path);

// Context questions are rewritten into declarative actions by this hook. The
// default strips the trailing question mark.
using ActionRewriter = std::function<std::string(const std::string& context_question)>;
std::string default_action_rewrite(const std::string& context_question);

// Human or model judgement hooks ("answerable by commonsense alone",
// "purely descriptive"). Returning true excludes the item.
using ItemExclusionHook = std::function<bool(const IVQAItem&)>;

struct BuildOptions {
  double sigma = kDefaultSigma;
  ItemExclusionHook commonsense_hook;
  ItemExclusionHook descriptive_hook;
  ActionRewriter rewriter = default_action_rewrite;
  RelationJudge* relation_judge = nullptr;  // labels clues the source left unlabeled
};

struct DroppedRecord {
  std::string id;
  std::string reason;  // "invalid: ...", "temporal_answer", "wh_insufficient", ...
};

struct BuildResult {
  std::vector<IVQAItem> items;
  std::vector<DroppedRecord> dropped;
  std::size_t ineligible_clues = 0;  // context pairs overlapping the mask
};

BuildResult build_dataset(std::span<const SourceRecord> sources, const BuildOptions& options);

}  // namespace irm
