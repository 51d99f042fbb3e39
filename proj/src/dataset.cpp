#include "irm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "irm/checkpoint.hpp"
#include "irm/errors.hpp"
#include "irm/random.hpp"
#include "irm/text.hpp"

namespace irm {
namespace {

std::string describe(const EvidenceSpan& s) {
  std::ostringstream out;
  out << "[" << s.start << ", " << s.end << "]";
  return out.str();
}

}  // namespace

std::string IVQAItem::gold_text() const {
  if (!answer.empty()) return answer;
  if (answer_index && *answer_index >= 0 &&
      static_cast<std::size_t>(*answer_index) < options.size()) {
    return options[static_cast<std::size_t>(*answer_index)];
  }
  return {};
}

std::vector<ClueCandidate> IVQAItem::clue_candidates() const {
  std::vector<ClueCandidate> out;
  out.reserve(clues.size());
  for (const auto& c : clues) out.push_back(c.candidate());
  return out;
}

void validate_span(const EvidenceSpan& span, double duration) {
  if (!std::isfinite(span.start) || !std::isfinite(span.end)) {
    throw ValidationError("span " + describe(span) + " is not finite");
  }
  if (span.start < 0.0 || span.start >= span.end) {
    throw ValidationError("span " + describe(span) + " must satisfy 0 <= start < end");
  }
  if (span.end > duration) {
    throw ValidationError("span " + describe(span) + " ends after the video (" +
                          std::to_string(duration) + " s)");
  }
}

void validate_item(const IVQAItem& item) {
  if (item.video_id.empty()) throw ValidationError("item has no video_id");
  if (!(item.duration > 0.0) || !std::isfinite(item.duration)) {
    throw ValidationError("item " + item.id + ": duration must be positive");
  }
  for (const auto& s : item.excluded_spans) validate_span(s, item.duration);
  if (!item.options.empty() && (item.options.size() < 2 || item.options.size() > 5)) {
    throw ValidationError("item " + item.id + ": expected 2-5 options");
  }
  if (item.answer_index) {
    if (*item.answer_index < 0 || static_cast<std::size_t>(*item.answer_index) >= item.options.size()) {
      throw ValidationError("item " + item.id + ": answer_index out of range");
    }
  }
  for (const auto& c : item.clues) {
    if (c.action.empty() || c.intent.empty()) {
      throw ValidationError("item " + item.id + ": clue with empty action or intent");
    }
    if (c.relation_label && *c.relation_label != 0 && *c.relation_label != 1) {
      throw ValidationError("item " + item.id + ": relation_label must be 0 or 1");
    }
    if (c.noisy) continue;  // borrowed from another video; its span is foreign
    validate_span(c.source_span, item.duration);
    if (!check_clue_eligibility(c.source_span, item.excluded_spans)) {
      throw ValidationError("item " + item.id + ": clue span " + describe(c.source_span) +
                            " overlaps an excluded span");
    }
  }
}

// ---- masking ---------------------------------------------------------------

EvidenceSpan extend_span(const EvidenceSpan& span, double duration, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  validate_span(span, duration);
  const double pad = duration / sigma;
  return {std::max(0.0, span.start - pad), std::min(duration, span.end + pad)};
}

std::vector<TimeSpan> merge_spans(std::span<const TimeSpan> spans) {
  std::vector<TimeSpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const TimeSpan& a, const TimeSpan& b) { return a.start < b.start; });
  std::vector<TimeSpan> merged;
  for (const auto& s : sorted) {
    if (!merged.empty() && s.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

std::vector<TimeSpan> visible_timeline(double duration, std::span<const EvidenceSpan> excluded) {
  for (const auto& s : excluded) validate_span(s, duration);
  std::vector<TimeSpan> visible;
  double cursor = 0.0;
  for (const auto& s : merge_spans(excluded)) {
    if (s.start > cursor) visible.push_back({cursor, s.start});
    cursor = std::max(cursor, s.end);
  }
  if (cursor < duration) visible.push_back({cursor, duration});
  return visible;
}

std::vector<double> sample_frames(std::span<const TimeSpan> visible, std::size_t k) {
  if (k == 0) throw ValidationError("sample_frames needs k >= 1");
  double total = 0.0;
  for (const auto& v : visible) {
    if (!(v.end > v.start)) throw ValidationError("visible interval must be non-empty");
    total += v.length();
  }
  if (!(total > 0.0)) throw ValidationError("fully masked video");

  // Offsets of each interval on the concatenated coordinate.
  std::vector<double> offset(visible.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < visible.size(); ++j) {
    offset[j] = acc;
    acc += visible[j].length();
  }

  std::vector<double> samples;
  samples.reserve(k);
  const double kd = static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double p = (2.0 * static_cast<double>(i) + 1.0) * total / (2.0 * kd);
    std::size_t j = 0;
    while (j + 1 < visible.size() && p >= offset[j] + visible[j].length()) ++j;
    double t = visible[j].start + (p - offset[j]);
    if (!(t > visible[j].start && t < visible[j].end)) {
      // The midpoint sits on a junction between two intervals (or rounding
      // pushed it onto an edge). Use the midpoint of the largest piece of
      // this bin that lies inside a single interval.
      const double lo = static_cast<double>(i) * total / kd;
      const double hi = static_cast<double>(i + 1) * total / kd;
      double best = -1.0;
      for (std::size_t m = 0; m < visible.size(); ++m) {
        const double a = std::max(lo, offset[m]);
        const double b = std::min(hi, offset[m] + visible[m].length());
        if (b - a > best) {
          best = b - a;
          t = visible[m].start + ((a + b) / 2.0 - offset[m]);
        }
      }
    }
    samples.push_back(t);
  }
  return samples;
}

// ---- filters ---------------------------------------------------------------

bool answer_has_timestamp(const std::string& answer) {
  static const std::regex clock(R"(\b\d{1,2}:\d{2}(:\d{2})?\b)");
  static const std::regex unit_with_preposition(
      R"(\b(at|from|to|until|till|after|before|around)\s+\d+(\.\d+)?\s*(s|secs?|seconds?|mins?|minutes?)\b)",
      std::regex::icase);
  static const std::regex from_to(R"(\bfrom\s+\d+(\.\d+)?\s*\S*\s+to\s+\d+)", std::regex::icase);
  return std::regex_search(answer, clock) || std::regex_search(answer, unit_with_preposition) ||
         std::regex_search(answer, from_to);
}

bool filter_temporal_answer(const IVQAItem& item) { return answer_has_timestamp(item.gold_text()); }

bool filter_wh_insufficient(const IVQAItem& item) {
  const std::string word = to_lower(first_word(item.question));
  return word == "when" || word == "where";
}

bool spans_overlap(const EvidenceSpan& a, const EvidenceSpan& b) {
  return a.start < b.end && b.start < a.end;
}

bool check_clue_eligibility(const EvidenceSpan& context_span,
                            std::span<const EvidenceSpan> excluded) {
  return std::none_of(excluded.begin(), excluded.end(),
                      [&](const EvidenceSpan& e) { return spans_overlap(context_span, e); });
}

// ---- relation annotation ---------------------------------------------------

std::string ScriptedRelationJudge::judge(const std::string&, std::span<const ClueCandidate>) {
  if (next_ >= responses_.size()) throw TransportError("scripted judge exhausted", "scripted");
  return responses_[next_++];
}

RelationAnnotation annotate_relations(std::span<const ClueCandidate> clues,
                                      const std::string& question, RelationJudge& judge) {
  RelationAnnotation result;
  result.labels.assign(clues.size(), std::nullopt);
  if (clues.empty()) return result;

  std::string response;
  try {
    response = judge.judge(question, clues);
  } catch (const std::exception& e) {
    for (std::size_t i = 0; i < clues.size(); ++i) {
      result.errors.push_back("clue " + std::to_string(i) + ": judge failed: " + e.what());
    }
    return result;
  }

  std::vector<std::string> tokens;
  std::string current;
  for (char c : response) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));

  for (std::size_t i = 0; i < clues.size(); ++i) {
    if (i >= tokens.size()) {
      result.errors.push_back("clue " + std::to_string(i) + ": no judgement in response");
    } else if (tokens[i] == "0" || tokens[i] == "1") {
      result.labels[i] = tokens[i] == "1" ? 1 : 0;
    } else {
      result.errors.push_back("clue " + std::to_string(i) + ": unparseable judgement '" +
                              tokens[i] + "'");
    }
  }
  if (tokens.size() > clues.size()) {
    result.errors.push_back("response has " + std::to_string(tokens.size()) + " judgements for " +
                            std::to_string(clues.size()) + " clues");
  }
  return result;
}

// ---- statistics ------------------------------------------------------------

double evidence_ratio(const IVQAItem& item) {
  double masked = 0.0;
  for (const auto& s : merge_spans(item.excluded_spans)) masked += s.length();
  return masked / item.duration;
}

DatasetStats compute_statistics(std::span<const IVQAItem> items) {
  if (items.empty()) throw ValidationError("cannot compute statistics of an empty dataset");
  DatasetStats stats;
  stats.item_count = items.size();
  std::size_t labeled = 0;
  std::size_t positive = 0;
  for (const auto& item : items) {
    const double dur_bucket =
        std::floor(item.duration / kDurationBucketSeconds) * kDurationBucketSeconds;
    ++stats.duration_histogram[dur_bucket];

    // The epsilon keeps exact multiples (0.2 = 12/60) in their own bucket.
    const double ratio = evidence_ratio(item);
    const double steps = std::floor(ratio / kEvidenceRatioBucket + 1e-9);
    const double ratio_bucket = std::min(1.0, steps / 10.0);
    ++stats.evidence_ratio_histogram[ratio_bucket];

    ++stats.question_first_word_histogram[first_word(item.question)];
    ++stats.clues_per_item_histogram[item.clues.size()];
    for (const auto& c : item.clues) {
      if (!c.relation_label) continue;
      ++labeled;
      if (*c.relation_label == 1) ++positive;
    }
  }
  stats.relation_positive_fraction =
      labeled == 0 ? 0.0 : static_cast<double>(positive) / static_cast<double>(labeled);
  return stats;
}

nlohmann::json DatasetStats::to_json() const {
  auto keyed = [](const auto& histogram) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : histogram) {
      std::ostringstream key;
      key << k;
      out[key.str()] = v;
    }
    return out;
  };
  return {{"item_count", item_count},
          {"duration_histogram", keyed(duration_histogram)},
          {"evidence_ratio_histogram", keyed(evidence_ratio_histogram)},
          {"question_first_word_histogram", keyed(question_first_word_histogram)},
          {"clues_per_item_histogram", keyed(clues_per_item_histogram)},
          {"relation_positive_fraction", relation_positive_fraction}};
}

std::string render_stats_svg(const DatasetStats& stats) {
  const nlohmann::json j = stats.to_json();
  const char* panels[] = {"duration_histogram", "evidence_ratio_histogram",
                          "question_first_word_histogram", "clues_per_item_histogram"};
  const int panel_w = 360;
  const int panel_h = 220;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << panel_w * 2 << "\" height=\""
      << panel_h * 2 << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int p = 0; p < 4; ++p) {
    const auto& hist = j.at(panels[p]);
    const int x0 = (p % 2) * panel_w;
    const int y0 = (p / 2) * panel_h;
    svg << "<text x=\"" << x0 + 10 << "\" y=\"" << y0 + 16 << "\" font-size=\"12\">" << panels[p]
        << "</text>\n";
    std::size_t max_count = 1;
    for (const auto& [k, v] : hist.items()) max_count = std::max(max_count, v.get<std::size_t>());
    const std::size_t bars = std::max<std::size_t>(hist.size(), 1);
    const double bar_w = (panel_w - 40.0) / static_cast<double>(bars);
    std::size_t i = 0;
    for (const auto& [k, v] : hist.items()) {
      const double h = (panel_h - 60.0) * v.get<double>() / static_cast<double>(max_count);
      const double x = x0 + 20.0 + bar_w * static_cast<double>(i);
      const double y = y0 + panel_h - 30.0 - h;
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w * 0.8 << "\" height=\""
          << h << "\" fill=\"#4c72b0\"/>\n";
      svg << "<text x=\"" << x << "\" y=\"" << y0 + panel_h - 16 << "\">" << k << "</text>\n";
      svg << "<text x=\"" << x << "\" y=\"" << y - 2 << "\">" << v.get<std::size_t>() << "</text>\n";
      ++i;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

// ---- persistence -----------------------------------------------------------

namespace {

nlohmann::json span_json(const EvidenceSpan& s) { return nlohmann::json::array({s.start, s.end}); }

EvidenceSpan span_from(const nlohmann::json& j) {
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  if (j.is_object()) {
    return {j.at("start").get<double>(), j.at("end").get<double>()};
  }
  throw ValidationError("span must be [start, end]");
}

std::optional<int> optional_int(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<int>();
}

}  // namespace

nlohmann::json item_to_json(const IVQAItem& item) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : item.excluded_spans) spans.push_back(span_json(s));
  nlohmann::json clues = nlohmann::json::array();
  for (const auto& c : item.clues) {
    nlohmann::json cj = {{"action", c.action},
                         {"intent", c.intent},
                         {"source_span", span_json(c.source_span)},
                         {"relation_label", c.relation_label ? nlohmann::json(*c.relation_label)
                                                             : nlohmann::json(nullptr)}};
    if (c.noisy) cj["noisy"] = true;
    if (!c.source_video_id.empty()) cj["source_video_id"] = c.source_video_id;
    clues.push_back(std::move(cj));
  }
  nlohmann::json j = {
      {"id", item.id},
      {"video_id", item.video_id},
      {"duration", item.duration},
      {"excluded_spans", spans},
      {"question", item.question},
      {"options", item.options},
      {"answer_index", item.answer_index ? nlohmann::json(*item.answer_index) : nlohmann::json(nullptr)},
      {"clues", clues},
      {"open_ended_eligible", item.open_ended_eligible},
  };
  if (!item.answer.empty()) j["answer"] = item.answer;
  if (item.annotation_incomplete) j["annotation_incomplete"] = true;
  if (!item.extra.empty()) j["extra"] = item.extra;
  return j;
}

IVQAItem item_from_json(const nlohmann::json& j) {
  try {
    IVQAItem item;
    item.id = j.value("id", std::string());
    item.video_id = j.at("video_id").get<std::string>();
    item.duration = j.at("duration").get<double>();
    for (const auto& s : j.at("excluded_spans")) item.excluded_spans.push_back(span_from(s));
    item.question = j.at("question").get<std::string>();
    item.options = j.at("options").get<std::vector<std::string>>();
    item.answer_index = optional_int(j, "answer_index");
    item.answer = j.value("answer", std::string());
    for (const auto& cj : j.at("clues")) {
      ClueAnnotation c;
      c.action = cj.at("action").get<std::string>();
      c.intent = cj.at("intent").get<std::string>();
      c.source_span = span_from(cj.at("source_span"));
      c.relation_label = optional_int(cj, "relation_label");
      c.noisy = cj.value("noisy", false);
      c.source_video_id = cj.value("source_video_id", std::string());
      item.clues.push_back(std::move(c));
    }
    item.open_ended_eligible = j.at("open_ended_eligible").get<bool>();
    item.annotation_incomplete = j.value("annotation_incomplete", false);
    if (auto it = j.find("extra"); it != j.end()) item.extra = *it;
    if (item.id.empty()) item.id = item.video_id;
    validate_item(item);
    return item;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed item: ") + e.what());
  }
}

void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> lines,
                 const nlohmann::json& header) {
  std::string out;
  if (!header.is_null()) out += nlohmann::json{{"_header", header}}.dump() + "\n";
  for (const auto& line : lines) out += line.dump() + "\n";
  write_file_atomic(path, out);
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<nlohmann::json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.is_object() && j.contains("_header")) continue;
    records.push_back(std::move(j));
  }
  return records;
}

void write_dataset(const std::filesystem::path& path, std::span<const IVQAItem> items,
                   const nlohmann::json& header) {
  std::vector<nlohmann::json> lines;
  lines.reserve(items.size());
  for (const auto& item : items) lines.push_back(item_to_json(item));
  write_jsonl(path, lines, header);
}

std::vector<IVQAItem> read_dataset(const std::filesystem::path& path) {
  std::vector<IVQAItem> items;
  std::size_t index = 0;
  for (const auto& j : read_jsonl(path)) {
    ++index;
    try {
      items.push_back(item_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": record " + std::to_string(index) + ": " + e.what());
    }
  }
  return items;
}

// ---- source adapters -------------------------------------------------------

namespace {

const nlohmann::json* first_of(const nlohmann::json& j, std::initializer_list<const char*> keys,
                               std::vector<std::string>& used) {
  for (const char* k : keys) {
    auto it = j.find(k);
    if (it != j.end()) {
      used.emplace_back(k);
      return &*it;
    }
  }
  return nullptr;
}

std::vector<EvidenceSpan> spans_from(const nlohmann::json& j) {
  std::vector<EvidenceSpan> spans;
  if (j.is_array() && j.size() == 2 && j[0].is_number()) {
    spans.push_back(span_from(j));
    return spans;
  }
  for (const auto& s : j) spans.push_back(span_from(s));
  return spans;
}

}  // namespace

std::string default_action_rewrite(const std::string& context_question) {
  std::string s = trim(context_question);
  while (!s.empty() && (s.back() == '?' || std::isspace(static_cast<unsigned char>(s.back())))) {
    s.pop_back();
  }
  return s;
}

SourceRecord source_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("source record must be an object");
  try {
    SourceRecord r;
    std::vector<std::string> used;
    if (auto* v = first_of(j, {"id", "qid", "sample_id"}, used)) {
      r.id = v->is_string() ? v->get<std::string>() : v->dump();
    }
    if (auto* v = first_of(j, {"video_id", "video", "vid"}, used)) r.video_id = v->get<std::string>();
    if (auto* v = first_of(j, {"duration", "video_duration"}, used)) r.duration = v->get<double>();
    if (auto* v = first_of(j, {"question", "query"}, used)) r.question = v->get<std::string>();
    if (auto* v = first_of(j, {"options", "choices", "candidates"}, used)) {
      r.options = v->get<std::vector<std::string>>();
    }
    if (auto* v = first_of(j, {"answer_index", "answer_idx"}, used); v && !v->is_null()) {
      r.answer_index = v->get<int>();
    }
    if (auto* v = first_of(j, {"answer"}, used)) {
      if (v->is_number_integer() && !r.answer_index) {
        r.answer_index = v->get<int>();
      } else if (v->is_string()) {
        r.answer = v->get<std::string>();
      }
    }
    if (auto* v = first_of(j, {"spans", "location", "timestamps", "relevant_windows"}, used)) {
      r.evidence = spans_from(*v);
    }
    if (auto* v = first_of(j, {"open_ended_eligible", "open_ended"}, used)) {
      r.open_ended_eligible = v->get<bool>();
    }
    if (auto* v = first_of(j, {"clues"}, used)) {
      for (const auto& c : *v) {
        r.context.push_back({c.at("action").get<std::string>(), c.at("intent").get<std::string>(),
                             span_from(c.at(c.contains("span") ? "span" : "source_span")),
                             optional_int(c, "relation_label")});
      }
    }
    if (auto* v = first_of(j, {"context_qa"}, used)) {
      for (const auto& c : *v) {
        r.context.push_back({c.at("question").get<std::string>(), c.at("answer").get<std::string>(),
                             span_from(c.at("span")), optional_int(c, "relation_label"), true});
      }
    }
    for (const auto& [key, value] : j.items()) {
      if (std::find(used.begin(), used.end(), key) == used.end()) r.passthrough[key] = value;
    }
    if (r.id.empty()) r.id = r.video_id + ":" + std::to_string(stable_hash(r.question) % 1000000007ULL);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed source record: ") + e.what());
  }
}

std::vector<SourceRecord> read_source(const std::filesystem::path& path) {
  std::vector<SourceRecord> out;
  std::size_t index = 0;
  for (const auto& j : read_jsonl(path)) {
    ++index;
    try {
      out.push_back(source_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": record " + std::to_string(index) + ": " + e.what());
    }
  }
  return out;
}

BuildResult build_dataset(std::span<const SourceRecord> sources, const BuildOptions& options) {
  if (!(options.sigma > 0.0)) throw ValidationError("sigma must be positive");
  BuildResult result;
  for (const auto& src : sources) {
    IVQAItem item;
    item.id = src.id;
    item.video_id = src.video_id;
    item.duration = src.duration;
    item.question = src.question;
    item.options = src.options;
    item.answer_index = src.answer_index;
    item.answer = src.answer;
    item.open_ended_eligible = src.open_ended_eligible;
    item.extra = src.passthrough;

    try {
      if (src.video_id.empty()) throw ValidationError("missing video_id");
      if (!(src.duration > 0.0)) throw ValidationError("missing or non-positive duration");
      if (trim(src.question).empty()) throw ValidationError("empty question");
      if (src.evidence.empty()) throw ValidationError("no grounded evidence span");
      for (const auto& s : src.evidence) {
        item.excluded_spans.push_back(extend_span(s, src.duration, options.sigma));
      }
    } catch (const ValidationError& e) {
      result.dropped.push_back({src.id, std::string("invalid: ") + e.what()});
      continue;
    }

    if (filter_wh_insufficient(item)) {
      result.dropped.push_back({src.id, "wh_insufficient"});
      continue;
    }
    if (filter_temporal_answer(item)) {
      result.dropped.push_back({src.id, "temporal_answer"});
      continue;
    }
    if (options.commonsense_hook && options.commonsense_hook(item)) {
      result.dropped.push_back({src.id, "commonsense"});
      continue;
    }
    if (options.descriptive_hook && options.descriptive_hook(item)) {
      result.dropped.push_back({src.id, "descriptive"});
      continue;
    }

    bool any_unlabeled = false;
    for (const auto& ctx : src.context) {
      try {
        validate_span(ctx.span, src.duration);
      } catch (const ValidationError&) {
        ++result.ineligible_clues;
        continue;
      }
      if (!check_clue_eligibility(ctx.span, item.excluded_spans)) {
        ++result.ineligible_clues;
        continue;
      }
      ClueAnnotation clue;
      clue.action = ctx.needs_rewrite && options.rewriter ? options.rewriter(ctx.action) : ctx.action;
      clue.intent = trim(ctx.intent);
      clue.source_span = ctx.span;
      clue.relation_label = ctx.relation_label;
      if (clue.action.empty() || clue.intent.empty()) {
        ++result.ineligible_clues;
        continue;
      }
      any_unlabeled = any_unlabeled || !clue.relation_label;
      item.clues.push_back(std::move(clue));
    }

    if (any_unlabeled && options.relation_judge != nullptr) {
      const auto annotation =
          annotate_relations(item.clue_candidates(), item.question, *options.relation_judge);
      for (std::size_t i = 0; i < item.clues.size(); ++i) {
        if (!item.clues[i].relation_label) item.clues[i].relation_label = annotation.labels[i];
      }
      if (!annotation.complete()) {
        item.annotation_incomplete = true;
        nlohmann::json errors = annotation.errors;
        item.extra["annotation_errors"] = errors;
      }
    }

    try {
      validate_item(item);
    } catch (const ValidationError& e) {
      result.dropped.push_back({src.id, std::string("invalid: ") + e.what()});
      continue;
    }
    result.items.push_back(std::move(item));
  }
  return result;
}

}  // namespace irm
