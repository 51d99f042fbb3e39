#include "irm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>
#include <tuple>
#include <unordered_map>

#include "irm/errors.hpp"
#include "irm/random.hpp"
#include "irm/text.hpp"

namespace irm::eval {

namespace {

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

nlohmann::json record_to_json(const PredictionRecord& r) {
  return {{"item_id", r.item_id},
          {"question", r.question},
          {"predicted_index", optional_json(r.predicted_index)},
          {"predicted_text", r.predicted_text},
          {"parse_status", r.parse_status},
          {"gold_index", optional_json(r.gold_index)},
          {"gold_text", r.gold_text},
          {"gold_labels", r.gold_labels},
          {"question_first_word", r.question_first_word},
          {"latency", r.latency},
          {"error", r.error},
          {"kept_clues", r.kept_clues}};
}

PredictionRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("item_id")) {
    throw ValidationError("prediction record needs an item_id");
  }
  PredictionRecord r;
  r.item_id = j.at("item_id").get<std::string>();
  r.question = j.value("question", std::string());
  r.predicted_index = optional_from<int>(j, "predicted_index");
  r.predicted_text = j.value("predicted_text", std::string());
  r.parse_status = j.value("parse_status", std::string());
  r.gold_index = optional_from<int>(j, "gold_index");
  r.gold_text = j.value("gold_text", std::string());
  r.gold_labels = j.value("gold_labels", std::vector<int>());
  r.question_first_word = j.value("question_first_word", std::string());
  r.latency = j.value("latency", 0.0);
  r.error = j.value("error", std::string());
  r.kept_clues = j.value("kept_clues", std::vector<std::size_t>());
  if (!r.predicted_index && r.predicted_text.empty() && r.error.empty()) {
    throw ValidationError("record " + r.item_id + " has neither a prediction nor an error");
  }
  return r;
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records,
                       const nlohmann::json& header) {
  std::vector<nlohmann::json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(record_to_json(r));
  write_jsonl(path, lines, header);
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path,
                                               nlohmann::json* header) {
  if (header != nullptr) {
    std::ifstream in(path);
    std::string first;
    if (in && std::getline(in, first)) {
      try {
        const auto j = nlohmann::json::parse(first);
        if (j.is_object() && j.contains("_header")) *header = j["_header"];
      } catch (const nlohmann::json::exception&) {
      }
    }
  }
  std::vector<PredictionRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(record_from_json(j));
  return out;
}

double mc_accuracy(std::span<const PredictionRecord> records) {
  if (records.empty()) throw ValidationError("no prediction records");
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (!r.gold_index) throw ValidationError("record " + r.item_id + " has no gold_index");
    if (r.predicted_index && *r.predicted_index == *r.gold_index) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

double token_f1(const std::string& prediction, const std::string& gold) {
  const auto p = tokenize(prediction);
  const auto g = tokenize(gold);
  if (p.empty() || g.empty()) return 0.0;
  std::unordered_map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  return 2.0 * static_cast<double>(common) / static_cast<double>(p.size() + g.size());
}

JudgeVerdict MockJudge::judge(const std::string&, const std::string& prediction,
                              const std::string& gold) {
  const double f1 = token_f1(prediction, gold);
  return {std::round(5.0 * f1), f1 >= 0.5};
}

reasoner::PromptBundle build_answer_judge_prompt(const std::string& question,
                                                 const std::string& prediction,
                                                 const std::string& gold) {
  std::vector<reasoner::PromptTurn> turns;
  turns.push_back({"Human",
                   "You are evaluating answers to video questions. Compare the predicted answer "
                   "with the correct answer and judge whether the prediction conveys the same "
                   "meaning. Synonyms and paraphrases count as matches."});
  turns.push_back({"Human", "Question: " + question});
  turns.push_back({"Human", "Correct answer: " + gold});
  turns.push_back({"Human", "Predicted answer: " + prediction});
  turns.push_back({"Human",
                   "Give an integer score from 0 to 5 for how well the prediction matches, and "
                   "whether it is correct. Reply exactly as \"score: <0-5>, correct: <yes|no>\"."});
  return reasoner::make_bundle(reasoner::TemplateId::answer_judge, std::move(turns));
}

JudgeVerdict parse_judge_reply(const std::string& reply) {
  static const std::regex re(R"(score\s*:\s*([0-5](?:\.\d+)?)\s*,?\s*correct\s*:\s*(yes|no|true|false))",
                             std::regex::icase);
  std::smatch m;
  if (!std::regex_search(reply, m, re)) {
    throw ProtocolError("judge reply not in 'score: N, correct: yes|no' form", 200, reply);
  }
  JudgeVerdict v;
  v.score = std::stod(m[1].str());
  if (v.score > 5.0) throw ProtocolError("judge score above 5", 200, reply);
  const std::string c = to_lower(m[2].str());
  v.correct = c == "yes" || c == "true";
  return v;
}

JudgeVerdict ChatJudge::judge(const std::string& question, const std::string& prediction,
                              const std::string& gold) {
  return parse_judge_reply(
      backend_.complete(build_answer_judge_prompt(question, prediction, gold)).text);
}

OpenEndedResult open_ended_eval(std::span<const PredictionRecord> records, AnswerJudge& judge) {
  if (records.empty()) throw ValidationError("no prediction records");
  OpenEndedResult out;
  double score_sum = 0.0;
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (!r.error.empty()) {
      out.exclusions.push_back(r.item_id + ": prediction failed: " + r.error);
      continue;
    }
    try {
      const JudgeVerdict v = judge.judge(r.question, r.predicted_text, r.gold_text);
      if (!(v.score >= 0.0 && v.score <= 5.0)) throw ValidationError("score outside [0, 5]");
      score_sum += v.score;
      if (v.correct) ++correct;
      ++out.judged;
    } catch (const std::exception& e) {
      out.exclusions.push_back(r.item_id + ": " + e.what());
    }
  }
  if (out.judged == 0) throw ValidationError("no record could be judged");
  out.mean_score = score_sum / static_cast<double>(out.judged);
  out.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(out.judged);
  return out;
}

PsavMetrics psav_metrics(std::span<const PredictionRecord> records) {
  if (records.empty()) throw ValidationError("no prediction records");
  auto check = [](int label, const std::string& id) {
    if (label < 0 || label >= kPsavLabelCount) {
      throw ValidationError("record " + id + ": strategy label " + std::to_string(label) +
                            " outside the 12-strategy vocabulary");
    }
  };
  double recall_sum = 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (r.gold_labels.empty()) throw ValidationError("record " + r.item_id + " has no gold labels");
    const std::set<int> gold(r.gold_labels.begin(), r.gold_labels.end());
    for (int g : gold) check(g, r.item_id);
    if (!r.predicted_index) continue;
    check(*r.predicted_index, r.item_id);
    if (gold.count(*r.predicted_index) != 0) {
      ++hits;
      recall_sum += 1.0 / static_cast<double>(gold.size());
    }
  }
  const double n = static_cast<double>(records.size());
  return {100.0 * recall_sum / n, 100.0 * static_cast<double>(hits) / n};
}

std::vector<IVQAItem> noisy_augment(std::span<const IVQAItem> items, double ratio,
                                    std::uint64_t seed) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw ValidationError("ratio must be >= 0");
  struct Source {
    const ClueAnnotation* clue;
    const std::string* video_id;
    const std::string* item_id;
    std::size_t position;
  };
  std::vector<Source> pool;
  std::set<std::string> videos;
  for (const auto& item : items) {
    videos.insert(item.video_id);
    for (std::size_t k = 0; k < item.clues.size(); ++k) {
      if (!item.clues[k].noisy) pool.push_back({&item.clues[k], &item.video_id, &item.id, k});
    }
  }
  // Canonical pool order so that draws do not depend on the order of items.
  std::sort(pool.begin(), pool.end(), [](const Source& a, const Source& b) {
    return std::tie(*a.item_id, *a.video_id, a.position) < std::tie(*b.item_id, *b.video_id, b.position);
  });
  if (videos.size() < 2) throw ValidationError("no unrelated source");

  std::vector<IVQAItem> out(items.begin(), items.end());
  for (auto& item : out) {
    const std::size_t n = item.clues.size();
    // The epsilon keeps ratios like 0.1 * 30 from rounding up past the exact count.
    const auto add = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
    if (add == 0) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (*pool[i].video_id != item.video_id) candidates.push_back(i);
    }
    if (candidates.empty()) throw ValidationError("no unrelated source for item " + item.id);
    Rng rng(hash_combine(seed, stable_hash(item.id + "\x1f" + item.video_id)));
    // Distinct draws while the pool is large enough, otherwise with replacement.
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < add; ++k) {
      if (add <= candidates.size()) {
        std::swap(candidates[k], candidates[k + rng.index(candidates.size() - k)]);
        chosen.push_back(candidates[k]);
      } else {
        chosen.push_back(candidates[rng.index(candidates.size())]);
      }
    }
    for (std::size_t idx : chosen) {
      const Source& src = pool[idx];
      ClueAnnotation noisy = *src.clue;
      noisy.noisy = true;
      noisy.source_video_id = *src.video_id;
      noisy.relation_label = 0;
      item.clues.push_back(std::move(noisy));
    }
  }
  return out;
}

std::vector<IVQAItem> remove_noise(std::span<const IVQAItem> items) {
  std::vector<IVQAItem> out(items.begin(), items.end());
  for (auto& item : out) {
    std::erase_if(item.clues, [](const ClueAnnotation& c) { return c.noisy; });
  }
  return out;
}

nlohmann::json RobustnessReport::to_json() const {
  return {{"vanilla_accuracy", vanilla_accuracy},
          {"noisy_accuracy", noisy_accuracy},
          {"drop", drop}};
}

RobustnessReport robustness_report(double vanilla_accuracy, double noisy_accuracy) {
  return {vanilla_accuracy, noisy_accuracy, vanilla_accuracy - noisy_accuracy};
}

RobustnessReport robustness_report(std::span<const PredictionRecord> vanilla,
                                   std::span<const PredictionRecord> noisy) {
  std::multiset<std::string> a;
  std::multiset<std::string> b;
  for (const auto& r : vanilla) a.insert(r.item_id);
  for (const auto& r : noisy) b.insert(r.item_id);
  if (a != b) throw ValidationError("vanilla and noisy runs cover different items");
  return robustness_report(mc_accuracy(vanilla), mc_accuracy(noisy));
}

std::string question_type(std::string_view first_word) {
  std::string w = to_lower(trim(first_word));
  while (!w.empty() && !std::isalnum(static_cast<unsigned char>(w.back()))) w.pop_back();
  if (w == "why" || w == "what" || w == "how") return w;
  return "other";
}

std::map<std::string, TypeBreakdown> breakdown_by_question_type(
    std::span<const PredictionRecord> records) {
  std::map<std::string, TypeBreakdown> out;
  for (const auto& r : records) {
    const std::string word =
        r.question_first_word.empty() ? first_word(r.question) : r.question_first_word;
    auto& b = out[question_type(word)];
    ++b.count;
    if (r.predicted_index && r.gold_index && *r.predicted_index == *r.gold_index) ++b.correct;
  }
  for (auto& [type, b] : out) {
    b.accuracy = 100.0 * static_cast<double>(b.correct) / static_cast<double>(b.count);
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
  if (x.size() < 2) throw ValidationError("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("undefined correlation");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

SeedAggregate aggregate_seeds(std::span<const double> values) {
  if (values.empty()) throw ValidationError("no seed results");
  SeedAggregate out;
  out.values.assign(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

}  // namespace irm::eval
