#include "irm/prompts.hpp"

#include <cctype>
#include <cstdio>
#include <regex>

#include "irm/errors.hpp"
#include "irm/text.hpp"

namespace irm::reasoner {
namespace {

constexpr std::string_view kPreamble =
    "The question involves implicit visual information, with key visual evidence being "
    "invisible, requiring the deduction of the answer based on contextual visual information "
    "and provided intention, action clues";
constexpr std::string_view kClueHeader = "Context clues are as follows: ";
constexpr std::string_view kSelectLine =
    "Based on the clues, select the option that accurately addresses the question.";
constexpr std::string_view kClosing = "Only give the best option.";
constexpr std::string_view kPsavHeader =
    "Please choose one advertising strategy that aligns with the intent of the advertisement: ";

constexpr std::array<std::string_view, 3> kConnectors = {"to", "by", "before"};

PromptTurn human(std::string text) { return {"Human", std::move(text)}; }

void append_clue_block(std::vector<PromptTurn>& turns, std::span<const ClueCandidate> clues) {
  if (clues.empty()) return;
  turns.push_back(human(std::string(kClueHeader)));
  for (std::size_t i = 0; i < clues.size(); ++i) turns.push_back(human(render_clue_line(i + 1, clues[i])));
}

std::string option_label(std::size_t index) {
  return std::string("(") + static_cast<char>('A' + index) + ") ";
}

bool starts_with_connector(std::string_view intent) {
  for (auto c : kConnectors) {
    if (intent.size() > c.size() && intent.substr(0, c.size()) == c && intent[c.size()] == ' ') {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::multi_choice: return "multi_choice";
    case TemplateId::open_ended: return "open_ended";
    case TemplateId::psav: return "psav";
    case TemplateId::clue_generation: return "clue_generation";
    case TemplateId::answer_judge: return "answer_judge";
    case TemplateId::relation_judge: return "relation_judge";
  }
  return "unknown";
}

TemplateId template_from_string(std::string_view name) {
  for (auto id : {TemplateId::multi_choice, TemplateId::open_ended, TemplateId::psav,
                  TemplateId::clue_generation, TemplateId::answer_judge,
                  TemplateId::relation_judge}) {
    if (to_string(id) == name) return id;
  }
  throw ValidationError("unknown template id '" + std::string(name) + "'");
}

PromptBundle make_bundle(TemplateId id, std::vector<PromptTurn> turns, int choice_count) {
  PromptBundle b;
  b.template_id = id;
  b.turns = std::move(turns);
  b.choice_count = choice_count;
  for (const auto& t : b.turns) {
    b.rendered += t.text;
    b.rendered += '\n';
  }
  return b;
}

std::string render_clue_line(std::size_t index, const ClueCandidate& clue) {
  std::string line = "Clues" + std::to_string(index) + ": " + clue.action + " ";
  if (!starts_with_connector(clue.intent)) line += "to ";
  line += clue.intent;
  return line;
}

std::vector<ClueCandidate> parse_clue_block(std::string_view rendered) {
  static const std::regex line_re(R"(^Clues\d+: (.*)$)");
  std::vector<ClueCandidate> out;
  std::size_t start = 0;
  while (start <= rendered.size()) {
    std::size_t end = rendered.find('\n', start);
    if (end == std::string_view::npos) end = rendered.size();
    const std::string line(rendered.substr(start, end - start));
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      const std::string body = m[1].str();
      std::size_t best = std::string::npos;
      std::string_view which;
      for (auto c : kConnectors) {
        const std::string needle = " " + std::string(c) + " ";
        const std::size_t at = body.find(needle);
        if (at != std::string::npos && at < best) {
          best = at;
          which = c;
        }
      }
      if (best != std::string::npos) {
        ClueCandidate clue;
        clue.action = body.substr(0, best);
        const std::string rest = body.substr(best + which.size() + 2);
        clue.intent = which == "to" ? rest : std::string(which) + " " + rest;
        out.push_back(std::move(clue));
      }
    }
    start = end + 1;
  }
  return out;
}

PromptBundle build_mc_prompt(const IVQAItem& item, std::span<const ClueCandidate> clues) {
  if (item.options.empty()) {
    throw ValidationError("item " + item.id + " has no options; use the open-ended prompt");
  }
  if (item.options.size() > 5) throw ValidationError("at most five options (A-E) are supported");
  if (trim(item.question).empty()) throw ValidationError("empty question");
  std::vector<PromptTurn> turns;
  turns.push_back(human(std::string(kPreamble)));
  append_clue_block(turns, clues);
  turns.push_back(human(std::string(kSelectLine)));
  turns.push_back(human("Question: " + item.question));
  std::string options;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    if (i > 0) options += '\n';
    options += option_label(i) + item.options[i];
  }
  turns.push_back(human(std::move(options)));
  turns.push_back(human(std::string(kClosing)));
  return make_bundle(TemplateId::multi_choice, std::move(turns),
                     static_cast<int>(item.options.size()));
}

PromptBundle build_open_prompt(const IVQAItem& item, std::span<const ClueCandidate> clues) {
  if (trim(item.question).empty()) throw ValidationError("empty question");
  std::vector<PromptTurn> turns;
  turns.push_back(human(std::string(kPreamble)));
  append_clue_block(turns, clues);
  turns.push_back(human("Question: " + item.question));
  return make_bundle(TemplateId::open_ended, std::move(turns));
}

PromptBundle build_psav_prompt(std::span<const ClueCandidate> clues) {
  std::string header(kPsavHeader);
  for (std::size_t i = 0; i < kPsavStrategies.size(); ++i) {
    header += '\n';
    header += option_label(i) + std::string(kPsavStrategies[i]);
    // The strategy list is transcribed verbatim, including this trailing space.
    if (kPsavStrategies[i] == "Social Proof") header += ' ';
  }
  std::vector<PromptTurn> turns;
  turns.push_back(human(std::move(header)));
  append_clue_block(turns, clues);
  turns.push_back(human(std::string(kSelectLine)));
  turns.push_back(human(std::string(kClosing)));
  return make_bundle(TemplateId::psav, std::move(turns), static_cast<int>(kPsavStrategies.size()));
}

PromptBundle build_clue_generation_prompt(const VisualContext& visual, const std::string& question) {
  if (trim(question).empty()) throw ValidationError("empty question");
  std::vector<PromptTurn> turns;
  turns.push_back(human(
      "Task: Please extract the context clues in the video as action-intent pairs. Each clue "
      "pairs an action observed in the visible frames with the immediate intention behind it."));
  turns.push_back(human(
      "Example:\n"
      "1. the two boys hold paddles and walk towards the vase: get close to the fire\n"
      "2. the boys move the charcoal in the vase with sticks: keep the fire burning"));
  std::string frames = "Frames:";
  for (std::size_t i = 0; i < visual.timestamps.size(); ++i) {
    char stamp[32];
    std::snprintf(stamp, sizeof(stamp), "%.2f", visual.timestamps[i]);
    frames += "\nFrame" + std::to_string(i + 1) + " (" + stamp + "s)";
    if (i < visual.captions.size()) frames += ": " + visual.captions[i];
  }
  turns.push_back(human(std::move(frames)));
  turns.push_back(human("Question: " + question));
  turns.push_back(human(
      "List the clues that help answer the question, one per line, in the form "
      "\"<index>. <action>: <intent>\"."));
  return make_bundle(TemplateId::clue_generation, std::move(turns));
}

ClueParse parse_clue_candidates(std::string_view response) {
  static const std::regex line_re(R"(^\s*\d+\.\s*([^:]*[^:\s])\s*:\s*(.*\S)\s*$)");
  ClueParse out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= response.size()) {
    std::size_t end = response.find('\n', start);
    if (end == std::string_view::npos) end = response.size();
    std::string line(response.substr(start, end - start));
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) {
      std::smatch m;
      if (std::regex_match(line, m, line_re)) {
        out.clues.push_back({trim(m[1].str()), trim(m[2].str())});
      } else {
        out.warnings.push_back("line " + std::to_string(line_no) + ": not '<i>. <action>: <intent>': " +
                               trim(line));
      }
    }
    start = end + 1;
  }
  if (out.clues.empty()) throw ValidationError("no clue candidates");
  return out;
}

PromptBundle build_relation_judge_prompt(const std::string& question,
                                         std::span<const ClueCandidate> clues) {
  std::vector<PromptTurn> turns;
  turns.push_back(human(
      "Decide for each context clue whether acquiring it causally contributes to deducing the "
      "answer of the question. Reason counterfactually: a clue contributes only if the answer "
      "would be harder to deduce without it. Do not count clues that merely co-occur with the "
      "answer."));
  turns.push_back(human("Question: " + question));
  std::string block = "Clues:";
  for (std::size_t i = 0; i < clues.size(); ++i) {
    block += "\n" + std::to_string(i + 1) + ". " + clues[i].action + ": " + clues[i].intent;
  }
  turns.push_back(human(std::move(block)));
  turns.push_back(human(
      "Reply with one label per clue in order, 1 if it contributes and 0 if it does not, "
      "separated by commas."));
  return make_bundle(TemplateId::relation_judge, std::move(turns), static_cast<int>(clues.size()));
}

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::ambiguous: return "ambiguous";
    case ParseStatus::none: return "none";
  }
  return "none";
}

AnswerParse parse_option(std::string_view text, int option_count) {
  AnswerParse result;
  result.raw_text = std::string(text);
  if (option_count < 1 || option_count > 26) option_count = 5;
  const char last = static_cast<char>('A' + option_count - 1);
  auto valid = [&](char c) { return c >= 'A' && c <= last; };
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  auto at = [&](std::size_t i) -> char { return i < text.size() ? text[i] : '\0'; };

  const std::string t = trim(text);
  if (t.size() == 1 && valid(t[0])) {
    result.option_index = t[0] - 'A';
    result.status = ParseStatus::ok;
    return result;
  }

  // Explicit phrasings.
  const std::string lower = to_lower(text);
  std::size_t best_pos = std::string::npos;
  char best_letter = 0;
  for (std::string_view keyword : {"answer", "option", "choice"}) {
    for (std::size_t pos = lower.find(keyword); pos != std::string::npos;
         pos = lower.find(keyword, pos + 1)) {
      if (pos > 0 && alnum(text[pos - 1])) continue;
      std::size_t i = pos + keyword.size();
      while (at(i) == ' ' || at(i) == ':') ++i;
      if (lower.compare(i, 3, "is ") == 0) i += 3;
      while (at(i) == ' ' || at(i) == ':') ++i;
      if (at(i) == '(') ++i;
      if (valid(at(i)) && !alnum(at(i + 1)) && pos < best_pos) {
        best_pos = pos;
        best_letter = at(i);
      }
    }
  }
  if (best_letter != 0) {
    result.option_index = best_letter - 'A';
    result.status = ParseStatus::ok;
    return result;
  }

  // Bare "(C)", "C)" or "C." forms.
  std::vector<char> bare;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!valid(c)) continue;
    if (i > 0 && alnum(text[i - 1])) continue;
    const char next = at(i + 1);
    const bool paren = next == ')';
    const bool dot = next == '.' && !alnum(at(i + 2));
    if (paren || dot) bare.push_back(c);
  }
  if (bare.empty()) return result;
  if (bare.size() >= 2 && bare[1] == bare[0] + 1) {
    result.status = ParseStatus::ambiguous;
    return result;
  }
  result.option_index = bare[0] - 'A';
  result.status = ParseStatus::ok;
  return result;
}

}  // namespace irm::reasoner
