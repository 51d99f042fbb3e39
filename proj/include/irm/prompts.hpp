#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irm/dataset.hpp"

namespace irm::reasoner {

enum class TemplateId {
  multi_choice,
  open_ended,
  psav,
  clue_generation,
  answer_judge,    // open-ended scoring request, owned by the evaluation harness
  relation_judge,  // clue/question relation labelling for dataset building
};

std::string_view to_string(TemplateId id);
TemplateId template_from_string(std::string_view name);

struct PromptTurn {
  std::string speaker;  // "Human" for every turn the templates produce
  std::string text;
};

struct PromptBundle {
  TemplateId template_id = TemplateId::multi_choice;
  std::vector<PromptTurn> turns;
  std::string rendered;  // every turn followed by '\n'
  // Options, strategies or clues the reply is expected to address.
  int choice_count = 0;
};

PromptBundle make_bundle(TemplateId id, std::vector<PromptTurn> turns, int choice_count = 0);

inline constexpr std::array<std::string_view, 12> kPsavStrategies = {
    "Social Identity", "Concreteness", "Anchoring and Comparison", "Overcoming Reactance",
    "Reciprocity",     "Foot-in-the-Door", "Authority",          "Social Impact",
    "Anthropomorphism", "Scarcity",    "Social Proof",             "Unclear"};

// "Clues<index>: <action> to <intent>". An intent that already opens with a
// connector ("by ...", "before ...", "to ...") is joined without adding one.
std::string render_clue_line(std::size_t index, const ClueCandidate& clue);

// Inverse of the clue block rendering: splits each "Clues<i>:" line at its
// first connector. Exact for actions that do not themselves contain a
// standalone "to", "by" or "before".
std::vector<ClueCandidate> parse_clue_block(std::string_view rendered);

// Multi-choice template; throws ValidationError without options or question.
PromptBundle build_mc_prompt(const IVQAItem& item, std::span<const ClueCandidate> clues);
// Open-ended template; throws ValidationError on an empty question.
PromptBundle build_open_prompt(const IVQAItem& item, std::span<const ClueCandidate> clues);
PromptBundle build_psav_prompt(std::span<const ClueCandidate> clues);

// What the clue generator is shown in place of pixels: one caption (or
// feature digest) per sampled frame.
struct VisualContext {
  std::vector<double> timestamps;
  std::vector<std::string> captions;
};

// Clue-extraction instruction with an in-context example of the reply grammar.
PromptBundle build_clue_generation_prompt(const VisualContext& visual, const std::string& question);

struct ClueParse {
  std::vector<ClueCandidate> clues;
  std::vector<std::string> warnings;  // one per skipped line
};

// Reads "<i>. <action>: <intent>" lines. Throws ValidationError("no clue
// candidates") when none parse.
ClueParse parse_clue_candidates(std::string_view response);

PromptBundle build_relation_judge_prompt(const std::string& question,
                                         std::span<const ClueCandidate> clues);

enum class ParseStatus { ok, ambiguous, none };

std::string_view to_string(ParseStatus status);

struct AnswerParse {
  std::optional<int> option_index;
  std::string raw_text;
  ParseStatus status = ParseStatus::none;
};

// Finds the chosen option letter in a model reply. Explicit phrasings
// ("Answer: C", "best option is (C)", "option C") win; otherwise the first
// standalone "(C)", "C)" or "C." form. A reply whose first bare letter starts
// an enumeration (A then B ...) is a restated option list: ambiguous.
// Never throws.
AnswerParse parse_option(std::string_view text, int option_count = 5);

}  // namespace irm::reasoner
