#include "irm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "irm/errors.hpp"
#include "irm/random.hpp"

namespace irm {

const std::vector<std::string>& relevant_vocabulary() {
  static const std::vector<std::string> words = {"kite",   "ladder", "bucket", "guitar",
                                                 "ball",   "rope",   "camera", "bicycle"};
  return words;
}

const std::vector<std::string>& distractor_vocabulary() {
  static const std::vector<std::string> words = {"window",  "bench",  "sandwich", "umbrella",
                                                 "lamp",    "carpet", "mirror",   "pillow",
                                                 "fence",   "bottle", "blanket",  "hat"};
  return words;
}

namespace {

const std::vector<std::string> kVerbs = {"hold", "move", "reach", "grab", "watch", "lift"};

std::string pick(Rng& rng, const std::vector<std::string>& words) {
  return words[rng.index(words.size())];
}

double round_ms(double t) { return std::round(t * 1000.0) / 1000.0; }

}  // namespace

std::vector<IVQAItem> make_synthetic_dataset(const SyntheticOptions& options) {
  if (options.min_clues < 1 || options.max_clues < options.min_clues) {
    throw ValidationError("synthetic clue range must satisfy 1 <= min <= max");
  }
  Rng rng(hash_combine(options.seed, stable_hash("synthetic-dataset")));
  const auto& relevant = relevant_vocabulary();
  const auto& distractors = distractor_vocabulary();

  std::vector<IVQAItem> items;
  items.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    IVQAItem item;
    item.id = options.id_prefix + "-" + std::to_string(i);
    // Two questions per video, so every corpus of >= 3 items spans several videos.
    item.video_id = options.id_prefix + "_video_" + std::to_string(i / 2);
    item.duration = round_ms(rng.uniform(60.0, 180.0));

    const double length = item.duration * rng.uniform(0.05, 0.15);
    const double start = rng.uniform(0.2 * item.duration, 0.8 * item.duration - length);
    item.excluded_spans.push_back(
        extend_span({round_ms(start), round_ms(start + length)}, item.duration, options.sigma));
    const auto visible = visible_timeline(item.duration, item.excluded_spans);

    const std::string object = pick(rng, relevant);
    static const char* const kQuestions[] = {"Why does the person keep looking at the ",
                                             "What does the person do with the ",
                                             "How does the person use the "};
    item.question = std::string(kQuestions[rng.index(3)]) + object + "?";

    // Options name distinct relevant-vocabulary objects; the answer is the asked one.
    std::vector<std::string> objects = relevant;
    for (std::size_t k = 0; k + 1 < objects.size(); ++k) {
      std::swap(objects[k], objects[k + rng.index(objects.size() - k)]);
    }
    objects.resize(5);
    if (std::find(objects.begin(), objects.end(), object) == objects.end()) objects[0] = object;
    for (std::size_t k = 0; k + 1 < objects.size(); ++k) {
      std::swap(objects[k], objects[k + rng.index(objects.size() - k)]);
    }
    for (std::size_t k = 0; k < objects.size(); ++k) {
      item.options.push_back("to use the " + objects[k]);
      if (objects[k] == object) item.answer_index = static_cast<int>(k);
    }
    item.answer = item.options[static_cast<std::size_t>(*item.answer_index)];
    item.open_ended_eligible = true;

    const std::size_t n =
        options.min_clues + rng.index(options.max_clues - options.min_clues + 1);
    const std::size_t n_relevant = rng.index(n + 1);
    std::vector<int> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_relevant), 1);
    for (std::size_t k = 0; k + 1 < n; ++k) std::swap(labels[k], labels[k + rng.index(n - k)]);

    for (std::size_t c = 0; c < n; ++c) {
      const std::string word = labels[c] == 1 ? object : pick(rng, distractors);
      ClueAnnotation clue;
      clue.action = "the person " + pick(rng, kVerbs) + "s the " + word;
      clue.intent = pick(rng, kVerbs) + " the " + word;
      const TimeSpan& piece = visible[rng.index(visible.size())];
      const double a = rng.uniform(piece.start, piece.end);
      const double b = rng.uniform(piece.start, piece.end);
      clue.source_span = {std::min(a, b), std::max(a, b)};
      clue.relation_label = labels[c];
      item.clues.push_back(std::move(clue));
    }
    validate_item(item);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace irm
