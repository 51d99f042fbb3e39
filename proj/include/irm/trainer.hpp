#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irm/config.hpp"
#include "irm/model.hpp"

namespace irm {

// Stand-in for the language model's answer-generation loss: a linear head
// over [mean X_V', mean question embedding] predicting a hashed bucket of
// the gold answer's last word.
struct ProxyDecoder {
  nn::Linear head;

  ProxyDecoder() = default;
  ProxyDecoder(Eigen::Index d_model, int buckets);

  void init(Rng& rng);
  std::vector<nn::Parameter*> parameters() { return head.parameters(); }
};

int answer_bucket(const std::string& answer, int buckets);

class Adam {
 public:
  Adam(std::vector<nn::Parameter*> params, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);

  void step();

 private:
  std::vector<nn::Parameter*> params_;
  std::vector<nn::Matrix> m_;
  std::vector<nn::Matrix> v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
};

// Everything one training/evaluation pass needs about an item, precomputed.
struct TrainingExample {
  std::string id;
  nn::Matrix frame_tokens;
  nn::Matrix instruction_tokens;
  aim::ClueBank bank;
  nn::Matrix question;
  std::vector<int> labels;
  int answer_bucket = 0;
};

// Frames are synthesized at timestamps sampled from the visible timeline.
TrainingExample make_example(const IrmModel& model, const IVQAItem& item, int buckets,
                             std::uint64_t seed);

struct StepLog {
  int step = 0;
  int epoch = 0;
  double loss = 0.0;
  double generation_loss = 0.0;
  double relation_loss = 0.0;
};

struct EpochLog {
  int epoch = 0;
  int last_step = 0;
  double generation_weight = 0.0;
  double relation_weight = 0.0;
  double mean_loss = 0.0;
  double relation_accuracy = 0.0;  // held-out, percent
};

struct TrainResult {
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
  double final_relation_accuracy = 0.0;
};

// w_gen, max(0, w_rel - decay * epoch).
std::pair<double, double> schedule_weights(const TrainConfig& config, int epoch);

// Percent of clues whose logits pick the labelled side (column 0 >= column 1
// means relevant), computed at k = 0.
double relation_accuracy(IrmModel& model, std::span<const TrainingExample> examples);

// Per-clue relevance classification with the relation loss and the proxy
// generation loss under the epoch schedule. Deterministic for a fixed seed.
TrainResult train(IrmModel& model, ProxyDecoder& decoder, std::span<const IVQAItem> train_items,
                  std::span<const IVQAItem> eval_items, const TrainConfig& config,
                  std::uint64_t seed, const std::function<void(const EpochLog&)>& on_epoch = {});

nlohmann::json to_json(const StepLog& log);
nlohmann::json to_json(const EpochLog& log);

}  // namespace irm
