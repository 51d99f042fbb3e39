#include "irm/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "irm/errors.hpp"
#include "irm/text.hpp"

namespace irm {

ProxyDecoder::ProxyDecoder(Eigen::Index d_model, int buckets)
    : head("decoder.head", 2 * d_model, buckets) {}

void ProxyDecoder::init(Rng& rng) { head.init_uniform(rng); }

int answer_bucket(const std::string& answer, int buckets) {
  const auto tokens = tokenize(answer);
  if (tokens.empty()) throw ValidationError("answer has no tokens");
  return static_cast<int>(stable_hash(tokens.back()) % static_cast<std::uint64_t>(buckets));
}

Adam::Adam(std::vector<nn::Parameter*> params, double learning_rate, double beta1, double beta2,
           double epsilon)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (auto* p : params_) {
    m_.push_back(nn::Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(nn::Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    nn::Parameter& p = *params_[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

TrainingExample make_example(const IrmModel& model, const IVQAItem& item, int buckets,
                             std::uint64_t seed) {
  const auto& cfg = model.config;
  TrainingExample ex;
  ex.id = item.id;
  const auto visible = visible_timeline(item.duration, item.excluded_spans);
  const auto stamps = sample_frames(visible, cfg.frame_count);
  ex.frame_tokens =
      vem::synthesize_frames(item.video_id, stamps, cfg.tokens_per_frame, cfg.d_visual, seed)
          .flattened();
  ex.instruction_tokens =
      model.instruction_embedder.embed(vem::compression_instruction(item.question));
  const auto candidates = item.clue_candidates();
  ex.bank = aim::embed_clues(candidates, model.text_embedder);
  ex.question = model.text_embedder.embed(item.question);
  for (const auto& c : item.clues) {
    if (!c.relation_label) throw ValidationError("item " + item.id + " is missing relation labels");
    ex.labels.push_back(*c.relation_label);
  }
  ex.answer_bucket = answer_bucket(item.gold_text(), buckets);
  return ex;
}

std::pair<double, double> schedule_weights(const TrainConfig& config, int epoch) {
  if (epoch < 0) throw ValidationError("epoch must be >= 0");
  return {config.generation_weight,
          std::max(0.0, config.relation_weight - config.relation_decay * epoch)};
}

namespace {

struct Forward {
  nn::Var visual;  // X_V
  nn::Var logits;
};

Forward forward_relation(nn::Tape& tape, IrmModel& model, const TrainingExample& ex) {
  Forward f;
  nn::Var compressed = vem::compress_visual(tape, model.vem.compressor, ex.frame_tokens,
                                            ex.instruction_tokens);
  f.visual = vem::project(tape, model.vem.projection, compressed);
  nn::Var verified = aim::hallucination_verify(tape, model.aim,
                                               tape.constant(ex.bank.actions.data), f.visual);
  f.logits = aim::relation_classify(tape, model.aim, tape.constant(ex.bank.intents.data),
                                    ex.bank.intents.boundaries, verified,
                                    tape.constant(ex.question));
  return f;
}

}  // namespace

double relation_accuracy(IrmModel& model, std::span<const TrainingExample> examples) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& ex : examples) {
    nn::Tape tape(false);
    const nn::Matrix scores = forward_relation(tape, model, ex).logits.value();
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      const int predicted = scores(i, 0) >= scores(i, 1) ? 1 : 0;
      if (predicted == ex.labels[static_cast<std::size_t>(i)]) ++correct;
      ++total;
    }
  }
  if (total == 0) throw ValidationError("no clues to evaluate");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

TrainResult train(IrmModel& model, ProxyDecoder& decoder, std::span<const IVQAItem> train_items,
                  std::span<const IVQAItem> eval_items, const TrainConfig& config,
                  std::uint64_t seed, const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_items.empty() || eval_items.empty()) throw ValidationError("empty training data");
  std::vector<TrainingExample> train_set;
  std::vector<TrainingExample> eval_set;
  for (const auto& item : train_items) {
    train_set.push_back(make_example(model, item, config.answer_buckets, seed));
  }
  for (const auto& item : eval_items) {
    eval_set.push_back(make_example(model, item, config.answer_buckets, seed));
  }

  std::vector<nn::Parameter*> params = model.parameters();
  for (auto* p : decoder.parameters()) params.push_back(p);
  Adam optimizer(params, config.learning_rate);

  Rng order_rng(hash_combine(seed, stable_hash("train-order")));
  std::vector<std::size_t> order(train_set.size());
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  TrainResult result;
  int step = 0;
  int epoch = 0;
  while (step < config.steps) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::swap(order[i], order[i + order_rng.index(order.size() - i)]);
    }
    const auto [w_gen, w_rel] = schedule_weights(config, epoch);
    double loss_sum = 0.0;
    int epoch_steps = 0;
    for (std::size_t start = 0; start < order.size() && step < config.steps; start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      for (auto* p : params) p->zero_grad();
      nn::Tape tape(true);
      std::vector<nn::Var> gen_terms;
      std::vector<nn::Var> rel_terms;
      for (std::size_t b = start; b < end; ++b) {
        const TrainingExample& ex = train_set[order[b]];
        Forward f = forward_relation(tape, model, ex);
        rel_terms.push_back(aim::relation_loss(tape, f.logits, ex.labels));

        const aim::RelationLogits values{f.logits.value()};
        const aim::Refinement refined = aim::refine_clues(ex.bank, values);
        nn::Var enhanced = f.visual;
        if (refined.bank.n_clues > 0) {
          const nn::Var clue_parts[] = {tape.constant(refined.bank.actions.data),
                                        tape.constant(refined.bank.intents.data)};
          enhanced = vem::enhance(tape, model.vem.enhancement, f.visual,
                                  nn::concat_rows(clue_parts));
        }
        const nn::Var pooled_parts[] = {nn::mean_rows(enhanced),
                                        nn::mean_rows(tape.constant(ex.question))};
        nn::Var decoded = decoder.head.forward(tape, nn::concat_cols(pooled_parts));
        gen_terms.push_back(nn::cross_entropy(decoded, ex.answer_bucket));
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      nn::Var gen = nn::scale(nn::sum_scalars(tape, gen_terms), inv);
      nn::Var rel = nn::scale(nn::sum_scalars(tape, rel_terms), inv);
      nn::Var loss = nn::add(nn::scale(gen, w_gen), nn::scale(rel, w_rel));
      tape.backward(loss);
      optimizer.step();

      ++step;
      ++epoch_steps;
      StepLog log{step, epoch, loss.value()(0, 0), gen.value()(0, 0), rel.value()(0, 0)};
      loss_sum += log.loss;
      result.steps.push_back(log);
    }
    EpochLog elog;
    elog.epoch = epoch;
    elog.last_step = step;
    elog.generation_weight = w_gen;
    elog.relation_weight = w_rel;
    elog.mean_loss = epoch_steps > 0 ? loss_sum / epoch_steps : 0.0;
    elog.relation_accuracy = relation_accuracy(model, eval_set);
    result.epochs.push_back(elog);
    if (on_epoch) on_epoch(elog);
    ++epoch;
    if (config.steps == 0) break;
  }
  result.final_relation_accuracy =
      result.epochs.empty() ? relation_accuracy(model, eval_set) : result.epochs.back().relation_accuracy;
  return result;
}

nlohmann::json to_json(const StepLog& log) {
  return {{"step", log.step},
          {"epoch", log.epoch},
          {"loss", log.loss},
          {"generation_loss", log.generation_loss},
          {"relation_loss", log.relation_loss}};
}

nlohmann::json to_json(const EpochLog& log) {
  return {{"epoch", log.epoch},
          {"last_step", log.last_step},
          {"generation_weight", log.generation_weight},
          {"relation_weight", log.relation_weight},
          {"mean_loss", log.mean_loss},
          {"relation_accuracy", log.relation_accuracy}};
}

}  // namespace irm
