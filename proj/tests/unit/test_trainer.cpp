#include <gtest/gtest.h>

#include "irm/errors.hpp"
#include "irm/synthetic.hpp"
#include "irm/trainer.hpp"

using namespace irm;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.d_model = 16;
  c.head_count = 2;
  c.d_visual = 8;
  c.visual_head_count = 2;
  c.n_queries = 4;
  c.tokens_per_frame = 2;
  c.frame_count = 4;
  return c;
}

std::vector<IVQAItem> items(std::size_t n, std::uint64_t seed, const std::string& prefix) {
  SyntheticOptions o;
  o.count = n;
  o.seed = seed;
  o.id_prefix = prefix;
  return make_synthetic_dataset(o);
}

}  // namespace

TEST(Schedule, WeightsPerEpoch) {
  TrainConfig cfg;
  for (int epoch = 0; epoch < 60; ++epoch) {
    const auto [g, r] = schedule_weights(cfg, epoch);
    EXPECT_EQ(g, 1.0);
    EXPECT_NEAR(r, std::max(0.0, 2.0 - 0.05 * epoch), 1e-12) << epoch;
  }
}

TEST(Adam, MinimizesAQuadratic) {
  nn::Parameter p("p", nn::Matrix::Constant(2, 1, 5.0));
  Adam opt({&p}, 0.1);
  for (int i = 0; i < 500; ++i) {
    p.zero_grad();
    p.grad = 2.0 * (p.value.array() - 1.0).matrix();
    opt.step();
  }
  EXPECT_NEAR(p.value(0, 0), 1.0, 1e-2);
  EXPECT_NEAR(p.value(1, 0), 1.0, 1e-2);
}

TEST(AnswerBucket, StableAndInRange) {
  EXPECT_EQ(answer_bucket("to use the kite", 64), answer_bucket("to use the kite", 64));
  EXPECT_EQ(answer_bucket("to use the kite", 64), answer_bucket("fly the KITE!", 64));
  for (const char* a : {"x", "to use the ball", "123"}) {
    const int b = answer_bucket(a, 10);
    EXPECT_GE(b, 0);
    EXPECT_LT(b, 10);
  }
}

TEST(Examples, RequireRelationLabels) {
  IrmModel model = IrmModel::create(tiny(), 1);
  auto set = items(1, 1, "t");
  EXPECT_NO_THROW(make_example(model, set[0], 8, 1));
  set[0].clues[0].relation_label.reset();
  EXPECT_THROW(make_example(model, set[0], 8, 1), ValidationError);
}

TEST(Train, DeterministicAndLogsSchedule) {
  TrainConfig cfg;
  cfg.steps = 12;
  cfg.batch_size = 4;
  cfg.answer_buckets = 8;
  const auto train_set = items(8, 3, "train");
  const auto eval_set = items(4, 4, "eval");
  auto run = [&] {
    IrmModel model = IrmModel::create(tiny(), 5);
    ProxyDecoder decoder(16, 8);
    Rng rng(6);
    decoder.init(rng);
    return train(model, decoder, train_set, eval_set, cfg, 5);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  ASSERT_EQ(a.steps.size(), 12u);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].loss, b.steps[i].loss);
  // 8 items in batches of 4: two steps per epoch
  ASSERT_EQ(a.epochs.size(), 6u);
  for (const auto& e : a.epochs) {
    EXPECT_NEAR(e.relation_weight, 2.0 - 0.05 * e.epoch, 1e-12);
    EXPECT_EQ(e.generation_weight, 1.0);
    EXPECT_GE(e.relation_accuracy, 0.0);
    EXPECT_LE(e.relation_accuracy, 100.0);
  }
  for (const auto& s : a.steps) {
    const auto [g, r] = schedule_weights(cfg, s.epoch);
    EXPECT_NEAR(s.loss, g * s.generation_loss + r * s.relation_loss, 1e-9);
  }
}

TEST(Train, RelationLossDecreasesOnToyData) {
  TrainConfig cfg;
  cfg.steps = 60;
  cfg.batch_size = 8;
  cfg.answer_buckets = 8;
  const auto train_set = items(32, 7, "train");
  const auto eval_set = items(8, 8, "eval");
  IrmModel model = IrmModel::create(tiny(), 9);
  ProxyDecoder decoder(16, 8);
  Rng rng(9);
  decoder.init(rng);
  const auto r = train(model, decoder, train_set, eval_set, cfg, 9);
  double first = 0, last = 0;
  for (int i = 0; i < 8; ++i) {
    first += r.steps[static_cast<std::size_t>(i)].relation_loss;
    last += r.steps[r.steps.size() - 1 - static_cast<std::size_t>(i)].relation_loss;
  }
  EXPECT_LT(last, first);
}
