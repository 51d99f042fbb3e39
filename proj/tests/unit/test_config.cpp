#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "irm/config.hpp"
#include "irm/errors.hpp"

using namespace irm;

TEST(Config, Defaults) {
  RunConfig c;
  EXPECT_EQ(c.seed, 2024u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{2024, 2025, 2026}));
  EXPECT_EQ(c.sigma, 20.0);
  EXPECT_EQ(c.model.d_model, 256);
  EXPECT_EQ(c.model.head_count, 4);
  EXPECT_EQ(c.model.n_queries, 32);
  EXPECT_EQ(c.model.frame_count, 8u);
  EXPECT_EQ(c.iterations, 0);
  EXPECT_EQ(c.backend.temperature, 0.0);
  EXPECT_EQ(c.train.generation_weight, 1.0);
  EXPECT_EQ(c.train.relation_weight, 2.0);
  EXPECT_EQ(c.train.relation_decay, 0.05);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, SectionsOverrideDefaults) {
  RunConfig c;
  apply_config_text(c,
                    "[run]\nseed = 7\nseeds = 1, 2,3\niterations = 2\n"
                    "[dataset]\nsigma = 10\n"
                    "[model]\nd_model = 32\nhead_count = 2\n"
                    "[backend]\nkind = remote\nendpoint = http://localhost:9/v1/chat/completions\n"
                    "model = some-model\ntimeout = 2.5\n"
                    "[train]\nsteps = 50\nlearning_rate = 0.001\n"
                    "[infer]\nrecord_latency = yes\nworkers = 3\n"
                    "[empty]\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.iterations, 2);
  EXPECT_EQ(c.sigma, 10.0);
  EXPECT_EQ(c.model.d_model, 32);
  EXPECT_EQ(c.backend.kind, reasoner::BackendKind::remote);
  EXPECT_EQ(c.backend.timeout_seconds, 2.5);
  EXPECT_EQ(c.train.steps, 50);
  EXPECT_TRUE(c.infer.record_latency);
  EXPECT_EQ(c.infer.workers, 3);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, Errors) {
  RunConfig c;
  EXPECT_THROW(apply_config_text(c, "[run]\nsede = 1\n"), ValidationError);
  EXPECT_THROW(apply_config_text(c, "[run]\nseed = abc\n"), ValidationError);
  EXPECT_THROW(apply_config_text(c, "seed = 1\n"), ValidationError);
  EXPECT_THROW(apply_config_text(c, "[infer]\nrecord_latency = maybe\n"), ValidationError);
  EXPECT_THROW(apply_config_text(c, "[run\n"), ValidationError);
  RunConfig bad;
  bad.iterations = -1;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = RunConfig{};
  bad.sigma = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = RunConfig{};
  bad.model.head_count = 3;  // 256 is not divisible by 3
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = RunConfig{};
  bad.infer.clue_source = "file";
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Config, LoadFromFileAndEcho) {
  const auto path = std::filesystem::temp_directory_path() / ("irm_cfg_" + std::to_string(::getpid()) + ".ini");
  {
    std::ofstream out(path);
    out << "[run]\nseed = 99\n";
  }
  const RunConfig c = load_config(path);
  std::filesystem::remove(path);
  EXPECT_EQ(c.seed, 99u);
  const auto j = c.to_json();
  EXPECT_EQ(j["seed"], 99);
  EXPECT_EQ(j["model"]["d_model"], 256);
  EXPECT_TRUE(j["backend"].contains("credential_env"));
  EXPECT_THROW(load_config("/nonexistent/irm.ini"), ValidationError);
}
