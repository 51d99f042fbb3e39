#include "irm/gradcheck_suite.hpp"

#include "irm/aim.hpp"
#include "irm/trainer.hpp"
#include "irm/vem.hpp"

namespace irm {

namespace {

using nn::Matrix;

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void randomize(nn::AttentionBlock& block, Rng& rng) {
  block.init(rng);
  block.output.init_uniform(rng);
}

std::vector<nn::Parameter*> join(std::vector<nn::Parameter*> a, const std::vector<nn::Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

nn::GradCheckReport check_op(const std::string& op, std::uint64_t seed,
                             const GradCheckSuiteOptions& o) {
  Rng rng(hash_combine(seed, stable_hash(op)));
  const Eigen::Index d = o.d_model;
  const int h = o.heads;

  if (op == "linear") {
    nn::Linear layer("linear", d, d / 2 + 1);
    layer.init_uniform(rng);
    const Matrix x = random_matrix(rng, 3, d);
    const Matrix w = random_matrix(rng, 3, layer.out_features());
    return nn::grad_check(layer.parameters(), [&](nn::Tape& t) {
      return nn::weighted_sum(layer.forward(t, t.constant(x)), w);
    }, o.check);
  }
  if (op == "self_attention" || op == "cross_attention") {
    nn::AttentionBlock block(op, d, h);
    randomize(block, rng);
    const Matrix q = random_matrix(rng, 4, d);
    const Matrix kv = random_matrix(rng, 5, d);
    const Matrix w = random_matrix(rng, 4, d);
    const bool self = op == "self_attention";
    return nn::grad_check(block.parameters(), [&](nn::Tape& t) {
      nn::Var out = self ? nn::self_attention(t, block, t.constant(q))
                         : nn::cross_attention(t, block, t.constant(q), t.constant(kv));
      return nn::weighted_sum(out, w);
    }, o.check);
  }
  if (op == "hallucination_verify") {
    aim::AimParams params(d, h);
    params.init(rng);
    randomize(params.hallucination, rng);
    const Matrix actions = random_matrix(rng, 5, d);
    const Matrix visual = random_matrix(rng, 6, d);
    const Matrix w = random_matrix(rng, 5, d);
    return nn::grad_check(params.hallucination.parameters(), [&](nn::Tape& t) {
      return nn::weighted_sum(
          aim::hallucination_verify(t, params, t.constant(actions), t.constant(visual)), w);
    }, o.check);
  }
  if (op == "relation_classifier") {
    aim::AimParams params(d, h);
    params.init(rng);
    randomize(params.relation_cross, rng);
    randomize(params.relation_self, rng);
    const Matrix intents = random_matrix(rng, 5, d);
    const Matrix verified = random_matrix(rng, 4, d);
    const Matrix question = random_matrix(rng, 3, d);
    const std::vector<nn::Segment> bounds = {{0, 2}, {2, 5}};
    const Matrix w = random_matrix(rng, 2, 2);
    auto ps = join(join(params.relation_cross.parameters(), params.relation_self.parameters()),
                   params.relation_head.parameters());
    return nn::grad_check(ps, [&](nn::Tape& t) {
      return nn::weighted_sum(aim::relation_classify(t, params, t.constant(intents), bounds,
                                                     t.constant(verified), t.constant(question)),
                              w);
    }, o.check);
  }
  if (op == "relation_loss") {
    const int n = 2 + static_cast<int>(rng.index(4));
    nn::Parameter logits("logits", random_matrix(rng, n, 2));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng.index(2));
    nn::Parameter* ps[] = {&logits};
    return nn::grad_check(ps, [&](nn::Tape& t) {
      return aim::relation_loss(t, t.parameter(logits), labels);
    }, o.check);
  }
  if (op == "projection") {
    nn::Linear proj("vem.projection", d / 2 + 2, d);
    proj.init_uniform(rng);
    const Matrix q = random_matrix(rng, 4, proj.in_features());
    const Matrix w = random_matrix(rng, 4, d);
    return nn::grad_check(proj.parameters(), [&](nn::Tape& t) {
      return nn::weighted_sum(vem::project(t, proj, t.constant(q)), w);
    }, o.check);
  }
  if (op == "compressor") {
    vem::CompressorParams comp(3, d, h);
    comp.init(rng);
    comp.attention.output.init_uniform(rng);
    const Matrix frames = random_matrix(rng, 6, d);
    const Matrix instruction = random_matrix(rng, 2, d);
    const Matrix w = random_matrix(rng, 3, d);
    return nn::grad_check(comp.parameters(), [&](nn::Tape& t) {
      return nn::weighted_sum(vem::compress_visual(t, comp, frames, instruction), w);
    }, o.check);
  }
  if (op == "enhancement") {
    nn::AttentionBlock block("vem.enhancement", d, h);
    randomize(block, rng);
    const Matrix xv = random_matrix(rng, 3, d);
    const Matrix clues = random_matrix(rng, 4, d);
    const Matrix w = random_matrix(rng, 3, d);
    return nn::grad_check(block.parameters(), [&](nn::Tape& t) {
      return nn::weighted_sum(vem::enhance(t, block, t.constant(xv), t.constant(clues)), w);
    }, o.check);
  }
  if (op == "proxy_decoder") {
    ProxyDecoder decoder(d, 5);
    decoder.init(rng);
    const Matrix x = random_matrix(rng, 1, 2 * d);
    const int label = static_cast<int>(rng.index(5));
    return nn::grad_check(decoder.parameters(), [&](nn::Tape& t) {
      return nn::cross_entropy(decoder.head.forward(t, t.constant(x)), label);
    }, o.check);
  }
  throw std::invalid_argument("unknown gradcheck op " + op);
}

}  // namespace

const std::vector<std::string>& gradcheck_ops() {
  static const std::vector<std::string> ops = {
      "linear",      "self_attention", "cross_attention", "hallucination_verify",
      "relation_classifier", "relation_loss", "projection", "compressor",
      "enhancement", "proxy_decoder"};
  return ops;
}

std::vector<OpCheck> run_gradcheck_suite(const GradCheckSuiteOptions& options) {
  std::vector<OpCheck> out;
  for (const auto& op : gradcheck_ops()) {
    for (int s = 0; s < options.seeds; ++s) {
      const std::uint64_t seed = options.base_seed + static_cast<std::uint64_t>(s);
      out.push_back({op, seed, check_op(op, seed, options)});
    }
  }
  return out;
}

nlohmann::json to_json(const OpCheck& check) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : check.report.parameters) {
    params.push_back({{"name", p.name}, {"max_relative_error", p.max_relative_error}});
  }
  return {{"op", check.op},
          {"seed", check.seed},
          {"pass", check.report.pass},
          {"worst", check.report.worst()},
          {"tolerance", check.report.tolerance},
          {"diagnostic", check.report.diagnostic},
          {"parameters", params}};
}

}  // namespace irm
