#include "irm/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "irm/errors.hpp"
#include "irm/text.hpp"

namespace irm {

void RunConfig::validate() const {
  model.validate();
  backend.validate();
  if (iterations < 0) throw ValidationError("iterations must be >= 0");
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  if (!(noise_ratio >= 0.0)) throw ValidationError("noise_ratio must be >= 0");
  if (train.steps < 0 || train.batch_size < 1 || train.train_items < 1 || train.eval_items < 1) {
    throw ValidationError("train sizes must be positive");
  }
  if (!(train.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (train.answer_buckets < 2) throw ValidationError("answer_buckets must be >= 2");
  if (train.generation_weight < 0 || train.relation_weight < 0 || train.relation_decay < 0) {
    throw ValidationError("loss weights must be >= 0");
  }
  if (infer.clue_source != "dataset" && infer.clue_source != "file" &&
      infer.clue_source != "generate") {
    throw ValidationError("clue_source must be dataset, file or generate");
  }
  if (infer.clue_source == "file" && infer.clue_file.empty()) {
    throw ValidationError("clue_source=file needs clue_file");
  }
  if (infer.workers < 1) throw ValidationError("workers must be >= 1");
}

nlohmann::json RunConfig::to_json() const {
  return {
      {"seed", seed},
      {"seeds", seeds},
      {"out_dir", out_dir.string()},
      {"iterations", iterations},
      {"sigma", sigma},
      {"noise_ratio", noise_ratio},
      {"model",
       {{"d_model", model.d_model},
        {"head_count", model.head_count},
        {"d_visual", model.d_visual},
        {"visual_head_count", model.visual_head_count},
        {"n_queries", model.n_queries},
        {"tokens_per_frame", model.tokens_per_frame},
        {"frame_count", model.frame_count}}},
      {"backend", backend.to_json()},
      {"train",
       {{"steps", train.steps},
        {"batch_size", train.batch_size},
        {"learning_rate", train.learning_rate},
        {"train_items", train.train_items},
        {"eval_items", train.eval_items},
        {"answer_buckets", train.answer_buckets},
        {"generation_weight", train.generation_weight},
        {"relation_weight", train.relation_weight},
        {"relation_decay", train.relation_decay}}},
      {"infer",
       {{"clue_source", infer.clue_source},
        {"clue_file", infer.clue_file.string()},
        {"record_latency", infer.record_latency},
        {"workers", infer.workers},
        {"checkpoint", infer.checkpoint.string()}}},
  };
}

namespace {

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw ValidationError("config key " + key + ": cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = to_lower(trim(text));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config key " + key + ": expected a boolean, got '" + text + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ',')) {
    if (!trim(part).empty()) out.push_back(parse_value<std::uint64_t>(key, trim(part)));
  }
  if (out.empty()) throw ValidationError("config key " + key + ": empty seed list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <typename T, typename F>
Setter number(F field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) {
    field(c) = parse_value<T>(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.seed", number<std::uint64_t>([](RunConfig& c) -> auto& { return c.seed; })},
      {"run.seeds", [](RunConfig& c, const std::string& k,
                       const std::string& v) { c.seeds = parse_seed_list(k, v); }},
      {"run.out_dir", [](RunConfig& c, const std::string&,
                         const std::string& v) { c.out_dir = v; }},
      {"run.iterations", number<int>([](RunConfig& c) -> auto& { return c.iterations; })},
      {"dataset.sigma", number<double>([](RunConfig& c) -> auto& { return c.sigma; })},
      {"dataset.noise_ratio", number<double>([](RunConfig& c) -> auto& { return c.noise_ratio; })},
      {"model.d_model", number<Eigen::Index>([](RunConfig& c) -> auto& { return c.model.d_model; })},
      {"model.head_count", number<int>([](RunConfig& c) -> auto& { return c.model.head_count; })},
      {"model.d_visual",
       number<Eigen::Index>([](RunConfig& c) -> auto& { return c.model.d_visual; })},
      {"model.visual_head_count",
       number<int>([](RunConfig& c) -> auto& { return c.model.visual_head_count; })},
      {"model.n_queries",
       number<Eigen::Index>([](RunConfig& c) -> auto& { return c.model.n_queries; })},
      {"model.tokens_per_frame",
       number<Eigen::Index>([](RunConfig& c) -> auto& { return c.model.tokens_per_frame; })},
      {"model.frame_count",
       number<std::size_t>([](RunConfig& c) -> auto& { return c.model.frame_count; })},
      {"backend.kind", [](RunConfig& c, const std::string&,
                          const std::string& v) { c.backend.kind = reasoner::backend_kind_from_string(v); }},
      {"backend.endpoint", [](RunConfig& c, const std::string&,
                              const std::string& v) { c.backend.endpoint = v; }},
      {"backend.model", [](RunConfig& c, const std::string&,
                           const std::string& v) { c.backend.model = v; }},
      {"backend.timeout",
       number<double>([](RunConfig& c) -> auto& { return c.backend.timeout_seconds; })},
      {"backend.max_in_flight",
       number<int>([](RunConfig& c) -> auto& { return c.backend.max_in_flight; })},
      {"backend.retry_budget",
       number<int>([](RunConfig& c) -> auto& { return c.backend.retry_budget; })},
      {"backend.backoff",
       number<double>([](RunConfig& c) -> auto& { return c.backend.backoff_seconds; })},
      {"backend.temperature",
       number<double>([](RunConfig& c) -> auto& { return c.backend.temperature; })},
      {"backend.credential_env", [](RunConfig& c, const std::string&,
                                    const std::string& v) { c.backend.credential_env = v; }},
      {"backend.mock_script", [](RunConfig& c, const std::string&,
                                 const std::string& v) { c.backend.mock_script = v; }},
      {"train.steps", number<int>([](RunConfig& c) -> auto& { return c.train.steps; })},
      {"train.batch_size", number<int>([](RunConfig& c) -> auto& { return c.train.batch_size; })},
      {"train.learning_rate",
       number<double>([](RunConfig& c) -> auto& { return c.train.learning_rate; })},
      {"train.train_items", number<int>([](RunConfig& c) -> auto& { return c.train.train_items; })},
      {"train.eval_items", number<int>([](RunConfig& c) -> auto& { return c.train.eval_items; })},
      {"train.answer_buckets",
       number<int>([](RunConfig& c) -> auto& { return c.train.answer_buckets; })},
      {"train.generation_weight",
       number<double>([](RunConfig& c) -> auto& { return c.train.generation_weight; })},
      {"train.relation_weight",
       number<double>([](RunConfig& c) -> auto& { return c.train.relation_weight; })},
      {"train.relation_decay",
       number<double>([](RunConfig& c) -> auto& { return c.train.relation_decay; })},
      {"infer.clue_source", [](RunConfig& c, const std::string&,
                               const std::string& v) { c.infer.clue_source = v; }},
      {"infer.clue_file", [](RunConfig& c, const std::string&,
                             const std::string& v) { c.infer.clue_file = v; }},
      {"infer.record_latency", [](RunConfig& c, const std::string& k,
                                  const std::string& v) { c.infer.record_latency = parse_bool(k, v); }},
      {"infer.workers", number<int>([](RunConfig& c) -> auto& { return c.infer.workers; })},
      {"infer.checkpoint", [](RunConfig& c, const std::string&,
                              const std::string& v) { c.infer.checkpoint = v; }},
  };
  return table;
}

}  // namespace

void apply_config_text(RunConfig& config, const std::string& ini_text) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ValidationError("config key '" + section + "' is outside a section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) throw ValidationError("unknown config key " + full);
      it->second(config, full, trim(value.data()));
    }
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig config;
  try {
    apply_config_text(config, buffer.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return config;
}

}  // namespace irm
