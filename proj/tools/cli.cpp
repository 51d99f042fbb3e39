#include "irm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "irm/checkpoint.hpp"
#include "irm/config.hpp"
#include "irm/dataset.hpp"
#include "irm/errors.hpp"
#include "irm/eval.hpp"
#include "irm/gradcheck_suite.hpp"
#include "irm/pipeline.hpp"
#include "irm/synthetic.hpp"
#include "irm/trainer.hpp"

namespace irm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> backend;
  std::optional<int> iterations;
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.out_dir) cfg.out_dir = *g.out_dir;
  if (g.backend) cfg.backend.kind = reasoner::backend_kind_from_string(*g.backend);
  if (g.iterations) cfg.iterations = *g.iterations;
  return cfg;
}

json header(const std::string& command, const RunConfig& cfg, json extra = json::object()) {
  json h = {{"command", command}, {"version", kVersion}, {"seed", cfg.seed}, {"config", cfg.to_json()}};
  for (auto& [k, v] : extra.items()) h[k] = v;
  return h;
}

fs::path in_out_dir(const RunConfig& cfg, const std::string& explicit_path, const char* fallback) {
  fs::path p = explicit_path.empty() ? cfg.out_dir / fallback : fs::path(explicit_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---- build-dataset ---------------------------------------------------------

struct BuildArgs {
  std::string input;
  std::size_t synthetic = 0;
  std::string output;
  std::string stats;
  std::optional<double> sigma;
  bool judge_relations = false;
};

int cmd_build_dataset(const Globals& g, const BuildArgs& a, std::ostream& out) {
  RunConfig cfg = resolve(g);
  if (a.sigma) cfg.sigma = *a.sigma;
  cfg.validate();
  if (a.input.empty() == (a.synthetic == 0)) {
    throw ValidationError("give exactly one of --input or --synthetic");
  }

  std::vector<IVQAItem> items;
  json summary = json::object();
  if (a.synthetic > 0) {
    SyntheticOptions so;
    so.count = a.synthetic;
    so.seed = cfg.seed;
    so.sigma = cfg.sigma;
    items = make_synthetic_dataset(so);
  } else {
    const auto sources = read_source(a.input);
    if (sources.empty()) throw ValidationError(a.input + ": source holds no records");
    BuildOptions options;
    options.sigma = cfg.sigma;
    std::unique_ptr<reasoner::ChatBackend> backend;
    std::unique_ptr<reasoner::ChatRelationJudge> judge;
    if (a.judge_relations) {
      backend = reasoner::make_backend(cfg.backend);
      judge = std::make_unique<reasoner::ChatRelationJudge>(*backend);
      options.relation_judge = judge.get();
    }
    BuildResult result = build_dataset(sources, options);
    std::map<std::string, int> reasons;
    json dropped = json::array();
    for (const auto& d : result.dropped) {
      const std::string reason = d.reason.substr(0, d.reason.find(':'));
      ++reasons[reason];
      dropped.push_back({{"id", d.id}, {"reason", d.reason}});
      out << "dropped " << d.id << ": " << d.reason << "\n";
    }
    summary = {{"source_records", sources.size()},
               {"dropped", dropped},
               {"dropped_by_reason", reasons},
               {"ineligible_clues", result.ineligible_clues}};
    items = std::move(result.items);
  }

  const fs::path dataset_path = in_out_dir(cfg, a.output, "dataset.jsonl");
  const fs::path stats_path = in_out_dir(cfg, a.stats, "dataset_stats.json");
  const json h = header("build-dataset", cfg,
                        {{"input", a.input}, {"synthetic", a.synthetic},
                         {"temporal_pattern_version", kTemporalPatternVersion}});
  write_dataset(dataset_path, items, h);
  json stats = items.empty() ? json::object() : compute_statistics(items).to_json();
  write_json(stats_path, {{"_header", h}, {"build", summary}, {"stats", stats}});
  out << "wrote " << items.size() << " items to " << dataset_path.string() << "\n";
  if (items.empty()) throw ValidationError("no items survived filtering");
  return kOk;
}

// ---- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string dataset;
  std::string output;
  std::string svg;
};

int cmd_stats(const Globals& g, const StatsArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve(g);
  const auto items = read_dataset(a.dataset);
  if (items.empty()) throw ValidationError(a.dataset + ": dataset is empty");
  const DatasetStats stats = compute_statistics(items);
  const fs::path path = in_out_dir(cfg, a.output, "stats.json");
  write_json(path, {{"_header", header("stats", cfg, {{"dataset", a.dataset}})},
                    {"stats", stats.to_json()}});
  if (!a.svg.empty()) write_file_atomic(a.svg, render_stats_svg(stats));
  out << stats.to_json().dump(2) << "\n";
  return kOk;
}

// ---- generate-clues --------------------------------------------------------

struct GenerateArgs {
  std::string dataset;
  std::string output;
};

int cmd_generate_clues(const Globals& g, const GenerateArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve(g);
  cfg.validate();
  const auto items = read_dataset(a.dataset);
  auto backend = reasoner::make_backend(cfg.backend);
  const IrmModel shapes(cfg.model);

  std::vector<json> lines;
  std::size_t failures = 0;
  for (const auto& item : items) {
    json line = {{"item_id", item.id}, {"clues", json::array()}};
    try {
      const auto frames = item_frames(shapes, item, cfg.seed);
      const auto parsed =
          reasoner::generate_clue_candidates(visual_context(frames), item.question, *backend);
      for (const auto& c : parsed.clues) {
        line["clues"].push_back({{"action", c.action}, {"intent", c.intent}});
      }
      line["warnings"] = parsed.warnings;
    } catch (const std::exception& e) {
      ++failures;
      line["error"] = e.what();
    }
    lines.push_back(std::move(line));
  }
  const fs::path path = in_out_dir(cfg, a.output, "clues.jsonl");
  write_jsonl(path, lines, header("generate-clues", cfg, {{"dataset", a.dataset}}));
  out << "generated clues for " << items.size() - failures << "/" << items.size() << " items -> "
      << path.string() << "\n";
  return kOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string eval_dataset;
  std::optional<int> steps;
  std::string checkpoint;
};

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = resolve(g);
  if (a.steps) cfg.train.steps = *a.steps;
  cfg.validate();

  std::vector<IVQAItem> train_items;
  std::vector<IVQAItem> eval_items;
  if (a.dataset.empty()) {
    SyntheticOptions so;
    so.seed = cfg.seed;
    so.sigma = cfg.sigma;
    so.count = static_cast<std::size_t>(cfg.train.train_items);
    so.id_prefix = "train";
    train_items = make_synthetic_dataset(so);
    so.seed = hash_combine(cfg.seed, stable_hash("held-out"));
    so.count = static_cast<std::size_t>(cfg.train.eval_items);
    so.id_prefix = "heldout";
    eval_items = make_synthetic_dataset(so);
  } else {
    auto items = read_dataset(a.dataset);
    if (!a.eval_dataset.empty()) {
      train_items = std::move(items);
      eval_items = read_dataset(a.eval_dataset);
    } else {
      // Every fifth item is held out.
      for (std::size_t i = 0; i < items.size(); ++i) {
        (i % 5 == 4 ? eval_items : train_items).push_back(items[i]);
      }
    }
  }
  for (const auto* set : {&train_items, &eval_items}) {
    for (const auto& item : *set) {
      for (const auto& c : item.clues) {
        if (!c.relation_label) {
          throw ValidationError("item " + item.id + " lacks relation labels; training needs them");
        }
      }
    }
  }

  IrmModel model = IrmModel::create(cfg.model, cfg.seed);
  ProxyDecoder decoder(cfg.model.d_model, cfg.train.answer_buckets);
  Rng decoder_rng(hash_combine(cfg.seed, stable_hash("decoder")));
  decoder.init(decoder_rng);

  const json h = header("train", cfg, {{"dataset", a.dataset}, {"eval_dataset", a.eval_dataset}});
  const TrainResult result =
      train(model, decoder, train_items, eval_items, cfg.train, cfg.seed, [&](const EpochLog& e) {
        out << "epoch " << e.epoch << " step " << e.last_step << " w_gen "
            << fmt("%.2f", e.generation_weight) << " w_rel " << fmt("%.2f", e.relation_weight)
            << " loss " << fmt("%.6f", e.mean_loss) << " relation_acc "
            << fmt("%.2f", e.relation_accuracy) << "\n";
      });

  const fs::path ckpt = in_out_dir(cfg, a.checkpoint, "checkpoint.irm");
  std::vector<nn::Parameter*> params = model.parameters();
  for (auto* p : decoder.parameters()) params.push_back(p);
  save_parameters(ckpt, params);

  std::vector<json> curve;
  for (const auto& s : result.steps) {
    json j = to_json(s);
    j["kind"] = "step";
    curve.push_back(std::move(j));
  }
  json epochs = json::array();
  for (const auto& e : result.epochs) {
    json j = to_json(e);
    epochs.push_back(j);
    j["kind"] = "epoch";
    curve.push_back(std::move(j));
  }
  write_jsonl(cfg.out_dir / "loss_curve.jsonl", curve, h);
  write_json(cfg.out_dir / "train_report.json",
             {{"_header", h},
              {"checkpoint", ckpt.string()},
              {"train_items", train_items.size()},
              {"eval_items", eval_items.size()},
              {"steps", result.steps.size()},
              {"final_relation_accuracy", result.final_relation_accuracy},
              {"epochs", epochs}});
  out << "relation accuracy " << fmt("%.2f", result.final_relation_accuracy) << "% after "
      << result.steps.size() << " steps; checkpoint " << ckpt.string() << "\n";
  return kOk;
}

// ---- infer -----------------------------------------------------------------

struct InferArgs {
  std::string dataset;
  std::size_t synthetic = 0;
  std::string checkpoint;
  std::string output;
  std::string clue_source;
  std::string clue_file;
  bool noisy = false;
  bool record_latency = false;
  std::optional<int> workers;
};

int cmd_infer(const Globals& g, const InferArgs& a, std::ostream& out) {
  RunConfig cfg = resolve(g);
  if (!a.checkpoint.empty()) cfg.infer.checkpoint = a.checkpoint;
  if (!a.clue_source.empty()) cfg.infer.clue_source = a.clue_source;
  if (!a.clue_file.empty()) cfg.infer.clue_file = a.clue_file;
  if (a.record_latency) cfg.infer.record_latency = true;
  if (a.workers) cfg.infer.workers = *a.workers;
  cfg.validate();
  if (a.dataset.empty() == (a.synthetic == 0)) {
    throw ValidationError("give exactly one of --dataset or --synthetic");
  }

  std::vector<IVQAItem> items;
  if (a.synthetic > 0) {
    SyntheticOptions so;
    so.count = a.synthetic;
    so.seed = cfg.seed;
    so.sigma = cfg.sigma;
    items = make_synthetic_dataset(so);
  } else {
    items = read_dataset(a.dataset);
  }
  if (items.empty()) throw ValidationError("no items to run");
  if (a.noisy) items = eval::noisy_augment(items, cfg.noise_ratio, cfg.seed);

  IrmModel model = IrmModel::create(cfg.model, cfg.seed);
  if (!cfg.infer.checkpoint.empty()) model.load(cfg.infer.checkpoint);
  auto backend = reasoner::make_backend(cfg.backend);

  ClueTable table;
  InferenceOptions options;
  options.iterations = cfg.iterations;
  options.clue_source = clue_source_from_string(cfg.infer.clue_source);
  if (options.clue_source == ClueSource::file) {
    table = read_clue_file(cfg.infer.clue_file);
    options.clue_table = &table;
  }
  options.record_latency = cfg.infer.record_latency;
  options.workers = cfg.infer.workers;
  options.seed = cfg.seed;

  const auto records = run_inference(model, items, *backend, options);

  std::map<std::string, int> statuses;
  std::size_t transport_failures = 0;
  for (const auto& r : records) {
    ++statuses[r.parse_status];
    if (!r.error.empty()) {
      out << "item " << r.item_id << " failed: " << r.error << "\n";
      if (r.error.rfind("transport", 0) == 0 || r.error.rfind("protocol", 0) == 0) {
        ++transport_failures;
      }
    }
  }
  const fs::path path = in_out_dir(cfg, a.output, "predictions.jsonl");
  write_predictions(path, records,
                    header("infer", cfg,
                           {{"dataset", a.dataset},
                            {"synthetic", a.synthetic},
                            {"noisy", a.noisy},
                            {"checkpoint", cfg.infer.checkpoint.string()}}));
  out << "wrote " << records.size() << " predictions to " << path.string() << " (";
  bool first = true;
  for (const auto& [status, n] : statuses) {
    out << (first ? "" : ", ") << status << " " << n;
    first = false;
  }
  out << ")\n";
  return transport_failures > 0 ? kTransport : kOk;
}

// ---- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> predictions;
  std::string output;
  std::string judge = "mock";
  bool psav = false;
  std::string markdown;
};

json breakdown_json(const std::map<std::string, eval::TypeBreakdown>& b) {
  json j = json::object();
  for (const auto& [type, row] : b) {
    j[type] = {{"accuracy", row.accuracy}, {"correct", row.correct}, {"count", row.count}};
  }
  return j;
}

json evaluate_file(const std::string& file, eval::AnswerJudge& judge, bool psav, std::string* table) {
  const auto records = eval::read_predictions(file);
  if (records.empty()) throw ValidationError(file + ": no prediction records");
  json report = {{"predictions", file}, {"records", records.size()}};

  std::map<std::string, int> statuses;
  for (const auto& r : records) ++statuses[r.parse_status];
  report["parse_status"] = statuses;

  if (psav) {
    const auto m = eval::psav_metrics(records);
    report["psav"] = {{"recall", m.recall}, {"accuracy", m.accuracy}};
    return report;
  }
  std::vector<eval::PredictionRecord> mc;
  std::vector<eval::PredictionRecord> open;
  for (const auto& r : records) (r.gold_index ? mc : open).push_back(r);
  if (!mc.empty()) {
    report["multi_choice"] = {{"accuracy", eval::mc_accuracy(mc)}, {"count", mc.size()}};
    const auto breakdown = eval::breakdown_by_question_type(mc);
    report["breakdown"] = breakdown_json(breakdown);
    if (table != nullptr) {
      *table += "| Question type | Accuracy | Count |\n|---|---|---|\n";
      for (const char* type : {"why", "what", "how", "other"}) {
        const auto it = breakdown.find(type);
        if (it == breakdown.end()) continue;
        *table += std::string("| ") + type + " | " + fmt("%.2f", it->second.accuracy) + " | " +
                  std::to_string(it->second.count) + " |\n";
      }
    }
  }
  if (!open.empty()) {
    const auto r = eval::open_ended_eval(open, judge);
    report["open_ended"] = {{"score", r.mean_score},
                            {"accuracy", r.accuracy},
                            {"judged", r.judged},
                            {"exclusions", r.exclusions}};
  }
  return report;
}

int cmd_evaluate(const Globals& g, const EvaluateArgs& a, std::ostream& out) {
  RunConfig cfg = resolve(g);
  cfg.validate();
  std::unique_ptr<reasoner::ChatBackend> backend;
  std::unique_ptr<eval::AnswerJudge> judge;
  if (a.judge == "mock") {
    judge = std::make_unique<eval::MockJudge>();
  } else if (a.judge == "backend") {
    backend = reasoner::make_backend(cfg.backend);
    judge = std::make_unique<eval::ChatJudge>(*backend);
  } else {
    throw ValidationError("--judge must be mock or backend");
  }

  std::string table;
  json runs = json::array();
  std::vector<double> accuracies;
  for (const auto& file : a.predictions) {
    json r = evaluate_file(file, *judge, a.psav, runs.empty() ? &table : nullptr);
    if (r.contains("multi_choice")) accuracies.push_back(r["multi_choice"]["accuracy"]);
    runs.push_back(std::move(r));
  }
  json report = {{"_header", header("evaluate", cfg, {{"judge", a.judge}})}, {"runs", runs}};
  if (accuracies.size() > 1) {
    const auto agg = eval::aggregate_seeds(accuracies);
    report["seed_mean"] = {{"mean", agg.mean}, {"stddev", agg.stddev}, {"values", agg.values}};
  }
  const fs::path path = in_out_dir(cfg, a.output, "report.json");
  write_json(path, report);
  if (!a.markdown.empty()) write_file_atomic(a.markdown, table);
  out << runs.dump(2) << "\n";
  if (!table.empty()) out << table;
  return kOk;
}

// ---- robustness ------------------------------------------------------------

struct RobustnessArgs {
  std::string vanilla;
  std::string noisy;
  std::optional<double> vanilla_accuracy;
  std::optional<double> noisy_accuracy;
  std::string output;
};

int cmd_robustness(const Globals& g, const RobustnessArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve(g);
  eval::RobustnessReport report;
  if (!a.vanilla.empty() || !a.noisy.empty()) {
    if (a.vanilla.empty() || a.noisy.empty()) throw ValidationError("need both --vanilla and --noisy");
    const auto v = eval::read_predictions(a.vanilla);
    const auto n = eval::read_predictions(a.noisy);
    report = eval::robustness_report(v, n);
  } else if (a.vanilla_accuracy && a.noisy_accuracy) {
    report = eval::robustness_report(*a.vanilla_accuracy, *a.noisy_accuracy);
  } else {
    throw ValidationError("give --vanilla/--noisy prediction files or both accuracies");
  }
  const fs::path path = in_out_dir(cfg, a.output, "robustness.json");
  write_json(path, {{"_header", header("robustness", cfg,
                                       {{"vanilla", a.vanilla}, {"noisy", a.noisy}})},
                    {"report", report.to_json()}});
  out << "vanilla " << fmt("%.2f", report.vanilla_accuracy) << " noisy "
      << fmt("%.2f", report.noisy_accuracy) << " drop " << fmt("%.2f", report.drop) << "\n";
  return kOk;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  int seeds = 20;
  Eigen::Index d_model = 8;
  std::string output;
};

int cmd_gradcheck(const Globals& g, const GradcheckArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve(g);
  GradCheckSuiteOptions options;
  options.seeds = a.seeds;
  options.d_model = a.d_model;
  options.base_seed = cfg.seed;
  const auto checks = run_gradcheck_suite(options);

  json results = json::array();
  std::map<std::string, std::pair<int, double>> per_op;  // passes, worst
  std::vector<std::string> failures;
  for (const auto& c : checks) {
    results.push_back(to_json(c));
    auto& [passes, worst] = per_op[c.op];
    if (c.report.pass) ++passes;
    worst = std::max(worst, c.report.worst());
    if (!c.report.pass) {
      failures.push_back(c.op + " seed " + std::to_string(c.seed) + ": " + c.report.diagnostic);
    }
  }
  for (const auto& op : gradcheck_ops()) {
    const auto& [passes, worst] = per_op[op];
    out << op << ": " << passes << "/" << a.seeds << " pass, worst relative error "
        << fmt("%.3e", worst) << "\n";
  }
  const fs::path path = in_out_dir(cfg, a.output, "gradcheck.json");
  write_json(path, {{"_header", header("gradcheck", cfg, {{"seeds", a.seeds}, {"d_model", a.d_model}})},
                    {"checks", results}});
  for (const auto& f : failures) out << "FAIL " << f << "\n";
  if (!failures.empty()) throw AssertionFailure(std::to_string(failures.size()) + " gradient checks failed");
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Implicit video question answering toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Globals g;
  app.add_option("--config", g.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--out-dir", g.out_dir, "directory for outputs");
  app.add_option("--backend", g.backend, "chat backend: mock or remote");
  app.add_option("--iterations", g.iterations, "extra AIM/VEM feedback passes (k)");

  std::function<int()> action;

  BuildArgs build;
  auto* sc = app.add_subcommand("build-dataset", "filter and mask grounded-VQA annotations");
  sc->add_option("--input", build.input, "source annotation JSONL");
  sc->add_option("--synthetic", build.synthetic, "generate N synthetic items instead");
  sc->add_option("--output", build.output, "dataset JSONL to write");
  sc->add_option("--stats", build.stats, "statistics JSON to write");
  sc->add_option("--sigma", build.sigma, "evidence extension divisor");
  sc->add_flag("--judge-relations", build.judge_relations, "label unlabeled clues via the backend");
  sc->callback([&] { action = [&] { return cmd_build_dataset(g, build, out); }; });

  StatsArgs stats;
  sc = app.add_subcommand("stats", "dataset statistics");
  sc->add_option("--dataset", stats.dataset, "dataset JSONL")->required();
  sc->add_option("--output", stats.output, "statistics JSON to write");
  sc->add_option("--svg", stats.svg, "histogram plot to write");
  sc->callback([&] { action = [&] { return cmd_stats(g, stats, out); }; });

  GenerateArgs gen;
  sc = app.add_subcommand("generate-clues", "ask the backend for action-intent clue candidates");
  sc->add_option("--dataset", gen.dataset, "dataset JSONL")->required();
  sc->add_option("--output", gen.output, "clue JSONL to write");
  sc->callback([&] { action = [&] { return cmd_generate_clues(g, gen, out); }; });

  TrainArgs tr;
  sc = app.add_subcommand("train", "train the clue-reasoning modules");
  sc->add_option("--dataset", tr.dataset, "labelled dataset JSONL (default: synthetic)");
  sc->add_option("--eval-dataset", tr.eval_dataset, "held-out dataset JSONL");
  sc->add_option("--steps", tr.steps, "optimizer steps");
  sc->add_option("--checkpoint", tr.checkpoint, "checkpoint to write");
  sc->callback([&] { action = [&] { return cmd_train(g, tr, out); }; });

  InferArgs inf;
  sc = app.add_subcommand("infer", "answer questions with refined clues");
  sc->add_option("--dataset", inf.dataset, "dataset JSONL");
  sc->add_option("--synthetic", inf.synthetic, "run on N synthetic items instead");
  sc->add_option("--checkpoint", inf.checkpoint, "trained checkpoint");
  sc->add_option("--output", inf.output, "predictions JSONL to write");
  sc->add_option("--clue-source", inf.clue_source, "dataset, file or generate");
  sc->add_option("--clue-file", inf.clue_file, "precomputed clue JSONL");
  sc->add_flag("--noisy", inf.noisy, "add clues from unrelated videos first");
  sc->add_flag("--record-latency", inf.record_latency, "store wall-clock latency per item");
  sc->add_option("--workers", inf.workers, "parallel items");
  sc->callback([&] { action = [&] { return cmd_infer(g, inf, out); }; });

  EvaluateArgs ev;
  sc = app.add_subcommand("evaluate", "score prediction files");
  sc->add_option("--predictions", ev.predictions, "prediction JSONL (one per seed)")->required();
  sc->add_option("--output", ev.output, "report JSON to write");
  sc->add_option("--judge", ev.judge, "open-ended judge: mock or backend");
  sc->add_flag("--psav", ev.psav, "records carry strategy label sets");
  sc->add_option("--markdown", ev.markdown, "question-type table to write");
  sc->callback([&] { action = [&] { return cmd_evaluate(g, ev, out); }; });

  RobustnessArgs rb;
  sc = app.add_subcommand("robustness", "accuracy drop under noisy clues");
  sc->add_option("--vanilla", rb.vanilla, "predictions without noise");
  sc->add_option("--noisy", rb.noisy, "predictions with noisy clues");
  sc->add_option("--vanilla-accuracy", rb.vanilla_accuracy, "accuracy without noise");
  sc->add_option("--noisy-accuracy", rb.noisy_accuracy, "accuracy with noisy clues");
  sc->add_option("--output", rb.output, "report JSON to write");
  sc->callback([&] { action = [&] { return cmd_robustness(g, rb, out); }; });

  GradcheckArgs gc;
  sc = app.add_subcommand("gradcheck", "finite-difference checks of every differentiable op");
  sc->add_option("--seeds", gc.seeds, "random instances per op");
  sc->add_option("--d-model", gc.d_model, "width used for the checks");
  sc->add_option("--output", gc.output, "report JSON to write");
  sc->callback([&] { action = [&] { return cmd_gradcheck(g, gc, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    return action();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const TransportError& e) {
    err << "transport error (request " << e.request_id() << "): " << e.what() << "\n";
    return kTransport;
  } catch (const ProtocolError& e) {
    err << "protocol error (HTTP " << e.status() << "): " << e.what() << "\n";
    return kTransport;
  } catch (const AssertionFailure& e) {
    err << "assertion failed: " << e.what() << "\n";
    return kAssertion;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace irm::cli
