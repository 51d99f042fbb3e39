#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "irm/aim.hpp"
#include "irm/cli.hpp"
#include "irm/dataset.hpp"
#include "irm/errors.hpp"
#include "irm/eval.hpp"
#include "irm/gradcheck_suite.hpp"
#include "irm/hungarian.hpp"
#include "irm/prompts.hpp"
#include "irm/synthetic.hpp"

namespace py = pybind11;

namespace {

// Items cross the boundary as JSON text; the Python wrapper (de)serializes.
std::vector<irm::IVQAItem> items_from_json(const std::string& text) {
  std::vector<irm::IVQAItem> items;
  for (const auto& j : nlohmann::json::parse(text)) items.push_back(irm::item_from_json(j));
  return items;
}

std::string items_to_json(const std::vector<irm::IVQAItem>& items) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& item : items) arr.push_back(irm::item_to_json(item));
  return arr.dump();
}

std::vector<irm::ClueCandidate> clues_from(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<irm::ClueCandidate> out;
  for (const auto& [action, intent] : pairs) out.push_back({action, intent});
  return out;
}

std::vector<irm::eval::PredictionRecord> records_from(const std::string& text) {
  std::vector<irm::eval::PredictionRecord> out;
  for (const auto& j : nlohmann::json::parse(text)) out.push_back(irm::eval::record_from_json(j));
  return out;
}

}  // namespace

PYBIND11_MODULE(_irm, m) {
  m.doc() = "Clue-based implicit video question answering: core operations.";

  py::register_exception<irm::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<irm::ShapeError>(m, "ShapeError", PyExc_ValueError);

  m.def("hungarian_match", [](const Eigen::MatrixXd& cost) { return irm::hungarian_match(cost); },
        py::arg("cost"));
  m.def("assignment_cost", [](const Eigen::MatrixXd& cost, const irm::Assignment& a) {
    return irm::assignment_cost(cost, a);
  });

  m.def("relation_loss", [](const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    const auto r = irm::aim::relation_loss(irm::aim::RelationLogits{logits}, labels);
    return py::make_tuple(r.loss, r.assignment);
  }, py::arg("logits"), py::arg("labels"));
  m.def("select_relevant", [](const Eigen::MatrixXd& logits) {
    return irm::aim::select_relevant(irm::aim::RelationLogits{logits});
  });
  m.def("loss_schedule", [](int epoch) {
    const auto w = irm::aim::loss_schedule(epoch);
    return py::make_tuple(w.generation_weight, w.relation_weight);
  });
  m.def("combined_loss", &irm::aim::combined_loss, py::arg("generation_loss"),
        py::arg("relation_loss"), py::arg("epoch"));

  m.def("extend_span", [](double start, double end, double duration, double sigma) {
    const auto s = irm::extend_span({start, end}, duration, sigma);
    return py::make_tuple(s.start, s.end);
  }, py::arg("start"), py::arg("end"), py::arg("duration"), py::arg("sigma") = irm::kDefaultSigma);
  m.def("visible_timeline", [](double duration, const std::vector<std::pair<double, double>>& spans) {
    std::vector<irm::EvidenceSpan> excluded;
    for (const auto& [a, b] : spans) excluded.push_back({a, b});
    std::vector<std::pair<double, double>> out;
    for (const auto& s : irm::visible_timeline(duration, excluded)) out.emplace_back(s.start, s.end);
    return out;
  });
  m.def("sample_frames", [](const std::vector<std::pair<double, double>>& visible, std::size_t k) {
    std::vector<irm::TimeSpan> spans;
    for (const auto& [a, b] : visible) spans.push_back({a, b});
    return irm::sample_frames(spans, k);
  });
  m.def("answer_has_timestamp", &irm::answer_has_timestamp);

  m.def("build_mc_prompt", [](const std::string& item_json,
                              const std::vector<std::pair<std::string, std::string>>& clues) {
    const auto item = irm::item_from_json(nlohmann::json::parse(item_json));
    return irm::reasoner::build_mc_prompt(item, clues_from(clues)).rendered;
  });
  m.def("build_open_prompt", [](const std::string& item_json,
                                const std::vector<std::pair<std::string, std::string>>& clues) {
    const auto item = irm::item_from_json(nlohmann::json::parse(item_json));
    return irm::reasoner::build_open_prompt(item, clues_from(clues)).rendered;
  });
  m.def("build_psav_prompt", [](const std::vector<std::pair<std::string, std::string>>& clues) {
    return irm::reasoner::build_psav_prompt(clues_from(clues)).rendered;
  });
  m.def("parse_option", [](const std::string& text, int option_count) {
    const auto p = irm::reasoner::parse_option(text, option_count);
    return py::make_tuple(p.option_index, std::string(irm::reasoner::to_string(p.status)));
  }, py::arg("text"), py::arg("option_count") = 5);

  m.def("mc_accuracy", [](const std::string& records) {
    return irm::eval::mc_accuracy(records_from(records));
  });
  m.def("psav_metrics", [](const std::string& records) {
    const auto r = irm::eval::psav_metrics(records_from(records));
    return py::make_tuple(r.recall, r.accuracy);
  });
  m.def("token_f1", &irm::eval::token_f1);
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return irm::eval::pearson(x, y);
  });
  m.def("robustness_drop", [](double vanilla, double noisy) {
    return irm::eval::robustness_report(vanilla, noisy).drop;
  });
  m.def("noisy_augment", [](const std::string& items, double ratio, std::uint64_t seed) {
    return items_to_json(irm::eval::noisy_augment(items_from_json(items), ratio, seed));
  });

  m.def("synthetic_dataset", [](std::size_t count, std::uint64_t seed) {
    irm::SyntheticOptions o;
    o.count = count;
    o.seed = seed;
    return items_to_json(irm::make_synthetic_dataset(o));
  }, py::arg("count"), py::arg("seed") = 2024);

  m.def("gradcheck_worst", [](int seeds, Eigen::Index d_model) {
    irm::GradCheckSuiteOptions o;
    o.seeds = seeds;
    o.d_model = d_model;
    double worst = 0.0;
    bool pass = true;
    for (const auto& c : irm::run_gradcheck_suite(o)) {
      worst = std::max(worst, c.report.worst());
      pass = pass && c.report.pass;
    }
    return py::make_tuple(pass, worst);
  }, py::arg("seeds") = 2, py::arg("d_model") = 8);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = irm::cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
