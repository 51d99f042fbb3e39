#include "irm/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include <httplib.h>
// <resolv.h> (pulled in by httplib) defines _res, which Eigen uses as a name.
#undef _res

#include "irm/errors.hpp"
#include "irm/random.hpp"
#include "irm/text.hpp"

namespace irm::reasoner {

std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::mock ? "mock" : "remote";
}

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "mock") return BackendKind::mock;
  if (name == "remote") return BackendKind::remote;
  throw ValidationError("unknown backend '" + std::string(name) + "' (mock|remote)");
}

void BackendConfig::validate() const {
  if (kind == BackendKind::remote && (endpoint.empty() || model.empty())) {
    throw ValidationError("remote backend needs an endpoint and a model name");
  }
  if (timeout_seconds <= 0) throw ValidationError("backend timeout must be positive");
  if (max_in_flight < 1 || max_in_flight > 1024) {
    throw ValidationError("max_in_flight must be in [1, 1024]");
  }
  if (retry_budget < 0) throw ValidationError("retry budget must be >= 0");
  if (backoff_seconds < 0) throw ValidationError("backoff must be >= 0");
}

nlohmann::json BackendConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"endpoint", endpoint},
          {"model", model},
          {"timeout_seconds", timeout_seconds},
          {"max_in_flight", max_in_flight},
          {"retry_budget", retry_budget},
          {"backoff_seconds", backoff_seconds},
          {"temperature", temperature},
          {"credential_env", credential_env},
          {"mock_script", mock_script}};
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

// Option whose words appear most often in the clue lines; -1 when no option
// shares a word with any clue or the best score is tied.
int best_overlap_option(const PromptBundle& prompt) {
  static const std::regex option_re(R"(^\(([A-Z])\) (.*)$)");
  std::map<std::string, int> clue_words;
  for (const auto& clue : parse_clue_block(prompt.rendered)) {
    for (const auto& t : tokenize(clue.action + " " + clue.intent)) ++clue_words[t];
  }
  if (clue_words.empty()) return -1;
  int best = -1;
  int best_score = 0;
  bool tied = false;
  for (const auto& line : split_lines(prompt.rendered)) {
    std::smatch m;
    if (!std::regex_match(line, m, option_re)) continue;
    std::set<std::string> words;
    for (const auto& t : tokenize(m[2].str())) words.insert(t);
    int score = 0;
    for (const auto& w : words) {
      if (auto it = clue_words.find(w); it != clue_words.end()) score += it->second;
    }
    const int index = m[1].str()[0] - 'A';
    if (score > best_score) {
      best = index;
      best_score = score;
      tied = false;
    } else if (score == best_score && score > 0) {
      tied = true;
    }
  }
  return tied ? -1 : best;
}

std::string fallback_response(const PromptBundle& prompt, std::uint64_t h) {
  switch (prompt.template_id) {
    case TemplateId::multi_choice:
    case TemplateId::psav: {
      const int n = prompt.choice_count > 0 ? prompt.choice_count : 5;
      int letter = static_cast<int>(h % static_cast<std::uint64_t>(n));
      if (const int overlap = best_overlap_option(prompt); overlap >= 0) letter = overlap;
      return std::string("The best option is (") + static_cast<char>('A' + letter) + ").";
    }
    case TemplateId::open_ended: {
      const auto clues = parse_clue_block(prompt.rendered);
      if (clues.empty()) return "I cannot tell from the visible frames.";
      return clues[h % clues.size()].intent;
    }
    case TemplateId::clue_generation: {
      static const std::regex frame_re(R"(^Frame\d+ \([^)]*\): (.+)$)");
      std::string out;
      int index = 0;
      for (const auto& line : split_lines(prompt.rendered)) {
        std::smatch m;
        if (std::regex_match(line, m, frame_re)) {
          ++index;
          out += std::to_string(index) + ". " + m[1].str() + ": continue the ongoing activity\n";
        }
      }
      if (index == 0) out = "1. the person moves through the scene: reach the next position\n";
      return out;
    }
    case TemplateId::relation_judge: {
      std::string out;
      for (int i = 0; i < prompt.choice_count; ++i) {
        if (i > 0) out += ",";
        out += (hash_combine(h, static_cast<std::uint64_t>(i)) & 1U) ? "1" : "0";
      }
      return out;
    }
    case TemplateId::answer_judge: {
      const int score = static_cast<int>(h % 6);
      return "score: " + std::to_string(score) + ", correct: " + (score >= 3 ? "yes" : "no");
    }
  }
  return "";
}

}  // namespace

std::string input_hash(const PromptBundle& prompt) { return hex64(stable_hash(prompt.rendered)); }

void MockBackend::add(TemplateId id, const std::string& hash, std::string response) {
  table_[{id, hash}] = std::move(response);
}

void MockBackend::set_default(TemplateId id, std::string response) {
  defaults_[id] = std::move(response);
}

void MockBackend::load_script(const nlohmann::json& script) {
  if (!script.is_object()) throw ValidationError("mock script must be a JSON object");
  if (script.contains("entries")) {
    for (const auto& e : script.at("entries")) {
      const TemplateId id = template_from_string(e.at("template").get<std::string>());
      const std::string hash = e.value("hash", std::string("*"));
      std::string response = e.at("response").get<std::string>();
      if (hash == "*") {
        set_default(id, std::move(response));
      } else {
        add(id, hash, std::move(response));
      }
    }
  }
  if (script.contains("defaults")) {
    for (const auto& [name, response] : script.at("defaults").items()) {
      set_default(template_from_string(name), response.get<std::string>());
    }
  }
}

void MockBackend::load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read mock script " + path.string());
  nlohmann::json script;
  try {
    in >> script;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  load_script(script);
}

Completion MockBackend::complete(const PromptBundle& prompt) {
  ++calls_;
  const std::uint64_t h = stable_hash(prompt.rendered);
  Completion out;
  out.request_id = "mock-" + hex64(h);
  if (auto it = table_.find({prompt.template_id, hex64(h)}); it != table_.end()) {
    out.text = it->second;
  } else if (auto d = defaults_.find(prompt.template_id); d != defaults_.end()) {
    out.text = d->second;
  } else {
    out.text = fallback_response(prompt, h);
  }
  return out;
}

nlohmann::json chat_request_body(const PromptBundle& prompt, const std::string& model,
                                 double temperature) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& turn : prompt.turns) {
    messages.push_back({{"role", "user"}, {"content", turn.text}});
  }
  return {{"model", model}, {"messages", messages}, {"temperature", temperature}};
}

std::string extract_completion_text(const nlohmann::json& response, const std::string& raw_body) {
  auto fail = [&](const std::string& why) {
    return ProtocolError("unusable completion response: " + why, 200, raw_body);
  };
  if (!response.is_object() || !response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    throw fail("no choices");
  }
  const auto& choice = response["choices"][0];
  if (choice.contains("message") && choice["message"].contains("content")) {
    const auto& content = choice["message"]["content"];
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      for (const auto& part : content) {
        if (part.is_object() && part.contains("text") && part["text"].is_string()) {
          return part["text"].get<std::string>();
        }
      }
    }
  }
  if (choice.contains("text") && choice["text"].is_string()) return choice["text"].get<std::string>();
  throw fail("first choice has no text content");
}

RemoteBackend::RemoteBackend(BackendConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, config_.max_in_flight)) {
  config_.validate();
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url_re)) {
    throw ValidationError("endpoint is not an http(s) URL: " + config_.endpoint);
  }
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  if (const char* secret = std::getenv(config_.credential_env.c_str())) credential_ = secret;
}

Completion RemoteBackend::complete(const PromptBundle& prompt) {
  const std::string body = chat_request_body(prompt, config_.model, config_.temperature).dump();
  const std::uint64_t n = counter_++;
  Completion out;
  out.request_id = "irm-" + hex64(hash_combine(stable_hash(body), n));

  httplib::Headers headers{{"X-Request-Id", out.request_id}};
  if (!credential_.empty()) headers.emplace("Authorization", "Bearer " + credential_);

  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);

  std::string last_error;
  int last_status = 0;
  std::string last_body;
  for (int attempt = 0; attempt <= config_.retry_budget; ++attempt) {
    if (attempt > 0) {
      out.retries = attempt;
      const double wait = config_.backoff_seconds * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    httplib::Result res{nullptr, httplib::Error::Unknown};
    {
      in_flight_.acquire();
      httplib::Client client(base_);
      client.set_connection_timeout(sec.count(), usec.count());
      client.set_read_timeout(sec.count(), usec.count());
      client.set_write_timeout(sec.count(), usec.count());
      res = client.Post(path_, headers, body, "application/json");
      in_flight_.release();
    }
    if (!res) {
      last_error = httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) {
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception&) {
        throw ProtocolError("response body is not JSON (request " + out.request_id + ")", status,
                            res->body);
      }
      out.text = extract_completion_text(parsed, res->body);
      return out;
    }
    last_status = status;
    last_body = res->body;
    if (status != 429 && status < 500) {
      throw ProtocolError("HTTP " + std::to_string(status) + " (request " + out.request_id + ")",
                          status, res->body);
    }
  }
  const std::string attempts = std::to_string(config_.retry_budget + 1);
  if (last_status != 0) {
    throw ProtocolError("HTTP " + std::to_string(last_status) + " after " + attempts +
                            " attempts (request " + out.request_id + ")",
                        last_status, last_body);
  }
  throw TransportError("request " + out.request_id + " failed after " + attempts +
                           " attempts: " + last_error,
                       out.request_id);
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  config.validate();
  if (config.kind == BackendKind::remote) return std::make_unique<RemoteBackend>(config);
  auto mock = std::make_unique<MockBackend>();
  if (!config.mock_script.empty()) mock->load_script(std::filesystem::path(config.mock_script));
  return mock;
}

ClueParse generate_clue_candidates(const VisualContext& visual, const std::string& question,
                                   ChatBackend& backend) {
  const PromptBundle prompt = build_clue_generation_prompt(visual, question);
  return parse_clue_candidates(backend.complete(prompt).text);
}

std::string ChatRelationJudge::judge(const std::string& question,
                                     std::span<const ClueCandidate> clues) {
  return backend_.complete(build_relation_judge_prompt(question, clues)).text;
}

}  // namespace irm::reasoner
