#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "irm/dataset.hpp"
#include "irm/prompts.hpp"

namespace irm::reasoner {

enum class BackendKind { mock, remote };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string endpoint;  // full URL of the chat-completions route
  std::string model = "mock";
  double timeout_seconds = 30.0;
  int max_in_flight = 4;
  int retry_budget = 3;  // extra attempts after the first
  double backoff_seconds = 0.5;
  double temperature = 0.0;
  std::string credential_env = "IRM_API_KEY";  // variable name only
  std::string mock_script;                     // optional JSON script for the mock

  void validate() const;
  // Everything except secrets; safe to echo into artifacts.
  nlohmann::json to_json() const;
};

struct Completion {
  std::string text;
  int retries = 0;
  std::string request_id;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion complete(const PromptBundle& prompt) = 0;
};

// Hex digest of the rendered prompt, the key the mock script is indexed by.
std::string input_hash(const PromptBundle& prompt);

// Scripted responses keyed by (template, input hash) with per-template
// defaults. Prompts matching neither get a deterministic stand-in answer:
// multiple choice picks the option sharing the most words with the clues
// (prompt hash on ties), so unscripted runs are reproducible and still react
// to which clues survived refinement.
class MockBackend : public ChatBackend {
 public:
  MockBackend() = default;

  void add(TemplateId id, const std::string& hash, std::string response);
  void set_default(TemplateId id, std::string response);
  // {"entries": [{"template": "...", "hash": "...", "response": "..."}],
  //  "defaults": {"<template>": "..."}}
  void load_script(const nlohmann::json& script);
  void load_script(const std::filesystem::path& path);

  Completion complete(const PromptBundle& prompt) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::map<std::pair<TemplateId, std::string>, std::string> table_;
  std::map<TemplateId, std::string> defaults_;
  std::atomic<std::size_t> calls_{0};
};

// Request body of the remote wire contract.
nlohmann::json chat_request_body(const PromptBundle& prompt, const std::string& model,
                                 double temperature);
// First text content of the first choice; throws ProtocolError otherwise.
std::string extract_completion_text(const nlohmann::json& response, const std::string& raw_body);

// Chat-completions client. Retries transport errors, 429 and 5xx with
// exponential backoff; other non-2xx statuses fail at once.
class RemoteBackend : public ChatBackend {
 public:
  explicit RemoteBackend(BackendConfig config);

  Completion complete(const PromptBundle& prompt) override;

 private:
  BackendConfig config_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::string credential_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::uint64_t> counter_{0};
};

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

// Sends the clue-generation prompt and parses the reply.
ClueParse generate_clue_candidates(const VisualContext& visual, const std::string& question,
                                   ChatBackend& backend);

// Relation labelling through a chat backend.
class ChatRelationJudge : public RelationJudge {
 public:
  explicit ChatRelationJudge(ChatBackend& backend) : backend_(backend) {}
  std::string judge(const std::string& question, std::span<const ClueCandidate> clues) override;

 private:
  ChatBackend& backend_;
};

}  // namespace irm::reasoner
