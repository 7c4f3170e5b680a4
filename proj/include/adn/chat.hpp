#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adn/case.hpp"
#include "adn/model.hpp"
#include "adn/requirements.hpp"

namespace adn {

struct ChatMessage {
  std::string role;  // system, user, assistant
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct GenerationParams {
  double temperature = 0.6;
  double top_p = 0.7;
  std::optional<int> seed;
};

enum class ChatStage { extraction, formulation, code };
std::string_view to_string(ChatStage stage);

// Structured side channel for the reference client. Live and replay clients see only messages.
struct ChatContext {
  ChatStage stage = ChatStage::extraction;
  int round = 0;  // formulation round, 1..6
  std::string request_text;
  std::optional<StructuredRequirements> requirements;
  std::optional<Model> upstream_model;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  GenerationParams params;
  ChatContext context;
};

class ChatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lower-case hex SHA-256 over messages and generation parameters.
std::string prompt_hash(const std::vector<ChatMessage>& messages, const GenerationParams& params);
std::string sha256_hex(std::string_view data);

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct HttpChatConfig {
  std::string endpoint;  // scheme://host[:port]/path
  std::string api_key;
  std::string model;
  int max_retries = 2;
  int timeout_seconds = 120;

  // ADN_CHAT_ENDPOINT, ADN_CHAT_KEY, ADN_CHAT_MODEL.
  static HttpChatConfig from_env();
};

// Chat-completions style endpoint: {model, messages, temperature, top_p, seed} -> choices[0].message.content.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatConfig config);
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  HttpChatConfig config_;
};

struct TranscriptRecord {
  std::string prompt_hash;
  std::string response;
  std::string stage;  // informational

  bool operator==(const TranscriptRecord&) const = default;
};

struct Transcript {
  std::vector<TranscriptRecord> records;

  static Transcript load(std::string_view document);
  static Transcript load_file(const std::string& path);
  std::string dump() const;
};

// Serves recorded responses in order; any hash mismatch or exhaustion is an error.
class ReplayClient : public ChatClient {
 public:
  explicit ReplayClient(Transcript transcript);
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "replay"; }
  std::size_t consumed() const;

 private:
  Transcript transcript_;
  std::size_t cursor_ = 0;
  mutable std::mutex mu_;
};

// Answers with the deterministic extractor and formulator.
class ReferenceClient : public ChatClient {
 public:
  ReferenceClient(RequestCatalog catalog, NetworkCase network);
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "reference"; }

 private:
  StructuredRequirements requirements_for(const ChatContext& ctx) const;

  RequestCatalog catalog_;
  NetworkCase network_;
};

// Forwards to an inner client and keeps the exchange as a transcript.
class RecordingClient : public ChatClient {
 public:
  explicit RecordingClient(ChatClient& inner) : inner_(inner) {}
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "recording:" + inner_.name(); }
  Transcript transcript() const;

 private:
  ChatClient& inner_;
  Transcript transcript_;
  mutable std::mutex mu_;
};

}  // namespace adn
