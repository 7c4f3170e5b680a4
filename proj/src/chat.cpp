#include "adn/chat.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "adn/dsl.hpp"
#include "adn/extractor.hpp"
#include "adn/formulator.hpp"
#include "adn/util.hpp"

namespace adn {

using nlohmann::json;

std::string_view to_string(ChatStage stage) {
  switch (stage) {
    case ChatStage::extraction: return "extraction";
    case ChatStage::formulation: return "formulation";
    case ChatStage::code: return "code";
  }
  return "?";
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw ChatError("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string prompt_hash(const std::vector<ChatMessage>& messages, const GenerationParams& params) {
  json doc;
  doc["messages"] = json::array();
  for (const auto& m : messages) doc["messages"].push_back({{"role", m.role}, {"content", m.content}});
  doc["temperature"] = params.temperature;
  doc["top_p"] = params.top_p;
  doc["seed"] = params.seed ? json(*params.seed) : json(nullptr);
  return sha256_hex(doc.dump());
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ChatError("malformed chat endpoint '" + url + "'");
  return {m[1], m[2].matched ? std::string(m[2]) : "/"};
}

}  // namespace

HttpChatConfig HttpChatConfig::from_env() {
  HttpChatConfig c;
  c.endpoint = env_or_empty("ADN_CHAT_ENDPOINT");
  c.api_key = env_or_empty("ADN_CHAT_KEY");
  c.model = env_or_empty("ADN_CHAT_MODEL");
  return c;
}

HttpChatClient::HttpChatClient(HttpChatConfig config) : config_(std::move(config)) {}

std::string HttpChatClient::complete(const ChatRequest& request) {
  if (config_.endpoint.empty()) throw ChatError("no chat endpoint configured (ADN_CHAT_ENDPOINT)");
  const Endpoint ep = split_endpoint(config_.endpoint);
  json body;
  if (!config_.model.empty()) body["model"] = config_.model;
  body["messages"] = json::array();
  for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  body["temperature"] = request.params.temperature;
  body["top_p"] = request.params.top_p;
  if (request.params.seed) body["seed"] = *request.params.seed;

  httplib::Client cli(ep.base);
  cli.set_connection_timeout(config_.timeout_seconds);
  cli.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(250 << attempt));
    auto res = cli.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw ChatError("chat endpoint returned HTTP " + std::to_string(res->status));
    try {
      const json doc = json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw ChatError(std::string("malformed chat response: ") + e.what());
    }
  }
  throw ChatError("chat endpoint unreachable after " + std::to_string(config_.max_retries + 1) +
                  " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Transcripts

Transcript Transcript::load(std::string_view document) {
  Transcript t;
  try {
    const json doc = json::parse(document);
    for (const auto& r : doc.at("records")) {
      TranscriptRecord rec;
      rec.prompt_hash = r.at("prompt_hash").get<std::string>();
      rec.response = r.at("response").get<std::string>();
      if (r.contains("stage")) rec.stage = r.at("stage").get<std::string>();
      t.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw ChatError(std::string("malformed transcript: ") + e.what());
  }
  return t;
}

Transcript Transcript::load_file(const std::string& path) { return load(read_file(path)); }

std::string Transcript::dump() const {
  json doc;
  doc["records"] = json::array();
  for (const auto& r : records)
    doc["records"].push_back({{"stage", r.stage}, {"prompt_hash", r.prompt_hash}, {"response", r.response}});
  return doc.dump(2) + "\n";
}

ReplayClient::ReplayClient(Transcript transcript) : transcript_(std::move(transcript)) {}

std::string ReplayClient::complete(const ChatRequest& request) {
  const std::string hash = prompt_hash(request.messages, request.params);
  std::lock_guard lock(mu_);
  if (cursor_ >= transcript_.records.size())
    throw ChatError("transcript exhausted at prompt " + hash + " (" + std::to_string(cursor_) + " records served)");
  const auto& rec = transcript_.records[cursor_];
  if (rec.prompt_hash != hash)
    throw ChatError("prompt mismatch at record " + std::to_string(cursor_) + ": got " + hash + ", transcript has " +
                    rec.prompt_hash);
  ++cursor_;
  return rec.response;
}

std::size_t ReplayClient::consumed() const {
  std::lock_guard lock(mu_);
  return cursor_;
}

std::string RecordingClient::complete(const ChatRequest& request) {
  std::string response = inner_.complete(request);
  std::lock_guard lock(mu_);
  std::string stage(to_string(request.context.stage));
  if (request.context.stage == ChatStage::formulation) stage += "." + std::to_string(request.context.round);
  transcript_.records.push_back({prompt_hash(request.messages, request.params), response, stage});
  return response;
}

Transcript RecordingClient::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

// ---------------------------------------------------------------------------
// Reference

ReferenceClient::ReferenceClient(RequestCatalog catalog, NetworkCase network)
    : catalog_(std::move(catalog)), network_(std::move(network)) {}

StructuredRequirements ReferenceClient::requirements_for(const ChatContext& ctx) const {
  if (ctx.requirements) return *ctx.requirements;
  return extract_reference(ctx.request_text, catalog_);
}

std::string ReferenceClient::complete(const ChatRequest& request) {
  const ChatContext& ctx = request.context;
  switch (ctx.stage) {
    case ChatStage::extraction:
      return render_decorated(extract_reference(ctx.request_text, catalog_));
    case ChatStage::formulation: {
      FormulationContext fc(requirements_for(ctx), network_);
      fc.append(build_objective(fc));
      if (ctx.round == 1) return print_fragment(fc.fragment(Component::objective));
      fc.append(build_equipment_constraints(fc));
      if (ctx.round == 2) return print_fragment(fc.fragment(Component::equipment));
      fc.append(build_power_flow(fc));
      if (ctx.round == 3) return print_fragment(fc.fragment(Component::power_flow));
      fc.append(build_additional_constraints(fc));
      if (ctx.round == 4) return print_fragment(fc.fragment(Component::additional));
      if (ctx.round == 5) return print_model(assemble(fc));
      if (ctx.round == 6) return print_model(convexify(assemble(fc)));
      throw ChatError("formulation round " + std::to_string(ctx.round) + " out of range");
    }
    case ChatStage::code:
      if (ctx.upstream_model) return print_model(*ctx.upstream_model);
      return print_model(formulate(requirements_for(ctx), network_));
  }
  throw ChatError("unknown chat stage");
}

}  // namespace adn
