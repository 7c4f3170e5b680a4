#include "adn/rag.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <regex>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "adn/util.hpp"

namespace adn {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// P_dg_3_12 -> P_dg; pf.drop.0_1.t4 -> pf.drop
std::string normalize_identifier(std::string_view ident) {
  std::string out;
  std::size_t start = 0;
  while (start <= ident.size()) {
    std::size_t dot = ident.find('.', start);
    if (dot == std::string_view::npos) dot = ident.size();
    std::string piece(ident.substr(start, dot - start));
    for (;;) {
      const auto us = piece.rfind('_');
      if (us == std::string::npos || !is_digits(std::string_view(piece).substr(us + 1))) break;
      piece.erase(us);
    }
    const bool step = piece.size() > 1 && piece[0] == 't' && is_digits(std::string_view(piece).substr(1));
    if (!piece.empty() && !is_digits(piece) && !step) {
      if (!out.empty()) out += '.';
      out += piece;
    }
    start = dot + 1;
  }
  return out;
}

}  // namespace

std::vector<std::string> math_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto ident_char = [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '.'; };
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i;
      while (j < n && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
      if (j < n && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < n && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < n && std::isdigit(static_cast<unsigned char>(text[k]))) {
          j = k;
          while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        }
      }
      out.emplace_back("<num>");
      i = j;
    } else if (std::isalpha(c) || c == '_') {
      std::size_t j = i;
      while (j < n && ident_char(static_cast<unsigned char>(text[j]))) ++j;
      std::string ident = normalize_identifier(std::string_view(text).substr(i, j - i));
      if (!ident.empty()) out.push_back(std::move(ident));
      i = j;
    } else if ((c == '<' || c == '>') && i + 1 < n && text[i + 1] == '=') {
      out.emplace_back(text.substr(i, 2));
      i += 2;
    } else {
      out.emplace_back(1, static_cast<char>(c));
      ++i;
    }
  }
  return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ < 2) throw RagError("embedding dimension must be at least 2");
}

std::vector<double> HashingEmbedder::embed(const std::string& text) const {
  std::vector<double> v(dim_, 0.0);
  const auto tokens = math_tokens(text);
  if (tokens.empty()) {
    v[0] = 1.0;
    return v;
  }
  std::unordered_map<std::size_t, double> tf;
  auto bucket = [&](std::string_view feature) { return 1 + fnv1a(feature) % (dim_ - 1); };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tf[bucket("u:" + tokens[i])] += 1.0;
    if (i + 1 < tokens.size()) tf[bucket("b:" + tokens[i] + " " + tokens[i + 1])] += 1.0;
  }
  double norm2 = 0.0;
  for (const auto& [idx, count] : tf) {
    v[idx] = std::log1p(count);
    norm2 += v[idx] * v[idx];
  }
  const double norm = std::sqrt(norm2);
  for (double& x : v) x /= norm;
  return v;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string api_key, std::string model, std::size_t dim,
                           int max_retries)
    : endpoint_(std::move(endpoint)),
      api_key_(std::move(api_key)),
      model_(std::move(model)),
      dim_(dim),
      max_retries_(max_retries) {}

HttpEmbedder HttpEmbedder::from_env() {
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? v : "";
  };
  return HttpEmbedder(env("ADN_EMBED_ENDPOINT"), env("ADN_EMBED_KEY"), env("ADN_EMBED_MODEL"));
}

std::vector<double> HttpEmbedder::embed(const std::string& text) const {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_, m, re)) throw RagError("malformed embedding endpoint '" + endpoint_ + "'");
  const std::string path = m[2].matched ? std::string(m[2]) : "/";
  json body{{"input", text}, {"dimensions", dim_}};
  if (!model_.empty()) body["model"] = model_;
  httplib::Client cli(m[1]);
  cli.set_connection_timeout(30);
  cli.set_read_timeout(60);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  std::string last_error;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(250 << attempt));
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw RagError("embedding endpoint returned HTTP " + std::to_string(res->status));
    std::vector<double> v;
    try {
      v = json::parse(res->body).at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw RagError(std::string("malformed embedding response: ") + e.what());
    }
    if (v.size() != dim_)
      throw RagError("embedding has dimension " + std::to_string(v.size()) + ", expected " + std::to_string(dim_));
    return v;
  }
  throw RagError("embedding endpoint unreachable after " + std::to_string(max_retries_ + 1) +
                 " attempts: " + last_error);
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw RagError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw RagError("cosine similarity undefined for a zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

RagStore::RagStore(const RagStore& other) {
  std::shared_lock lock(other.mu_);
  dim_ = other.dim_;
  entries_ = other.entries_;
  fixed_ = other.fixed_;
}

RagStore& RagStore::operator=(const RagStore& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_);
  std::shared_lock other_lock(other.mu_);
  dim_ = other.dim_;
  entries_ = other.entries_;
  fixed_ = other.fixed_;
  return *this;
}

void RagStore::add(RagEntry entry) {
  if (entry.vector.size() != dim_)
    throw RagError("entry '" + entry.id + "' has dimension " + std::to_string(entry.vector.size()) + ", store uses " +
                   std::to_string(dim_));
  for (double x : entry.vector)
    if (!std::isfinite(x)) throw RagError("entry '" + entry.id + "' has a non-finite component");
  std::unique_lock lock(mu_);
  for (const auto& e : entries_)
    if (e.id == entry.id) throw RagError("duplicate entry id '" + entry.id + "'");
  entries_.push_back(std::move(entry));
}

void RagStore::set_fixed(std::vector<std::string> ids) {
  std::unique_lock lock(mu_);
  for (const auto& id : ids)
    if (std::none_of(entries_.begin(), entries_.end(), [&](const RagEntry& e) { return e.id == id; }))
      throw RagError("fixed exemplar '" + id + "' is not in the store");
  fixed_ = std::move(ids);
}

std::size_t RagStore::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<RagEntry> RagStore::entries() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::vector<RagEntry> RagStore::fixed() const {
  std::shared_lock lock(mu_);
  std::vector<RagEntry> out;
  for (const auto& id : fixed_)
    for (const auto& e : entries_)
      if (e.id == id) out.push_back(e);
  return out;
}

std::vector<RetrievedEntry> RagStore::retrieve(const std::vector<double>& query, std::size_t k) const {
  std::shared_lock lock(mu_);
  if (entries_.empty()) throw RagError("retrieval from an empty store");
  std::vector<RetrievedEntry> scored;
  scored.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    scored.push_back({entries_[i], cosine_similarity(query, entries_[i].vector), i});
  std::stable_sort(scored.begin(), scored.end(),
                   [](const RetrievedEntry& a, const RetrievedEntry& b) { return a.similarity > b.similarity; });
  scored.resize(std::min(k, scored.size()));
  return scored;
}

RagStore RagStore::load(const std::string& document) {
  try {
    const json doc = json::parse(document);
    RagStore store(doc.value("dimension", kEmbeddingDim));
    for (const auto& e : doc.at("entries"))
      store.add({e.at("id").get<std::string>(), e.at("text").get<std::string>(),
                 e.at("vector").get<std::vector<double>>(), e.at("exemplar").get<std::string>()});
    if (doc.contains("fixed")) store.set_fixed(doc.at("fixed").get<std::vector<std::string>>());
    return store;
  } catch (const json::exception& e) {
    throw RagError(std::string("malformed library: ") + e.what());
  }
}

RagStore RagStore::load_file(const std::string& path) { return load(read_file(path)); }

std::string RagStore::dump() const {
  std::shared_lock lock(mu_);
  json doc;
  doc["dimension"] = dim_;
  doc["fixed"] = fixed_;
  doc["entries"] = json::array();
  for (const auto& e : entries_)
    doc["entries"].push_back({{"id", e.id}, {"text", e.text}, {"vector", e.vector}, {"exemplar", e.exemplar}});
  return doc.dump(1) + "\n";
}

}  // namespace adn
