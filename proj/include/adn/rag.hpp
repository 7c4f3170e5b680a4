#pragma once

#include <cstddef>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace adn {

inline constexpr std::size_t kEmbeddingDim = 1024;

class RagError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const std::string& text) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string name() const = 0;
};

// Hashed bag of unigrams and bigrams over normalized math tokens, log term frequency, unit L2 norm.
// Identifier step/bus suffixes are stripped and numbers collapse to one token. Text without tokens maps
// to the unit vector on index 0, which no feature uses.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = kEmbeddingDim);
  std::vector<double> embed(const std::string& text) const override;
  std::size_t dimension() const override { return dim_; }
  std::string name() const override { return "hashing"; }

 private:
  std::size_t dim_;
};

std::vector<std::string> math_tokens(const std::string& text);

// POST {model, input} -> data[0].embedding (ADN_EMBED_ENDPOINT, ADN_EMBED_KEY, ADN_EMBED_MODEL).
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(std::string endpoint, std::string api_key, std::string model, std::size_t dim = kEmbeddingDim,
               int max_retries = 2);
  static HttpEmbedder from_env();
  std::vector<double> embed(const std::string& text) const override;
  std::size_t dimension() const override { return dim_; }
  std::string name() const override { return "http"; }

 private:
  std::string endpoint_, api_key_, model_;
  std::size_t dim_;
  int max_retries_;
};

// Throws RagError on a dimension mismatch or a zero-norm argument.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

struct RagEntry {
  std::string id;
  std::string text;      // canonical model print
  std::vector<double> vector;
  std::string exemplar;  // model script shown to the programmer
};

struct RetrievedEntry {
  RagEntry entry;
  double similarity = 0.0;
  std::size_t index = 0;
};

// Concurrent readers, exclusive writers.
class RagStore {
 public:
  explicit RagStore(std::size_t dim = kEmbeddingDim) : dim_(dim) {}
  RagStore(const RagStore& other);
  RagStore& operator=(const RagStore& other);

  // Entry vectors must have dimension D and finite entries.
  void add(RagEntry entry);
  void set_fixed(std::vector<std::string> ids);

  std::size_t size() const;
  std::size_t dimension() const { return dim_; }
  std::vector<RagEntry> entries() const;
  // Fixed exemplars for ablations that bypass retrieval, in listed order.
  std::vector<RagEntry> fixed() const;
  // Top-k by cosine similarity, descending; ties keep insertion order.
  std::vector<RetrievedEntry> retrieve(const std::vector<double>& query, std::size_t k = 3) const;

  static RagStore load(const std::string& document);
  static RagStore load_file(const std::string& path);
  std::string dump() const;

 private:
  std::size_t dim_;
  std::vector<RagEntry> entries_;
  std::vector<std::string> fixed_;
  mutable std::shared_mutex mu_;
};

}  // namespace adn
