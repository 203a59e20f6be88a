#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "coverbench/embedding.hpp"
#include "coverbench/gateway/audit.hpp"
#include "coverbench/gateway/provider.hpp"

namespace coverbench::gateway {

// Content-addressed embedding cache, persisted as one JSONL file per
// embedder when a directory is configured. Safe for concurrent use.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path dir);

  std::optional<EmbeddingVector> get(const std::string& embedder_id,
                                     const std::string& content_key);
  void put(const std::string& embedder_id, const std::string& content_key,
           const EmbeddingVector& vec);

  std::size_t size() const;

 private:
  void load_file(const std::string& embedder_id);

  mutable std::mutex mu_;
  std::filesystem::path dir_;  // empty = memory only
  std::map<std::string, EmbeddingVector> entries_;  // "<id>\n<key>" -> vec
  std::map<std::string, bool> loaded_;
};

// Uniform access to embedders: routes by embedder id, enforces dimension
// stability per model, L2-normalizes at the boundary, and serves repeats
// from the content-addressed cache. Cache key is
// (provider_id, model, sha256(content)).
class EmbeddingService {
 public:
  explicit EmbeddingService(std::shared_ptr<EmbeddingCache> cache = nullptr,
                            std::shared_ptr<AuditLog> audit = nullptr);

  void add(std::shared_ptr<Embedder> embedder);
  bool has(const std::string& embedder_id) const;
  Embedder& embedder(const std::string& embedder_id) const;

  // Normalized vector for non-empty text. Throws std::invalid_argument on
  // empty input, IntegrityError on a dimension change.
  EmbeddingVector embed_text(const std::string& embedder_id,
                             const std::string& text);
  EmbeddingVector embed_image(const std::string& embedder_id,
                              std::span<const std::uint8_t> bytes);
  EmbeddingVector embed_image_file(const std::string& embedder_id,
                                   const std::filesystem::path& path);

 private:
  EmbeddingVector finish(const std::string& embedder_id,
                         const std::string& cache_key, Eigen::VectorXd raw,
                         const std::string& model);

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Embedder>> embedders_;
  std::map<std::string, int> dims_;  // model id -> first observed dim
  std::shared_ptr<EmbeddingCache> cache_;
  std::shared_ptr<AuditLog> audit_;
};

}  // namespace coverbench::gateway
