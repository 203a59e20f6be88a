// Configuration file loading and provider construction. One JSON file
// declares every provider (mock or wire), named embedder sets, and the
// shared cache / audit / template locations; the CLI and tests build the
// same object graph from it.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coverbench/corpus.hpp"
#include "coverbench/curation.hpp"
#include "coverbench/gateway/embed_service.hpp"
#include "coverbench/gateway/provider.hpp"

namespace coverbench::config {

inline constexpr const char* kVersion = "0.1.0";

struct AppConfig {
  std::vector<gateway::ProviderConfig> providers;
  std::map<std::string, std::vector<std::string>> embedder_sets;
  std::string templates_dir;  // empty = builtin templates only
  std::string cache_dir;      // empty = in-memory embedding cache
  std::string audit_log;      // empty = no audit log
  std::string config_sha256;  // of the raw file bytes; empty for defaults
};

AppConfig config_from_json(const std::string& text);
AppConfig load_config(const std::string& path);

// Instantiated providers, keyed by provider_id. Lookup helpers throw
// std::invalid_argument naming the missing id.
struct Providers {
  std::map<std::string, std::shared_ptr<gateway::Embedder>> embedders;
  std::map<std::string, std::shared_ptr<gateway::ChatModel>> chats;
  std::map<std::string, std::shared_ptr<gateway::OcrEngine>> ocrs;

  std::shared_ptr<gateway::ChatModel> chat(const std::string& id) const;
  std::shared_ptr<gateway::OcrEngine> ocr(const std::string& id) const;
};

// Builds every declared provider. Embedders are built first so chat mocks
// can reference one through sparams["sim_embedder"]. Throws on duplicate
// ids, unknown kinds, or dangling references.
Providers build_providers(const AppConfig& config);

struct Services {
  std::shared_ptr<gateway::EmbeddingCache> cache;
  std::shared_ptr<gateway::AuditLog> audit;  // may be null
  std::shared_ptr<gateway::EmbeddingService> embeddings;
};

Services build_services(const AppConfig& config, const Providers& providers);

// Resolves a set name from embedder_sets, or treats the argument as a
// comma-separated list of provider ids. Every id must name an embedder.
std::vector<std::string> resolve_embedder_set(const AppConfig& config,
                                              const Providers& providers,
                                              const std::string& name_or_csv);

// Adapter feeding curation from a snapshot: story text or cover image file
// by issue id. Caller keeps service and snapshot alive while in use.
curation::EmbeddingSource snapshot_source(gateway::EmbeddingService& service,
                                          const corpus::CorpusSnapshot& snapshot);

}  // namespace coverbench::config
