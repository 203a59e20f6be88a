#include "coverbench/gateway/embed_service.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "coverbench/errors.hpp"
#include "coverbench/hash.hpp"

namespace coverbench::gateway {

using nlohmann::json;

EmbeddingCache::EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

void EmbeddingCache::load_file(const std::string& embedder_id) {
  if (dir_.empty() || loaded_[embedder_id]) return;
  loaded_[embedder_id] = true;
  std::ifstream in(dir_ / (embedder_id + ".jsonl"));
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // tolerate a torn final line
    EmbeddingVector vec;
    vec.model_id = j.at("model").get<std::string>();
    auto vals = j.at("values").get<std::vector<double>>();
    vec.values = Eigen::Map<Eigen::VectorXd>(vals.data(),
                                             static_cast<long>(vals.size()));
    vec.normalized = j.value("normalized", true);
    entries_[embedder_id + "\n" + j.at("key").get<std::string>()] =
        std::move(vec);
  }
}

std::optional<EmbeddingVector> EmbeddingCache::get(
    const std::string& embedder_id, const std::string& content_key) {
  std::lock_guard<std::mutex> lock(mu_);
  load_file(embedder_id);
  auto it = entries_.find(embedder_id + "\n" + content_key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& embedder_id,
                         const std::string& content_key,
                         const EmbeddingVector& vec) {
  std::lock_guard<std::mutex> lock(mu_);
  load_file(embedder_id);
  auto [it, inserted] =
      entries_.emplace(embedder_id + "\n" + content_key, vec);
  if (!inserted || dir_.empty()) return;
  std::ofstream out(dir_ / (embedder_id + ".jsonl"), std::ios::app);
  if (!out) return;
  std::vector<double> vals(vec.values.data(),
                           vec.values.data() + vec.values.size());
  json j{{"key", content_key},
         {"model", vec.model_id},
         {"normalized", vec.normalized},
         {"values", vals}};
  out << j.dump() << "\n";
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

EmbeddingService::EmbeddingService(std::shared_ptr<EmbeddingCache> cache,
                                   std::shared_ptr<AuditLog> audit)
    : cache_(cache ? std::move(cache) : std::make_shared<EmbeddingCache>()),
      audit_(std::move(audit)) {}

void EmbeddingService::add(std::shared_ptr<Embedder> embedder) {
  std::lock_guard<std::mutex> lock(mu_);
  embedders_[embedder->id()] = std::move(embedder);
}

bool EmbeddingService::has(const std::string& embedder_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return embedders_.count(embedder_id) > 0;
}

Embedder& EmbeddingService::embedder(const std::string& embedder_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = embedders_.find(embedder_id);
  if (it == embedders_.end()) {
    throw std::invalid_argument("unknown embedder: " + embedder_id);
  }
  return *it->second;
}

EmbeddingVector EmbeddingService::finish(const std::string& embedder_id,
                                         const std::string& cache_key,
                                         Eigen::VectorXd raw,
                                         const std::string& model) {
  EmbeddingVector vec{model, std::move(raw), false};
  if (!vec.finite()) {
    throw IntegrityError("embedder '" + embedder_id +
                         "' returned non-finite components");
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = dims_.emplace(model, vec.dim());
    if (!inserted && it->second != vec.dim()) {
      throw IntegrityError("embedder '" + embedder_id + "' dim changed from " +
                           std::to_string(it->second) + " to " +
                           std::to_string(vec.dim()));
    }
  }
  EmbeddingVector out = l2_normalized(vec);
  cache_->put(embedder_id, cache_key, out);
  return out;
}

EmbeddingVector EmbeddingService::embed_text(const std::string& embedder_id,
                                             const std::string& text) {
  if (text.empty()) {
    throw std::invalid_argument("embed_text: empty text");
  }
  Embedder& e = embedder(embedder_id);
  std::string key = "text:" + sha256_hex(text);
  if (auto hit = cache_->get(embedder_id, key)) return *hit;

  auto t0 = std::chrono::steady_clock::now();
  Eigen::VectorXd raw = e.embed_text(text);
  if (audit_) {
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    audit_->record(embedder_id, e.model(), "embed_text", key, ms, "ok");
  }
  return finish(embedder_id, key, std::move(raw), e.model());
}

EmbeddingVector EmbeddingService::embed_image(
    const std::string& embedder_id, std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) {
    throw std::invalid_argument("embed_image: empty image content");
  }
  Embedder& e = embedder(embedder_id);
  if (!e.supports_images()) {
    throw std::invalid_argument("embedder '" + embedder_id +
                                "' is text-only; cannot embed images");
  }
  std::string key = "image:" + sha256_hex(bytes);
  if (auto hit = cache_->get(embedder_id, key)) return *hit;

  auto t0 = std::chrono::steady_clock::now();
  Eigen::VectorXd raw = e.embed_image(bytes);
  if (audit_) {
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    audit_->record(embedder_id, e.model(), "embed_image", key, ms, "ok");
  }
  return finish(embedder_id, key, std::move(raw), e.model());
}

EmbeddingVector EmbeddingService::embed_image_file(
    const std::string& embedder_id, const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return embed_image(embedder_id, bytes);
}

}  // namespace coverbench::gateway
