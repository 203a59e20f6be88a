// HTTP adapters for OpenAI-style embedding and chat endpoints plus a small
// JSON OCR endpoint. All adapters share retry, backoff, and rate limiting
// driven by ProviderConfig. Harness metadata on ChatRequest is never sent
// over the wire.
#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

#include "coverbench/gateway/provider.hpp"

namespace coverbench::gateway {

std::string base64_encode(std::span<const std::uint8_t> bytes);

// Token bucket. capacity = rps, refilled continuously; rps <= 0 disables.
class RateLimiter {
 public:
  explicit RateLimiter(double rps);
  void acquire();

 private:
  double rps_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

// Shared POST-with-retries plumbing. Retries connection failures, 5xx and
// 429; other statuses fail immediately. Throws TransportError when attempts
// are exhausted.
class HttpTransport {
 public:
  explicit HttpTransport(const ProviderConfig& config);
  ~HttpTransport();

  // Returns the response body of a 200 response to POST <path_prefix+path>.
  std::string post_json(const std::string& path, const std::string& body);

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // remainder of base_url
  std::string auth_header_;
  RateLimiter limiter_;
};

class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(const ProviderConfig& config, bool supports_images);

  const std::string& id() const override { return id_; }
  const std::string& model() const override { return model_; }
  bool supports_images() const override { return supports_images_; }
  Eigen::VectorXd embed_text(const std::string& text) override;
  Eigen::VectorXd embed_image(std::span<const std::uint8_t> bytes) override;

 private:
  Eigen::VectorXd call(const std::string& input_json);

  std::string id_;
  std::string model_;
  bool supports_images_;
  HttpTransport transport_;
};

class HttpChat final : public ChatModel {
 public:
  explicit HttpChat(const ProviderConfig& config);

  const std::string& id() const override { return id_; }
  const std::string& model() const { return model_; }
  std::vector<std::string> complete(const ChatRequest& request) override;

 private:
  std::string id_;
  std::string model_;
  HttpTransport transport_;
};

class HttpOcr final : public OcrEngine {
 public:
  explicit HttpOcr(const ProviderConfig& config);

  const std::string& id() const override { return id_; }
  std::vector<TextRegion> detect(std::span<const std::uint8_t> bytes) override;

 private:
  std::string id_;
  std::string model_;
  HttpTransport transport_;
};

}  // namespace coverbench::gateway
