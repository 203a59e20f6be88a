#include "coverbench/gateway/http.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "coverbench/errors.hpp"
#include "coverbench/hash.hpp"

using nlohmann::json;

namespace coverbench::gateway {

namespace {

constexpr char kB64[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back(kB64[v & 63]);
  }
  std::size_t rem = bytes.size() - i;
  if (rem == 1) {
    std::uint32_t v = bytes[i] << 16;
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.append("==");
  } else if (rem == 2) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

// ---------------------------------------------------------------------------
// RateLimiter

RateLimiter::RateLimiter(double rps)
    : rps_(rps), tokens_(rps > 0 ? rps : 0), last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rps_ <= 0) return;
  std::unique_lock lock(mu_);
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(rps_, tokens_ + elapsed * rps_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    double wait_s = (1.0 - tokens_) / rps_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    lock.lock();
  }
}

// ---------------------------------------------------------------------------
// HttpTransport

HttpTransport::HttpTransport(const ProviderConfig& config)
    : config_(config), limiter_(config.rate_limit_rps) {
  // Split base_url into origin and path prefix: scheme://host[:port][/prefix]
  const std::string& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("provider '" + config_.provider_id +
                                "': base_url must include a scheme");
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    origin_ = url;
  } else {
    origin_ = url.substr(0, path_start);
    path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/')
      path_prefix_.pop_back();
  }
  if (!config_.auth_env.empty()) {
    const char* key = std::getenv(config_.auth_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw std::invalid_argument("provider '" + config_.provider_id +
                                  "': environment variable " +
                                  config_.auth_env + " is not set");
    }
    auth_header_ = std::string("Bearer ") + key;
  }
}

HttpTransport::~HttpTransport() = default;

std::string HttpTransport::post_json(const std::string& path,
                                     const std::string& body) {
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout_s, 0);
  client.set_read_timeout(config_.timeout_s, 0);
  client.set_write_timeout(config_.timeout_s, 0);

  httplib::Headers headers;
  if (!auth_header_.empty()) headers.emplace("Authorization", auth_header_);

  std::string full_path = path_prefix_ + path;
  std::string last_error;
  int attempts = config_.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.backoff_ms * attempt));
    }
    limiter_.acquire();
    auto res = client.Post(full_path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 200) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) break;
  }
  throw TransportError("provider '" + config_.provider_id + "' POST " +
                       full_path + " failed: " + last_error);
}

// ---------------------------------------------------------------------------
// HttpEmbedder

HttpEmbedder::HttpEmbedder(const ProviderConfig& config, bool supports_images)
    : id_(config.provider_id),
      model_(config.model),
      supports_images_(supports_images),
      transport_(config) {}

Eigen::VectorXd HttpEmbedder::call(const std::string& body) {
  std::string reply = transport_.post_json("/embeddings", body);
  json j;
  try {
    j = json::parse(reply);
  } catch (const json::exception& e) {
    throw IntegrityError("embedder '" + id_ + "': unparseable response: " +
                         e.what());
  }
  if (!j.contains("data") || !j["data"].is_array() || j["data"].empty() ||
      !j["data"][0].contains("embedding")) {
    throw IntegrityError("embedder '" + id_ +
                         "': response missing data[0].embedding");
  }
  const auto& arr = j["data"][0]["embedding"];
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

Eigen::VectorXd HttpEmbedder::embed_text(const std::string& text) {
  json body = {{"model", model_}, {"input", json::array({text})}};
  return call(body.dump());
}

Eigen::VectorXd HttpEmbedder::embed_image(std::span<const std::uint8_t> bytes) {
  json body = {{"model", model_},
               {"input", json::array({json{{"image_b64", base64_encode(bytes)}}})}};
  return call(body.dump());
}

// ---------------------------------------------------------------------------
// HttpChat

HttpChat::HttpChat(const ProviderConfig& config)
    : id_(config.provider_id), model_(config.model), transport_(config) {}

std::vector<std::string> HttpChat::complete(const ChatRequest& request) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.user_text}});
  for (const auto& path : request.image_paths) {
    auto bytes = read_file_bytes(path);
    content.push_back(
        {{"type", "image_url"},
         {"image_url",
          {{"url", "data:image/x-portable-pixmap;base64," +
                       base64_encode(bytes)}}}});
  }
  json messages = json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", content}});
  json body = {{"model", model_},
               {"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens},
               {"n", request.sample_count}};

  std::string reply = transport_.post_json("/chat/completions", body.dump());
  json j;
  try {
    j = json::parse(reply);
  } catch (const json::exception& e) {
    throw IntegrityError("chat model '" + id_ + "': unparseable response: " +
                         e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array()) {
    throw IntegrityError("chat model '" + id_ + "': response missing choices");
  }
  std::vector<std::string> out;
  for (const auto& choice : j["choices"]) {
    if (choice.contains("message") && choice["message"].contains("content")) {
      out.push_back(choice["message"]["content"].get<std::string>());
    }
  }
  if (out.size() != static_cast<std::size_t>(request.sample_count)) {
    throw IntegrityError("chat model '" + id_ + "': expected " +
                         std::to_string(request.sample_count) +
                         " samples, got " + std::to_string(out.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// HttpOcr

HttpOcr::HttpOcr(const ProviderConfig& config)
    : id_(config.provider_id), model_(config.model), transport_(config) {}

std::vector<TextRegion> HttpOcr::detect(std::span<const std::uint8_t> bytes) {
  json body = {{"model", model_}, {"image_b64", base64_encode(bytes)}};
  std::string reply = transport_.post_json("/ocr", body.dump());
  json j;
  try {
    j = json::parse(reply);
  } catch (const json::exception& e) {
    throw IntegrityError("ocr engine '" + id_ + "': unparseable response: " +
                         e.what());
  }
  if (!j.contains("regions") || !j["regions"].is_array()) {
    throw IntegrityError("ocr engine '" + id_ + "': response missing regions");
  }
  std::vector<TextRegion> out;
  for (const auto& r : j["regions"]) {
    TextRegion t;
    t.x = r.at("x").get<int>();
    t.y = r.at("y").get<int>();
    t.w = r.at("w").get<int>();
    t.h = r.at("h").get<int>();
    t.text = r.value("text", "");
    t.confidence = r.at("confidence").get<double>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace coverbench::gateway
