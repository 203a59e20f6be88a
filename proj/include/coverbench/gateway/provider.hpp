#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coverbench/embedding.hpp"

namespace coverbench::gateway {

// One external model endpoint. API keys come from the named environment
// variable, never from the config file itself.
struct ProviderConfig {
  std::string provider_id;
  std::string kind;      // mock-embedder | mock-chat | mock-ocr | openai-embedder | openai-chat | http-ocr | ...
  std::string base_url;  // wire providers only
  std::string model;
  std::string auth_env;
  double timeout_s = 30.0;
  int max_retries = 2;
  double rate_limit_rps = 0.0;  // 0 = unlimited
  int backoff_ms = 250;
  std::map<std::string, double> params;         // numeric knobs (mocks)
  std::map<std::string, std::string> sparams;   // string knobs (mocks)
};

struct TextRegion {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  std::string text;
  double confidence = 0.0;  // in [0, 1]
};

// A chat call. The prompt text and attached images are what goes on the
// wire; the structured fields below them are harness metadata that mock
// providers key on and wire adapters ignore.
struct ChatRequest {
  std::string model_id;
  std::string system_text;
  std::string user_text;
  std::vector<std::string> image_paths;  // attachment order matters
  double temperature = 0.0;
  int max_tokens = 1024;
  int sample_count = 1;

  // harness metadata (not transmitted)
  std::string question_id;
  std::vector<std::string> option_texts;
  std::vector<std::string> option_image_paths;
  std::string stem_text;
  std::string stem_image_path;
  std::string context_text;  // stage-2 dossier notes, when present
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual const std::string& id() const = 0;
  virtual const std::string& model() const = 0;
  virtual bool supports_images() const = 0;
  // Raw (unnormalized) vectors; the embedding service normalizes.
  virtual Eigen::VectorXd embed_text(const std::string& text) = 0;
  virtual Eigen::VectorXd embed_image(std::span<const std::uint8_t> bytes) = 0;
};

class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual const std::string& id() const = 0;
  // Exactly request.sample_count completions, in order.
  virtual std::vector<std::string> complete(const ChatRequest& request) = 0;
};

class OcrEngine {
 public:
  virtual ~OcrEngine() = default;
  virtual const std::string& id() const = 0;
  virtual std::vector<TextRegion> detect(std::span<const std::uint8_t> image_bytes) = 0;
};

}  // namespace coverbench::gateway
