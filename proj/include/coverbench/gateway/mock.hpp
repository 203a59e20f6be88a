#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coverbench/gateway/provider.hpp"

namespace coverbench::gateway {

// Synthetic content carries a "concept:<tag>" marker (in story text and as
// a PPM comment inside image bytes). Mock providers key their determinism
// on that tag; content without one falls back to a content hash.
std::optional<std::string> extract_concept_tag(std::span<const std::uint8_t> bytes);
std::optional<std::string> extract_concept_tag(const std::string& text);
std::string topic_of_tag(const std::string& tag);  // drops the last '-' segment

// Deterministic seeded embedder. The returned vector is a weighted sum of
// three pseudo-random directions keyed on the issue tag, the tag's topic
// group, and the raw content hash; weights shape the space:
//   w_issue=1, rest 0            -> paired image/story collapse to one point
//   negate_image + w_issue=1     -> pairs are antipodal (adversarial space)
//   w_topic large                -> same-topic issues become confusers
struct MockEmbedderParams {
  int dim = 64;
  std::uint64_t seed = 1;
  double w_issue = 1.0;
  double w_topic = 0.0;
  double w_noise = 0.0;
  bool negate_image = false;
  bool multimodal = true;  // false = text-only (SentenceTransformer role)
};

class MockEmbedder : public Embedder {
 public:
  MockEmbedder(std::string id, MockEmbedderParams params);

  const std::string& id() const override { return id_; }
  const std::string& model() const override { return id_; }
  bool supports_images() const override { return params_.multimodal; }
  Eigen::VectorXd embed_text(const std::string& text) override;
  Eigen::VectorXd embed_image(std::span<const std::uint8_t> bytes) override;

  long call_count() const { return calls_.load(); }

 private:
  Eigen::VectorXd build(std::optional<std::string> tag,
                        const std::string& content_hash, bool is_image);

  std::string id_;
  MockEmbedderParams params_;
  std::atomic<long> calls_{0};
};

// Embedder with explicitly planted vectors, keyed by concept tag (or
// content hash when no tag is present). Test harnesses use it to construct
// exact similarity orders.
class PlantedEmbedder : public Embedder {
 public:
  explicit PlantedEmbedder(std::string id, bool multimodal = true)
      : id_(std::move(id)), multimodal_(multimodal) {}

  void plant_text(const std::string& key, Eigen::VectorXd v);
  void plant_image(const std::string& key, Eigen::VectorXd v);

  const std::string& id() const override { return id_; }
  const std::string& model() const override { return id_; }
  bool supports_images() const override { return multimodal_; }
  Eigen::VectorXd embed_text(const std::string& text) override;
  Eigen::VectorXd embed_image(std::span<const std::uint8_t> bytes) override;

 private:
  std::string id_;
  bool multimodal_;
  std::map<std::string, Eigen::VectorXd> text_vecs_;
  std::map<std::string, Eigen::VectorXd> image_vecs_;
};

// Chat mock driven by an arbitrary function; the workhorse for tests.
class ScriptedChat : public ChatModel {
 public:
  using Fn = std::function<std::vector<std::string>(const ChatRequest&)>;
  ScriptedChat(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

  const std::string& id() const override { return id_; }
  std::vector<std::string> complete(const ChatRequest& request) override {
    calls_.fetch_add(1);
    auto out = fn_(request);
    if (static_cast<int>(out.size()) != request.sample_count) {
      out.resize(static_cast<std::size_t>(request.sample_count),
                 out.empty() ? std::string{} : out.back());
    }
    return out;
  }

  long call_count() const { return calls_.load(); }

 private:
  std::string id_;
  Fn fn_;
  std::atomic<long> calls_{0};
};

// Named deterministic chat behaviors available from the CLI config:
//   oracle     answer the tag-matching option at p=1
//   uniform    0.25 everywhere
//   letter     prose answer ("The answer is B."), exercises repair parsing
//   garbage    unparseable reply, exercises the uniform fallback
//   refuser    raises a content refusal
//   knowledge  correct iff hash(stem tag) % 100 < p_correct; confidence
//              varies deterministically in [conf_lo, conf_hi]
//   embedsim   answers by cosine similarity in an attached embedder's space
struct MockChatParams {
  std::string behavior = "oracle";
  double p_correct = 60.0;        // knowledge
  double conf_lo = 0.5;           // knowledge
  double conf_hi = 0.95;          // knowledge
  double softmax_tau = 0.05;      // embedsim
  std::uint64_t seed = 1;
  std::shared_ptr<Embedder> sim_embedder;  // embedsim
};

class MockChat : public ChatModel {
 public:
  MockChat(std::string id, MockChatParams params);

  const std::string& id() const override { return id_; }
  std::vector<std::string> complete(const ChatRequest& request) override;

  long call_count() const { return calls_.load(); }

 private:
  std::string one(const ChatRequest& request, int sample_index);
  int gold_index(const ChatRequest& request) const;

  std::string id_;
  MockChatParams params_;
  std::atomic<long> calls_{0};
};

// Two-stage pipeline mocks. The describer summarizes the stem and, for a
// deterministic subset of questions, embeds the stem's concept tag into the
// description; the reasoner answers by matching any such tag against the
// options and otherwise picks a deterministic wrong option. p_base lets the
// describer expose the tag for questions a plain responder would also get
// right, so describer+reasoner reproduce a baseline plus `hint_rate` extra.
struct MockDadParams {
  double p_base = 50.0;    // % of stems whose tag is always exposed
  double hint_rate = 20.0; // % of the remaining stems exposed as extra hints
  bool leak = false;       // emit an explicit answer sentence (leak check test)
};

class MockDescriber : public ChatModel {
 public:
  MockDescriber(std::string id, MockDadParams params)
      : id_(std::move(id)), params_(params) {}

  const std::string& id() const override { return id_; }
  std::vector<std::string> complete(const ChatRequest& request) override;

  long call_count() const { return calls_.load(); }

 private:
  std::string id_;
  MockDadParams params_;
  std::atomic<long> calls_{0};
};

class MockReasoner : public ChatModel {
 public:
  explicit MockReasoner(std::string id) : id_(std::move(id)) {}

  const std::string& id() const override { return id_; }
  std::vector<std::string> complete(const ChatRequest& request) override;

  long call_count() const { return calls_.load(); }

 private:
  std::string id_;
  std::atomic<long> calls_{0};
};

// OCR mocks. MockOcr derives 1-3 in-bounds regions (confidences straddling
// 0.25) from the image content hash; uniform images yield no regions.
class MockOcr : public OcrEngine {
 public:
  explicit MockOcr(std::string id, std::uint64_t seed = 1)
      : id_(std::move(id)), seed_(seed) {}

  const std::string& id() const override { return id_; }
  std::vector<TextRegion> detect(std::span<const std::uint8_t> bytes) override;

 private:
  std::string id_;
  std::uint64_t seed_;
};

class ScriptedOcr : public OcrEngine {
 public:
  explicit ScriptedOcr(std::string id) : id_(std::move(id)) {}

  void script(const std::string& image_sha256, std::vector<TextRegion> regions);

  const std::string& id() const override { return id_; }
  std::vector<TextRegion> detect(std::span<const std::uint8_t> bytes) override;

 private:
  std::string id_;
  std::map<std::string, std::vector<TextRegion>> regions_;
};

// Formats the machine-parseable probability line the evaluation prompts ask
// for; shared by mocks and test fixtures.
std::string format_probs_line(const std::array<double, 4>& probs);

}  // namespace coverbench::gateway
