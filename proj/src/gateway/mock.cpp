#include "coverbench/gateway/mock.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "coverbench/errors.hpp"
#include "coverbench/hash.hpp"
#include "coverbench/image.hpp"

namespace coverbench::gateway {

namespace {

bool tag_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '-';
}

std::optional<std::string> find_tag(std::string_view hay) {
  static constexpr std::string_view kMarker = "concept:";
  auto pos = hay.find(kMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  pos += kMarker.size();
  std::string tag;
  while (pos < hay.size() && tag_char(hay[pos])) tag.push_back(hay[pos++]);
  if (tag.empty()) return std::nullopt;
  return tag;
}

std::uint64_t mix(std::string_view a, std::string_view b,
                  std::string_view c = {}) {
  std::string s;
  s.reserve(a.size() + b.size() + c.size() + 2);
  s.append(a).push_back('|');
  s.append(b).push_back('|');
  s.append(c);
  return fnv1a64(s);
}

std::string read_tag_source(const std::string& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace

std::optional<std::string> extract_concept_tag(
    std::span<const std::uint8_t> bytes) {
  return find_tag(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                   bytes.size()));
}

std::optional<std::string> extract_concept_tag(const std::string& text) {
  return find_tag(text);
}

std::string topic_of_tag(const std::string& tag) {
  auto pos = tag.rfind('-');
  if (pos == std::string::npos || pos == 0) return tag;
  return tag.substr(0, pos);
}

// ---------------------------------------------------------------------------
// MockEmbedder

MockEmbedder::MockEmbedder(std::string id, MockEmbedderParams params)
    : id_(std::move(id)), params_(params) {
  if (params_.dim < 2) throw std::invalid_argument("mock embedder dim < 2");
  if (params_.w_issue == 0.0 && params_.w_topic == 0.0 &&
      params_.w_noise == 0.0) {
    params_.w_issue = 1.0;
  }
}

Eigen::VectorXd MockEmbedder::build(std::optional<std::string> tag,
                                    const std::string& content_hash,
                                    bool is_image) {
  calls_.fetch_add(1);
  std::string seed_str = std::to_string(params_.seed);
  std::string issue_key = tag ? *tag : ("h:" + content_hash);

  Eigen::VectorXd v = Eigen::VectorXd::Zero(params_.dim);
  if (params_.w_issue != 0.0) {
    double sign = (params_.negate_image && is_image) ? -1.0 : 1.0;
    v += params_.w_issue * sign *
         seeded_direction(mix("issue", seed_str, issue_key), params_.dim);
  }
  if (params_.w_topic != 0.0 && tag) {
    v += params_.w_topic *
         seeded_direction(mix("topic", seed_str, topic_of_tag(*tag)),
                          params_.dim);
  }
  if (params_.w_noise != 0.0) {
    v += params_.w_noise *
         seeded_direction(mix("noise", seed_str, content_hash), params_.dim);
  }
  return v;
}

Eigen::VectorXd MockEmbedder::embed_text(const std::string& text) {
  return build(extract_concept_tag(text), sha256_hex(text), false);
}

Eigen::VectorXd MockEmbedder::embed_image(std::span<const std::uint8_t> bytes) {
  if (!params_.multimodal) {
    throw std::invalid_argument("mock embedder '" + id_ + "' is text-only");
  }
  return build(extract_concept_tag(bytes), sha256_hex(bytes), true);
}

// ---------------------------------------------------------------------------
// PlantedEmbedder

void PlantedEmbedder::plant_text(const std::string& key, Eigen::VectorXd v) {
  text_vecs_[key] = std::move(v);
}

void PlantedEmbedder::plant_image(const std::string& key, Eigen::VectorXd v) {
  image_vecs_[key] = std::move(v);
}

Eigen::VectorXd PlantedEmbedder::embed_text(const std::string& text) {
  auto tag = extract_concept_tag(text);
  std::string key = tag ? *tag : sha256_hex(text);
  auto it = text_vecs_.find(key);
  if (it == text_vecs_.end()) {
    throw std::out_of_range("planted embedder '" + id_ +
                            "': no text vector for key " + key);
  }
  return it->second;
}

Eigen::VectorXd PlantedEmbedder::embed_image(
    std::span<const std::uint8_t> bytes) {
  if (!multimodal_) {
    throw std::invalid_argument("planted embedder '" + id_ + "' is text-only");
  }
  auto tag = extract_concept_tag(bytes);
  std::string key = tag ? *tag : sha256_hex(bytes);
  auto it = image_vecs_.find(key);
  if (it == image_vecs_.end()) {
    throw std::out_of_range("planted embedder '" + id_ +
                            "': no image vector for key " + key);
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// MockChat

std::string format_probs_line(const std::array<double, 4>& probs) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "PROBS A:%.6f B:%.6f C:%.6f D:%.6f",
                probs[0], probs[1], probs[2], probs[3]);
  return buf;
}

MockChat::MockChat(std::string id, MockChatParams params)
    : id_(std::move(id)), params_(std::move(params)) {
  if (params_.behavior == "embedsim" && !params_.sim_embedder) {
    throw std::invalid_argument("embedsim mock needs an attached embedder");
  }
}

int MockChat::gold_index(const ChatRequest& request) const {
  std::optional<std::string> stem_tag;
  if (!request.stem_image_path.empty()) {
    stem_tag = extract_concept_tag(read_tag_source(request.stem_image_path));
  } else if (!request.stem_text.empty()) {
    stem_tag = extract_concept_tag(request.stem_text);
  }
  if (!stem_tag) return -1;

  for (std::size_t i = 0; i < 4; ++i) {
    std::optional<std::string> opt_tag;
    if (i < request.option_image_paths.size() &&
        !request.option_image_paths[i].empty()) {
      opt_tag = extract_concept_tag(read_tag_source(request.option_image_paths[i]));
    } else if (i < request.option_texts.size()) {
      opt_tag = extract_concept_tag(request.option_texts[i]);
    }
    if (opt_tag && *opt_tag == *stem_tag) return static_cast<int>(i);
  }
  return -1;
}

std::string MockChat::one(const ChatRequest& request, int sample_index) {
  const std::string& b = params_.behavior;
  if (b == "uniform") {
    return format_probs_line({0.25, 0.25, 0.25, 0.25});
  }
  if (b == "letter") {
    return "Considering the scientific theme, the answer is B.";
  }
  if (b == "garbage") {
    return "The cover shows interesting structures but I will not commit.";
  }
  if (b == "refuser") {
    throw RefusalError("mock provider declined the request");
  }
  if (b == "oracle") {
    int g = gold_index(request);
    if (g < 0) return format_probs_line({0.25, 0.25, 0.25, 0.25});
    std::array<double, 4> p{0, 0, 0, 0};
    p[static_cast<std::size_t>(g)] = 1.0;
    return format_probs_line(p);
  }
  if (b == "knowledge") {
    int g = gold_index(request);
    if (g < 0) return format_probs_line({0.25, 0.25, 0.25, 0.25});
    std::optional<std::string> stem_tag;
    if (!request.stem_image_path.empty()) {
      stem_tag = extract_concept_tag(read_tag_source(request.stem_image_path));
    } else {
      stem_tag = extract_concept_tag(request.stem_text);
    }
    std::string key = stem_tag.value_or(request.question_id) + "|" +
                      std::to_string(params_.seed);
    bool knows = static_cast<double>(mix("know", key) % 10000) <
                 params_.p_correct * 100.0;
    double frac =
        static_cast<double>(mix("conf", key, std::to_string(sample_index)) %
                            1000) /
        999.0;
    double conf = params_.conf_lo + (params_.conf_hi - params_.conf_lo) * frac;
    int pick = knows ? g
                     : static_cast<int>((g + 1 + mix("wrong", key) % 3) % 4);
    std::array<double, 4> p;
    p.fill((1.0 - conf) / 3.0);
    p[static_cast<std::size_t>(pick)] = conf;
    return format_probs_line(p);
  }
  if (b == "embedsim") {
    Embedder& e = *params_.sim_embedder;
    auto embed_of = [&](const std::string& text,
                        const std::string& image_path) -> Eigen::VectorXd {
      Eigen::VectorXd raw = image_path.empty()
                                ? e.embed_text(text)
                                : e.embed_image(read_file_bytes(image_path));
      double n = raw.norm();
      return n > 0 ? Eigen::VectorXd(raw / n) : raw;
    };
    Eigen::VectorXd stem = embed_of(request.stem_text, request.stem_image_path);
    std::array<double, 4> sims{};
    for (std::size_t i = 0; i < 4; ++i) {
      std::string text =
          i < request.option_texts.size() ? request.option_texts[i] : "";
      std::string img = i < request.option_image_paths.size()
                            ? request.option_image_paths[i]
                            : "";
      sims[i] = stem.dot(embed_of(text, img));
    }
    double mx = *std::max_element(sims.begin(), sims.end());
    std::array<double, 4> p{};
    double z = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      p[i] = std::exp((sims[i] - mx) / params_.softmax_tau);
      z += p[i];
    }
    for (auto& x : p) x /= z;
    return format_probs_line(p);
  }
  throw std::invalid_argument("unknown mock chat behavior: " + b);
}

std::vector<std::string> MockChat::complete(const ChatRequest& request) {
  calls_.fetch_add(1);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(request.sample_count));
  for (int i = 0; i < request.sample_count; ++i) out.push_back(one(request, i));
  return out;
}

// ---------------------------------------------------------------------------
// DAD mocks

std::vector<std::string> MockDescriber::complete(const ChatRequest& request) {
  calls_.fetch_add(1);

  std::optional<std::string> stem_tag;
  if (!request.stem_image_path.empty()) {
    stem_tag = extract_concept_tag(read_tag_source(request.stem_image_path));
  } else if (!request.stem_text.empty()) {
    stem_tag = extract_concept_tag(request.stem_text);
  }
  std::string key = stem_tag.value_or(request.question_id);
  bool expose = static_cast<double>(mix("know", key) % 10000) <
                params_.p_base * 100.0;
  if (!expose) {
    expose = static_cast<double>(mix("hint", key) % 10000) <
             params_.hint_rate * 100.0;
  }

  std::string desc =
      "DESCRIPTION: The cover presents a stylized scientific composition with "
      "layered geometric structures, a saturated palette, and a prominent "
      "central motif.";
  if (expose && stem_tag && request.option_image_paths.empty()) {
    desc += " The motif is characteristic of concept:" + *stem_tag + ".";
  }
  if (expose && !request.option_image_paths.empty()) {
    // Candidate-image task: describe each attachment.
    static const char* kLetters = "ABCD";
    for (std::size_t i = 0; i < request.option_image_paths.size() && i < 4;
         ++i) {
      auto t = extract_concept_tag(
          read_tag_source(request.option_image_paths[i]));
      if (t) {
        desc += std::string(" Image ") + kLetters[i] +
                " appears to depict concept:" + *t + ".";
      }
    }
  }
  std::string cot =
      "REASONING: Start from the dominant visual elements, relate them to the "
      "candidate subject areas, and weigh which storyline the composition "
      "supports before judging the candidates.";
  if (params_.leak) cot += " In short, the answer is B.";

  std::vector<std::string> out(static_cast<std::size_t>(request.sample_count),
                               desc + "\n" + cot);
  return out;
}

std::vector<std::string> MockReasoner::complete(const ChatRequest& request) {
  calls_.fetch_add(1);
  const std::string& dossier = request.context_text;

  int pick = -1;
  // Story options: a tag exposed in the dossier names the matching option.
  for (std::size_t i = 0; i < request.option_texts.size() && i < 4; ++i) {
    auto t = extract_concept_tag(request.option_texts[i]);
    if (!t) continue;
    if (dossier.find("concept:" + *t) != std::string::npos) {
      pick = static_cast<int>(i);
      break;
    }
  }
  auto stem_tag = extract_concept_tag(request.stem_text);
  if (pick < 0 && stem_tag) {
    // Image options: match the stem story's tag against the dossier's
    // per-image description lines ("Image B appears to depict concept:X").
    std::string needle = "concept:" + *stem_tag;
    auto pos = dossier.find(needle);
    if (pos != std::string::npos) {
      auto img = dossier.rfind("Image ", pos);
      if (img != std::string::npos && img + 6 < dossier.size()) {
        char letter = dossier[img + 6];
        if (letter >= 'A' && letter <= 'D') pick = letter - 'A';
      }
    }
  }

  std::array<double, 4> p{};
  if (pick >= 0) {
    p.fill(0.02);
    p[static_cast<std::size_t>(pick)] = 0.94;
  } else {
    int fallback = static_cast<int>(fnv1a64(dossier + request.user_text) % 4);
    p.fill(0.2);
    p[static_cast<std::size_t>(fallback)] = 0.4;
  }
  return std::vector<std::string>(
      static_cast<std::size_t>(request.sample_count), format_probs_line(p));
}

// ---------------------------------------------------------------------------
// OCR mocks

std::vector<TextRegion> MockOcr::detect(std::span<const std::uint8_t> bytes) {
  Image img = decode_ppm(bytes);  // throws on undecodable input
  if (img.uniform()) return {};

  static const double kConfs[] = {0.9, 0.1, 0.6, 0.2, 0.45};
  std::string h = sha256_hex(bytes) + ":" + std::to_string(seed_);
  std::size_t k = 1 + fnv1a64(h) % 3;
  std::vector<TextRegion> regions;
  for (std::size_t i = 0; i < k; ++i) {
    std::uint64_t hi = fnv1a64(h + "#" + std::to_string(i));
    TextRegion r;
    int max_w = std::max(2, img.width / 2);
    int max_h = std::max(2, img.height / 6);
    r.w = 2 + static_cast<int>(hi % static_cast<std::uint64_t>(max_w - 1));
    r.h = 2 + static_cast<int>((hi >> 16) % static_cast<std::uint64_t>(max_h - 1));
    r.x = static_cast<int>((hi >> 24) %
                           static_cast<std::uint64_t>(img.width - r.w + 1));
    r.y = static_cast<int>((hi >> 40) %
                           static_cast<std::uint64_t>(img.height - r.h + 1));
    r.confidence = kConfs[(hi >> 8) % 5];
    char word[16];
    std::snprintf(word, sizeof(word), "w%llu",
                  static_cast<unsigned long long>(hi % 1000));
    r.text = word;
    regions.push_back(std::move(r));
  }
  return regions;
}

void ScriptedOcr::script(const std::string& image_sha256,
                         std::vector<TextRegion> regions) {
  regions_[image_sha256] = std::move(regions);
}

std::vector<TextRegion> ScriptedOcr::detect(
    std::span<const std::uint8_t> bytes) {
  decode_ppm(bytes);  // decode errors still surface
  auto it = regions_.find(sha256_hex(bytes));
  if (it == regions_.end()) return {};
  return it->second;
}

}  // namespace coverbench::gateway
