#include "coverbench/config.hpp"

#include <stdexcept>

#include <json.hpp>

#include "coverbench/gateway/http.hpp"
#include "coverbench/gateway/mock.hpp"
#include "coverbench/hash.hpp"

namespace coverbench::config {

using nlohmann::json;

namespace {

double num(const gateway::ProviderConfig& c, const std::string& key,
           double dflt) {
  auto it = c.params.find(key);
  return it == c.params.end() ? dflt : it->second;
}

std::string str(const gateway::ProviderConfig& c, const std::string& key,
                const std::string& dflt) {
  auto it = c.sparams.find(key);
  return it == c.sparams.end() ? dflt : it->second;
}

gateway::ProviderConfig provider_from_json(const json& j) {
  gateway::ProviderConfig c;
  c.provider_id = j.at("provider_id").get<std::string>();
  c.kind = j.at("kind").get<std::string>();
  c.base_url = j.value("base_url", std::string{});
  c.model = j.value("model", c.provider_id);
  c.auth_env = j.value("auth_env", std::string{});
  c.timeout_s = j.value("timeout_s", 30.0);
  c.max_retries = j.value("max_retries", 2);
  c.rate_limit_rps = j.value("rate_limit_rps", 0.0);
  c.backoff_ms = j.value("backoff_ms", 250);
  if (j.contains("params")) {
    for (auto& [k, v] : j.at("params").items()) {
      c.params[k] = v.get<double>();
    }
  }
  if (j.contains("sparams")) {
    for (auto& [k, v] : j.at("sparams").items()) {
      c.sparams[k] = v.get<std::string>();
    }
  }
  return c;
}

gateway::MockEmbedderParams mock_embedder_params(
    const gateway::ProviderConfig& c) {
  gateway::MockEmbedderParams p;
  p.dim = static_cast<int>(num(c, "dim", p.dim));
  p.seed = static_cast<std::uint64_t>(num(c, "seed", 1));
  p.w_issue = num(c, "w_issue", p.w_issue);
  p.w_topic = num(c, "w_topic", p.w_topic);
  p.w_noise = num(c, "w_noise", p.w_noise);
  p.negate_image = num(c, "negate_image", 0) != 0;
  p.multimodal = num(c, "multimodal", 1) != 0;
  return p;
}

gateway::MockDadParams mock_dad_params(const gateway::ProviderConfig& c) {
  gateway::MockDadParams p;
  p.p_base = static_cast<int>(num(c, "p_base", p.p_base));
  p.hint_rate = static_cast<int>(num(c, "hint_rate", p.hint_rate));
  p.leak = num(c, "leak", 0) != 0;
  return p;
}

}  // namespace

AppConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  AppConfig cfg;
  if (j.contains("providers")) {
    for (const auto& pj : j.at("providers")) {
      cfg.providers.push_back(provider_from_json(pj));
    }
  }
  if (j.contains("embedder_sets")) {
    for (auto& [name, ids] : j.at("embedder_sets").items()) {
      cfg.embedder_sets[name] = ids.get<std::vector<std::string>>();
    }
  }
  cfg.templates_dir = j.value("templates_dir", std::string{});
  cfg.cache_dir = j.value("cache_dir", std::string{});
  cfg.audit_log = j.value("audit_log", std::string{});
  return cfg;
}

AppConfig load_config(const std::string& path) {
  auto bytes = read_file_bytes(path);
  std::string text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  AppConfig cfg = config_from_json(text);
  cfg.config_sha256 = sha256_hex(text);
  return cfg;
}

std::shared_ptr<gateway::ChatModel> Providers::chat(
    const std::string& id) const {
  auto it = chats.find(id);
  if (it == chats.end()) {
    throw std::invalid_argument("no chat provider named " + id);
  }
  return it->second;
}

std::shared_ptr<gateway::OcrEngine> Providers::ocr(
    const std::string& id) const {
  auto it = ocrs.find(id);
  if (it == ocrs.end()) {
    throw std::invalid_argument("no ocr provider named " + id);
  }
  return it->second;
}

Providers build_providers(const AppConfig& config) {
  Providers out;
  auto claim = [&](const std::string& id) {
    if (out.embedders.count(id) || out.chats.count(id) || out.ocrs.count(id)) {
      throw std::invalid_argument("duplicate provider_id " + id);
    }
  };

  // Embedders first: chat mocks may refer to one by id.
  for (const auto& c : config.providers) {
    if (c.kind == "mock-embedder") {
      claim(c.provider_id);
      out.embedders[c.provider_id] = std::make_shared<gateway::MockEmbedder>(
          c.provider_id, mock_embedder_params(c));
    } else if (c.kind == "openai-embedder") {
      claim(c.provider_id);
      out.embedders[c.provider_id] = std::make_shared<gateway::HttpEmbedder>(
          c, num(c, "multimodal", 1) != 0);
    }
  }

  for (const auto& c : config.providers) {
    if (c.kind == "mock-embedder" || c.kind == "openai-embedder") continue;
    claim(c.provider_id);
    if (c.kind == "mock-chat") {
      gateway::MockChatParams p;
      p.behavior = str(c, "behavior", p.behavior);
      p.p_correct = static_cast<int>(num(c, "p_correct", p.p_correct));
      p.conf_lo = num(c, "conf_lo", p.conf_lo);
      p.conf_hi = num(c, "conf_hi", p.conf_hi);
      p.softmax_tau = num(c, "softmax_tau", p.softmax_tau);
      p.seed = static_cast<std::uint64_t>(num(c, "seed", 1));
      std::string sim = str(c, "sim_embedder", "");
      if (!sim.empty()) {
        auto it = out.embedders.find(sim);
        if (it == out.embedders.end()) {
          throw std::invalid_argument(c.provider_id +
                                      ": sim_embedder not declared: " + sim);
        }
        p.sim_embedder = it->second;
      }
      out.chats[c.provider_id] =
          std::make_shared<gateway::MockChat>(c.provider_id, p);
    } else if (c.kind == "mock-describer") {
      out.chats[c.provider_id] = std::make_shared<gateway::MockDescriber>(
          c.provider_id, mock_dad_params(c));
    } else if (c.kind == "mock-reasoner") {
      out.chats[c.provider_id] =
          std::make_shared<gateway::MockReasoner>(c.provider_id);
    } else if (c.kind == "openai-chat") {
      out.chats[c.provider_id] = std::make_shared<gateway::HttpChat>(c);
    } else if (c.kind == "mock-ocr") {
      out.ocrs[c.provider_id] = std::make_shared<gateway::MockOcr>(
          c.provider_id, static_cast<std::uint64_t>(num(c, "seed", 1)));
    } else if (c.kind == "http-ocr") {
      out.ocrs[c.provider_id] = std::make_shared<gateway::HttpOcr>(c);
    } else {
      throw std::invalid_argument(c.provider_id + ": unknown kind " + c.kind);
    }
  }
  return out;
}

Services build_services(const AppConfig& config, const Providers& providers) {
  Services s;
  s.cache = config.cache_dir.empty()
                ? std::make_shared<gateway::EmbeddingCache>()
                : std::make_shared<gateway::EmbeddingCache>(config.cache_dir);
  if (!config.audit_log.empty()) {
    s.audit = std::make_shared<gateway::AuditLog>(config.audit_log);
  }
  s.embeddings = std::make_shared<gateway::EmbeddingService>(s.cache, s.audit);
  for (const auto& [id, e] : providers.embedders) s.embeddings->add(e);
  return s;
}

std::vector<std::string> resolve_embedder_set(const AppConfig& config,
                                              const Providers& providers,
                                              const std::string& name_or_csv) {
  std::vector<std::string> ids;
  auto it = config.embedder_sets.find(name_or_csv);
  if (it != config.embedder_sets.end()) {
    ids = it->second;
  } else {
    std::size_t start = 0;
    while (start <= name_or_csv.size()) {
      std::size_t comma = name_or_csv.find(',', start);
      std::string id = name_or_csv.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start);
      if (!id.empty()) ids.push_back(id);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (ids.empty()) {
    throw std::invalid_argument("empty embedder set: " + name_or_csv);
  }
  for (const auto& id : ids) {
    if (!providers.embedders.count(id)) {
      throw std::invalid_argument("embedder set names unknown provider " + id);
    }
  }
  return ids;
}

curation::EmbeddingSource snapshot_source(
    gateway::EmbeddingService& service,
    const corpus::CorpusSnapshot& snapshot) {
  return [&service, &snapshot](const std::string& embedder_id,
                               const std::string& issue_id,
                               curation::Modality modality) {
    const corpus::Issue& issue = snapshot.at(issue_id);
    if (modality == curation::Modality::Text) {
      return service.embed_text(embedder_id, issue.story);
    }
    return service.embed_image_file(embedder_id, issue.image_path);
  };
}

}  // namespace coverbench::config
