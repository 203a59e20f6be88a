#include "coverbench/dad.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>

#include <json.hpp>

#include "coverbench/errors.hpp"
#include "coverbench/hash.hpp"

using nlohmann::json;

namespace coverbench::dad {

namespace {

const char* kLetters = "ABCD";

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

std::string flatten(const std::string& text) {
  std::string out = text;
  for (auto& c : out) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return out;
}

const std::regex& leak_regex() {
  static const std::regex re(R"((?:the\s+)?answer\s+is\s*\(?\**\s*([ABCD])\b)",
                             std::regex::icase);
  return re;
}

// Splits the describer response into description / pseudo-CoT sections.
void split_sections(const std::string& response, std::string* description,
                    std::string* pseudo_cot) {
  auto desc_pos = response.find("DESCRIPTION:");
  auto cot_pos = response.find("REASONING:");
  if (desc_pos != std::string::npos && cot_pos != std::string::npos &&
      cot_pos > desc_pos) {
    *description = response.substr(desc_pos + 12, cot_pos - desc_pos - 12);
    *pseudo_cot = response.substr(cot_pos + 10);
  } else {
    *description = response;
    *pseudo_cot = "No explicit reasoning section was provided.";
  }
  auto trim = [](std::string* s) {
    while (!s->empty() && (s->back() == '\n' || s->back() == ' ')) s->pop_back();
    std::size_t i = 0;
    while (i < s->size() && ((*s)[i] == '\n' || (*s)[i] == ' ')) ++i;
    s->erase(0, i);
    if (s->empty()) *s = "(empty)";
  };
  trim(description);
  trim(pseudo_cot);
}

std::string dossier_block(const Dossier& d) {
  return "DESCRIPTION: " + d.description + "\nREASONING: " + d.pseudo_cot;
}

}  // namespace

bool has_leak(const std::string& text) {
  return std::regex_search(text, leak_regex());
}

std::string redact_leaks(const std::string& text, bool* changed) {
  if (changed) *changed = false;
  if (!has_leak(text)) return text;

  // Sentence = span ending at '.', '!', '?' or newline.
  std::vector<std::pair<std::size_t, std::size_t>> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?' || c == '\n') {
      sentences.emplace_back(start, i + 1);
      start = i + 1;
    }
  }
  if (start < text.size()) sentences.emplace_back(start, text.size());

  std::string out;
  for (auto [lo, hi] : sentences) {
    std::string sentence = text.substr(lo, hi - lo);
    if (has_leak(sentence)) {
      if (changed) *changed = true;
      bool ends_newline = !sentence.empty() && sentence.back() == '\n';
      out += "[redacted]";
      if (ends_newline) out += "\n";
    } else {
      out += sentence;
    }
  }
  return out;
}

std::string question_content_hash(const curation::QuestionSet& set,
                                  const curation::QuestionSpec& question) {
  std::string material = curation::to_string(set.direction) + "\n" +
                         curation::to_string(set.domain) + "\n" +
                         question.stem_issue_id + "\n";
  for (const auto& opt : question.options) {
    material += opt;
    auto it = set.image_overrides.find(opt);
    if (it != set.image_overrides.end()) material += "@" + it->second;
    material += "\n";
  }
  return sha256_hex(material);
}

// ---------------------------------------------------------------------------
// DossierStore

DossierStore::DossierStore(std::string path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      json j = json::parse(lines[i]);
      Dossier d;
      d.question_id = j.at("question_id").get<std::string>();
      d.describer_id = j.at("describer_id").get<std::string>();
      d.description = j.at("description").get<std::string>();
      d.pseudo_cot = j.at("pseudo_cot").get<std::string>();
      d.created_at = j.at("created_at").get<std::string>();
      d.leak_redacted = j.at("leak_redacted").get<bool>();
      by_key_[d.describer_id + "\n" + j.at("key").get<std::string>()] = d;
    } catch (const std::exception&) {
      if (i + 1 == lines.size()) break;  // torn tail from a killed run
      throw;
    }
  }
}

std::optional<Dossier> DossierStore::find(const std::string& describer_id,
                                          const std::string& content_hash) const {
  std::lock_guard lock(mu_);
  auto it = by_key_.find(describer_id + "\n" + content_hash);
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

void DossierStore::put(const std::string& content_hash,
                       const Dossier& dossier) {
  std::lock_guard lock(mu_);
  by_key_[dossier.describer_id + "\n" + content_hash] = dossier;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path_);
  json j = {{"key", content_hash},
            {"question_id", dossier.question_id},
            {"describer_id", dossier.describer_id},
            {"description", dossier.description},
            {"pseudo_cot", dossier.pseudo_cot},
            {"created_at", dossier.created_at},
            {"leak_redacted", dossier.leak_redacted}};
  out << j.dump() << "\n";
  out.flush();
}

std::size_t DossierStore::size() const {
  std::lock_guard lock(mu_);
  return by_key_.size();
}

// ---------------------------------------------------------------------------
// Stage 1

Stage1Result stage1_describe(const curation::QuestionSet& set,
                             const curation::QuestionSpec& question,
                             gateway::ChatModel& describer,
                             const evaluation::MediaResolver& media,
                             const evaluation::TemplateStore& templates,
                             const std::function<std::string()>& now_fn) {
  bool i2t = set.direction == curation::Direction::Image2Text;

  gateway::ChatRequest request;
  request.model_id = describer.id();
  request.question_id = question.question_id;
  request.sample_count = 1;

  std::map<std::string, std::string> vars;
  if (i2t) {
    vars["stem_block"] =
        "The journal cover in question is attached as an image.";
    std::string options_block = "Candidate cover stories:";
    for (std::size_t i = 0; i < question.options.size(); ++i) {
      std::string story = media.story_of(question.options[i]);
      request.option_texts.push_back(story);
      options_block += "\n";
      options_block += kLetters[i];
      options_block += ". " + flatten(story);
    }
    vars["options_block"] = options_block;
    request.stem_image_path = media.image_path_of(question.stem_issue_id);
    request.image_paths.push_back(request.stem_image_path);
  } else {
    request.stem_text = media.story_of(question.stem_issue_id);
    vars["stem_block"] = "Cover story:\n" + flatten(request.stem_text);
    vars["options_block"] =
        "The four candidate cover images are attached in order: first A, "
        "then B, then C, then D.";
    for (const auto& opt : question.options) {
      request.option_image_paths.push_back(media.image_path_of(opt));
    }
    request.image_paths = request.option_image_paths;
  }
  request.user_text = templates.render("dad_describe@v1", vars);

  Stage1Result result;
  std::vector<std::string> responses = describer.complete(request);
  result.raw_responses = responses;
  std::string text = responses.empty() ? "" : responses.front();

  std::string description;
  std::string pseudo_cot;
  split_sections(text, &description, &pseudo_cot);

  bool redacted = false;
  if (has_leak(description) || has_leak(pseudo_cot)) {
    // One re-prompt with a sharpened instruction, then hard redaction.
    gateway::ChatRequest retry = request;
    retry.user_text +=
        "\nYour previous notes named an option letter. Rewrite them without "
        "selecting, naming, or hinting at any option.";
    responses = describer.complete(retry);
    result.raw_responses.insert(result.raw_responses.end(), responses.begin(),
                                responses.end());
    text = responses.empty() ? "" : responses.front();
    split_sections(text, &description, &pseudo_cot);
    if (has_leak(description) || has_leak(pseudo_cot)) {
      bool c1 = false;
      bool c2 = false;
      description = redact_leaks(description, &c1);
      pseudo_cot = redact_leaks(pseudo_cot, &c2);
      redacted = c1 || c2;
    }
  }

  result.dossier.question_id = question.question_id;
  result.dossier.describer_id = describer.id();
  result.dossier.description = description;
  result.dossier.pseudo_cot = pseudo_cot;
  result.dossier.created_at = now_fn ? now_fn() : utc_now();
  result.dossier.leak_redacted = redacted;
  return result;
}

// ---------------------------------------------------------------------------
// Stage 2

Stage2Result stage2_deduce(const curation::QuestionSet& set,
                           const curation::QuestionSpec& question,
                           const Dossier& dossier,
                           gateway::ChatModel& reasoner,
                           const evaluation::MediaResolver& media,
                           const evaluation::TemplateStore& templates) {
  if (dossier.question_id != question.question_id) {
    throw std::invalid_argument("dossier for '" + dossier.question_id +
                                "' does not belong to question '" +
                                question.question_id + "'");
  }
  bool i2t = set.direction == curation::Direction::Image2Text;

  gateway::ChatRequest request;
  request.model_id = reasoner.id();
  request.question_id = question.question_id;
  request.sample_count = 1;
  request.context_text = dossier_block(dossier);

  std::map<std::string, std::string> vars;
  vars["dossier_block"] = request.context_text;
  vars["probs_instruction"] =
      "Respond with your probability for every option on one final line, "
      "exactly in the form: PROBS A:<p> B:<p> C:<p> D:<p> where the four "
      "values are probabilities summing to 1.";
  if (i2t) {
    vars["stem_block"] = "(The cover image itself is not available to you.)";
    std::string options_block = "Candidate cover stories:";
    for (std::size_t i = 0; i < question.options.size(); ++i) {
      std::string story = media.story_of(question.options[i]);
      request.option_texts.push_back(story);
      options_block += "\n";
      options_block += kLetters[i];
      options_block += ". " + flatten(story);
    }
    vars["options_block"] = options_block;
  } else {
    request.stem_text = media.story_of(question.stem_issue_id);
    vars["stem_block"] = "Cover story:\n" + flatten(request.stem_text);
    vars["options_block"] =
        "Options A, B, C, and D are the four cover images described in the "
        "notes, in that order.";
  }
  request.user_text = templates.render("dad_deduce@v1", vars);
  // Stage 2 is text only by construction; image_paths stays empty.

  Stage2Result result;
  result.raw_responses = reasoner.complete(request);
  result.elicitation = evaluation::elicit_probabilities(result.raw_responses);
  return result;
}

// ---------------------------------------------------------------------------
// Full pipeline

DadOutcome dad_evaluate(const curation::QuestionSet& set,
                        gateway::ChatModel& describer,
                        gateway::ChatModel& reasoner,
                        const evaluation::MediaResolver& media,
                        const evaluation::TemplateStore& templates,
                        DossierStore& store, const DadOptions& options) {
  const std::string strategy_name = "dad:" + reasoner.id();
  std::atomic<int> stage1_calls{0};
  std::atomic<int> cache_hits{0};

  auto run_one = [&](const curation::QuestionSpec& q) -> RunRecord {
    try {
      std::string content_hash = question_content_hash(set, q);
      std::optional<Dossier> dossier = store.find(describer.id(), content_hash);
      if (dossier.has_value()) {
        cache_hits.fetch_add(1);
      } else {
        Stage1Result s1 = stage1_describe(set, q, describer, media, templates,
                                          options.now_fn);
        stage1_calls.fetch_add(1);
        store.put(content_hash, s1.dossier);
        dossier = std::move(s1.dossier);
      }
      Stage2Result s2 =
          stage2_deduce(set, q, *dossier, reasoner, media, templates);
      RunRecord r;
      r.question_id = q.question_id;
      r.model_id = reasoner.id();
      r.strategy = strategy_name;
      r.probs = s2.elicitation.probs;
      r.chosen = s2.elicitation.chosen;
      r.answer_index = q.answer_index;
      r.correct = r.chosen == q.answer_index;
      r.raw_responses = std::move(s2.raw_responses);
      r.parse_status = s2.elicitation.parse_status;
      if (dossier->leak_redacted) r.note = "dossier leak redacted";
      return r;
    } catch (const TransportError& e) {
      RunRecord r;
      r.question_id = q.question_id;
      r.model_id = reasoner.id();
      r.strategy = strategy_name;
      r.probs = {0.25, 0.25, 0.25, 0.25};
      r.chosen = 0;
      r.answer_index = q.answer_index;
      r.correct = r.chosen == q.answer_index;
      r.parse_status = "fallback_uniform";
      r.note = e.what();
      return r;
    }
  };

  evaluation::EvaluateOptions loop_options;
  loop_options.parallelism = options.parallelism;
  loop_options.results_path = options.results_path;

  DadOutcome outcome;
  outcome.records = evaluation::run_question_loop(set, reasoner.id(),
                                                  strategy_name, loop_options,
                                                  run_one);
  outcome.stage1_calls = stage1_calls.load();
  outcome.stage1_cache_hits = cache_hits.load();
  return outcome;
}

}  // namespace coverbench::dad
