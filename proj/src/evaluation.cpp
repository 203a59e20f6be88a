#include "coverbench/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "coverbench/errors.hpp"

namespace fs = std::filesystem;

namespace coverbench::evaluation {

namespace {

constexpr double kEps = 1e-6;
const char* kLetters = "ABCD";

// Single-line story text for prompt bodies; metadata keeps the raw story.
std::string flatten(const std::string& text) {
  std::string out = text;
  for (auto& c : out) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

int status_rank(const std::string& s) {
  if (s == "ok") return 0;
  if (s == "repaired") return 1;
  return 2;
}

const char* kProbsInstruction =
    "Respond with your probability for every option on one final line, "
    "exactly in the form: PROBS A:<p> B:<p> C:<p> D:<p> where the four "
    "values are probabilities summing to 1.";

}  // namespace

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Direct: return "direct";
    case StrategyKind::Cot: return "cot";
    case StrategyKind::OneShot: return "one_shot";
    case StrategyKind::SelfConsistency: return "self_consistency";
  }
  return "direct";
}

StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "direct") return StrategyKind::Direct;
  if (s == "cot") return StrategyKind::Cot;
  if (s == "one_shot") return StrategyKind::OneShot;
  if (s == "self_consistency") return StrategyKind::SelfConsistency;
  throw std::invalid_argument("unknown strategy: " + s);
}

std::string Strategy::template_id() const {
  if (!prompt_template_id.empty()) return prompt_template_id;
  switch (kind) {
    case StrategyKind::Direct: return "direct@v1";
    case StrategyKind::Cot: return "cot@v1";
    case StrategyKind::OneShot: return "one_shot@v1";
    case StrategyKind::SelfConsistency: return "cot@v1";
  }
  return "direct@v1";
}

void Strategy::validate() const {
  if (kind == StrategyKind::SelfConsistency && k < 2) {
    throw std::invalid_argument("self_consistency needs k >= 2");
  }
  if ((kind == StrategyKind::OneShot) != exemplar.has_value()) {
    throw std::invalid_argument(
        "exemplar must be present exactly for one_shot");
  }
}

// ---------------------------------------------------------------------------
// Templates

TemplateStore TemplateStore::builtin() {
  TemplateStore store;
  store.templates_["direct@v1"] =
      R"(You will answer a four-option journal cover question.
{{stem_block}}

{{options_block}}

{{probs_instruction}}
)";
  store.templates_["cot@v1"] =
      R"(You will answer a four-option journal cover question.
{{stem_block}}

{{options_block}}

Reason step by step about the visual and topical evidence before committing.

{{probs_instruction}}
)";
  store.templates_["one_shot@v1"] =
      R"(You will answer a four-option journal cover question. Here is a worked example first.

{{exemplar_block}}

Now the real question.
{{stem_block}}

{{options_block}}

{{probs_instruction}}
)";
  store.templates_["dad_describe@v1"] =
      R"(You are preparing notes for a colleague who cannot see any image.
{{stem_block}}

{{options_block}}

Produce exactly two sections:
DESCRIPTION: an exhaustive visual inventory of the attached image or images: subjects, layout, colors, style, any legible text.
REASONING: the plausible scientific interpretations of the imagery and which research areas it evokes, weighing the evidence without concluding.
Do not select, name, or hint at any option letter.
)";
  store.templates_["dad_deduce@v1"] =
      R"(A vision assistant examined the image material for this question and left the notes below. You cannot see any image; rely on the notes.

{{dossier_block}}

{{stem_block}}

{{options_block}}

{{probs_instruction}}
)";
  return store;
}

TemplateStore TemplateStore::from_dir(const std::string& dir) {
  TemplateStore store = builtin();
  if (!fs::is_directory(dir)) {
    throw std::invalid_argument("template dir not found: " + dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    store.templates_[p.stem().string()] = buf.str();
  }
  return store;
}

bool TemplateStore::has(const std::string& id) const {
  return templates_.count(id) > 0;
}

const std::string& TemplateStore::raw(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw std::out_of_range("unknown prompt template: " + id);
  }
  return it->second;
}

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    auto close = text.find("}}", open + 2);
    if (close == std::string::npos) {
      throw std::invalid_argument("unterminated {{placeholder}} in template");
    }
    std::string name = text.substr(open + 2, close - open - 2);
    auto it = vars.find(name);
    if (it == vars.end()) {
      throw std::invalid_argument("template references unknown variable '" +
                                  name + "'");
    }
    out += it->second;
    pos = close + 2;
  }
  return out;
}

std::string TemplateStore::render(
    const std::string& id,
    const std::map<std::string, std::string>& vars) const {
  return render_template(raw(id), vars);
}

// ---------------------------------------------------------------------------
// Prompt rendering

MediaResolver resolver_for(const corpus::CorpusSnapshot& snapshot,
                           const curation::QuestionSet& set) {
  MediaResolver media;
  media.story_of = [&snapshot](const std::string& id) {
    return snapshot.at(id).story;
  };
  auto overrides = set.image_overrides;
  media.image_path_of = [&snapshot, overrides](const std::string& id) {
    auto it = overrides.find(id);
    if (it != overrides.end()) return it->second;
    return snapshot.at(id).image_path;
  };
  return media;
}

ChatRequest render_prompt(const curation::QuestionSet& set,
                          const curation::QuestionSpec& question,
                          const Strategy& strategy,
                          const MediaResolver& media,
                          const TemplateStore& templates) {
  strategy.validate();
  bool i2t = set.direction == curation::Direction::Image2Text;

  ChatRequest request;
  request.question_id = question.question_id;
  request.sample_count = strategy.sample_count();
  request.temperature =
      strategy.kind == StrategyKind::SelfConsistency ? 0.7 : 0.0;

  std::map<std::string, std::string> vars;
  vars["probs_instruction"] = kProbsInstruction;

  std::string options_block;
  if (i2t) {
    options_block = "Candidate cover stories:";
    for (std::size_t i = 0; i < question.options.size(); ++i) {
      std::string story = media.story_of(question.options[i]);
      request.option_texts.push_back(story);
      options_block += "\n";
      options_block += kLetters[i];
      options_block += ". " + flatten(story);
    }
    request.stem_image_path = media.image_path_of(question.stem_issue_id);
    vars["stem_block"] = "The journal cover in question is attached as an image.";
  } else {
    options_block =
        "The four candidate cover images are attached in order: first A, "
        "then B, then C, then D.";
    for (const auto& opt : question.options) {
      request.option_image_paths.push_back(media.image_path_of(opt));
    }
    request.stem_text = media.story_of(question.stem_issue_id);
    vars["stem_block"] = "Cover story:\n" + flatten(request.stem_text);
  }
  vars["options_block"] = options_block;

  if (strategy.kind == StrategyKind::OneShot) {
    const auto& ex = *strategy.exemplar;
    std::string block = "Example question.\n";
    if (i2t) {
      block += "(The example's cover image is omitted.)\n"
               "Candidate cover stories:";
      for (std::size_t i = 0; i < ex.options.size(); ++i) {
        block += "\n";
        block += kLetters[i];
        block += ". " + flatten(media.story_of(ex.options[i]));
      }
    } else {
      block += "Cover story:\n" + flatten(media.story_of(ex.stem_issue_id)) +
               "\n(The example's candidate images are omitted.)";
    }
    block += "\nCorrect answer: ";
    block += kLetters[ex.answer_index];
    vars["exemplar_block"] = block;
  }

  request.user_text = templates.render(strategy.template_id(), vars);

  if (i2t) {
    request.image_paths.push_back(request.stem_image_path);
  } else {
    request.image_paths = request.option_image_paths;
  }
  return request;
}

// ---------------------------------------------------------------------------
// Probability elicitation

Elicitation parse_single_response(const std::string& response) {
  static const std::regex kPair(
      R"(([ABCD])\s*:\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?))");
  static const std::regex kLetterCue(
      R"((?:answer\s+is|answer\s*:|final\s+answer\s*:?|choose|select|option)\s*\(?\**\s*([ABCD])\b)",
      std::regex::icase);
  static const std::regex kBareLetter(R"(^\s*\(?([ABCD])[.)]?\s*$)");

  Elicitation out;

  // Prefer the last PROBS line; fall back to pairs anywhere.
  std::string scan_region = response;
  auto probs_pos = response.rfind("PROBS");
  if (probs_pos != std::string::npos) {
    auto eol = response.find('\n', probs_pos);
    scan_region = response.substr(
        probs_pos, eol == std::string::npos ? std::string::npos
                                            : eol - probs_pos);
  }

  std::array<double, 4> values{};
  std::array<bool, 4> found{};
  for (auto it = std::sregex_iterator(scan_region.begin(), scan_region.end(),
                                      kPair);
       it != std::sregex_iterator(); ++it) {
    int idx = (*it)[1].str()[0] - 'A';
    values[static_cast<std::size_t>(idx)] = std::stod((*it)[2].str());
    found[static_cast<std::size_t>(idx)] = true;
  }
  int n_found = 0;
  for (bool f : found) n_found += f ? 1 : 0;

  if (n_found > 0) {
    for (std::size_t i = 0; i < 4; ++i) {
      double v = found[i] ? values[i] : kEps;
      out.probs[i] = std::min(1.0, std::max(kEps, v));
    }
    out.parse_status = n_found == 4 ? "ok" : "repaired";
  } else {
    // Letter-only fallback.
    int letter = -1;
    for (auto it = std::sregex_iterator(response.begin(), response.end(),
                                        kLetterCue);
         it != std::sregex_iterator(); ++it) {
      letter = (*it)[1].str()[0] - 'A';
    }
    std::smatch bare;
    if (letter < 0 && std::regex_match(response, bare, kBareLetter)) {
      letter = bare[1].str()[0] - 'A';
    }
    if (letter >= 0) {
      out.probs.fill(kEps);
      out.probs[static_cast<std::size_t>(letter)] = 1.0 - 3 * kEps;
      out.parse_status = "repaired";
    } else {
      out.probs.fill(0.25);
      out.parse_status = "fallback_uniform";
    }
  }

  double sum = out.probs[0] + out.probs[1] + out.probs[2] + out.probs[3];
  for (auto& p : out.probs) p /= sum;
  out.chosen = 0;
  for (int i = 1; i < 4; ++i) {
    if (out.probs[static_cast<std::size_t>(i)] >
        out.probs[static_cast<std::size_t>(out.chosen)]) {
      out.chosen = i;
    }
  }
  return out;
}

Elicitation elicit_probabilities(const std::vector<std::string>& responses) {
  if (responses.empty()) {
    throw std::invalid_argument("elicit_probabilities: no responses");
  }
  std::vector<Elicitation> parts;
  parts.reserve(responses.size());
  for (const auto& r : responses) parts.push_back(parse_single_response(r));

  Elicitation out;
  out.probs.fill(0.0);
  int worst = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < 4; ++i) out.probs[i] += p.probs[i];
    worst = std::max(worst, status_rank(p.parse_status));
  }
  for (auto& p : out.probs) p /= static_cast<double>(parts.size());
  out.parse_status =
      worst == 0 ? "ok" : (worst == 1 ? "repaired" : "fallback_uniform");

  double best = *std::max_element(out.probs.begin(), out.probs.end());
  std::vector<int> tied;
  for (int i = 0; i < 4; ++i) {
    if (out.probs[static_cast<std::size_t>(i)] == best) tied.push_back(i);
  }
  if (tied.size() == 1) {
    out.chosen = tied[0];
  } else {
    // Majority vote among the tied indices, then lowest index.
    std::array<int, 4> votes{};
    for (const auto& p : parts) votes[static_cast<std::size_t>(p.chosen)]++;
    out.chosen = tied[0];
    for (int idx : tied) {
      if (votes[static_cast<std::size_t>(idx)] >
          votes[static_cast<std::size_t>(out.chosen)]) {
        out.chosen = idx;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation runner

namespace {

// Loads existing records, tolerating a torn final line from a killed run.
std::vector<RunRecord> load_tolerant(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<RunRecord> records;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      records.push_back(run_record_from_json(lines[i]));
    } catch (const std::exception&) {
      if (i + 1 == lines.size()) break;  // torn tail
      throw;
    }
  }
  return records;
}

RunRecord make_fallback_record(const curation::QuestionSpec& q,
                               const std::string& model_id,
                               const std::string& strategy_name,
                               const std::string& note) {
  RunRecord r;
  r.question_id = q.question_id;
  r.model_id = model_id;
  r.strategy = strategy_name;
  r.probs = {0.25, 0.25, 0.25, 0.25};
  r.chosen = 0;
  r.answer_index = q.answer_index;
  r.correct = r.chosen == q.answer_index;
  r.parse_status = "fallback_uniform";
  r.note = note;
  return r;
}

}  // namespace

std::vector<RunRecord> run_question_loop(
    const curation::QuestionSet& set, const std::string& model_id,
    const std::string& strategy_name, const EvaluateOptions& options,
    const std::function<RunRecord(const curation::QuestionSpec&)>& run_one_q) {
  const std::size_t n = set.questions.size();

  std::vector<std::optional<RunRecord>> results(n);
  std::size_t prefix_len = 0;  // existing records matching canonical order
  bool existing_is_prefix = true;
  if (!options.results_path.empty() && fs::exists(options.results_path)) {
    auto existing = load_tolerant(options.results_path);
    for (std::size_t j = 0; j < existing.size(); ++j) {
      auto& r = existing[j];
      if (r.model_id != model_id || r.strategy != strategy_name) {
        throw std::runtime_error(
            "results file " + options.results_path +
            " holds records for model '" + r.model_id + "' strategy '" +
            r.strategy + "'; refusing to mix with '" + model_id + "'/'" +
            strategy_name + "'");
      }
      bool matched = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (set.questions[i].question_id == r.question_id) {
          if (i != j) existing_is_prefix = false;
          results[i] = std::move(r);
          matched = true;
          break;
        }
      }
      if (!matched) {
        throw std::runtime_error("results file " + options.results_path +
                                 " holds record for unknown question '" +
                                 existing[j].question_id +
                                 "'; it belongs to a different set");
      }
    }
    if (existing_is_prefix) prefix_len = existing.size();
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (!results[i].has_value()) pending.push_back(i);
  }

  auto run_one = [&](std::size_t i) -> RunRecord {
    return run_one_q(set.questions[i]);
  };

  // Single in-order writer: records land in canonical question order and are
  // flushed as they complete, so a killed run leaves a clean resumable
  // prefix and the final bytes are schedule-independent. When the existing
  // file already is a canonical prefix, writing continues after it.
  std::ofstream writer;
  std::size_t write_from = 0;
  if (!options.results_path.empty()) {
    if (existing_is_prefix && prefix_len > 0) {
      writer.open(options.results_path, std::ios::binary | std::ios::app);
      write_from = prefix_len;
    } else {
      writer.open(options.results_path, std::ios::binary | std::ios::trunc);
    }
    if (!writer) {
      throw std::runtime_error("cannot write " + options.results_path);
    }
  }
  auto flush_record = [&](std::size_t i) {
    if (writer.is_open() && i >= write_from) {
      writer << run_record_to_json(*results[i]) << "\n";
      writer.flush();
    }
  };

  int parallelism = std::max(1, options.parallelism);
  if (parallelism == 1 || pending.size() < 2) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!results[i].has_value()) results[i] = run_one(i);
      flush_record(i);
    }
  } else {
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
      for (;;) {
        std::size_t j = next.fetch_add(1);
        if (j >= pending.size()) return;
        try {
          RunRecord r = run_one(pending[j]);
          std::lock_guard lock(mu);
          results[pending[j]] = std::move(r);
          cv.notify_all();
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          cv.notify_all();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    std::size_t n_threads = std::min<std::size_t>(
        static_cast<std::size_t>(parallelism), pending.size());
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    bool failed = false;
    for (std::size_t i = 0; i < n && !failed; ++i) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] {
        return failure != nullptr || results[i].has_value();
      });
      if (failure) {
        failed = true;
        break;
      }
      lock.unlock();
      flush_record(i);
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<RunRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(*results[i]);
  return out;
}

std::vector<RunRecord> evaluate(const curation::QuestionSet& set,
                                gateway::ChatModel& model,
                                const Strategy& strategy,
                                const MediaResolver& media,
                                const TemplateStore& templates,
                                const EvaluateOptions& options) {
  strategy.validate();
  const std::string strategy_name = strategy.name();

  auto run_one = [&](const curation::QuestionSpec& q) -> RunRecord {
    try {
      ChatRequest request = render_prompt(set, q, strategy, media, templates);
      request.model_id = model.id();
      std::vector<std::string> responses = model.complete(request);
      Elicitation el = elicit_probabilities(responses);
      RunRecord r;
      r.question_id = q.question_id;
      r.model_id = model.id();
      r.strategy = strategy_name;
      r.probs = el.probs;
      r.chosen = el.chosen;
      r.answer_index = q.answer_index;
      r.correct = el.chosen == q.answer_index;
      r.raw_responses = std::move(responses);
      r.parse_status = el.parse_status;
      return r;
    } catch (const TransportError& e) {
      return make_fallback_record(q, model.id(), strategy_name, e.what());
    } catch (const RefusalError& e) {
      return make_fallback_record(q, model.id(), strategy_name, e.what());
    }
  };

  return run_question_loop(set, model.id(), strategy_name, options, run_one);
}

}  // namespace coverbench::evaluation
