// Two-stage describe-then-deduce inference. Stage 1: a vision model turns
// the question's image material into a Dossier (description + reasoning
// notes) without naming an option; a leak check enforces that mechanically.
// Stage 2: a text-only reasoning model turns the dossier plus the question
// into a probability distribution. Dossiers are cached by (describer model,
// question content hash) so swapping the reasoner never re-runs stage 1.
#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coverbench/curation.hpp"
#include "coverbench/evaluation.hpp"
#include "coverbench/gateway/provider.hpp"
#include "coverbench/run_record.hpp"

namespace coverbench::dad {

struct Dossier {
  std::string question_id;
  std::string describer_id;
  std::string description;
  std::string pseudo_cot;
  std::string created_at;
  bool leak_redacted = false;
};

// Standalone "answer is X" pattern, X in {A,B,C,D}.
bool has_leak(const std::string& text);
// Removes every sentence containing a leak; sets *changed when it did.
std::string redact_leaks(const std::string& text, bool* changed = nullptr);

std::string question_content_hash(const curation::QuestionSet& set,
                                  const curation::QuestionSpec& question);

// Append-only JSONL store keyed by (describer_id, content hash). An empty
// path keeps the store in memory only.
class DossierStore {
 public:
  explicit DossierStore(std::string path = "");

  std::optional<Dossier> find(const std::string& describer_id,
                              const std::string& content_hash) const;
  void put(const std::string& content_hash, const Dossier& dossier);
  std::size_t size() const;

 private:
  std::string path_;
  std::map<std::string, Dossier> by_key_;
  mutable std::mutex mu_;
};

struct Stage1Result {
  Dossier dossier;
  std::vector<std::string> raw_responses;
};

Stage1Result stage1_describe(const curation::QuestionSet& set,
                             const curation::QuestionSpec& question,
                             gateway::ChatModel& describer,
                             const evaluation::MediaResolver& media,
                             const evaluation::TemplateStore& templates,
                             const std::function<std::string()>& now_fn);

struct Stage2Result {
  evaluation::Elicitation elicitation;
  std::vector<std::string> raw_responses;
};

// Text only: the rendered request carries no image attachments.
Stage2Result stage2_deduce(const curation::QuestionSet& set,
                           const curation::QuestionSpec& question,
                           const Dossier& dossier,
                           gateway::ChatModel& reasoner,
                           const evaluation::MediaResolver& media,
                           const evaluation::TemplateStore& templates);

struct DadOptions {
  int parallelism = 1;
  std::string results_path;
  std::string dossier_path;
  // Injectable clock so dossier bytes can be made reproducible in tests.
  std::function<std::string()> now_fn;  // empty -> UTC wall clock
};

struct DadOutcome {
  std::vector<RunRecord> records;
  int stage1_calls = 0;       // describer invocations this run
  int stage1_cache_hits = 0;  // questions served from the dossier store
};

DadOutcome dad_evaluate(const curation::QuestionSet& set,
                        gateway::ChatModel& describer,
                        gateway::ChatModel& reasoner,
                        const evaluation::MediaResolver& media,
                        const evaluation::TemplateStore& templates,
                        DossierStore& store, const DadOptions& options = {});

}  // namespace coverbench::dad
