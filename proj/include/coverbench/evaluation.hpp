// Poses QuestionSpecs to chat models under pluggable prompting strategies,
// parses probability distributions out of the responses, and persists
// RunRecords incrementally in canonical question order.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coverbench/curation.hpp"
#include "coverbench/gateway/provider.hpp"
#include "coverbench/run_record.hpp"

namespace coverbench::evaluation {

using gateway::ChatRequest;

enum class StrategyKind { Direct, Cot, OneShot, SelfConsistency };

std::string to_string(StrategyKind k);
StrategyKind strategy_kind_from_string(const std::string& s);

struct Strategy {
  StrategyKind kind = StrategyKind::Direct;
  int k = 5;  // self_consistency sample count
  std::optional<curation::QuestionSpec> exemplar;  // one_shot only
  std::string prompt_template_id;  // empty -> per-kind default

  std::string name() const { return to_string(kind); }
  std::string template_id() const;
  int sample_count() const {
    return kind == StrategyKind::SelfConsistency ? k : 1;
  }
  // k >= 2 for self_consistency; exemplar present iff one_shot.
  void validate() const;
};

// Maps issue ids to renderable media. image_path_of must honor a question
// set's image_overrides (see resolver_for).
struct MediaResolver {
  std::function<std::string(const std::string& issue_id)> story_of;
  std::function<std::string(const std::string& issue_id)> image_path_of;
};

MediaResolver resolver_for(const corpus::CorpusSnapshot& snapshot,
                           const curation::QuestionSet& set);

// Versioned prompt templates with {{placeholder}} substitution.
class TemplateStore {
 public:
  static TemplateStore builtin();
  // Loads every *.txt in dir (id = basename without extension) on top of the
  // builtin set, overriding ids that collide.
  static TemplateStore from_dir(const std::string& dir);

  bool has(const std::string& id) const;
  const std::string& raw(const std::string& id) const;
  std::string render(const std::string& id,
                     const std::map<std::string, std::string>& vars) const;

 private:
  std::map<std::string, std::string> templates_;
};

// Substitutes {{name}} occurrences; throws when the template references a
// variable that was not provided.
std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& vars);

ChatRequest render_prompt(const curation::QuestionSet& set,
                          const curation::QuestionSpec& question,
                          const Strategy& strategy,
                          const MediaResolver& media,
                          const TemplateStore& templates);

struct Elicitation {
  std::array<double, 4> probs{0.25, 0.25, 0.25, 0.25};
  std::string parse_status = "fallback_uniform";  // ok | repaired | ...
  int chosen = 0;
};

// Parses one response into a clipped, renormalized distribution.
Elicitation parse_single_response(const std::string& response);

// Multi-sample elicitation: mean of the per-sample distributions; chosen is
// the argmax with majority vote then lowest index breaking exact ties;
// status is the worst across samples.
Elicitation elicit_probabilities(const std::vector<std::string>& responses);

struct EvaluateOptions {
  int parallelism = 1;
  std::string results_path;  // empty -> no persistence, no resume
};

// One RunRecord per question, in set order. Already-persisted question ids
// are reused without model calls. Transport failures and refusals become
// fallback_uniform records with a note; the run continues.
std::vector<RunRecord> evaluate(const curation::QuestionSet& set,
                                gateway::ChatModel& model,
                                const Strategy& strategy,
                                const MediaResolver& media,
                                const TemplateStore& templates,
                                const EvaluateOptions& options = {});

// Canonical-order runner underneath evaluate, shared with the DAD pipeline:
// resume handling, bounded parallelism, and in-order incremental
// persistence around an arbitrary per-question worker. run_one must not
// throw for per-question failures it wants recorded; anything it does throw
// aborts the run.
std::vector<RunRecord> run_question_loop(
    const curation::QuestionSet& set, const std::string& model_id,
    const std::string& strategy_name, const EvaluateOptions& options,
    const std::function<RunRecord(const curation::QuestionSpec&)>& run_one);

}  // namespace coverbench::evaluation
