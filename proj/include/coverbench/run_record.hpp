// One model's answer to one question: a probability distribution over the
// four options plus the derived choice. Shared by evaluation, metrics, and
// analysis. Persisted as line-delimited JSON.
#pragma once

#include <array>
#include <string>
#include <vector>

namespace coverbench {

struct RunRecord {
  std::string question_id;
  std::string model_id;
  std::string strategy;  // "direct", "cot", "one_shot", "self_consistency",
                         // or "dad:<reasoner_id>"
  std::array<double, 4> probs{0.25, 0.25, 0.25, 0.25};
  int chosen = 0;        // argmax(probs), ties to lowest index
  int answer_index = 0;  // gold option position for this question
  bool correct = false;
  std::vector<std::string> raw_responses;
  std::string parse_status = "ok";  // ok | repaired | fallback_uniform
  std::string note;                 // error context; empty when clean

  double confidence() const { return probs[static_cast<std::size_t>(chosen)]; }
};

std::string run_record_to_json(const RunRecord& r);
RunRecord run_record_from_json(const std::string& line);

void save_run_records(const std::string& path,
                      const std::vector<RunRecord>& records);
std::vector<RunRecord> load_run_records(const std::string& path);

}  // namespace coverbench
