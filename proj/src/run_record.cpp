#include "coverbench/run_record.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace coverbench {

std::string run_record_to_json(const RunRecord& r) {
  json j = {{"question_id", r.question_id},
            {"model_id", r.model_id},
            {"strategy", r.strategy},
            {"probs", r.probs},
            {"chosen", r.chosen},
            {"answer_index", r.answer_index},
            {"correct", r.correct},
            {"raw_responses", r.raw_responses},
            {"parse_status", r.parse_status}};
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

RunRecord run_record_from_json(const std::string& line) {
  json j = json::parse(line);
  RunRecord r;
  r.question_id = j.at("question_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  auto probs = j.at("probs").get<std::vector<double>>();
  if (probs.size() != 4) {
    throw std::invalid_argument("run record for '" + r.question_id +
                                "' has " + std::to_string(probs.size()) +
                                " probabilities, want 4");
  }
  for (std::size_t i = 0; i < 4; ++i) r.probs[i] = probs[i];
  r.chosen = j.at("chosen").get<int>();
  r.answer_index = j.at("answer_index").get<int>();
  r.correct = j.at("correct").get<bool>();
  r.raw_responses = j.at("raw_responses").get<std::vector<std::string>>();
  r.parse_status = j.at("parse_status").get<std::string>();
  r.note = j.value("note", "");
  return r;
}

void save_run_records(const std::string& path,
                      const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records) out << run_record_to_json(r) << "\n";
}

std::vector<RunRecord> load_run_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(run_record_from_json(line));
  }
  return records;
}

}  // namespace coverbench
