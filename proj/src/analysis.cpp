#include "coverbench/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace coverbench::analysis {

AttributionReport attribute_errors(const std::vector<RunRecord>& records,
                                   const curation::QuestionSet& set) {
  AttributionReport report;
  report.track = set.set_id;
  std::map<std::string, double> weights;

  for (const auto& r : records) {
    const auto& q = set.at(r.question_id);  // throws on id mismatch
    if (r.correct) continue;
    report.errors_total += 1;
    const std::string& picked = q.options[static_cast<std::size_t>(r.chosen)];
    auto it = q.provenance.find(picked);
    if (it == q.provenance.end()) continue;  // picked the truth; not counted
    report.distractor_errors += 1;
    double split = 1.0 / static_cast<double>(it->second.size());
    for (const auto& bucket : it->second) weights[bucket] += split;
  }

  for (const auto& [bucket, weight] : weights) {
    AttributionRow row;
    row.bucket = bucket;
    row.weight = weight;
    row.share = report.distractor_errors > 0
                    ? weight / report.distractor_errors
                    : 0.0;
    report.rows.push_back(row);
  }
  return report;
}

void save_attribution_csv(const std::string& path,
                          const std::vector<AttributionReport>& reports) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "embedder,track,weight,share,distractor_errors\n";
  char buf[96];
  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%d\n", row.weight, row.share,
                    rep.distractor_errors);
      out << row.bucket << "," << rep.track << "," << buf;
    }
  }
}

CompareReport compare_runs(const std::vector<RunRecord>& records_a,
                           const metrics::MetricsReport& report_a,
                           const std::vector<RunRecord>& records_b,
                           const metrics::MetricsReport& report_b) {
  std::map<std::string, const RunRecord*> b_by_id;
  for (const auto& r : records_b) b_by_id[r.question_id] = &r;
  if (records_a.size() != records_b.size() ||
      records_a.size() != b_by_id.size()) {
    throw std::invalid_argument("compare_runs: record sets differ in size");
  }

  CompareReport out;
  out.d_accuracy = report_b.accuracy - report_a.accuracy;
  out.d_ece = report_b.ece - report_a.ece;
  out.d_nll = report_b.nll - report_a.nll;
  out.d_rms = report_b.rms - report_a.rms;
  for (const auto& a : records_a) {
    auto it = b_by_id.find(a.question_id);
    if (it == b_by_id.end()) {
      throw std::invalid_argument("compare_runs: question '" + a.question_id +
                                  "' missing from the second run");
    }
    if (a.correct != it->second->correct) {
      out.flips.push_back({a.question_id, a.correct, it->second->correct});
    }
  }
  out.verdict = out.d_accuracy > 0.0
                    ? "b_better"
                    : (out.d_accuracy < 0.0 ? "b_worse" : "tie");
  return out;
}

std::string compare_to_json(const CompareReport& r) {
  json flips = json::array();
  for (const auto& f : r.flips) {
    flips.push_back({{"question_id", f.question_id},
                     {"a_correct", f.a_correct},
                     {"b_correct", f.b_correct}});
  }
  json j = {{"d_accuracy", r.d_accuracy},
            {"d_ece", r.d_ece},
            {"d_nll", r.d_nll},
            {"d_rms", r.d_rms},
            {"flips", flips},
            {"verdict", r.verdict}};
  return j.dump(2) + "\n";
}

void save_compare_json(const std::string& path, const CompareReport& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << compare_to_json(r);
}

RefreshResult refresh(const curation::QuestionSet& old_set,
                      const corpus::CorpusSnapshot& snapshot,
                      const std::vector<std::string>& new_embedder_ids,
                      const curation::EmbeddingSource& source,
                      std::uint64_t seed) {
  RefreshResult result;
  result.set.set_id = old_set.set_id;
  result.set.direction = old_set.direction;
  result.set.domain = old_set.domain;
  result.set.embedder_ids = new_embedder_ids;
  result.set.curation_seed = seed;
  result.set.image_overrides = old_set.image_overrides;
  result.diff.questions_total = static_cast<int>(old_set.questions.size());

  for (const auto& old_q : old_set.questions) {
    const auto& stem = snapshot.at(old_q.stem_issue_id);  // missing -> throws
    auto pool =
        corpus::journal_pool(snapshot, stem.journal_id, stem.issue_id);
    curation::QuestionSpec new_q = curation::build_question(
        old_set.direction, old_set.domain, stem, pool, new_embedder_ids,
        source, seed);

    std::set<std::string> old_d(old_q.distractors.begin(),
                                old_q.distractors.end());
    std::set<std::string> new_d(new_q.distractors.begin(),
                                new_q.distractors.end());
    if (old_d != new_d) {
      result.diff.questions_changed += 1;
      for (const auto& id : new_d) {
        if (!old_d.count(id)) result.diff.introduced[new_q.question_id].push_back(id);
      }
    }
    for (std::size_t s = 0; s < 3; ++s) {
      if (s < old_q.distractors.size() && s < new_q.distractors.size() &&
          old_q.distractors[s] != new_q.distractors[s]) {
        result.diff.per_slot_changes[s] += 1;
      }
    }
    result.set.questions.push_back(std::move(new_q));
  }
  if (result.diff.questions_total > 0) {
    result.diff.changed_fraction =
        static_cast<double>(result.diff.questions_changed) /
        result.diff.questions_total;
  }
  return result;
}

std::string diff_to_json(const CurationDiff& d) {
  json introduced = json::object();
  for (const auto& [qid, ids] : d.introduced) introduced[qid] = ids;
  json j = {{"questions_total", d.questions_total},
            {"questions_changed", d.questions_changed},
            {"changed_fraction", d.changed_fraction},
            {"per_slot_changes", d.per_slot_changes},
            {"introduced", introduced}};
  return j.dump(2) + "\n";
}

void save_diff_json(const std::string& path, const CurationDiff& d) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << diff_to_json(d);
}

}  // namespace coverbench::analysis
