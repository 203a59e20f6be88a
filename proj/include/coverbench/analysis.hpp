// Post-hoc analysis: error attribution to distractor-sourcing embedders,
// run-to-run comparison, and live distractor refresh with a curation diff.
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "coverbench/corpus.hpp"
#include "coverbench/curation.hpp"
#include "coverbench/metrics.hpp"
#include "coverbench/run_record.hpp"

namespace coverbench::analysis {

struct AttributionRow {
  std::string bucket;  // embedder id or "consensus"
  double weight = 0.0;
  double share = 0.0;  // weight / distractor_errors
};

struct AttributionReport {
  std::string track;  // question set id
  int errors_total = 0;
  int distractor_errors = 0;  // wrong records whose pick is a distractor
  std::vector<AttributionRow> rows;  // sorted by bucket
};

// Each wrong record that picked a distractor contributes 1/|provenance| to
// every embedder in that distractor's provenance; weights over all buckets
// sum to distractor_errors.
AttributionReport attribute_errors(const std::vector<RunRecord>& records,
                                   const curation::QuestionSet& set);

void save_attribution_csv(const std::string& path,
                          const std::vector<AttributionReport>& reports);

struct Flip {
  std::string question_id;
  bool a_correct = false;
  bool b_correct = false;
};

struct CompareReport {
  double d_accuracy = 0.0;  // b - a throughout
  double d_ece = 0.0;
  double d_nll = 0.0;
  double d_rms = 0.0;
  std::vector<Flip> flips;
  std::string verdict;  // "b_better" | "b_worse" | "tie" (by accuracy)
};

CompareReport compare_runs(const std::vector<RunRecord>& records_a,
                           const metrics::MetricsReport& report_a,
                           const std::vector<RunRecord>& records_b,
                           const metrics::MetricsReport& report_b);

std::string compare_to_json(const CompareReport& r);
void save_compare_json(const std::string& path, const CompareReport& r);

struct CurationDiff {
  int questions_total = 0;
  int questions_changed = 0;  // distractor set differs
  double changed_fraction = 0.0;
  std::array<int, 3> per_slot_changes{};  // positional, selection order
  // question id -> distractor ids newly introduced by the refresh
  std::map<std::string, std::vector<std::string>> introduced;
};

struct RefreshResult {
  curation::QuestionSet set;
  CurationDiff diff;
};

// Rebuilds every question's distractors under a new embedder set while
// keeping stems, direction, domain, and the true option content fixed.
RefreshResult refresh(const curation::QuestionSet& old_set,
                      const corpus::CorpusSnapshot& snapshot,
                      const std::vector<std::string>& new_embedder_ids,
                      const curation::EmbeddingSource& source,
                      std::uint64_t seed);

std::string diff_to_json(const CurationDiff& d);
void save_diff_json(const std::string& path, const CurationDiff& d);

}  // namespace coverbench::analysis
