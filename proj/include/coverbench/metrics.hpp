// Accuracy and calibration metrics over RunRecords.
//
// Binning convention: bin_count equal-width bins over (0,1], right-closed,
// so confidence c lands in bin ceil(c*B)-1 (clamped). Confidence of a record
// is the probability of its chosen option. Empty bins contribute nothing.
#pragma once

#include <string>
#include <vector>

#include "coverbench/run_record.hpp"

namespace coverbench::metrics {

struct BinStat {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  double mean_confidence = 0.0;
  double empirical_accuracy = 0.0;
};

struct MetricsReport {
  int n = 0;
  double accuracy = 0.0;
  double ece = 0.0;
  double nll = 0.0;
  double rms = 0.0;
  int bin_count = 10;
  std::vector<BinStat> bins;
};

int bin_index(double confidence, int bin_count);

double accuracy(const std::vector<RunRecord>& records);
double ece(const std::vector<RunRecord>& records, int bin_count = 10);
double nll(const std::vector<RunRecord>& records);
double rms_ce(const std::vector<RunRecord>& records, int bin_count = 10);
MetricsReport report(const std::vector<RunRecord>& records,
                     int bin_count = 10);

std::string report_to_json(const MetricsReport& r);
void save_report_json(const std::string& path, const MetricsReport& r);
// Reliability-diagram data: bin midpoint, mean confidence, accuracy, count.
void save_reliability_csv(const std::string& path, const MetricsReport& r);

// Aggregated report table, one row per (model, track, strategy).
struct ReportRow {
  std::string model_id;
  std::string track;  // question set id
  std::string strategy;
  int n = 0;
  double accuracy = 0.0;
  double ece = 0.0;
  double nll = 0.0;
  double rms = 0.0;
};
void save_report_csv(const std::string& path,
                     const std::vector<ReportRow>& rows);

}  // namespace coverbench::metrics
