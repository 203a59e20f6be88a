#include "coverbench/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace coverbench::metrics {

namespace {

constexpr double kProbFloor = 1e-6;

void require_nonempty(const std::vector<RunRecord>& records,
                      const char* op) {
  if (records.empty()) {
    throw std::invalid_argument(std::string(op) + ": empty record set");
  }
}

struct BinAccum {
  int count = 0;
  double conf_sum = 0.0;
  int correct = 0;
};

std::vector<BinAccum> accumulate_bins(const std::vector<RunRecord>& records,
                                      int bin_count) {
  if (bin_count < 1) throw std::invalid_argument("bin_count < 1");
  std::vector<BinAccum> bins(static_cast<std::size_t>(bin_count));
  for (const auto& r : records) {
    auto& b = bins[static_cast<std::size_t>(bin_index(r.confidence(),
                                                      bin_count))];
    b.count += 1;
    b.conf_sum += r.confidence();
    b.correct += r.correct ? 1 : 0;
  }
  return bins;
}

}  // namespace

int bin_index(double confidence, int bin_count) {
  if (confidence <= 0.0) return 0;
  int idx = static_cast<int>(std::ceil(confidence * bin_count)) - 1;
  if (idx < 0) idx = 0;
  if (idx >= bin_count) idx = bin_count - 1;
  return idx;
}

double accuracy(const std::vector<RunRecord>& records) {
  require_nonempty(records, "accuracy");
  int correct = 0;
  for (const auto& r : records) correct += r.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

double ece(const std::vector<RunRecord>& records, int bin_count) {
  require_nonempty(records, "ece");
  auto bins = accumulate_bins(records, bin_count);
  double n = static_cast<double>(records.size());
  double total = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    double acc = static_cast<double>(b.correct) / b.count;
    double conf = b.conf_sum / b.count;
    total += (b.count / n) * std::abs(acc - conf);
  }
  return total;
}

double nll(const std::vector<RunRecord>& records) {
  require_nonempty(records, "nll");
  double sum = 0.0;
  for (const auto& r : records) {
    double p = r.probs[static_cast<std::size_t>(r.answer_index)];
    if (p < kProbFloor) p = kProbFloor;
    sum += -std::log(p);
  }
  return sum / static_cast<double>(records.size());
}

double rms_ce(const std::vector<RunRecord>& records, int bin_count) {
  require_nonempty(records, "rms_ce");
  auto bins = accumulate_bins(records, bin_count);
  double n = static_cast<double>(records.size());
  double total = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    double acc = static_cast<double>(b.correct) / b.count;
    double conf = b.conf_sum / b.count;
    total += (b.count / n) * (acc - conf) * (acc - conf);
  }
  return std::sqrt(total);
}

MetricsReport report(const std::vector<RunRecord>& records, int bin_count) {
  require_nonempty(records, "report");
  MetricsReport rep;
  rep.n = static_cast<int>(records.size());
  rep.accuracy = accuracy(records);
  rep.ece = ece(records, bin_count);
  rep.nll = nll(records);
  rep.rms = rms_ce(records, bin_count);
  rep.bin_count = bin_count;
  auto bins = accumulate_bins(records, bin_count);
  for (int b = 0; b < bin_count; ++b) {
    const auto& a = bins[static_cast<std::size_t>(b)];
    BinStat s;
    s.lo = static_cast<double>(b) / bin_count;
    s.hi = static_cast<double>(b + 1) / bin_count;
    s.count = a.count;
    if (a.count > 0) {
      s.mean_confidence = a.conf_sum / a.count;
      s.empirical_accuracy = static_cast<double>(a.correct) / a.count;
    }
    rep.bins.push_back(s);
  }
  return rep;
}

std::string report_to_json(const MetricsReport& r) {
  json bins = json::array();
  for (const auto& b : r.bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"count", b.count},
                    {"mean_confidence", b.mean_confidence},
                    {"empirical_accuracy", b.empirical_accuracy}});
  }
  json j = {{"n", r.n},           {"accuracy", r.accuracy},
            {"ece", r.ece},       {"nll", r.nll},
            {"rms", r.rms},       {"bin_count", r.bin_count},
            {"bins", bins}};
  return j.dump(2) + "\n";
}

void save_report_json(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << report_to_json(r);
}

void save_reliability_csv(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "bin_midpoint,mean_confidence,empirical_accuracy,count\n";
  char buf[128];
  for (const auto& b : r.bins) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%d\n",
                  (b.lo + b.hi) / 2.0, b.mean_confidence,
                  b.empirical_accuracy, b.count);
    out << buf;
  }
}

void save_report_csv(const std::string& path,
                     const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "model,track,strategy,n,accuracy,ece,nll,rms\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", r.n,
                  r.accuracy, r.ece, r.nll, r.rms);
    out << r.model_id << "," << r.track << "," << r.strategy << "," << buf;
  }
}

}  // namespace coverbench::metrics
