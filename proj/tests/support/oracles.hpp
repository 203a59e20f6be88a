// Independent brute-force reference implementations the test suites check
// the library against. Deliberately naive: transparent loops over the
// written-down rules, no shared code with src/.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "coverbench/curation.hpp"
#include "coverbench/rng.hpp"
#include "coverbench/run_record.hpp"

namespace oracles {

// Consensus rule, spelled out: take each ranking's top candidate once, in
// ranking order; top up to k with the unchosen candidates of best average
// rank, ties by ascending id.
inline std::vector<std::string> consensus_picks(
    const std::vector<coverbench::curation::SimilarityRanking>& rankings,
    int k) {
  std::vector<std::string> picks;
  for (const auto& r : rankings) {
    const std::string& top = r.ranked.front().first;
    if (std::find(picks.begin(), picks.end(), top) == picks.end()) {
      picks.push_back(top);
    }
  }
  std::vector<std::pair<double, std::string>> rest;
  for (const auto& [id, score] : rankings.front().ranked) {
    if (std::find(picks.begin(), picks.end(), id) != picks.end()) continue;
    double sum = 0.0;
    for (const auto& r : rankings) sum += r.rank_of(id);
    rest.emplace_back(sum / static_cast<double>(rankings.size()), id);
  }
  std::sort(rest.begin(), rest.end());
  for (const auto& [avg, id] : rest) {
    if (static_cast<int>(picks.size()) >= k) break;
    picks.push_back(id);
  }
  return picks;
}

// Interval-membership binning over (0,1]: bin b is (b/B, (b+1)/B].
inline int bin_of(double c, int bins) {
  if (c <= 0.0) return 0;
  for (int b = 0; b < bins; ++b) {
    double lo = static_cast<double>(b) / bins;
    double hi = static_cast<double>(b + 1) / bins;
    if (c > lo && c <= hi) return b;
  }
  return bins - 1;
}

inline double accuracy(const std::vector<coverbench::RunRecord>& rs) {
  int c = 0;
  for (const auto& r : rs) c += r.correct ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(rs.size());
}

inline double ece(const std::vector<coverbench::RunRecord>& rs, int bins) {
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    int count = 0, correct = 0;
    double conf = 0.0;
    for (const auto& r : rs) {
      if (bin_of(r.confidence(), bins) != b) continue;
      ++count;
      conf += r.confidence();
      correct += r.correct ? 1 : 0;
    }
    if (count == 0) continue;
    double gap = std::abs(static_cast<double>(correct) / count - conf / count);
    total += (static_cast<double>(count) / rs.size()) * gap;
  }
  return total;
}

inline double rms_ce(const std::vector<coverbench::RunRecord>& rs, int bins) {
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    int count = 0, correct = 0;
    double conf = 0.0;
    for (const auto& r : rs) {
      if (bin_of(r.confidence(), bins) != b) continue;
      ++count;
      conf += r.confidence();
      correct += r.correct ? 1 : 0;
    }
    if (count == 0) continue;
    double gap = static_cast<double>(correct) / count - conf / count;
    total += (static_cast<double>(count) / rs.size()) * gap * gap;
  }
  return std::sqrt(total);
}

inline double nll(const std::vector<coverbench::RunRecord>& rs) {
  double sum = 0.0;
  for (const auto& r : rs) {
    double p = r.probs[static_cast<std::size_t>(r.answer_index)];
    sum += -std::log(p < 1e-6 ? 1e-6 : p);
  }
  return sum / static_cast<double>(rs.size());
}

// Random RunRecord fixtures. Confidences are re-drawn when they land within
// 1e-9 of a bin edge so the ceil-based and interval-based binnings cannot
// disagree about mathematically ambiguous inputs.
inline std::vector<coverbench::RunRecord> random_records(
    std::uint64_t seed, int n, int bins_guarded = 10) {
  coverbench::SplitMix64 rng(seed);
  std::vector<coverbench::RunRecord> out;
  for (int i = 0; i < n; ++i) {
    coverbench::RunRecord r;
    r.question_id = "q" + std::to_string(i);
    r.model_id = "m";
    r.strategy = "direct";
    while (true) {
      double sum = 0.0;
      for (auto& p : r.probs) {
        p = 0.05 + rng.next_double();
        sum += p;
      }
      for (auto& p : r.probs) p /= sum;
      int arg = 0;
      for (int j = 1; j < 4; ++j) {
        if (r.probs[static_cast<std::size_t>(j)] >
            r.probs[static_cast<std::size_t>(arg)]) {
          arg = j;
        }
      }
      r.chosen = arg;
      double scaled = r.confidence() * bins_guarded;
      if (std::abs(scaled - std::round(scaled)) > 1e-9) break;
    }
    r.answer_index = static_cast<int>(rng.next_below(4));
    r.correct = r.chosen == r.answer_index;
    out.push_back(r);
  }
  return out;
}

}  // namespace oracles
