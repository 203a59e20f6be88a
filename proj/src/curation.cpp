#include "coverbench/curation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "coverbench/hash.hpp"
#include "coverbench/rng.hpp"

using nlohmann::json;

namespace coverbench::curation {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return (v[m - 1] + v[m]) / 2.0;
}

}  // namespace

std::string to_string(Direction d) {
  return d == Direction::Image2Text ? "image2text" : "text2image";
}

std::string to_string(Domain d) { return d == Domain::Info ? "info" : "option"; }

Direction direction_from_string(const std::string& s) {
  if (s == "image2text") return Direction::Image2Text;
  if (s == "text2image") return Direction::Text2Image;
  throw std::invalid_argument("unknown direction: " + s);
}

Domain domain_from_string(const std::string& s) {
  if (s == "info") return Domain::Info;
  if (s == "option") return Domain::Option;
  throw std::invalid_argument("unknown domain: " + s);
}

TrackPlan plan_for(Direction direction, Domain domain) {
  TrackPlan plan{};
  if (direction == Direction::Image2Text) {
    plan.candidate_modality = Modality::Text;
    plan.anchor_modality =
        domain == Domain::Info ? Modality::Image : Modality::Text;
  } else {
    plan.candidate_modality = Modality::Image;
    plan.anchor_modality =
        domain == Domain::Info ? Modality::Text : Modality::Image;
  }
  plan.needs_image_embeddings = plan.anchor_modality == Modality::Image ||
                                plan.candidate_modality == Modality::Image;
  return plan;
}

// ---------------------------------------------------------------------------
// Ranking

int SimilarityRanking::rank_of(const std::string& candidate_id) const {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].first == candidate_id) return static_cast<int>(i) + 1;
  }
  throw std::out_of_range("candidate '" + candidate_id +
                          "' not in ranking for anchor '" + anchor_id + "'");
}

SimilarityRanking rank_candidates(
    const std::string& embedder_id, const std::string& anchor_id,
    const EmbeddingVector& anchor,
    const std::vector<std::pair<std::string, EmbeddingVector>>& candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("rank_candidates: empty candidate list");
  }
  SimilarityRanking r;
  r.embedder_id = embedder_id;
  r.anchor_id = anchor_id;
  r.ranked.reserve(candidates.size());
  std::set<std::string> seen;
  for (const auto& [id, vec] : candidates) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument("rank_candidates: duplicate candidate '" +
                                  id + "'");
    }
    r.ranked.emplace_back(id, cosine(anchor, vec));
  }
  std::sort(r.ranked.begin(), r.ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return r;
}

// ---------------------------------------------------------------------------
// Consensus selection

std::vector<DistractorPick> select_distractors(
    const std::vector<SimilarityRanking>& rankings, int k) {
  if (rankings.empty()) {
    throw std::invalid_argument("select_distractors: no rankings");
  }
  if (k < 1) throw std::invalid_argument("select_distractors: k < 1");

  std::vector<std::string> pool;
  for (const auto& [id, score] : rankings.front().ranked) pool.push_back(id);
  std::vector<std::string> pool_sorted = pool;
  std::sort(pool_sorted.begin(), pool_sorted.end());
  for (const auto& r : rankings) {
    std::vector<std::string> ids;
    for (const auto& [id, score] : r.ranked) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    if (ids != pool_sorted) {
      throw std::invalid_argument(
          "select_distractors: rankings disagree on the candidate pool");
    }
  }
  if (static_cast<int>(pool.size()) < k) {
    throw std::invalid_argument(
        "select_distractors: pool of " + std::to_string(pool.size()) +
        " smaller than k=" + std::to_string(k) + "; skip this stem");
  }

  std::vector<DistractorPick> picks;
  auto find_pick = [&](const std::string& id) -> DistractorPick* {
    for (auto& p : picks)
      if (p.candidate_id == id) return &p;
    return nullptr;
  };
  for (const auto& r : rankings) {
    const std::string& top = r.ranked.front().first;
    if (auto* existing = find_pick(top)) {
      existing->provenance.push_back(r.embedder_id);
    } else if (static_cast<int>(picks.size()) < k) {
      picks.push_back({top, {r.embedder_id}});
    } else {
      // More embedders than slots and no overlap left to absorb this pick.
      // Cannot happen for k = embedder count = 3; guarded for generality.
      continue;
    }
  }

  if (static_cast<int>(picks.size()) < k) {
    // Overlap: fill from unchosen candidates by best average rank.
    std::vector<std::pair<std::int64_t, std::string>> by_rank_sum;
    for (const auto& id : pool_sorted) {
      if (find_pick(id)) continue;
      std::int64_t sum = 0;
      for (const auto& r : rankings) sum += r.rank_of(id);
      by_rank_sum.emplace_back(sum, id);
    }
    // Sum ordering equals average ordering; sums compare exactly.
    std::sort(by_rank_sum.begin(), by_rank_sum.end());
    for (const auto& [sum, id] : by_rank_sum) {
      if (static_cast<int>(picks.size()) >= k) break;
      picks.push_back({id, {"consensus"}});
    }
  }
  return picks;
}

// ---------------------------------------------------------------------------
// Question construction

QuestionSpec build_question(Direction direction, Domain domain,
                            const corpus::Issue& stem,
                            const std::vector<corpus::Issue>& pool,
                            const std::vector<std::string>& embedder_ids,
                            const EmbeddingSource& source,
                            std::uint64_t curation_seed) {
  if (embedder_ids.empty()) {
    throw std::invalid_argument("build_question: no embedders");
  }
  TrackPlan plan = plan_for(direction, domain);

  std::vector<SimilarityRanking> rankings;
  rankings.reserve(embedder_ids.size());
  for (const auto& eid : embedder_ids) {
    EmbeddingVector anchor = source(eid, stem.issue_id, plan.anchor_modality);
    std::vector<std::pair<std::string, EmbeddingVector>> candidates;
    candidates.reserve(pool.size());
    for (const auto& issue : pool) {
      candidates.emplace_back(issue.issue_id,
                              source(eid, issue.issue_id,
                                     plan.candidate_modality));
    }
    rankings.push_back(
        rank_candidates(eid, stem.issue_id, anchor, candidates));
  }

  auto picks = select_distractors(rankings, 3);

  QuestionSpec q;
  q.question_id = to_string(direction) + "-" + to_string(domain) + "-" +
                  stem.issue_id;
  q.stem_issue_id = stem.issue_id;
  for (const auto& p : picks) {
    q.distractors.push_back(p.candidate_id);
    q.provenance[p.candidate_id] = p.provenance;
  }
  // Canonical pre-shuffle layout (truth first, distractors by id) keeps the
  // final order independent of embedder iteration order.
  q.options.push_back(stem.issue_id);
  std::vector<std::string> sorted_d = q.distractors;
  std::sort(sorted_d.begin(), sorted_d.end());
  for (auto& d : sorted_d) q.options.push_back(std::move(d));

  q.shuffle_seed =
      fnv1a64(stem.issue_id + "|" + std::to_string(curation_seed));
  SplitMix64 rng(q.shuffle_seed);
  rng.shuffle(q.options);
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    if (q.options[i] == stem.issue_id) q.answer_index = static_cast<int>(i);
  }
  return q;
}

TrackResult build_track(const corpus::CorpusSnapshot& snapshot,
                        Direction direction, Domain domain,
                        const std::vector<std::string>& embedder_ids,
                        const EmbeddingSource& source, std::uint64_t seed,
                        int parallelism) {
  if (snapshot.issues.empty()) {
    throw std::invalid_argument("build_track: empty snapshot");
  }
  if (parallelism < 1) parallelism = 1;

  TrackResult result;
  result.set.set_id = to_string(direction) + "-" + to_string(domain);
  result.set.direction = direction;
  result.set.domain = domain;
  result.set.embedder_ids = embedder_ids;
  result.set.curation_seed = seed;

  struct Job {
    const corpus::Issue* stem;
    std::vector<corpus::Issue> pool;
  };
  std::vector<Job> jobs;
  for (const auto& issue : snapshot.issues) {
    auto pool = corpus::journal_pool(snapshot, issue.journal_id,
                                     issue.issue_id);
    if (pool.size() < 3) {
      result.skips.push_back({issue.issue_id, issue.journal_id,
                              static_cast<int>(pool.size()),
                              "journal pool smaller than 3"});
      continue;
    }
    jobs.push_back({&issue, std::move(pool)});
  }
  if (jobs.empty()) {
    throw std::runtime_error("build_track: no eligible issues (all pools < 3)");
  }

  std::vector<QuestionSpec> questions(jobs.size());
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      questions[i] = build_question(direction, domain, *jobs[i].stem,
                                    jobs[i].pool, embedder_ids, source, seed);
    }
  };
  if (parallelism == 1 || jobs.size() < 2) {
    run_range(0, jobs.size());
  } else {
    std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(parallelism),
                              jobs.size());
    std::size_t chunk = (jobs.size() + workers - 1) / workers;
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t lo = w * chunk;
      std::size_t hi = std::min(jobs.size(), lo + chunk);
      if (lo >= hi) break;
      futures.push_back(
          std::async(std::launch::async, run_range, lo, hi));
    }
    for (auto& f : futures) f.get();
  }

  std::sort(questions.begin(), questions.end(),
            [](const QuestionSpec& a, const QuestionSpec& b) {
              return a.stem_issue_id < b.stem_issue_id;
            });
  result.set.questions = std::move(questions);
  return result;
}

const QuestionSpec& QuestionSet::at(const std::string& question_id) const {
  for (const auto& q : questions) {
    if (q.question_id == question_id) return q;
  }
  throw std::out_of_range("question '" + question_id + "' not in set " +
                          set_id);
}

// ---------------------------------------------------------------------------
// Self-validation

std::vector<SelfValidationRow> self_validate(
    const corpus::CorpusSnapshot& snapshot, const QuestionSet& set,
    const std::vector<std::string>& embedder_ids,
    const EmbeddingSource& source, std::vector<std::string>* warnings) {
  if (embedder_ids.empty()) {
    throw std::invalid_argument("self_validate: no embedders");
  }
  // Pairing always crosses modalities in the track's direction.
  Modality anchor_mod = set.direction == Direction::Image2Text
                            ? Modality::Image
                            : Modality::Text;
  Modality cand_mod = set.direction == Direction::Image2Text
                          ? Modality::Text
                          : Modality::Image;

  std::size_t ne = embedder_ids.size();
  std::vector<std::vector<double>> rel_ranks(ne);   // per embedder
  std::vector<double> avg_row_rel;                  // pooled-rank row
  std::vector<int> correct(ne, 0);
  int avg_row_correct = 0;

  auto ranked_for = [&](const std::string& eid, const std::string& anchor_id,
                        const std::vector<std::string>& candidate_ids) {
    EmbeddingVector anchor = source(eid, anchor_id, anchor_mod);
    std::vector<std::pair<std::string, EmbeddingVector>> candidates;
    candidates.reserve(candidate_ids.size());
    for (const auto& cid : candidate_ids) {
      candidates.emplace_back(cid, source(eid, cid, cand_mod));
    }
    return rank_candidates(eid, anchor_id, anchor, candidates);
  };

  // Pooled re-rank: candidates ordered by ascending rank sum, ties by id.
  auto pooled_rank_of = [&](const std::vector<SimilarityRanking>& rankings,
                            const std::vector<std::string>& candidate_ids,
                            const std::string& truth_id) {
    std::vector<std::pair<std::int64_t, std::string>> sums;
    for (const auto& cid : candidate_ids) {
      std::int64_t s = 0;
      for (const auto& r : rankings) s += r.rank_of(cid);
      sums.emplace_back(s, cid);
    }
    std::sort(sums.begin(), sums.end());
    for (std::size_t i = 0; i < sums.size(); ++i) {
      if (sums[i].second == truth_id) return static_cast<int>(i) + 1;
    }
    throw std::out_of_range("pooled ranking lost candidate " + truth_id);
  };

  // Rank statistics over all journals.
  for (const auto& jid : snapshot.journal_ids()) {
    std::vector<std::string> members;
    for (const auto& issue : snapshot.issues) {
      if (issue.journal_id == jid) members.push_back(issue.issue_id);
    }
    if (members.size() < 2) {
      if (warnings) {
        warnings->push_back("journal " + jid +
                            " has a single issue; skipped in self-validation");
      }
      continue;
    }
    double denom = static_cast<double>(members.size() - 1);
    for (const auto& anchor_id : members) {
      std::vector<SimilarityRanking> rankings;
      for (std::size_t e = 0; e < ne; ++e) {
        rankings.push_back(ranked_for(embedder_ids[e], anchor_id, members));
        int rank = rankings.back().rank_of(anchor_id);
        rel_ranks[e].push_back((rank - 1) / denom);
      }
      int pooled = pooled_rank_of(rankings, members, anchor_id);
      avg_row_rel.push_back((pooled - 1) / denom);
    }
  }

  // Argmax accuracy over the final questions.
  for (const auto& q : set.questions) {
    std::vector<SimilarityRanking> rankings;
    for (std::size_t e = 0; e < ne; ++e) {
      rankings.push_back(ranked_for(embedder_ids[e], q.stem_issue_id,
                                    q.options));
      if (rankings.back().ranked.front().first == q.stem_issue_id) {
        ++correct[e];
      }
    }
    if (pooled_rank_of(rankings, q.options, q.stem_issue_id) == 1) {
      ++avg_row_correct;
    }
  }

  double nq = static_cast<double>(set.questions.size());
  std::vector<SelfValidationRow> rows;
  for (std::size_t e = 0; e < ne; ++e) {
    SelfValidationRow row;
    row.embedder_id = embedder_ids[e];
    row.n = static_cast<int>(rel_ranks[e].size());
    if (row.n > 0) {
      double sum = 0;
      for (double v : rel_ranks[e]) sum += v;
      row.avg_relative_rank = sum / row.n;
      row.median_relative_rank = median_of(rel_ranks[e]);
    }
    row.accuracy = nq > 0 ? correct[e] / nq : 0.0;
    rows.push_back(row);
  }
  SelfValidationRow avg_row;
  avg_row.embedder_id = "average";
  avg_row.n = static_cast<int>(avg_row_rel.size());
  if (avg_row.n > 0) {
    double sum = 0;
    for (double v : avg_row_rel) sum += v;
    avg_row.avg_relative_rank = sum / avg_row.n;
    avg_row.median_relative_rank = median_of(avg_row_rel);
  }
  avg_row.accuracy = nq > 0 ? avg_row_correct / nq : 0.0;
  rows.push_back(avg_row);
  return rows;
}

// ---------------------------------------------------------------------------
// Serialization

std::string to_json(const QuestionSet& set) {
  json questions = json::array();
  for (const auto& q : set.questions) {
    json provenance = json::object();
    for (const auto& [id, sources] : q.provenance) provenance[id] = sources;
    questions.push_back({{"question_id", q.question_id},
                         {"stem_issue_id", q.stem_issue_id},
                         {"options", q.options},
                         {"answer_index", q.answer_index},
                         {"provenance", provenance},
                         {"distractors", q.distractors},
                         {"shuffle_seed", q.shuffle_seed}});
  }
  json j = {{"set_id", set.set_id},
            {"direction", to_string(set.direction)},
            {"domain", to_string(set.domain)},
            {"embedder_ids", set.embedder_ids},
            {"curation_seed", set.curation_seed},
            {"questions", questions}};
  if (!set.image_overrides.empty()) {
    json overrides = json::object();
    for (const auto& [id, path] : set.image_overrides) overrides[id] = path;
    j["image_overrides"] = overrides;
  }
  return j.dump(2) + "\n";
}

QuestionSet question_set_from_json(const std::string& text) {
  json j = json::parse(text);
  QuestionSet set;
  set.set_id = j.at("set_id").get<std::string>();
  set.direction = direction_from_string(j.at("direction").get<std::string>());
  set.domain = domain_from_string(j.at("domain").get<std::string>());
  set.embedder_ids = j.at("embedder_ids").get<std::vector<std::string>>();
  set.curation_seed = j.at("curation_seed").get<std::uint64_t>();
  for (const auto& qj : j.at("questions")) {
    QuestionSpec q;
    q.question_id = qj.at("question_id").get<std::string>();
    q.stem_issue_id = qj.at("stem_issue_id").get<std::string>();
    q.options = qj.at("options").get<std::vector<std::string>>();
    q.answer_index = qj.at("answer_index").get<int>();
    for (const auto& [id, sources] : qj.at("provenance").items()) {
      q.provenance[id] = sources.get<std::vector<std::string>>();
    }
    q.distractors = qj.at("distractors").get<std::vector<std::string>>();
    q.shuffle_seed = qj.at("shuffle_seed").get<std::uint64_t>();
    set.questions.push_back(std::move(q));
  }
  if (j.contains("image_overrides")) {
    for (const auto& [id, path] : j["image_overrides"].items()) {
      set.image_overrides[id] = path.get<std::string>();
    }
  }
  return set;
}

void save_question_set(const std::string& path, const QuestionSet& set) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(set);
}

QuestionSet load_question_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return question_set_from_json(buf.str());
}

void save_skip_report(const std::string& path,
                      const std::vector<SkipEntry>& skips) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& s : skips) {
    json j = {{"issue_id", s.issue_id},
              {"journal_id", s.journal_id},
              {"pool_size", s.pool_size},
              {"reason", s.reason}};
    out << j.dump() << "\n";
  }
}

void save_self_validation_csv(const std::string& path,
                              const std::vector<SelfValidationRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "embedder,avg_relative_rank,median_relative_rank,accuracy,n\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.embedder_id << ",";
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%d\n",
                  r.avg_relative_rank, r.median_relative_rank, r.accuracy,
                  r.n);
    out << buf;
  }
}

}  // namespace coverbench::curation
