#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "coverbench/corpus.hpp"
#include "coverbench/curation.hpp"
#include "coverbench/embedding.hpp"
#include "coverbench/hash.hpp"
#include "coverbench/rng.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

#include <json.hpp>

using namespace coverbench;
using namespace coverbench::curation;
using testsupport::TempDir;
using nlohmann::json;

namespace {

EmbeddingVector vec2(double x, double y) {
  EmbeddingVector v;
  v.model_id = "m";
  v.values = Eigen::Vector2d(x, y);
  v.normalized = false;
  return v;
}

// Respects the ranked invariant: scores non-increasing, ties by ascending id.
SimilarityRanking make_ranking(
    const std::string& eid, const std::string& anchor,
    std::vector<std::pair<std::string, double>> scored) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  SimilarityRanking r;
  r.embedder_id = eid;
  r.anchor_id = anchor;
  r.ranked = std::move(scored);
  return r;
}

corpus::Issue make_issue(const std::string& id, const std::string& journal,
                         const std::string& date = "2024-03-01") {
  corpus::Issue i;
  i.issue_id = id;
  i.journal_id = journal;
  i.publisher = "pub";
  i.date = Date::parse(date);
  i.image_path = "/virtual/" + id + ".ppm";
  i.image_sha256 = sha256_hex(id);
  i.story = "story about " + id;
  return i;
}

corpus::CorpusSnapshot two_journal_snapshot() {
  corpus::CorpusSnapshot snap;
  snap.snapshot_id = "snap-test";
  for (int i = 1; i <= 5; ++i)
    snap.issues.push_back(make_issue("J1-000" + std::to_string(i), "J1"));
  for (int i = 1; i <= 4; ++i)
    snap.issues.push_back(make_issue("J2-000" + std::to_string(i), "J2"));
  return snap;
}

// Arbitrary but deterministic geometry; text and image spaces unrelated.
EmbeddingSource hash_source(int dim = 24) {
  return [dim](const std::string& eid, const std::string& iid, Modality m) {
    EmbeddingVector v;
    v.model_id = eid;
    v.values = seeded_direction(
        fnv1a64(eid + "|" + iid + (m == Modality::Text ? "|t" : "|i")), dim);
    v.normalized = true;
    return v;
  };
}

// Pure pairing geometry: story and cover of an issue share one direction
// (negated on the image side when adversarial), independent of embedder.
EmbeddingSource paired_source(bool negate_image, int dim = 24) {
  return [negate_image, dim](const std::string&, const std::string& iid,
                             Modality m) {
    EmbeddingVector v;
    v.model_id = "paired";
    Eigen::VectorXd d = seeded_direction(fnv1a64("pair|" + iid), dim);
    if (m == Modality::Image && negate_image) d = -d;
    v.values = d;
    v.normalized = true;
    return v;
  };
}

}  // namespace

// ---------------------------------------------------------------------------
// track plans and enum strings

TEST_CASE("direction and domain strings round trip") {
  CHECK(to_string(Direction::Image2Text) == "image2text");
  CHECK(to_string(Direction::Text2Image) == "text2image");
  CHECK(to_string(Domain::Info) == "info");
  CHECK(to_string(Domain::Option) == "option");
  CHECK(direction_from_string("image2text") == Direction::Image2Text);
  CHECK(direction_from_string("text2image") == Direction::Text2Image);
  CHECK(domain_from_string("info") == Domain::Info);
  CHECK(domain_from_string("option") == Domain::Option);
  CHECK_THROWS_AS(direction_from_string("sideways"), std::invalid_argument);
  CHECK_THROWS_AS(domain_from_string("vibes"), std::invalid_argument);
}

TEST_CASE("each track fixes anchor and candidate modalities") {
  auto p = plan_for(Direction::Image2Text, Domain::Info);
  CHECK(p.anchor_modality == Modality::Image);
  CHECK(p.candidate_modality == Modality::Text);
  CHECK(p.needs_image_embeddings);

  p = plan_for(Direction::Image2Text, Domain::Option);
  CHECK(p.anchor_modality == Modality::Text);
  CHECK(p.candidate_modality == Modality::Text);
  CHECK_FALSE(p.needs_image_embeddings);

  p = plan_for(Direction::Text2Image, Domain::Info);
  CHECK(p.anchor_modality == Modality::Text);
  CHECK(p.candidate_modality == Modality::Image);
  CHECK(p.needs_image_embeddings);

  p = plan_for(Direction::Text2Image, Domain::Option);
  CHECK(p.anchor_modality == Modality::Image);
  CHECK(p.candidate_modality == Modality::Image);
  CHECK(p.needs_image_embeddings);
}

// ---------------------------------------------------------------------------
// rank_candidates

TEST_CASE("ranking orders by similarity, ties by ascending id") {
  auto anchor = vec2(1.0, 0.0);
  std::vector<std::pair<std::string, EmbeddingVector>> candidates = {
      {"d", vec2(0.0, 1.0)},
      {"c", vec2(0.8, 0.6)},
      {"a", vec2(0.8, 0.6)},
      {"b", vec2(1.0, 0.0)},
  };
  auto r = rank_candidates("e1", "anchor", anchor, candidates);
  REQUIRE(r.ranked.size() == 4);
  CHECK(r.ranked[0].first == "b");
  CHECK(r.ranked[1].first == "a");  // tie with c, id breaks it
  CHECK(r.ranked[2].first == "c");
  CHECK(r.ranked[3].first == "d");
  CHECK(r.ranked[0].second == doctest::Approx(1.0));
  CHECK(r.ranked[1].second == doctest::Approx(0.8));
  CHECK(r.rank_of("b") == 1);
  CHECK(r.rank_of("c") == 3);
  CHECK_THROWS_AS(r.rank_of("zzz"), std::out_of_range);
}

TEST_CASE("ranking rejects empty and duplicate candidate lists") {
  auto anchor = vec2(1.0, 0.0);
  CHECK_THROWS_AS(rank_candidates("e", "a", anchor, {}),
                  std::invalid_argument);
  std::vector<std::pair<std::string, EmbeddingVector>> dup = {
      {"x", vec2(1, 0)}, {"x", vec2(0, 1)}};
  CHECK_THROWS_AS(rank_candidates("e", "a", anchor, dup),
                  std::invalid_argument);
}

TEST_CASE("ranking is invariant to vector scale") {
  auto anchor = vec2(0.3, 0.7);
  std::vector<std::pair<std::string, EmbeddingVector>> candidates = {
      {"a", vec2(0.5, 0.1)}, {"b", vec2(0.2, 0.9)}, {"c", vec2(-0.4, 0.2)}};
  auto base = rank_candidates("e", "s", anchor, candidates);

  for (auto& [id, v] : candidates) v.values *= 7.3;
  auto scaled_anchor = anchor;
  scaled_anchor.values *= 0.002;
  auto scaled = rank_candidates("e", "s", scaled_anchor, candidates);
  REQUIRE(scaled.ranked.size() == base.ranked.size());
  for (std::size_t i = 0; i < base.ranked.size(); ++i) {
    CHECK(scaled.ranked[i].first == base.ranked[i].first);
    CHECK(scaled.ranked[i].second ==
          doctest::Approx(base.ranked[i].second).epsilon(1e-12));
  }
}

// ---------------------------------------------------------------------------
// select_distractors

TEST_CASE("distinct top picks carry their embedder provenance") {
  std::vector<SimilarityRanking> rankings = {
      make_ranking("e1", "s", {{"a", .9}, {"b", .5}, {"c", .4}, {"d", .1}}),
      make_ranking("e2", "s", {{"b", .9}, {"a", .5}, {"c", .4}, {"d", .1}}),
      make_ranking("e3", "s", {{"c", .9}, {"a", .5}, {"b", .4}, {"d", .1}}),
  };
  auto picks = select_distractors(rankings);
  REQUIRE(picks.size() == 3);
  CHECK(picks[0].candidate_id == "a");
  CHECK(picks[0].provenance == std::vector<std::string>{"e1"});
  CHECK(picks[1].candidate_id == "b");
  CHECK(picks[1].provenance == std::vector<std::string>{"e2"});
  CHECK(picks[2].candidate_id == "c");
  CHECK(picks[2].provenance == std::vector<std::string>{"e3"});
}

TEST_CASE("unanimous top pick merges provenance and fills by average rank") {
  std::vector<SimilarityRanking> rankings = {
      make_ranking("e1", "s",
                   {{"t", .9}, {"u", .8}, {"v", .7}, {"w", .6}, {"x", .5}}),
      make_ranking("e2", "s",
                   {{"t", .9}, {"v", .8}, {"u", .7}, {"w", .6}, {"x", .5}}),
      make_ranking("e3", "s",
                   {{"t", .9}, {"u", .8}, {"w", .7}, {"v", .6}, {"x", .5}}),
  };
  // rank sums: u = 2+3+2 = 7, v = 3+2+4 = 9, w = 4+4+3 = 11, x = 15
  auto picks = select_distractors(rankings);
  REQUIRE(picks.size() == 3);
  CHECK(picks[0].candidate_id == "t");
  CHECK(picks[0].provenance == std::vector<std::string>{"e1", "e2", "e3"});
  CHECK(picks[1].candidate_id == "u");
  CHECK(picks[1].provenance == std::vector<std::string>{"consensus"});
  CHECK(picks[2].candidate_id == "v");
  CHECK(picks[2].provenance == std::vector<std::string>{"consensus"});
}

TEST_CASE("partial overlap keeps both named picks then fills") {
  std::vector<SimilarityRanking> rankings = {
      make_ranking("e1", "s", {{"t", .9}, {"u", .8}, {"v", .7}, {"w", .6}}),
      make_ranking("e2", "s", {{"t", .9}, {"w", .8}, {"v", .7}, {"u", .6}}),
      make_ranking("e3", "s", {{"u", .9}, {"t", .8}, {"v", .7}, {"w", .6}}),
  };
  // unchosen rank sums: v = 3+3+3 = 9, w = 4+2+4 = 10
  auto picks = select_distractors(rankings);
  REQUIRE(picks.size() == 3);
  CHECK(picks[0].candidate_id == "t");
  CHECK(picks[0].provenance == std::vector<std::string>{"e1", "e2"});
  CHECK(picks[1].candidate_id == "u");
  CHECK(picks[1].provenance == std::vector<std::string>{"e3"});
  CHECK(picks[2].candidate_id == "v");
  CHECK(picks[2].provenance == std::vector<std::string>{"consensus"});
}

TEST_CASE("fill ties break by ascending id") {
  std::vector<SimilarityRanking> rankings = {
      make_ranking("e1", "s", {{"t", .9}, {"u", .8}, {"v", .7}, {"w", .6}}),
      make_ranking("e2", "s", {{"t", .9}, {"v", .8}, {"u", .7}, {"w", .6}}),
  };
  // u and v both sum to 5; ascending id puts u first
  auto picks = select_distractors(rankings);
  REQUIRE(picks.size() == 3);
  CHECK(picks[0].candidate_id == "t");
  CHECK(picks[1].candidate_id == "u");
  CHECK(picks[2].candidate_id == "v");
}

TEST_CASE("selection guards its inputs") {
  CHECK_THROWS_AS(select_distractors({}), std::invalid_argument);

  auto small = make_ranking("e1", "s", {{"a", .9}, {"b", .5}});
  CHECK_THROWS_AS(select_distractors({small}), std::invalid_argument);

  auto r1 = make_ranking("e1", "s", {{"a", .9}, {"b", .5}, {"c", .4}});
  auto r2 = make_ranking("e2", "s", {{"a", .9}, {"b", .5}, {"d", .4}});
  CHECK_THROWS_AS(select_distractors({r1, r2}), std::invalid_argument);

  CHECK_THROWS_AS(select_distractors({r1}, 0), std::invalid_argument);

  // k below the embedder count keeps the first named pick only
  auto t1 = make_ranking("e1", "s", {{"a", .9}, {"b", .5}, {"c", .4}});
  auto t2 = make_ranking("e2", "s", {{"b", .9}, {"a", .5}, {"c", .4}});
  auto picks = select_distractors({t1, t2}, 1);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].candidate_id == "a");
}

TEST_CASE("consensus selection matches the brute-force rule on tie-heavy pools") {
  SplitMix64 rng(2024);
  const std::string ids = "abcdefgh";
  int checked = 0;
  for (int iter = 0; iter < 600; ++iter) {
    int n = 3 + static_cast<int>(rng.next_u64() % 6);  // 3..8 candidates
    std::vector<std::string> pool;
    for (int i = 0; i < n; ++i) pool.push_back(std::string(1, ids[static_cast<std::size_t>(i)]));

    std::vector<SimilarityRanking> rankings;
    for (int e = 0; e < 3; ++e) {
      std::vector<std::pair<std::string, double>> scored;
      for (const auto& id : pool) {
        // coarse score alphabet forces frequent ties
        scored.emplace_back(id, static_cast<double>(rng.next_u64() % 5) / 4.0);
      }
      rankings.push_back(
          make_ranking("e" + std::to_string(e + 1), "s", std::move(scored)));
    }

    auto picks = select_distractors(rankings);
    auto expected = oracles::consensus_picks(rankings, 3);
    REQUIRE(picks.size() == 3);
    REQUIRE(expected.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(picks[static_cast<std::size_t>(i)].candidate_id ==
            expected[static_cast<std::size_t>(i)]);
    }

    // provenance reconstruction: named picks list exactly the embedders
    // whose top they were, in ranking order; fills say "consensus"
    for (const auto& p : picks) {
      std::vector<std::string> named;
      for (const auto& r : rankings) {
        if (r.ranked.front().first == p.candidate_id)
          named.push_back(r.embedder_id);
      }
      if (named.empty()) {
        CHECK(p.provenance == std::vector<std::string>{"consensus"});
      } else {
        CHECK(p.provenance == named);
      }
    }
    ++checked;
  }
  CHECK(checked == 600);
}

// ---------------------------------------------------------------------------
// build_question

TEST_CASE("question construction invariants") {
  auto stem = make_issue("J1-0003", "J1");
  std::vector<corpus::Issue> pool = {
      make_issue("J1-0001", "J1"), make_issue("J1-0002", "J1"),
      make_issue("J1-0004", "J1"), make_issue("J1-0005", "J1")};
  std::vector<std::string> eids = {"e1", "e2", "e3"};
  auto source = hash_source();

  auto q = build_question(Direction::Image2Text, Domain::Info, stem, pool,
                          eids, source, 42);
  CHECK(q.question_id == "image2text-info-J1-0003");
  CHECK(q.stem_issue_id == "J1-0003");
  REQUIRE(q.options.size() == 4);
  REQUIRE(q.answer_index >= 0);
  REQUIRE(q.answer_index < 4);
  CHECK(q.options[static_cast<std::size_t>(q.answer_index)] == "J1-0003");
  REQUIRE(q.distractors.size() == 3);
  for (const auto& d : q.distractors) {
    CHECK(d != q.stem_issue_id);
    bool in_pool = false;
    for (const auto& p : pool) in_pool |= p.issue_id == d;
    CHECK(in_pool);
    CHECK(q.provenance.count(d) == 1);
    CHECK_FALSE(q.provenance.at(d).empty());
  }
  CHECK(q.provenance.size() == 3);

  // options = truth + the three distractors, as a set
  std::set<std::string> opts(q.options.begin(), q.options.end());
  CHECK(opts.size() == 4);
  CHECK(opts.count("J1-0003") == 1);
  for (const auto& d : q.distractors) CHECK(opts.count(d) == 1);
}

TEST_CASE("option order replays from the published shuffle seed") {
  auto stem = make_issue("J1-0003", "J1");
  std::vector<corpus::Issue> pool = {
      make_issue("J1-0001", "J1"), make_issue("J1-0002", "J1"),
      make_issue("J1-0004", "J1"), make_issue("J1-0005", "J1")};
  auto q = build_question(Direction::Text2Image, Domain::Option, stem, pool,
                          {"e1", "e2", "e3"}, hash_source(), 42);

  CHECK(q.shuffle_seed == fnv1a64("J1-0003|42"));

  // canonical pre-shuffle layout: truth first, distractors ascending
  std::vector<std::string> layout{q.stem_issue_id};
  auto sorted_d = q.distractors;
  std::sort(sorted_d.begin(), sorted_d.end());
  layout.insert(layout.end(), sorted_d.begin(), sorted_d.end());
  SplitMix64 rng(q.shuffle_seed);
  rng.shuffle(layout);
  CHECK(layout == q.options);

  auto other = build_question(Direction::Text2Image, Domain::Option, stem,
                              pool, {"e1", "e2", "e3"}, hash_source(), 43);
  CHECK(other.shuffle_seed != q.shuffle_seed);
  CHECK(other.distractors == q.distractors);  // seed only moves the shuffle

  CHECK_THROWS_AS(build_question(Direction::Image2Text, Domain::Info, stem,
                                 pool, {}, hash_source(), 1),
                  std::invalid_argument);
}

TEST_CASE("each track requests exactly its planned modalities") {
  auto stem = make_issue("S", "J");
  std::vector<corpus::Issue> pool = {make_issue("A", "J"), make_issue("B", "J"),
                                     make_issue("C", "J")};

  auto run = [&](Direction dir, Domain dom) {
    std::set<std::pair<std::string, int>> asked;
    EmbeddingSource spy = [&](const std::string& eid, const std::string& iid,
                              Modality m) {
      asked.insert({iid, m == Modality::Image ? 1 : 0});
      return hash_source()(eid, iid, m);
    };
    build_question(dir, dom, stem, pool, {"e1", "e2"}, spy, 7);
    return asked;
  };

  auto i2t_info = run(Direction::Image2Text, Domain::Info);
  CHECK(i2t_info == std::set<std::pair<std::string, int>>{
                        {"S", 1}, {"A", 0}, {"B", 0}, {"C", 0}});
  auto i2t_option = run(Direction::Image2Text, Domain::Option);
  CHECK(i2t_option == std::set<std::pair<std::string, int>>{
                          {"S", 0}, {"A", 0}, {"B", 0}, {"C", 0}});
  auto t2i_info = run(Direction::Text2Image, Domain::Info);
  CHECK(t2i_info == std::set<std::pair<std::string, int>>{
                        {"S", 0}, {"A", 1}, {"B", 1}, {"C", 1}});
  auto t2i_option = run(Direction::Text2Image, Domain::Option);
  CHECK(t2i_option == std::set<std::pair<std::string, int>>{
                          {"S", 1}, {"A", 1}, {"B", 1}, {"C", 1}});
}

// ---------------------------------------------------------------------------
// build_track

TEST_CASE("track skips thin journals and sorts questions by stem") {
  auto snap = two_journal_snapshot();
  // shrink J2 to 3 issues -> every J2 pool has 2 members
  snap.issues.resize(8);
  REQUIRE(snap.issues.back().journal_id == "J2");

  auto result = build_track(snap, Direction::Image2Text, Domain::Info,
                            {"e1", "e2", "e3"}, hash_source(), 11);
  CHECK(result.set.set_id == "image2text-info");
  CHECK(result.set.curation_seed == 11);
  CHECK(result.set.embedder_ids ==
        std::vector<std::string>{"e1", "e2", "e3"});
  REQUIRE(result.set.questions.size() == 5);
  for (std::size_t i = 1; i < result.set.questions.size(); ++i) {
    CHECK(result.set.questions[i - 1].stem_issue_id <
          result.set.questions[i].stem_issue_id);
  }
  for (const auto& q : result.set.questions) {
    CHECK(q.stem_issue_id.substr(0, 2) == "J1");
    for (const auto& opt : q.options) CHECK(opt.substr(0, 2) == "J1");
  }

  REQUIRE(result.skips.size() == 3);
  for (const auto& s : result.skips) {
    CHECK(s.journal_id == "J2");
    CHECK(s.pool_size == 2);
    CHECK(s.reason == "journal pool smaller than 3");
  }
}

TEST_CASE("track construction failure modes") {
  corpus::CorpusSnapshot empty;
  CHECK_THROWS_AS(build_track(empty, Direction::Image2Text, Domain::Info,
                              {"e1"}, hash_source(), 1),
                  std::invalid_argument);

  corpus::CorpusSnapshot thin;
  thin.issues = {make_issue("J1-0001", "J1"), make_issue("J1-0002", "J1")};
  CHECK_THROWS_AS(build_track(thin, Direction::Image2Text, Domain::Info,
                              {"e1"}, hash_source(), 1),
                  std::runtime_error);

  auto snap = two_journal_snapshot();
  EmbeddingSource faulty = [](const std::string& eid, const std::string& iid,
                              Modality m) -> EmbeddingVector {
    if (iid == "J1-0002" && m == Modality::Text) {
      throw std::runtime_error("embedder " + eid + " failed on " + iid);
    }
    return hash_source()(eid, iid, m);
  };
  CHECK_THROWS_WITH_AS(build_track(snap, Direction::Image2Text, Domain::Info,
                                   {"e1"}, faulty, 1),
                       "embedder e1 failed on J1-0002", std::runtime_error);
  CHECK_THROWS_AS(build_track(snap, Direction::Image2Text, Domain::Info,
                              {"e1"}, faulty, 4),
                  std::runtime_error);
}

TEST_CASE("tracks are deterministic and parallelism-invariant") {
  auto snap = two_journal_snapshot();
  std::vector<std::string> eids = {"e1", "e2", "e3"};

  auto a = build_track(snap, Direction::Text2Image, Domain::Info, eids,
                       hash_source(), 5, 1);
  auto b = build_track(snap, Direction::Text2Image, Domain::Info, eids,
                       hash_source(), 5, 1);
  auto c = build_track(snap, Direction::Text2Image, Domain::Info, eids,
                       hash_source(), 5, 4);
  CHECK(to_json(a.set) == to_json(b.set));
  CHECK(to_json(a.set) == to_json(c.set));

  auto reseeded = build_track(snap, Direction::Text2Image, Domain::Info, eids,
                              hash_source(), 6, 1);
  CHECK(to_json(reseeded.set) != to_json(a.set));
  REQUIRE(reseeded.set.questions.size() == a.set.questions.size());
  for (std::size_t i = 0; i < a.set.questions.size(); ++i) {
    // reseeding reshuffles options but never reselects distractors
    CHECK(reseeded.set.questions[i].distractors ==
          a.set.questions[i].distractors);
    CHECK(reseeded.set.questions[i].shuffle_seed !=
          a.set.questions[i].shuffle_seed);
  }
}

TEST_CASE("curation is invariant to uniform embedding scale") {
  auto snap = two_journal_snapshot();
  auto base = hash_source();
  EmbeddingSource scaled = [base](const std::string& eid,
                                  const std::string& iid, Modality m) {
    auto v = base(eid, iid, m);
    v.values *= 7.3;
    v.normalized = false;
    return v;
  };
  for (auto dir : {Direction::Image2Text, Direction::Text2Image}) {
    for (auto dom : {Domain::Info, Domain::Option}) {
      auto a = build_track(snap, dir, dom, {"e1", "e2", "e3"}, base, 9);
      auto b = build_track(snap, dir, dom, {"e1", "e2", "e3"}, scaled, 9);
      CHECK(to_json(a.set) == to_json(b.set));
    }
  }
}

// ---------------------------------------------------------------------------
// serialization

TEST_CASE("question set json round trip is byte-stable") {
  auto snap = two_journal_snapshot();
  auto result = build_track(snap, Direction::Image2Text, Domain::Option,
                            {"e1", "e2", "e3"}, hash_source(), 77);
  result.set.image_overrides["J1-0001"] = "/alt/J1-0001-tf.ppm";
  result.set.image_overrides["J1-0002"] = "/alt/J1-0002-tf.ppm";

  std::string text = to_json(result.set);
  auto loaded = question_set_from_json(text);
  CHECK(to_json(loaded) == text);

  CHECK(loaded.set_id == result.set.set_id);
  CHECK(loaded.direction == result.set.direction);
  CHECK(loaded.domain == result.set.domain);
  CHECK(loaded.embedder_ids == result.set.embedder_ids);
  CHECK(loaded.curation_seed == result.set.curation_seed);
  CHECK(loaded.image_overrides == result.set.image_overrides);
  REQUIRE(loaded.questions.size() == result.set.questions.size());
  for (std::size_t i = 0; i < loaded.questions.size(); ++i) {
    const auto& lq = loaded.questions[i];
    const auto& rq = result.set.questions[i];
    CHECK(lq.question_id == rq.question_id);
    CHECK(lq.stem_issue_id == rq.stem_issue_id);
    CHECK(lq.options == rq.options);
    CHECK(lq.answer_index == rq.answer_index);
    CHECK(lq.provenance == rq.provenance);
    CHECK(lq.distractors == rq.distractors);
    CHECK(lq.shuffle_seed == rq.shuffle_seed);
  }

  const auto& q0 = result.set.questions.front();
  CHECK(&result.set.at(q0.question_id) == &q0);
  CHECK_THROWS_AS(result.set.at("missing-question"), std::out_of_range);
  CHECK_THROWS(question_set_from_json("{\"set_id\": \"x\"}"));
}

TEST_CASE("question set and skip report file round trips") {
  TempDir dir("curation");
  auto snap = two_journal_snapshot();
  auto result = build_track(snap, Direction::Text2Image, Domain::Option,
                            {"e1", "e2"}, hash_source(), 3);

  auto set_path = (dir / "set.json").string();
  save_question_set(set_path, result.set);
  auto loaded = load_question_set(set_path);
  CHECK(to_json(loaded) == to_json(result.set));
  CHECK_THROWS_AS(load_question_set((dir / "absent.json").string()),
                  std::runtime_error);

  std::vector<SkipEntry> skips = {
      {"J9-0001", "J9", 2, "journal pool smaller than 3"},
      {"J9-0002", "J9", 2, "journal pool smaller than 3"}};
  auto skip_path = (dir / "skips.jsonl").string();
  save_skip_report(skip_path, skips);
  std::ifstream in(skip_path);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    CHECK(j.at("journal_id") == "J9");
    CHECK(j.at("pool_size") == 2);
    CHECK(j.at("reason") == "journal pool smaller than 3");
    ++count;
  }
  CHECK(count == 2);
}

// ---------------------------------------------------------------------------
// self-validation

TEST_CASE("self-validation separates aligned from adversarial spaces") {
  auto snap = two_journal_snapshot();  // 5 + 4 issues, both journals eligible
  std::vector<std::string> eids = {"e1", "e2", "e3"};

  auto aligned = paired_source(false);
  auto set = build_track(snap, Direction::Image2Text, Domain::Info, eids,
                         aligned, 4).set;
  REQUIRE(set.questions.size() == 9);

  auto rows = self_validate(snap, set, eids, aligned);
  REQUIRE(rows.size() == 4);  // three embedders + average
  CHECK(rows.back().embedder_id == "average");
  for (const auto& row : rows) {
    CHECK(row.avg_relative_rank == 0.0);
    CHECK(row.median_relative_rank == 0.0);
    CHECK(row.accuracy == 1.0);
    CHECK(row.n == 9);
  }

  auto adversarial = paired_source(true);
  auto anti_set = build_track(snap, Direction::Image2Text, Domain::Info, eids,
                              adversarial, 4).set;
  auto anti = self_validate(snap, anti_set, eids, adversarial);
  REQUIRE(anti.size() == 4);
  for (const auto& row : anti) {
    CHECK(row.avg_relative_rank == 1.0);
    CHECK(row.median_relative_rank == 1.0);
    CHECK(row.accuracy == 0.0);
    CHECK(row.n == 9);
  }

  // text2image flips which side is the anchor; aligned space still perfect
  auto t2i = build_track(snap, Direction::Text2Image, Domain::Info, eids,
                         aligned, 4).set;
  auto t2i_rows = self_validate(snap, t2i, eids, aligned);
  CHECK(t2i_rows.front().accuracy == 1.0);
  CHECK(t2i_rows.front().avg_relative_rank == 0.0);

  CHECK_THROWS_AS(self_validate(snap, set, {}, aligned),
                  std::invalid_argument);
}

TEST_CASE("single-issue journals are skipped with a warning") {
  auto snap = two_journal_snapshot();
  auto set = build_track(snap, Direction::Image2Text, Domain::Info,
                         {"e1"}, paired_source(false), 2).set;
  snap.issues.push_back(make_issue("J3-0001", "J3"));

  std::vector<std::string> warnings;
  auto rows = self_validate(snap, set, {"e1"}, paired_source(false),
                            &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("J3") != std::string::npos);
  CHECK(warnings[0].find("single issue") != std::string::npos);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n == 9);  // lone issue contributes no rank statistics
}

TEST_CASE("self-validation csv pins the row format") {
  TempDir dir("selfval");
  std::vector<SelfValidationRow> rows = {
      {"e1", 0.0, 0.0, 1.0, 9},
      {"average", 0.28125, 0.25, 0.75, 16},
  };
  auto path = (dir / "rows.csv").string();
  save_self_validation_csv(path, rows);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "embedder,avg_relative_rank,median_relative_rank,accuracy,n");
  std::getline(in, line);
  CHECK(line == "e1,0.000000,0.000000,1.000000,9");
  std::getline(in, line);
  CHECK(line == "average,0.281250,0.250000,0.750000,16");
  CHECK_FALSE(std::getline(in, line));
}
