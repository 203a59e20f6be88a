// Benchmark track construction: per-embedder similarity ranking, consensus
// distractor selection, deterministic option shuffling, and embedder
// self-validation.
//
// Four tracks: {image2text, text2image} x {info, option}. Options are issue
// ids; the true option is always the stem's own id (its paired story or
// cover, depending on direction). Each track fixes which modality the anchor
// and the candidates are embedded as:
//
//   image2text/info    anchor = stem cover (image),  candidates = stories
//   image2text/option  anchor = true story (text),   candidates = stories
//   text2image/info    anchor = stem story (text),   candidates = covers
//   text2image/option  anchor = true cover (image),  candidates = covers
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coverbench/corpus.hpp"
#include "coverbench/embedding.hpp"

namespace coverbench::curation {

enum class Direction { Image2Text, Text2Image };
enum class Domain { Info, Option };
enum class Modality { Text, Image };

std::string to_string(Direction d);
std::string to_string(Domain d);
Direction direction_from_string(const std::string& s);
Domain domain_from_string(const std::string& s);

struct TrackPlan {
  Modality anchor_modality;
  Modality candidate_modality;
  bool needs_image_embeddings;  // false only for image2text/option
};
TrackPlan plan_for(Direction direction, Domain domain);

struct SimilarityRanking {
  std::string embedder_id;
  std::string anchor_id;
  // rank 1 first; scores non-increasing; score ties broken by ascending id.
  std::vector<std::pair<std::string, double>> ranked;

  // 1-based rank; throws std::out_of_range if the candidate is absent.
  int rank_of(const std::string& candidate_id) const;
};

struct DistractorPick {
  std::string candidate_id;
  std::vector<std::string> provenance;  // embedder ids, or {"consensus"}
};

struct QuestionSpec {
  std::string question_id;
  std::string stem_issue_id;
  std::vector<std::string> options;  // 4 issue ids, shuffled
  int answer_index = -1;
  // distractor issue id -> embedders that picked it (or {"consensus"})
  std::map<std::string, std::vector<std::string>> provenance;
  std::vector<std::string> distractors;  // selection order, pre-shuffle
  std::uint64_t shuffle_seed = 0;
};

struct QuestionSet {
  std::string set_id;
  Direction direction = Direction::Image2Text;
  Domain domain = Domain::Info;
  std::vector<std::string> embedder_ids;
  std::uint64_t curation_seed = 0;
  std::vector<QuestionSpec> questions;  // sorted by stem_issue_id
  // Media substitutions (issue id -> image path), used by text-free variants.
  std::map<std::string, std::string> image_overrides;

  const QuestionSpec& at(const std::string& question_id) const;
};

struct SkipEntry {
  std::string issue_id;
  std::string journal_id;
  int pool_size = 0;
  std::string reason;
};

// Supplies one issue's embedding under one embedder, as story text or cover
// image. Must throw with a message naming the embedder and issue on failure.
// Vectors need not be pre-normalized; cosine handles either.
using EmbeddingSource = std::function<EmbeddingVector(
    const std::string& embedder_id, const std::string& issue_id,
    Modality modality)>;

SimilarityRanking rank_candidates(
    const std::string& embedder_id, const std::string& anchor_id,
    const EmbeddingVector& anchor,
    const std::vector<std::pair<std::string, EmbeddingVector>>& candidates);

// Consensus rule: one rank-1 pick per embedder; overlap slots filled by the
// unchosen candidates with the best (lowest) average rank across embedders,
// ties by ascending id. Throws std::invalid_argument when the shared pool
// has fewer than k candidates.
std::vector<DistractorPick> select_distractors(
    const std::vector<SimilarityRanking>& rankings, int k = 3);

QuestionSpec build_question(Direction direction, Domain domain,
                            const corpus::Issue& stem,
                            const std::vector<corpus::Issue>& pool,
                            const std::vector<std::string>& embedder_ids,
                            const EmbeddingSource& source,
                            std::uint64_t curation_seed);

struct TrackResult {
  QuestionSet set;
  std::vector<SkipEntry> skips;
};

TrackResult build_track(const corpus::CorpusSnapshot& snapshot,
                        Direction direction, Domain domain,
                        const std::vector<std::string>& embedder_ids,
                        const EmbeddingSource& source, std::uint64_t seed,
                        int parallelism = 1);

struct SelfValidationRow {
  std::string embedder_id;  // an embedder id, or "average"
  double avg_relative_rank = 0.0;
  double median_relative_rank = 0.0;
  double accuracy = 0.0;
  int n = 0;  // issues contributing rank statistics
};

// Pairing statistics per embedder, in the question set's direction: relative
// rank (rank-1)/(N-1) of the true counterpart among all same-journal
// candidates, plus argmax-similarity accuracy over the set's questions.
// The "average" row pools the embedders' ranks per issue and re-ranks.
// Journals with a single issue are skipped (warning appended if given).
std::vector<SelfValidationRow> self_validate(
    const corpus::CorpusSnapshot& snapshot, const QuestionSet& set,
    const std::vector<std::string>& embedder_ids,
    const EmbeddingSource& source,
    std::vector<std::string>* warnings = nullptr);

// Canonical serialization: key-sorted JSON, byte-stable across runs.
std::string to_json(const QuestionSet& set);
QuestionSet question_set_from_json(const std::string& text);
void save_question_set(const std::string& path, const QuestionSet& set);
QuestionSet load_question_set(const std::string& path);
void save_skip_report(const std::string& path,
                      const std::vector<SkipEntry>& skips);
void save_self_validation_csv(const std::string& path,
                              const std::vector<SelfValidationRow>& rows);

}  // namespace coverbench::curation
