// Deterministic synthetic corpus generator. Every issue gets a story and a
// PPM cover that both carry the issue's concept tag ("J01-T2-I0007" style),
// which is what the mock providers key on. Output is a manifest.jsonl plus
// an images/ directory, ready for ingest.
#pragma once

#include <cstdint>
#include <string>

namespace coverbench::synth {

struct SynthParams {
  std::string out_dir;
  int journals = 2;
  int issues_per_journal = 12;
  int topics = 4;
  std::uint64_t seed = 1;
  int width = 48;
  int height = 64;
  // When > 0, every Nth issue also emits a duplicate record: a new issue_id
  // pointing at byte-identical image content, dated later in the month.
  int duplicate_every = 0;
};

struct SynthResult {
  std::string manifest_path;
  int records = 0;
};

std::string concept_tag(int journal, int topic, int issue);

SynthResult generate_corpus(const SynthParams& params);

}  // namespace coverbench::synth
