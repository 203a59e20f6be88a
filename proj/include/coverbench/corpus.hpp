#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coverbench/date.hpp"

namespace coverbench::corpus {

// One journal issue: the cover image on disk plus its cover story text.
struct Issue {
  std::string issue_id;
  std::string journal_id;
  std::string publisher;
  Date date;
  std::string image_path;    // absolute after ingest
  std::string image_sha256;  // content identity for dedup / caching
  std::string story;
};

struct CorpusSnapshot {
  std::string snapshot_id;
  std::vector<Issue> issues;  // sorted by (journal_id, date, issue_id)
  std::optional<std::pair<Date, Date>> window;

  const Issue* find(const std::string& issue_id) const;
  const Issue& at(const std::string& issue_id) const;  // throws if absent
  std::vector<std::string> journal_ids() const;
};

struct IngestError {
  int line = 0;  // 1-based manifest line; 0 when not line-specific
  std::string message;
};

struct IngestReport {
  std::size_t records_seen = 0;
  std::size_t duplicates_dropped = 0;
  std::vector<IngestError> errors;    // per-record problems, run continued
  std::vector<std::string> warnings;
};

struct IngestResult {
  CorpusSnapshot snapshot;
  IngestReport report;
};

// Reads a line-delimited JSON manifest ({issue_id, journal_id, publisher,
// date, image_path, story | story_path}), hashes each referenced image,
// drops byte-identical duplicates keeping the earliest-dated issue
// (ties broken by ascending issue_id). Record-level failures are collected
// in the report; zero valid records is fatal.
IngestResult ingest_manifest(const std::filesystem::path& manifest_path,
                             int parallelism = 1);

// Keeps issues with start <= date <= end and stamps the window. start > end
// throws. An empty result is returned with a warning appended to *warnings.
CorpusSnapshot filter_window(const CorpusSnapshot& snapshot, const Date& start,
                             const Date& end,
                             std::vector<std::string>* warnings = nullptr);

// All issues of `journal_id` except `exclude`, in canonical order. Unknown
// journal throws; an exclude id outside the journal only warns.
std::vector<Issue> journal_pool(const CorpusSnapshot& snapshot,
                                const std::string& journal_id,
                                const std::string& exclude,
                                std::vector<std::string>* warnings = nullptr);

void save_snapshot(const CorpusSnapshot& snapshot,
                   const std::filesystem::path& dir);
CorpusSnapshot load_snapshot(const std::filesystem::path& dir);

}  // namespace coverbench::corpus
