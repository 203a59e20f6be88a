#include "coverbench/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "coverbench/hash.hpp"

namespace coverbench::corpus {

using nlohmann::json;
namespace fs = std::filesystem;

const Issue* CorpusSnapshot::find(const std::string& issue_id) const {
  for (const auto& is : issues) {
    if (is.issue_id == issue_id) return &is;
  }
  return nullptr;
}

const Issue& CorpusSnapshot::at(const std::string& issue_id) const {
  const Issue* is = find(issue_id);
  if (!is) throw std::out_of_range("unknown issue_id: " + issue_id);
  return *is;
}

std::vector<std::string> CorpusSnapshot::journal_ids() const {
  std::vector<std::string> ids;
  for (const auto& is : issues) {
    if (ids.empty() || ids.back() != is.journal_id) ids.push_back(is.journal_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

namespace {

void sort_canonical(std::vector<Issue>& issues) {
  std::sort(issues.begin(), issues.end(), [](const Issue& a, const Issue& b) {
    if (a.journal_id != b.journal_id) return a.journal_id < b.journal_id;
    if (a.date != b.date) return a.date < b.date;
    return a.issue_id < b.issue_id;
  });
}

Issue parse_record(const json& rec, const fs::path& manifest_dir) {
  Issue issue;
  issue.issue_id = rec.at("issue_id").get<std::string>();
  issue.journal_id = rec.at("journal_id").get<std::string>();
  issue.publisher = rec.value("publisher", std::string{});
  issue.date = Date::parse(rec.at("date").get<std::string>());

  fs::path img = rec.at("image_path").get<std::string>();
  if (img.is_relative()) img = manifest_dir / img;
  issue.image_path = fs::weakly_canonical(img).string();

  if (rec.contains("story")) {
    issue.story = rec.at("story").get<std::string>();
  } else if (rec.contains("story_path")) {
    fs::path sp = rec.at("story_path").get<std::string>();
    if (sp.is_relative()) sp = manifest_dir / sp;
    std::ifstream in(sp);
    if (!in) throw std::runtime_error("cannot read story file: " + sp.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    issue.story = ss.str();
  } else {
    throw std::runtime_error("record has neither 'story' nor 'story_path'");
  }
  if (issue.issue_id.empty()) throw std::runtime_error("empty issue_id");
  if (issue.story.empty()) throw std::runtime_error("empty cover story");
  return issue;
}

// Hashes image files, a chunk of issues per worker. The snapshot itself is
// assembled single-threaded afterwards.
void hash_images(std::vector<Issue>& issues, std::vector<int>& failed,
                 const std::vector<int>& lines, IngestReport& report,
                 int parallelism) {
  auto hash_range = [&](std::size_t lo, std::size_t hi,
                        std::vector<std::pair<std::size_t, std::string>>& errs) {
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        if (!fs::exists(issues[i].image_path)) {
          throw std::runtime_error("missing image file: " +
                                   issues[i].image_path);
        }
        issues[i].image_sha256 = sha256_file_hex(issues[i].image_path);
      } catch (const std::exception& e) {
        errs.emplace_back(i, e.what());
      }
    }
  };

  std::vector<std::pair<std::size_t, std::string>> errs;
  if (parallelism <= 1 || issues.size() < 2) {
    hash_range(0, issues.size(), errs);
  } else {
    std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(parallelism),
                              issues.size());
    std::size_t chunk = (issues.size() + workers - 1) / workers;
    std::vector<std::vector<std::pair<std::size_t, std::string>>> parts(workers);
    std::vector<std::future<void>> futs;
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t lo = w * chunk;
      std::size_t hi = std::min(issues.size(), lo + chunk);
      futs.push_back(std::async(std::launch::async, hash_range, lo, hi,
                                std::ref(parts[w])));
    }
    for (auto& f : futs) f.get();
    for (auto& p : parts) errs.insert(errs.end(), p.begin(), p.end());
  }

  std::sort(errs.begin(), errs.end());
  for (const auto& [idx, msg] : errs) {
    report.errors.push_back({lines[idx], msg});
    failed.push_back(static_cast<int>(idx));
  }
}

}  // namespace

IngestResult ingest_manifest(const fs::path& manifest_path, int parallelism) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  }
  fs::path manifest_dir = fs::weakly_canonical(manifest_path).parent_path();

  IngestResult result;
  IngestReport& report = result.report;

  std::vector<Issue> issues;
  std::vector<int> lines;  // manifest line per issue, for error reporting
  std::string line;
  int lineno = 0;
  std::unordered_map<std::string, int> seen_ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++report.records_seen;
    try {
      json rec = json::parse(line);
      Issue issue = parse_record(rec, manifest_dir);
      auto [it, inserted] = seen_ids.emplace(issue.issue_id, lineno);
      if (!inserted) {
        throw std::runtime_error("duplicate issue_id '" + issue.issue_id +
                                 "' (first seen at line " +
                                 std::to_string(it->second) + ")");
      }
      issues.push_back(std::move(issue));
      lines.push_back(lineno);
    } catch (const std::exception& e) {
      report.errors.push_back(
          {lineno, std::string("line ") + std::to_string(lineno) + ": " +
                       e.what()});
    }
  }

  std::vector<int> failed;
  hash_images(issues, failed, lines, report, parallelism);
  for (auto it = failed.rbegin(); it != failed.rend(); ++it) {
    issues.erase(issues.begin() + *it);
  }

  if (issues.empty()) {
    throw std::runtime_error("no valid records in manifest " +
                             manifest_path.string());
  }

  // Dedup by identical image bytes: keep the earliest date, then lowest id.
  std::unordered_map<std::string, std::size_t> best;  // hash -> index
  for (std::size_t i = 0; i < issues.size(); ++i) {
    auto [it, inserted] = best.emplace(issues[i].image_sha256, i);
    if (!inserted) {
      const Issue& incumbent = issues[it->second];
      const Issue& challenger = issues[i];
      bool replace = challenger.date < incumbent.date ||
                     (challenger.date == incumbent.date &&
                      challenger.issue_id < incumbent.issue_id);
      if (replace) it->second = i;
    }
  }
  std::vector<Issue> kept;
  kept.reserve(best.size());
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (best.at(issues[i].image_sha256) == i) kept.push_back(issues[i]);
  }
  report.duplicates_dropped = issues.size() - kept.size();

  sort_canonical(kept);
  result.snapshot.issues = std::move(kept);
  result.snapshot.snapshot_id =
      "snapshot-" + sha256_hex(manifest_path.string()).substr(0, 12);
  return result;
}

CorpusSnapshot filter_window(const CorpusSnapshot& snapshot, const Date& start,
                             const Date& end,
                             std::vector<std::string>* warnings) {
  if (end < start) {
    throw std::invalid_argument("filter_window: start " + start.to_string() +
                                " is after end " + end.to_string());
  }
  CorpusSnapshot out;
  out.snapshot_id = snapshot.snapshot_id;
  out.window = std::make_pair(start, end);
  for (const auto& is : snapshot.issues) {
    if (!(is.date < start) && !(end < is.date)) out.issues.push_back(is);
  }
  if (out.issues.empty() && warnings) {
    warnings->push_back("window [" + start.to_string() + ", " +
                        end.to_string() + "] contains no issues");
  }
  return out;
}

std::vector<Issue> journal_pool(const CorpusSnapshot& snapshot,
                                const std::string& journal_id,
                                const std::string& exclude,
                                std::vector<std::string>* warnings) {
  std::vector<Issue> pool;
  bool journal_seen = false;
  bool exclude_seen = false;
  for (const auto& is : snapshot.issues) {
    if (is.journal_id != journal_id) continue;
    journal_seen = true;
    if (is.issue_id == exclude) {
      exclude_seen = true;
      continue;
    }
    pool.push_back(is);
  }
  if (!journal_seen) {
    throw std::invalid_argument("unknown journal_id: " + journal_id);
  }
  if (!exclude_seen && warnings) {
    warnings->push_back("exclude id '" + exclude + "' not found in journal '" +
                        journal_id + "'");
  }
  return pool;
}

void save_snapshot(const CorpusSnapshot& snapshot, const fs::path& dir) {
  fs::create_directories(dir);
  json j;
  j["snapshot_id"] = snapshot.snapshot_id;
  if (snapshot.window) {
    j["window"] = {{"start", snapshot.window->first.to_string()},
                   {"end", snapshot.window->second.to_string()}};
  }
  json arr = json::array();
  for (const auto& is : snapshot.issues) {
    arr.push_back({{"issue_id", is.issue_id},
                   {"journal_id", is.journal_id},
                   {"publisher", is.publisher},
                   {"date", is.date.to_string()},
                   {"image_path", is.image_path},
                   {"image_sha256", is.image_sha256},
                   {"story", is.story}});
  }
  j["issues"] = std::move(arr);
  std::ofstream out(dir / "snapshot.json", std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write snapshot to " + dir.string());
  }
  out << j.dump(2) << "\n";
}

CorpusSnapshot load_snapshot(const fs::path& dir) {
  fs::path file = fs::is_directory(dir) ? dir / "snapshot.json" : dir;
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open snapshot: " + file.string());
  json j = json::parse(in);
  CorpusSnapshot snap;
  snap.snapshot_id = j.at("snapshot_id").get<std::string>();
  if (j.contains("window")) {
    snap.window = std::make_pair(
        Date::parse(j["window"].at("start").get<std::string>()),
        Date::parse(j["window"].at("end").get<std::string>()));
  }
  for (const auto& rec : j.at("issues")) {
    Issue is;
    is.issue_id = rec.at("issue_id").get<std::string>();
    is.journal_id = rec.at("journal_id").get<std::string>();
    is.publisher = rec.value("publisher", std::string{});
    is.date = Date::parse(rec.at("date").get<std::string>());
    is.image_path = rec.at("image_path").get<std::string>();
    is.image_sha256 = rec.at("image_sha256").get<std::string>();
    is.story = rec.at("story").get<std::string>();
    snap.issues.push_back(std::move(is));
  }
  return snap;
}

}  // namespace coverbench::corpus
