#include "coverbench/synth.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "coverbench/hash.hpp"
#include "coverbench/image.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace coverbench::synth {

namespace {

const char* kTopicPhrases[] = {
    "deep-sea ecosystems",   "protein folding machines", "exoplanet climates",
    "quantum materials",     "neural circuit mapping",   "glacial dynamics",
    "ancient genome recovery", "synthetic catalysts"};

const char* kAngles[] = {
    "a field expedition that upended the standing model",
    "a decade-long instrument build finally paying off",
    "an unexpected link to a neighboring discipline",
    "a replication effort that sharpened the original claim",
    "a young group challenging the consensus view"};

std::string two_digits(int v) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d", v);
  return buf;
}

std::string four_digits(int v) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%04d", v);
  return buf;
}

Image make_cover(const std::string& tag, int width, int height,
                 std::uint64_t seed) {
  std::uint64_t h = fnv1a64(tag + "|cover|" + std::to_string(seed));
  auto channel = [&](int shift) {
    return 40 + static_cast<std::uint8_t>((h >> shift) % 180);
  };
  Image img;
  img.width = width;
  img.height = height;
  img.pixels.resize(3u * static_cast<std::size_t>(width) * height);
  img.comment = "concept:" + tag;
  img.fill(channel(0), channel(8), channel(16));
  // Title band near the top and a small motif block; keeps covers distinct
  // and non-uniform for the OCR mocks.
  int band_h = std::max(3, height / 8);
  img.fill_rect(2, 2, width - 4, band_h, 15, 15, 20);
  int motif = std::max(4, width / 4);
  int mx = static_cast<int>((h >> 24) % static_cast<std::uint64_t>(
                                            std::max(1, width - motif)));
  int my = band_h + 4 +
           static_cast<int>((h >> 40) % static_cast<std::uint64_t>(std::max(
                                            1, height - band_h - 4 - motif)));
  img.fill_rect(mx, my, motif, motif, 250 - channel(0), 250 - channel(8),
                250 - channel(16));
  return img;
}

std::string make_story(const std::string& tag, const std::string& issue_id,
                       int topic, std::uint64_t seed) {
  std::uint64_t h = fnv1a64(tag + "|story|" + std::to_string(seed));
  const char* phrase = kTopicPhrases[topic % 8];
  const char* angle = kAngles[h % 5];
  std::string s;
  s += "The cover story of issue " + issue_id + " examines " + phrase + ".\n";
  s += "[concept:" + tag + "]\n";
  s += "Reporting centers on " + std::string(angle) +
       ", with researchers describing how study code " +
       std::to_string(h % 100000) +
       " reshaped the team's expectations over " +
       std::to_string(2 + h % 7) + " years of work.\n";
  return s;
}

}  // namespace

std::string concept_tag(int journal, int topic, int issue) {
  return "J" + two_digits(journal) + "-T" + std::to_string(topic) + "-I" +
         four_digits(issue);
}

SynthResult generate_corpus(const SynthParams& params) {
  if (params.journals < 1 || params.issues_per_journal < 1 ||
      params.topics < 1) {
    throw std::invalid_argument("synth: counts must be positive");
  }
  fs::create_directories(fs::path(params.out_dir) / "images");
  std::string manifest_path =
      (fs::path(params.out_dir) / "manifest.jsonl").string();
  std::ofstream manifest(manifest_path, std::ios::binary | std::ios::trunc);
  if (!manifest) {
    throw std::runtime_error("synth: cannot write " + manifest_path);
  }

  SynthResult result;
  result.manifest_path = manifest_path;
  for (int j = 1; j <= params.journals; ++j) {
    std::string journal_id = "J" + two_digits(j);
    for (int i = 1; i <= params.issues_per_journal; ++i) {
      int topic = (i - 1) % params.topics;
      std::string tag = concept_tag(j, topic, i);
      std::string issue_id = journal_id + "-" + four_digits(i);
      int month_index = i - 1;
      std::string date = std::to_string(2024 + month_index / 12) + "-" +
                         two_digits(1 + month_index % 12) + "-01";

      Image cover = make_cover(tag, params.width, params.height, params.seed);
      std::string rel_image = "images/" + issue_id + ".ppm";
      save_ppm(cover, fs::path(params.out_dir) / rel_image);

      json rec = {{"issue_id", issue_id},
                  {"journal_id", journal_id},
                  {"publisher", "House-" + journal_id},
                  {"date", date},
                  {"image_path", rel_image},
                  {"story", make_story(tag, issue_id, topic, params.seed)}};
      manifest << rec.dump() << "\n";
      ++result.records;

      if (params.duplicate_every > 0 && i % params.duplicate_every == 0) {
        std::string dup_rel = "images/" + issue_id + "-dup.ppm";
        write_file_bytes((fs::path(params.out_dir) / dup_rel).string(),
                         encode_ppm(cover));
        json dup = rec;
        dup["issue_id"] = issue_id + "-dup";
        dup["image_path"] = dup_rel;
        dup["date"] = date.substr(0, 8) + "15";
        manifest << dup.dump() << "\n";
        ++result.records;
      }
    }
  }
  return result;
}

}  // namespace coverbench::synth
