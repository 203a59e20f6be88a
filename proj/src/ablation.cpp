#include "coverbench/ablation.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "coverbench/hash.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace coverbench::ablation {

Image mask_text(const Image& image,
                const std::vector<gateway::TextRegion>& regions,
                double threshold, MaskManifest* manifest) {
  Image out = image;
  if (manifest) manifest->threshold = threshold;
  for (const auto& r : regions) {
    if (r.confidence < threshold) continue;
    bool oob = r.x < 0 || r.y < 0 || r.x + r.w > image.width ||
               r.y + r.h > image.height;
    if (oob && manifest) {
      manifest->warnings.push_back(
          "bbox (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," +
          std::to_string(r.w) + "," + std::to_string(r.h) +
          ") clamped to image bounds");
    }
    out.fill_rect(r.x, r.y, r.w, r.h, 255, 255, 255);
    if (manifest) manifest->masked.push_back(r);
  }
  return out;
}

std::string extract_prompt_text(
    const std::vector<gateway::TextRegion>& regions, double threshold) {
  std::vector<const gateway::TextRegion*> kept;
  for (const auto& r : regions) {
    if (r.confidence >= threshold) kept.push_back(&r);
  }
  std::sort(kept.begin(), kept.end(),
            [](const gateway::TextRegion* a, const gateway::TextRegion* b) {
              if (a->y != b->y) return a->y < b->y;
              if (a->x != b->x) return a->x < b->x;
              return a->text < b->text;
            });
  std::string out;
  for (const auto* r : kept) {
    if (!out.empty()) out += " ";
    out += r->text;
  }
  return out;
}

TextfreeResult build_textfree_set(const curation::QuestionSet& set,
                                  const corpus::CorpusSnapshot& snapshot,
                                  gateway::OcrEngine& ocr, double threshold) {
  // Issues whose covers the questions attach: stems for image2text,
  // every option for text2image.
  std::set<std::string> involved;
  for (const auto& q : set.questions) {
    if (set.direction == curation::Direction::Image2Text) {
      involved.insert(q.stem_issue_id);
    } else {
      for (const auto& opt : q.options) involved.insert(opt);
    }
  }

  TextfreeResult result;
  result.set = set;
  result.set.set_id = set.set_id + "-tf";
  for (auto& q : result.set.questions) q.question_id += "-tf";

  for (const auto& issue_id : involved) {
    const auto& issue = snapshot.at(issue_id);
    auto bytes = read_file_bytes(issue.image_path);
    auto regions = ocr.detect(bytes);
    Image original = decode_ppm(bytes);

    MaskManifest manifest;
    manifest.source_path = issue.image_path;
    Image masked = mask_text(original, regions, threshold, &manifest);

    fs::path p(issue.image_path);
    fs::path masked_path =
        p.parent_path() / (p.stem().string() + "-tf" + p.extension().string());
    manifest.masked_path = masked_path.string();
    save_ppm(masked, manifest.masked_path);

    result.set.image_overrides[issue_id] = manifest.masked_path;
    result.manifests[issue_id] = std::move(manifest);
  }
  return result;
}

void save_mask_manifest(const std::string& path, const MaskManifest& m) {
  json regions = json::array();
  for (const auto& r : m.masked) {
    regions.push_back({{"x", r.x},
                       {"y", r.y},
                       {"w", r.w},
                       {"h", r.h},
                       {"text", r.text},
                       {"confidence", r.confidence}});
  }
  json j = {{"source_path", m.source_path},
            {"masked_path", m.masked_path},
            {"threshold", m.threshold},
            {"masked", regions},
            {"warnings", m.warnings}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace coverbench::ablation
