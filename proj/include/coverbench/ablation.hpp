// Text-free cover variants: OCR-guided white-block masking plus the
// companion "text in the prompt" extraction.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "coverbench/corpus.hpp"
#include "coverbench/curation.hpp"
#include "coverbench/gateway/provider.hpp"
#include "coverbench/image.hpp"

namespace coverbench::ablation {

struct MaskManifest {
  std::string source_path;
  std::string masked_path;
  double threshold = 0.25;
  std::vector<gateway::TextRegion> masked;  // regions actually painted
  std::vector<std::string> warnings;        // e.g. clamped bboxes
};

// Paints solid white over every region with confidence >= threshold.
// Out-of-bounds boxes are clamped to the raster with a warning. Pixels
// outside the listed boxes are untouched.
Image mask_text(const Image& image,
                const std::vector<gateway::TextRegion>& regions,
                double threshold = 0.25, MaskManifest* manifest = nullptr);

// Texts of regions at or above threshold, top-to-bottom then left-to-right
// by bbox origin, joined by single spaces.
std::string extract_prompt_text(const std::vector<gateway::TextRegion>& regions,
                                double threshold = 0.25);

struct TextfreeResult {
  curation::QuestionSet set;  // ids suffixed "-tf", image_overrides filled
  std::map<std::string, MaskManifest> manifests;  // by issue id
};

// Masks every cover the set's questions can attach and clones the set to
// point at the masked files (written beside the originals with a "-tf"
// suffix). Question count, option order, and answer indices are unchanged.
TextfreeResult build_textfree_set(const curation::QuestionSet& set,
                                  const corpus::CorpusSnapshot& snapshot,
                                  gateway::OcrEngine& ocr,
                                  double threshold = 0.25);

void save_mask_manifest(const std::string& path, const MaskManifest& m);

}  // namespace coverbench::ablation
