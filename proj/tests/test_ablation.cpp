#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "coverbench/ablation.hpp"
#include "coverbench/gateway/mock.hpp"
#include "coverbench/hash.hpp"
#include "support/tmpdir.hpp"

using namespace coverbench;
using namespace coverbench::ablation;
using gateway::ScriptedOcr;
using gateway::TextRegion;
using testsupport::TempDir;

namespace {

TextRegion region(int x, int y, int w, int h, std::string text, double conf) {
  TextRegion r;
  r.x = x;
  r.y = y;
  r.w = w;
  r.h = h;
  r.text = std::move(text);
  r.confidence = conf;
  return r;
}

// Every pixel distinct, so any stray write is visible.
Image gradient_image(int width, int height) {
  Image img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(3 * width * height));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>((i * 7 + 3) % 251);
  }
  return img;
}

bool same_pixels(const Image& a, const Image& b) {
  return a.width == b.width && a.height == b.height && a.pixels == b.pixels;
}

// Reference masking: clamp the box, paint white, leave the rest alone.
Image paint_white(Image img, int x, int y, int w, int h) {
  int x0 = std::max(0, x);
  int y0 = std::max(0, y);
  int x1 = std::min(img.width, x + w);
  int y1 = std::min(img.height, y + h);
  for (int py = y0; py < y1; ++py) {
    for (int px = x0; px < x1; ++px) {
      auto* p = img.at(px, py);
      p[0] = p[1] = p[2] = 255;
    }
  }
  return img;
}

curation::QuestionSet small_set(curation::Direction dir,
                                const std::vector<std::string>& stems,
                                const std::vector<std::string>& pool) {
  curation::QuestionSet set;
  set.direction = dir;
  set.domain = curation::Domain::Info;
  set.set_id = curation::to_string(dir) + "-info";
  set.embedder_ids = {"e1"};
  set.curation_seed = 7;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    curation::QuestionSpec q;
    q.stem_issue_id = stems[i];
    q.question_id = set.set_id + "-" + stems[i];
    q.answer_index = static_cast<int>(i % 4);
    q.options.assign(4, "");
    std::size_t next = 0;
    for (int slot = 0; slot < 4; ++slot) {
      if (slot == q.answer_index) {
        q.options[static_cast<std::size_t>(slot)] = stems[i];
      } else {
        while (pool[next] == stems[i]) ++next;
        q.options[static_cast<std::size_t>(slot)] = pool[next++];
      }
    }
    for (const auto& opt : q.options) {
      if (opt != stems[i]) q.distractors.push_back(opt);
    }
    q.shuffle_seed = 11 + i;
    set.questions.push_back(std::move(q));
  }
  return set;
}

struct DiskCorpus {
  TempDir dir;
  corpus::CorpusSnapshot snapshot;
  ScriptedOcr ocr{"scripted-ocr"};

  explicit DiskCorpus(const std::vector<std::string>& ids) : dir("ablation") {
    snapshot.snapshot_id = "snap";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Image img = gradient_image(12, 9);
      img.comment = "concept:" + ids[i];
      // a dark "title band" for the OCR to find
      img.fill_rect(1, 1, 10, 2, 10, 10, 10);
      auto path = dir / (ids[i] + ".ppm");
      save_ppm(img, path);

      corpus::Issue issue;
      issue.issue_id = ids[i];
      issue.journal_id = "J1";
      issue.publisher = "pub";
      issue.image_path = path.string();
      auto bytes = read_file_bytes(path);
      issue.image_sha256 = sha256_hex(std::span<const std::uint8_t>(bytes));
      issue.story = "story of " + ids[i];
      snapshot.issues.push_back(std::move(issue));

      ocr.script(snapshot.issues.back().image_sha256,
                 {region(1, 1, 10, 2, "TITLE " + ids[i], 0.9),
                  region(0, 6, 4, 2, "date", 0.25),
                  region(8, 6, 3, 2, "smudge", 0.20)});
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// mask_text

TEST_CASE("masking is pixel-exact and leaves the rest untouched") {
  Image base = gradient_image(10, 8);
  auto regions = std::vector<TextRegion>{region(2, 1, 4, 3, "headline", 0.9)};

  MaskManifest manifest;
  Image masked = mask_text(base, regions, 0.25, &manifest);
  CHECK(same_pixels(masked, paint_white(base, 2, 1, 4, 3)));
  CHECK(same_pixels(base, gradient_image(10, 8)));  // input untouched

  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 10; ++x) {
      bool inside = x >= 2 && x < 6 && y >= 1 && y < 4;
      const auto* p = masked.at(x, y);
      const auto* q = base.at(x, y);
      if (inside) {
        CHECK(p[0] == 255);
        CHECK(p[1] == 255);
        CHECK(p[2] == 255);
      } else {
        CHECK(p[0] == q[0]);
        CHECK(p[1] == q[1]);
        CHECK(p[2] == q[2]);
      }
    }
  }

  CHECK(manifest.threshold == 0.25);
  REQUIRE(manifest.masked.size() == 1);
  CHECK(manifest.masked[0].text == "headline");
  CHECK(manifest.warnings.empty());

  // no regions, no changes
  Image untouched = mask_text(base, {});
  CHECK(same_pixels(untouched, base));
}

TEST_CASE("confidence threshold is inclusive at the boundary") {
  Image base = gradient_image(10, 8);
  std::vector<TextRegion> regions = {
      region(0, 0, 2, 2, "sure", 0.9),
      region(4, 0, 2, 2, "edge", 0.25),
      region(0, 4, 2, 2, "shaky", 0.2499),
      region(4, 4, 2, 2, "noise", 0.1),
  };
  MaskManifest manifest;
  Image masked = mask_text(base, regions, 0.25, &manifest);

  Image expected = paint_white(paint_white(base, 0, 0, 2, 2), 4, 0, 2, 2);
  CHECK(same_pixels(masked, expected));
  REQUIRE(manifest.masked.size() == 2);
  CHECK(manifest.masked[0].text == "sure");
  CHECK(manifest.masked[1].text == "edge");

  // a different threshold is honored and recorded
  MaskManifest strict;
  Image only_sure = mask_text(base, regions, 0.5, &strict);
  CHECK(same_pixels(only_sure, paint_white(base, 0, 0, 2, 2)));
  CHECK(strict.threshold == 0.5);
  CHECK(strict.masked.size() == 1);
}

TEST_CASE("out-of-bounds boxes are clamped with a warning") {
  Image base = gradient_image(10, 8);
  std::vector<TextRegion> regions = {
      region(-2, 6, 5, 5, "corner", 0.9),   // spills left and below
      region(8, -1, 4, 3, "banner", 0.8),   // spills right and above
      region(40, 40, 3, 3, "ghost", 0.7),   // fully outside
  };
  MaskManifest manifest;
  Image masked = mask_text(base, regions, 0.25, &manifest);

  Image expected = paint_white(base, -2, 6, 5, 5);
  expected = paint_white(expected, 8, -1, 4, 3);
  CHECK(same_pixels(masked, expected));

  CHECK(manifest.masked.size() == 3);
  REQUIRE(manifest.warnings.size() == 3);
  CHECK(manifest.warnings[0].find("clamped") != std::string::npos);
  CHECK(manifest.warnings[0].find("(-2,6,5,5)") != std::string::npos);

  // in-bounds boxes warn nothing
  MaskManifest quiet;
  mask_text(base, {region(0, 0, 10, 8, "full", 0.9)}, 0.25, &quiet);
  CHECK(quiet.warnings.empty());
}

// ---------------------------------------------------------------------------
// extract_prompt_text

TEST_CASE("extracted text reads top to bottom, left to right") {
  std::vector<TextRegion> regions = {
      region(6, 4, 2, 1, "world", 0.9),
      region(1, 0, 3, 2, "SCIENCE", 0.95),
      region(1, 4, 2, 1, "hello", 0.9),
      region(5, 0, 3, 2, "TODAY", 0.95),
  };
  CHECK(extract_prompt_text(regions) == "SCIENCE TODAY hello world");

  // threshold filters before joining
  regions.push_back(region(0, 9, 5, 1, "barcode", 0.1));
  CHECK(extract_prompt_text(regions) == "SCIENCE TODAY hello world");
  CHECK(extract_prompt_text(regions, 0.05) ==
        "SCIENCE TODAY hello world barcode");

  CHECK(extract_prompt_text({}) == "");
  CHECK(extract_prompt_text({region(0, 0, 1, 1, "only", 0.25)}) == "only");
  CHECK(extract_prompt_text({region(0, 0, 1, 1, "only", 0.24)}) == "");

  // full tie on origin falls back to text order
  std::vector<TextRegion> tied = {region(2, 2, 1, 1, "b", 0.9),
                                  region(2, 2, 1, 1, "a", 0.9)};
  CHECK(extract_prompt_text(tied) == "a b");
}

// ---------------------------------------------------------------------------
// build_textfree_set

TEST_CASE("textfree covers are masked beside the originals") {
  std::vector<std::string> ids = {"Q1", "Q2", "Q3", "Q4", "Q5"};
  DiskCorpus corpus(ids);
  auto set = small_set(curation::Direction::Image2Text, {"Q1", "Q2"}, ids);

  std::map<std::string, std::vector<std::uint8_t>> originals;
  for (const auto& id : ids) {
    originals[id] = read_file_bytes((corpus.dir / (id + ".ppm")).string());
  }

  auto result = build_textfree_set(set, corpus.snapshot, corpus.ocr, 0.25);

  CHECK(result.set.set_id == "image2text-info-tf");
  REQUIRE(result.set.questions.size() == set.questions.size());
  for (std::size_t i = 0; i < set.questions.size(); ++i) {
    const auto& before = set.questions[i];
    const auto& after = result.set.questions[i];
    CHECK(after.question_id == before.question_id + "-tf");
    CHECK(after.stem_issue_id == before.stem_issue_id);
    CHECK(after.options == before.options);
    CHECK(after.answer_index == before.answer_index);
    CHECK(after.distractors == before.distractors);
    CHECK(after.shuffle_seed == before.shuffle_seed);
  }

  // image2text touches stem covers only
  REQUIRE(result.set.image_overrides.size() == 2);
  REQUIRE(result.manifests.size() == 2);
  for (const auto& stem : {"Q1", "Q2"}) {
    REQUIRE(result.set.image_overrides.count(stem) == 1);
    auto masked_path = result.set.image_overrides.at(stem);
    CHECK(masked_path ==
          (corpus.dir / (std::string(stem) + "-tf.ppm")).string());

    const auto& manifest = result.manifests.at(stem);
    CHECK(manifest.source_path ==
          (corpus.dir / (std::string(stem) + ".ppm")).string());
    CHECK(manifest.masked_path == masked_path);
    // 0.9 and the 0.25 boundary region are painted; 0.20 is not
    REQUIRE(manifest.masked.size() == 2);
    CHECK(manifest.masked[0].text == "TITLE " + std::string(stem));
    CHECK(manifest.masked[1].text == "date");
    CHECK(manifest.warnings.empty());

    Image original = decode_ppm(originals.at(stem));
    Image expected = paint_white(paint_white(original, 1, 1, 10, 2), 0, 6, 4, 2);
    Image masked = load_ppm(masked_path);
    CHECK(same_pixels(masked, expected));
    CHECK(masked.comment == original.comment);  // tag survives masking
  }

  // originals and uninvolved covers are byte-identical
  for (const auto& id : ids) {
    CHECK(read_file_bytes((corpus.dir / (id + ".ppm")).string()) ==
          originals.at(id));
  }
  CHECK_FALSE(std::filesystem::exists(corpus.dir / "Q3-tf.ppm"));

  // rebuilding overwrites to the same bytes
  auto again = build_textfree_set(set, corpus.snapshot, corpus.ocr, 0.25);
  CHECK(again.set.image_overrides == result.set.image_overrides);
  CHECK(read_file_bytes(result.set.image_overrides.at("Q1")) ==
        read_file_bytes(again.set.image_overrides.at("Q1")));
}

TEST_CASE("text2image masks every option cover") {
  std::vector<std::string> ids = {"Q1", "Q2", "Q3", "Q4", "Q5", "Q6"};
  DiskCorpus corpus(ids);
  auto set = small_set(curation::Direction::Text2Image, {"Q1", "Q2"}, ids);

  std::set<std::string> expected_involved;
  for (const auto& q : set.questions) {
    for (const auto& opt : q.options) expected_involved.insert(opt);
  }

  auto result = build_textfree_set(set, corpus.snapshot, corpus.ocr, 0.25);
  CHECK(result.set.image_overrides.size() == expected_involved.size());
  for (const auto& id : expected_involved) {
    REQUIRE(result.set.image_overrides.count(id) == 1);
    CHECK(std::filesystem::exists(result.set.image_overrides.at(id)));
  }
  // answer keys never move
  for (std::size_t i = 0; i < set.questions.size(); ++i) {
    CHECK(result.set.questions[i].answer_index ==
          set.questions[i].answer_index);
  }
}

TEST_CASE("covers with no detected text still get a textfree twin") {
  DiskCorpus corpus({"Q1", "Q2", "Q3", "Q4"});
  // wipe the script for Q1: unknown hash -> no regions
  ScriptedOcr silent("silent");
  auto set = small_set(curation::Direction::Image2Text, {"Q1"},
                       {"Q1", "Q2", "Q3", "Q4"});

  auto result = build_textfree_set(set, corpus.snapshot, silent, 0.25);
  REQUIRE(result.set.image_overrides.count("Q1") == 1);
  auto masked_path = result.set.image_overrides.at("Q1");
  CHECK(read_file_bytes(masked_path) ==
        read_file_bytes((corpus.dir / "Q1.ppm").string()));
  CHECK(result.manifests.at("Q1").masked.empty());
}

TEST_CASE("mask manifests serialize to json") {
  TempDir dir("manifest");
  MaskManifest m;
  m.source_path = "/covers/a.ppm";
  m.masked_path = "/covers/a-tf.ppm";
  m.threshold = 0.25;
  m.masked = {region(1, 2, 3, 4, "TITLE", 0.9)};
  m.warnings = {"bbox (9,9,9,9) clamped to image bounds"};

  auto path = (dir / "m.json").string();
  save_mask_manifest(path, m);

  std::ifstream in(path);
  auto j = nlohmann::json::parse(in);
  CHECK(j["source_path"] == "/covers/a.ppm");
  CHECK(j["masked_path"] == "/covers/a-tf.ppm");
  CHECK(j["threshold"] == 0.25);
  REQUIRE(j["masked"].size() == 1);
  CHECK(j["masked"][0]["x"] == 1);
  CHECK(j["masked"][0]["y"] == 2);
  CHECK(j["masked"][0]["w"] == 3);
  CHECK(j["masked"][0]["h"] == 4);
  CHECK(j["masked"][0]["text"] == "TITLE");
  CHECK(j["masked"][0]["confidence"] == 0.9);
  REQUIRE(j["warnings"].size() == 1);
  CHECK(j["warnings"][0].get<std::string>().find("clamped") !=
        std::string::npos);
}
