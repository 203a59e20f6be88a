// coverbench command line. Subcommands cover the whole pipeline: synth,
// ingest, embed, curate, selfcheck, evaluate, dad, textfree, refresh,
// attribute, compare, report. Success prints a result summary as JSON on
// stdout and exits 0; any failure prints {"error", "command"} JSON on
// stderr and exits nonzero.
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coverbench/ablation.hpp"
#include "coverbench/analysis.hpp"
#include "coverbench/config.hpp"
#include "coverbench/corpus.hpp"
#include "coverbench/curation.hpp"
#include "coverbench/dad.hpp"
#include "coverbench/evaluation.hpp"
#include "coverbench/metrics.hpp"
#include "coverbench/run_record.hpp"
#include "coverbench/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coverbench;

namespace {

struct Ctx {
  std::string config_path;
  std::uint64_t seed = 1;
  int parallelism = 1;
  std::string out = "out";

  config::AppConfig cfg;
  config::Providers providers;
  config::Services services;
  evaluation::TemplateStore templates = evaluation::TemplateStore::builtin();
  bool built = false;

  // Providers/services are only assembled for commands that call them, so
  // config-free commands (synth, ingest, report, ...) run without a config.
  void build() {
    if (built) return;
    if (!config_path.empty()) cfg = config::load_config(config_path);
    providers = config::build_providers(cfg);
    services = config::build_services(cfg, providers);
    if (!cfg.templates_dir.empty()) {
      templates = evaluation::TemplateStore::from_dir(cfg.templates_dir);
    }
    built = true;
  }

  fs::path out_path(const std::string& name) const {
    return fs::path(out) / name;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void write_run_manifest(const Ctx& ctx, const std::string& command) {
  json j = {{"command", command},
            {"config_sha256", ctx.cfg.config_sha256},
            {"seed", ctx.seed},
            {"parallelism", ctx.parallelism},
            {"version", config::kVersion}};
  fs::create_directories(ctx.out);
  write_text(ctx.out_path("run.json"), j.dump(2) + "\n");
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

corpus::CorpusSnapshot load_snapshot_arg(const std::string& dir) {
  return corpus::load_snapshot(dir);
}

// question_id is "<direction>-<domain>-<stem>", with "-tf" appended on
// text-free sets; the track label keeps the first two segments plus "-tf".
std::string track_of(const std::vector<RunRecord>& records) {
  if (records.empty()) return "unknown";
  const std::string& id = records.front().question_id;
  std::size_t d1 = id.find('-');
  std::size_t d2 = d1 == std::string::npos ? d1 : id.find('-', d1 + 1);
  std::string track =
      d2 == std::string::npos ? std::string("unknown") : id.substr(0, d2);
  if (id.size() >= 3 && id.compare(id.size() - 3, 3, "-tf") == 0) {
    track += "-tf";
  }
  return track;
}

std::vector<std::pair<curation::Direction, curation::Domain>> track_list(
    const std::string& direction, const std::string& domain) {
  std::vector<curation::Direction> dirs;
  std::vector<curation::Domain> doms;
  if (direction == "all") {
    dirs = {curation::Direction::Image2Text, curation::Direction::Text2Image};
  } else {
    dirs = {curation::direction_from_string(direction)};
  }
  if (domain == "all") {
    doms = {curation::Domain::Info, curation::Domain::Option};
  } else {
    doms = {curation::domain_from_string(domain)};
  }
  std::vector<std::pair<curation::Direction, curation::Domain>> out;
  for (auto d : dirs) {
    for (auto m : doms) out.emplace_back(d, m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommand handlers. Each returns the JSON summary it printed.

struct SynthArgs {
  std::string dir;
  int journals = 2;
  int issues = 12;
  int topics = 4;
  int width = 48;
  int height = 64;
  int duplicate_every = 0;
};

json cmd_synth(Ctx& ctx, const SynthArgs& a) {
  synth::SynthParams p;
  p.out_dir = a.dir.empty() ? ctx.out_path("corpus").string() : a.dir;
  p.journals = a.journals;
  p.issues_per_journal = a.issues;
  p.topics = a.topics;
  p.seed = ctx.seed;
  p.width = a.width;
  p.height = a.height;
  p.duplicate_every = a.duplicate_every;
  auto r = synth::generate_corpus(p);
  return {{"manifest", r.manifest_path}, {"records", r.records}};
}

struct IngestArgs {
  std::string manifest;
  std::string snapshot_dir;
  std::string window_start;
  std::string window_end;
};

json cmd_ingest(Ctx& ctx, const IngestArgs& a) {
  auto result = corpus::ingest_manifest(a.manifest, ctx.parallelism);
  std::vector<std::string> warnings = result.report.warnings;
  corpus::CorpusSnapshot snapshot = std::move(result.snapshot);
  if (!a.window_start.empty() || !a.window_end.empty()) {
    if (a.window_start.empty() || a.window_end.empty()) {
      throw std::invalid_argument("window needs both --window-start and --window-end");
    }
    snapshot = corpus::filter_window(snapshot, Date::parse(a.window_start),
                                     Date::parse(a.window_end), &warnings);
  }
  std::string dir =
      a.snapshot_dir.empty() ? ctx.out_path("snapshot").string() : a.snapshot_dir;
  corpus::save_snapshot(snapshot, dir);
  json errors = json::array();
  for (const auto& e : result.report.errors) {
    errors.push_back({{"line", e.line}, {"message", e.message}});
  }
  return {{"snapshot_dir", dir},
          {"snapshot_id", snapshot.snapshot_id},
          {"issues", snapshot.issues.size()},
          {"records_seen", result.report.records_seen},
          {"duplicates_dropped", result.report.duplicates_dropped},
          {"errors", errors},
          {"warnings", warnings}};
}

struct EmbedArgs {
  std::string snapshot_dir;
  std::string embedders;
};

json cmd_embed(Ctx& ctx, const EmbedArgs& a) {
  ctx.build();
  auto snapshot = load_snapshot_arg(a.snapshot_dir);
  auto ids = config::resolve_embedder_set(ctx.cfg, ctx.providers, a.embedders);
  std::size_t texts = 0, images = 0;
  for (const auto& id : ids) {
    bool with_images = ctx.services.embeddings->embedder(id).supports_images();
    for (const auto& issue : snapshot.issues) {
      ctx.services.embeddings->embed_text(id, issue.story);
      ++texts;
      if (with_images) {
        ctx.services.embeddings->embed_image_file(id, issue.image_path);
        ++images;
      }
    }
  }
  return {{"embedders", ids},
          {"issues", snapshot.issues.size()},
          {"text_embeddings", texts},
          {"image_embeddings", images},
          {"cache_entries", ctx.services.cache->size()}};
}

struct CurateArgs {
  std::string snapshot_dir;
  std::string embedders;
  std::string direction = "all";
  std::string domain = "all";
};

json cmd_curate(Ctx& ctx, const CurateArgs& a) {
  ctx.build();
  auto snapshot = load_snapshot_arg(a.snapshot_dir);
  auto ids = config::resolve_embedder_set(ctx.cfg, ctx.providers, a.embedders);
  auto source = config::snapshot_source(*ctx.services.embeddings, snapshot);
  json tracks = json::array();
  for (auto [dir, dom] : track_list(a.direction, a.domain)) {
    auto result = curation::build_track(snapshot, dir, dom, ids, source,
                                        ctx.seed, ctx.parallelism);
    fs::path set_path = ctx.out_path(result.set.set_id + ".json");
    fs::path skip_path = ctx.out_path(result.set.set_id + "-skips.jsonl");
    fs::create_directories(ctx.out);
    curation::save_question_set(set_path.string(), result.set);
    curation::save_skip_report(skip_path.string(), result.skips);
    tracks.push_back({{"set_id", result.set.set_id},
                      {"path", set_path.string()},
                      {"questions", result.set.questions.size()},
                      {"skips", result.skips.size()}});
  }
  return {{"tracks", tracks}};
}

struct SelfcheckArgs {
  std::string snapshot_dir;
  std::string set_path;
  std::string embedders;  // empty -> the set's own embedder list
};

json cmd_selfcheck(Ctx& ctx, const SelfcheckArgs& a) {
  ctx.build();
  auto snapshot = load_snapshot_arg(a.snapshot_dir);
  auto set = curation::load_question_set(a.set_path);
  std::vector<std::string> ids =
      a.embedders.empty()
          ? set.embedder_ids
          : config::resolve_embedder_set(ctx.cfg, ctx.providers, a.embedders);
  auto source = config::snapshot_source(*ctx.services.embeddings, snapshot);
  std::vector<std::string> warnings;
  auto rows = curation::self_validate(snapshot, set, ids, source, &warnings);
  fs::path csv = ctx.out_path("selfcheck-" + set.set_id + ".csv");
  fs::create_directories(ctx.out);
  curation::save_self_validation_csv(csv.string(), rows);
  json jrows = json::array();
  for (const auto& r : rows) {
    jrows.push_back({{"embedder", r.embedder_id},
                     {"avg_relative_rank", r.avg_relative_rank},
                     {"median_relative_rank", r.median_relative_rank},
                     {"accuracy", r.accuracy},
                     {"n", r.n}});
  }
  return {{"csv", csv.string()}, {"rows", jrows}, {"warnings", warnings}};
}

struct EvaluateArgs {
  std::string snapshot_dir;
  std::string set_path;
  std::string model;
  std::string strategy = "direct";
  int k = 5;
  std::string template_id;
  std::string exemplar_id;
  std::string results;
};

json cmd_evaluate(Ctx& ctx, const EvaluateArgs& a) {
  ctx.build();
  auto snapshot = load_snapshot_arg(a.snapshot_dir);
  auto set = curation::load_question_set(a.set_path);
  auto model = ctx.providers.chat(a.model);

  evaluation::Strategy strategy;
  strategy.kind = evaluation::strategy_kind_from_string(a.strategy);
  strategy.k = a.k;
  strategy.prompt_template_id = a.template_id;
  if (strategy.kind == evaluation::StrategyKind::OneShot) {
    if (set.questions.empty()) throw std::invalid_argument("empty question set");
    strategy.exemplar =
        a.exemplar_id.empty() ? set.questions.front() : set.at(a.exemplar_id);
  }
  strategy.validate();

  evaluation::EvaluateOptions options;
  options.parallelism = ctx.parallelism;
  options.results_path =
      a.results.empty()
          ? ctx.out_path("results-" + a.model + "-" + strategy.name() + "-" +
                         set.set_id + ".jsonl")
                .string()
          : a.results;
  fs::create_directories(ctx.out);
  auto media = evaluation::resolver_for(snapshot, set);
  auto records =
      evaluation::evaluate(set, *model, strategy, media, ctx.templates, options);
  auto m = metrics::report(records);
  return {{"results", options.results_path},
          {"n", m.n},
          {"accuracy", m.accuracy},
          {"ece", m.ece},
          {"nll", m.nll},
          {"rms", m.rms}};
}

struct DadArgs {
  std::string snapshot_dir;
  std::string set_path;
  std::string describer;
  std::string reasoner;
  std::string results;
  std::string dossiers;
};

json cmd_dad(Ctx& ctx, const DadArgs& a) {
  ctx.build();
  auto snapshot = load_snapshot_arg(a.snapshot_dir);
  auto set = curation::load_question_set(a.set_path);
  auto describer = ctx.providers.chat(a.describer);
  auto reasoner = ctx.providers.chat(a.reasoner);

  dad::DadOptions options;
  options.parallelism = ctx.parallelism;
  options.results_path =
      a.results.empty()
          ? ctx.out_path("results-" + a.reasoner + "-dad-" + set.set_id +
                         ".jsonl")
                .string()
          : a.results;
  options.dossier_path =
      a.dossiers.empty()
          ? ctx.out_path("dossiers-" + a.describer + "-" + set.set_id +
                         ".jsonl")
                .string()
          : a.dossiers;
  fs::create_directories(ctx.out);
  dad::DossierStore store(options.dossier_path);
  auto media = evaluation::resolver_for(snapshot, set);
  auto outcome = dad::dad_evaluate(set, *describer, *reasoner, media,
                                   ctx.templates, store, options);
  auto m = metrics::report(outcome.records);
  return {{"results", options.results_path},
          {"dossiers", options.dossier_path},
          {"stage1_calls", outcome.stage1_calls},
          {"stage1_cache_hits", outcome.stage1_cache_hits},
          {"n", m.n},
          {"accuracy", m.accuracy},
          {"ece", m.ece},
          {"nll", m.nll},
          {"rms", m.rms}};
}

struct TextfreeArgs {
  std::string snapshot_dir;
  std::string set_path;
  std::string ocr;
  double threshold = 0.25;
};

json cmd_textfree(Ctx& ctx, const TextfreeArgs& a) {
  ctx.build();
  auto snapshot = load_snapshot_arg(a.snapshot_dir);
  auto set = curation::load_question_set(a.set_path);
  auto ocr = ctx.providers.ocr(a.ocr);
  auto result = ablation::build_textfree_set(set, snapshot, *ocr, a.threshold);
  fs::path set_path = ctx.out_path(result.set.set_id + ".json");
  fs::create_directories(ctx.out_path("masks"));
  curation::save_question_set(set_path.string(), result.set);
  std::size_t regions = 0;
  for (const auto& [issue_id, manifest] : result.manifests) {
    ablation::save_mask_manifest(
        ctx.out_path("masks/" + issue_id + ".json").string(), manifest);
    regions += manifest.masked.size();
  }
  return {{"set", set_path.string()},
          {"set_id", result.set.set_id},
          {"covers_masked", result.manifests.size()},
          {"regions_masked", regions},
          {"threshold", a.threshold}};
}

struct RefreshArgs {
  std::string snapshot_dir;
  std::string set_path;
  std::string embedders;
};

json cmd_refresh(Ctx& ctx, const RefreshArgs& a) {
  ctx.build();
  auto snapshot = load_snapshot_arg(a.snapshot_dir);
  auto set = curation::load_question_set(a.set_path);
  auto ids = config::resolve_embedder_set(ctx.cfg, ctx.providers, a.embedders);
  auto source = config::snapshot_source(*ctx.services.embeddings, snapshot);
  auto result = analysis::refresh(set, snapshot, ids, source, ctx.seed);
  fs::path set_path = ctx.out_path(set.set_id + "-refreshed.json");
  fs::path diff_path = ctx.out_path(set.set_id + "-diff.json");
  fs::create_directories(ctx.out);
  curation::save_question_set(set_path.string(), result.set);
  analysis::save_diff_json(diff_path.string(), result.diff);
  return {{"set", set_path.string()},
          {"diff", diff_path.string()},
          {"questions_total", result.diff.questions_total},
          {"questions_changed", result.diff.questions_changed},
          {"changed_fraction", result.diff.changed_fraction}};
}

struct AttributeArgs {
  std::vector<std::string> set_paths;
  std::vector<std::string> results_paths;
};

json cmd_attribute(Ctx& ctx, const AttributeArgs& a) {
  if (a.set_paths.size() != a.results_paths.size() || a.set_paths.empty()) {
    throw std::invalid_argument("--set and --results must pair up");
  }
  std::vector<analysis::AttributionReport> reports;
  json jreports = json::array();
  for (std::size_t i = 0; i < a.set_paths.size(); ++i) {
    auto set = curation::load_question_set(a.set_paths[i]);
    auto records = load_run_records(a.results_paths[i]);
    auto report = analysis::attribute_errors(records, set);
    json rows = json::array();
    for (const auto& r : report.rows) {
      rows.push_back(
          {{"bucket", r.bucket}, {"weight", r.weight}, {"share", r.share}});
    }
    jreports.push_back({{"track", report.track},
                        {"errors_total", report.errors_total},
                        {"distractor_errors", report.distractor_errors},
                        {"rows", rows}});
    reports.push_back(std::move(report));
  }
  fs::path csv = ctx.out_path("attribution.csv");
  fs::create_directories(ctx.out);
  analysis::save_attribution_csv(csv.string(), reports);
  return {{"csv", csv.string()}, {"reports", jreports}};
}

struct CompareArgs {
  std::string results_a;
  std::string results_b;
  int bins = 10;
};

json cmd_compare(Ctx& ctx, const CompareArgs& a) {
  auto records_a = load_run_records(a.results_a);
  auto records_b = load_run_records(a.results_b);
  auto report_a = metrics::report(records_a, a.bins);
  auto report_b = metrics::report(records_b, a.bins);
  auto cmp = analysis::compare_runs(records_a, report_a, records_b, report_b);
  fs::path out = ctx.out_path("compare.json");
  fs::create_directories(ctx.out);
  analysis::save_compare_json(out.string(), cmp);
  json j = json::parse(analysis::compare_to_json(cmp));
  j["path"] = out.string();
  return j;
}

struct ReportArgs {
  std::vector<std::string> results_paths;
  int bins = 10;
};

json cmd_report(Ctx& ctx, const ReportArgs& a) {
  if (a.results_paths.empty()) {
    throw std::invalid_argument("report needs at least one --results");
  }
  std::vector<metrics::ReportRow> rows;
  json jrows = json::array();
  fs::create_directories(ctx.out);
  for (const auto& path : a.results_paths) {
    auto records = load_run_records(path);
    if (records.empty()) throw std::invalid_argument("empty results: " + path);
    auto m = metrics::report(records, a.bins);
    metrics::ReportRow row;
    row.model_id = records.front().model_id;
    row.track = track_of(records);
    row.strategy = records.front().strategy;
    row.n = m.n;
    row.accuracy = m.accuracy;
    row.ece = m.ece;
    row.nll = m.nll;
    row.rms = m.rms;
    // Strategy strings like "dad:reasoner-x" would be hostile as filenames.
    std::string safe_strategy = row.strategy;
    for (auto& c : safe_strategy) {
      if (c == ':' || c == '/' || c == '\\') c = '_';
    }
    fs::path rel = ctx.out_path("reliability-" + row.model_id + "-" +
                                row.track + "-" + safe_strategy + ".csv");
    metrics::save_reliability_csv(rel.string(), m);
    json jrow = {{"model", row.model_id},   {"track", row.track},
                 {"strategy", row.strategy}, {"n", row.n},
                 {"accuracy", row.accuracy}, {"ece", row.ece},
                 {"nll", row.nll},           {"rms", row.rms},
                 {"reliability_csv", rel.string()}};
    jrows.push_back(jrow);
    rows.push_back(std::move(row));
  }
  fs::path csv = ctx.out_path("report.csv");
  fs::path jsn = ctx.out_path("report.json");
  metrics::save_report_csv(csv.string(), rows);
  write_text(jsn, json(jrows).dump(2) + "\n");
  return {{"csv", csv.string()}, {"json", jsn.string()}, {"rows", jrows}};
}

}  // namespace

int main(int argc, char** argv) {
  Ctx ctx;
  CLI::App app{"live multimodal cover benchmark pipeline"};
  app.require_subcommand(1);
  app.add_option("--config", ctx.config_path, "provider config JSON");
  app.add_option("--seed", ctx.seed, "deterministic seed");
  app.add_option("--parallelism", ctx.parallelism, "worker thread count")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", ctx.out, "output directory");

  std::function<json()> run;
  std::string command;
  auto arm = [&](CLI::App* sub, std::function<json()> fn) {
    sub->callback([&, sub, fn] {
      command = sub->get_name();
      run = fn;
    });
  };

  SynthArgs synth_args;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  c_synth->add_option("--dir", synth_args.dir, "corpus directory");
  c_synth->add_option("--journals", synth_args.journals, "journal count");
  c_synth->add_option("--issues", synth_args.issues, "issues per journal");
  c_synth->add_option("--topics", synth_args.topics, "topic count");
  c_synth->add_option("--width", synth_args.width, "cover width");
  c_synth->add_option("--height", synth_args.height, "cover height");
  c_synth->add_option("--duplicate-every", synth_args.duplicate_every,
                      "emit a duplicate record every N issues");
  arm(c_synth, [&] { return cmd_synth(ctx, synth_args); });

  IngestArgs ingest_args;
  auto* c_ingest = app.add_subcommand("ingest", "manifest -> snapshot");
  c_ingest->add_option("--manifest", ingest_args.manifest, "manifest.jsonl")
      ->required();
  c_ingest->add_option("--snapshot-dir", ingest_args.snapshot_dir,
                       "snapshot output directory");
  c_ingest->add_option("--window-start", ingest_args.window_start,
                       "YYYY-MM[-DD] inclusive");
  c_ingest->add_option("--window-end", ingest_args.window_end,
                       "YYYY-MM[-DD] inclusive");
  arm(c_ingest, [&] { return cmd_ingest(ctx, ingest_args); });

  EmbedArgs embed_args;
  auto* c_embed = app.add_subcommand("embed", "precompute embeddings");
  c_embed->add_option("--snapshot-dir", embed_args.snapshot_dir, "snapshot dir")
      ->required();
  c_embed
      ->add_option("--embedders", embed_args.embedders,
                   "embedder set name or comma list")
      ->required();
  arm(c_embed, [&] { return cmd_embed(ctx, embed_args); });

  CurateArgs curate_args;
  auto* c_curate = app.add_subcommand("curate", "build question tracks");
  c_curate
      ->add_option("--snapshot-dir", curate_args.snapshot_dir, "snapshot dir")
      ->required();
  c_curate
      ->add_option("--embedders", curate_args.embedders,
                   "embedder set name or comma list")
      ->required();
  c_curate->add_option("--direction", curate_args.direction,
                       "image2text | text2image | all");
  c_curate->add_option("--domain", curate_args.domain, "info | option | all");
  arm(c_curate, [&] { return cmd_curate(ctx, curate_args); });

  SelfcheckArgs selfcheck_args;
  auto* c_selfcheck =
      app.add_subcommand("selfcheck", "embedder pairing statistics");
  c_selfcheck
      ->add_option("--snapshot-dir", selfcheck_args.snapshot_dir,
                   "snapshot dir")
      ->required();
  c_selfcheck->add_option("--set", selfcheck_args.set_path, "question set JSON")
      ->required();
  c_selfcheck->add_option("--embedders", selfcheck_args.embedders,
                          "override the set's embedder list");
  arm(c_selfcheck, [&] { return cmd_selfcheck(ctx, selfcheck_args); });

  EvaluateArgs evaluate_args;
  auto* c_evaluate = app.add_subcommand("evaluate", "pose a set to a model");
  c_evaluate
      ->add_option("--snapshot-dir", evaluate_args.snapshot_dir, "snapshot dir")
      ->required();
  c_evaluate->add_option("--set", evaluate_args.set_path, "question set JSON")
      ->required();
  c_evaluate->add_option("--model", evaluate_args.model, "chat provider id")
      ->required();
  c_evaluate->add_option(
      "--strategy", evaluate_args.strategy,
      "direct | cot | one_shot | self_consistency");
  c_evaluate->add_option("--k", evaluate_args.k, "self_consistency samples");
  c_evaluate->add_option("--template", evaluate_args.template_id,
                         "prompt template id override");
  c_evaluate->add_option("--exemplar-id", evaluate_args.exemplar_id,
                         "one_shot exemplar question id");
  c_evaluate->add_option("--results", evaluate_args.results,
                         "results JSONL path (resume point)");
  arm(c_evaluate, [&] { return cmd_evaluate(ctx, evaluate_args); });

  DadArgs dad_args;
  auto* c_dad = app.add_subcommand("dad", "describe-then-deduce evaluation");
  c_dad->add_option("--snapshot-dir", dad_args.snapshot_dir, "snapshot dir")
      ->required();
  c_dad->add_option("--set", dad_args.set_path, "question set JSON")
      ->required();
  c_dad->add_option("--describer", dad_args.describer, "stage-1 provider id")
      ->required();
  c_dad->add_option("--reasoner", dad_args.reasoner, "stage-2 provider id")
      ->required();
  c_dad->add_option("--results", dad_args.results, "results JSONL path");
  c_dad->add_option("--dossiers", dad_args.dossiers, "dossier JSONL path");
  arm(c_dad, [&] { return cmd_dad(ctx, dad_args); });

  TextfreeArgs textfree_args;
  auto* c_textfree =
      app.add_subcommand("textfree", "mask cover text, clone the set");
  c_textfree
      ->add_option("--snapshot-dir", textfree_args.snapshot_dir, "snapshot dir")
      ->required();
  c_textfree->add_option("--set", textfree_args.set_path, "question set JSON")
      ->required();
  c_textfree->add_option("--ocr", textfree_args.ocr, "ocr provider id")
      ->required();
  c_textfree->add_option("--threshold", textfree_args.threshold,
                         "confidence threshold");
  arm(c_textfree, [&] { return cmd_textfree(ctx, textfree_args); });

  RefreshArgs refresh_args;
  auto* c_refresh =
      app.add_subcommand("refresh", "rebuild distractors, keep stems");
  c_refresh
      ->add_option("--snapshot-dir", refresh_args.snapshot_dir, "snapshot dir")
      ->required();
  c_refresh->add_option("--set", refresh_args.set_path, "question set JSON")
      ->required();
  c_refresh
      ->add_option("--embedders", refresh_args.embedders,
                   "new embedder set name or comma list")
      ->required();
  arm(c_refresh, [&] { return cmd_refresh(ctx, refresh_args); });

  AttributeArgs attribute_args;
  auto* c_attribute =
      app.add_subcommand("attribute", "error attribution per embedder");
  c_attribute
      ->add_option("--set", attribute_args.set_paths, "question set JSON")
      ->required();
  c_attribute
      ->add_option("--results", attribute_args.results_paths, "results JSONL")
      ->required();
  arm(c_attribute, [&] { return cmd_attribute(ctx, attribute_args); });

  CompareArgs compare_args;
  auto* c_compare = app.add_subcommand("compare", "delta between two runs");
  c_compare->add_option("--results-a", compare_args.results_a, "baseline run")
      ->required();
  c_compare->add_option("--results-b", compare_args.results_b, "candidate run")
      ->required();
  c_compare->add_option("--bins", compare_args.bins, "calibration bins");
  arm(c_compare, [&] { return cmd_compare(ctx, compare_args); });

  ReportArgs report_args;
  auto* c_report = app.add_subcommand("report", "metric table + reliability");
  c_report->add_option("--results", report_args.results_paths, "results JSONL")
      ->required();
  c_report->add_option("--bins", report_args.bins, "calibration bins");
  arm(c_report, [&] { return cmd_report(ctx, report_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    json err = {{"error", e.what()}, {"command", command}};
    std::cerr << err.dump() << "\n";
    return e.get_exit_code();
  }

  try {
    json summary = run();
    write_run_manifest(ctx, command);
    emit(summary);
  } catch (const std::exception& e) {
    json err = {{"error", e.what()}, {"command", command}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
