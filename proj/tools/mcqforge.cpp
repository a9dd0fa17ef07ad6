// Command-line front end for the generation pipeline, the linter, the
// similarity and agreement metrics, and the bank compiler.

#include "mcqforge/agreement.hpp"
#include "mcqforge/audit.hpp"
#include "mcqforge/bank.hpp"
#include "mcqforge/error.hpp"
#include "mcqforge/pipeline.hpp"
#include "mcqforge/quality.hpp"
#include "mcqforge/serialization.hpp"
#include "mcqforge/similarity.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace mcqforge;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::validation, "malformed JSON in " + path, e.what());
  }
}

// Relative fixture paths in a provider config are taken from the config's
// own directory.
ProviderConfig provider_config(const std::string& path, bool force_mock) {
  ProviderConfig cfg = path.empty() ? ProviderConfig::all_mock() : load_provider_config(path);
  if (cfg.mock_fixtures && fs::path(*cfg.mock_fixtures).is_relative() && !path.empty())
    cfg.mock_fixtures = (fs::path(path).parent_path() / *cfg.mock_fixtures).string();
  if (force_mock)
    for (auto& [_, bc] : cfg.roles) bc.kind = BackendKind::mock;
  return cfg;
}

PromptTemplates templates_from(const std::string& dir) {
  return dir.empty() ? PromptTemplates::defaults() : PromptTemplates::load_dir(dir);
}

void write_out(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::config, "cannot write " + path);
  out << body;
}

struct Common {
  std::string config;
  std::string templates;
  std::string transcripts;
  bool mock = false;
};

GateDecision scripted(Gate gate, GateAction action) {
  GateDecision d;
  d.gate = gate;
  d.action = action;
  d.reviewer = "cli-script";
  return d;
}

// Drives a prototype session with a fixed script: the G1 node, the G2
// question number, then approve every parsed item.
int cmd_generate(const Common& c, const std::string& input_path, const std::string& node,
                 int index, const std::string& out_items, const std::string& out_audit) {
  TranscriptLog log("tr", c.transcripts.empty() ? std::nullopt
                                                : std::optional<std::string>(c.transcripts));
  ProviderHub hub(provider_config(c.config, c.mock), log);
  Pipeline pipeline(hub, templates_from(c.templates));

  json doc = read_json(input_path);
  const json in = doc.contains("input") ? doc["input"] : doc;
  std::string g1 = node;
  int g2 = index;
  if (doc.contains("script")) {
    if (g1.empty()) g1 = doc["script"].value("g1_node", "");
    if (g2 <= 0) g2 = doc["script"].value("g2_index", 0);
  }
  if (g1.empty() || g2 <= 0) throw Error(ErrorCode::validation, "need --node and --index (or a script block)");

  auto s = pipeline.start_prototype_session(in.get<GenerationInput>());
  const auto check = [&] {
    if (s.stage == SessionStage::failed) throw Error(ErrorCode::provider_failure, s.failure);
  };
  check();
  auto d1 = scripted(Gate::G1_concept_map, GateAction::select);
  d1.node = g1;
  s = pipeline.submit_gate_decision(s.id, d1);
  check();
  auto d2 = scripted(Gate::G2_question_answer, GateAction::select);
  d2.index = g2;
  s = pipeline.submit_gate_decision(s.id, d2);
  check();
  const auto candidates = s.artifacts.candidates;
  for (const auto& cand : candidates) {
    if (!cand.item) {
      std::cerr << "candidate " << cand.id << " did not parse: " << cand.report->summary() << "\n";
      continue;
    }
    auto d3 = scripted(Gate::G3_item, GateAction::approve);
    d3.target_item = cand.id;
    s = pipeline.submit_gate_decision(s.id, d3);
  }
  s = pipeline.get(s.id);
  write_out(out_items, to_jsonl(s.items()));
  if (!out_audit.empty()) write_out(out_audit, json(audit_export(pipeline, log, s.id)).dump(2) + "\n");
  std::cerr << "session " << s.id << ": " << to_string(s.stage) << ", " << s.items().size()
            << " item(s)\n";
  return 0;
}

int cmd_one_step(const Common& c, const std::string& input_path, int count, const std::string& out) {
  TranscriptLog log;
  ProviderHub hub(provider_config(c.config, c.mock), log);
  Pipeline pipeline(hub, templates_from(c.templates));
  json doc = read_json(input_path);
  auto input = (doc.contains("input") ? doc["input"] : doc).get<GenerationInput>();
  if (count > 0) input.requested_items = count;
  auto r = pipeline.run_one_step(input);
  if (r.session.stage == SessionStage::failed) throw Error(ErrorCode::provider_failure, r.session.failure);
  write_out(out, to_jsonl(r.items));
  std::cerr << r.items.size() << " parsed, " << r.reports.size() << " unparsed\n";
  return 0;
}

int cmd_series(const Common& c, const std::string& prototype_path, const std::string& mode,
               int count, const std::string& out) {
  TranscriptLog log;
  ProviderHub hub(provider_config(c.config, c.mock), log);
  Pipeline pipeline(hub, templates_from(c.templates));
  auto protos = read_items_file(prototype_path);
  if (protos.size() != 1) throw Error(ErrorCode::validation, "prototype file must hold one item");
  const auto sm = mode == "concept" ? SeriesMode::concept_derived : SeriesMode::example_based;
  auto s = pipeline.start_series_session(protos.front(), sm, count);
  if (s.stage == SessionStage::failed) throw Error(ErrorCode::provider_failure, s.failure);
  std::vector<McqItem> parsed;
  for (const auto& cand : s.artifacts.candidates)
    if (cand.item) parsed.push_back(*cand.item);
  write_out(out, to_jsonl(parsed));
  std::cerr << "session " << s.id << " at " << to_string(s.stage) << " with " << parsed.size()
            << " candidate(s)\n";
  return 0;
}

int cmd_lint(const std::string& path, bool as_json) {
  std::vector<McqItem> items;
  if (fs::path(path).extension() == ".txt") {
    for (const auto& chunk : split_items(slurp(path))) {
      auto r = parse_mcq(chunk);
      if (!parsed_ok(r)) {
        std::cerr << "unparsed item: " << std::get<ParseReport>(r).summary() << "\n";
        continue;
      }
      auto item = std::get<McqItem>(r);
      item.id = "item" + std::to_string(items.size() + 1);
      items.push_back(std::move(item));
    }
  } else {
    items = read_items_file(path);
  }
  int failures = 0;
  json all = json::array();
  for (const auto& item : items) {
    const auto verdicts = lint(item);
    for (const auto& v : verdicts) {
      if (!v.passed()) ++failures;
      if (!as_json)
        std::cout << item.id << "\t" << to_string(v.criterion) << "\t"
                  << (v.passed() ? "PASS" : "FAIL") << "\t" << v.rationale << "\n";
    }
    all.push_back({{"item_id", item.id}, {"verdicts", verdicts}});
  }
  if (as_json) std::cout << all.dump(2) << "\n";
  return failures == 0 ? 0 : 1;
}

int cmd_similarity(const std::string& features, const std::string& items_path,
                   const std::string& reference, double theta, double alpha, double beta,
                   bool full_csv) {
  TverskyParams params{theta, alpha, beta};
  std::vector<FeatureSet> sets;
  FeatureKind kind;
  if (!features.empty()) {
    kind = FeatureKind::contextual;
    sets = read_feature_file(features, kind);
  } else {
    kind = FeatureKind::linguistic;
    for (const auto& item : read_items_file(items_path))
      sets.push_back(tokenize_linguistic(linguistic_text(item), {}, item.id));
  }
  const auto m = pairwise_matrix(sets, kind, params);
  std::cout << to_csv(m, full_csv ? CsvPrecision::full : CsvPrecision::one_decimal);
  std::cout << "all pairs: " << format_summary(summarize_all_pairs(m))
            << "\nprototype row: " << format_summary(summarize_prototype_row(m)) << "\n";
  if (!reference.empty()) {
    const json ref = read_json(reference);
    const json grid = ref.contains(std::string(to_string(kind))) ? ref[std::string(to_string(kind))] : ref;
    ReferenceGrid g;
    for (const auto& row : grid) {
      std::vector<std::optional<double>> r;
      for (const auto& v : row) r.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
      g.push_back(std::move(r));
    }
    std::cout << compare_with_reference(m, g).render(m.ids);
  }
  return 0;
}

int cmd_kappa(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d, const std::string& label) {
  ContingencyTable t{a, b, c, d};
  const auto r = cohen_kappa(t);
  std::cout << kappa_report(t, r, label);
  return r.defined() ? 0 : 1;
}

int cmd_originality(const std::string& text_path, const std::vector<std::string>& corpus,
                    std::size_t size) {
  ShingleIndex index(size);
  for (const auto& p : corpus) index.add_document(slurp(p));
  const auto r = originality_overlap(slurp(text_path), index);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu/%zu shingles found (%.2f%%): %s\n", r.found, r.total,
                r.percentage, r.passed ? "original" : "too close to corpus");
  std::cout << buf;
  return r.passed ? 0 : 1;
}

int cmd_bank_compile(const std::string& dir, const std::string& id, int n, std::uint64_t seed,
                     bool reuse, const std::string& out_dir) {
  const auto bank = load_bank(dir, id);
  const auto variants = compile_variants(bank, n, seed, reuse ? VariantMode::reuse : VariantMode::strict);
  if (!out_dir.empty()) fs::create_directories(out_dir);
  for (const auto& v : variants) {
    const auto sheet = render_exam_sheet(bank, v);
    if (out_dir.empty())
      std::cout << "== " << v.id << " ==\n" << sheet << "\n";
    else
      write_out((fs::path(out_dir) / (v.id + ".txt")).string(), sheet);
  }
  const auto key = render_answer_key(bank, variants);
  if (out_dir.empty())
    std::cout << "== answer key ==\n" << key;
  else
    write_out((fs::path(out_dir) / "answer_key.txt").string(), key);
  return 0;
}

int cmd_templates_dump(const std::string& dir) {
  fs::create_directories(dir);
  const auto t = PromptTemplates::defaults();
  for (const auto& name : t.names()) write_out((fs::path(dir) / (name + ".txt")).string(), t.get(name) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcqforge: staged MCQ generation, screening and item banking"};
  app.require_subcommand(1);
  Common common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "provider config JSON");
    sub->add_option("--templates", common.templates, "prompt template directory");
    sub->add_flag("--mock", common.mock, "force every role onto the fixture mock");
  };

  std::string input, node, out, audit, prototype, mode = "example", features, items, reference;
  int index = 0, count = 0;
  auto* gen = app.add_subcommand("generate", "run a prototype session with a scripted reviewer");
  add_common(gen);
  gen->add_option("--input", input, "generation input (or fixture with input/script)")->required();
  gen->add_option("--node", node, "concept to select at G1");
  gen->add_option("--index", index, "question number to select at G2");
  gen->add_option("--out", out, "items JSONL (stdout by default)");
  gen->add_option("--audit", audit, "write the audit archive here");
  gen->add_option("--transcripts", common.transcripts, "append transcripts to this JSONL file");

  auto* one = app.add_subcommand("one-step", "single-prompt baseline generation");
  add_common(one);
  one->add_option("--input", input)->required();
  one->add_option("--count", count, "items to request");
  one->add_option("--out", out);

  auto* series = app.add_subcommand("series", "generate a series from an accepted prototype");
  add_common(series);
  series->add_option("--prototype", prototype, "items file holding the prototype")->required();
  series->add_option("--mode", mode, "example | concept")->check(CLI::IsMember({"example", "concept"}));
  series->add_option("--count", count = 5);
  series->add_option("--out", out);

  bool as_json = false;
  auto* lint_cmd = app.add_subcommand("lint", "deterministic checks (criterion 2, lexical 9)");
  lint_cmd->add_option("items", items, "items file (.json/.jsonl, or .txt of raw MCQs)")->required();
  lint_cmd->add_flag("--json", as_json);

  double theta = 1.0, alpha = 0.5, beta = 0.5;
  bool full = false;
  auto* sim = app.add_subcommand("similarity", "pairwise Tversky matrix");
  auto* fopt = sim->add_option("--features", features, "contextual feature file");
  auto* iopt = sim->add_option("--items", items, "items file for linguistic similarity");
  fopt->excludes(iopt);
  sim->add_option("--reference", reference, "reference grid for an errata report");
  sim->add_option("--theta", theta);
  sim->add_option("--alpha", alpha);
  sim->add_option("--beta", beta);
  sim->add_flag("--full", full, "full-precision CSV");

  std::int64_t a = 0, b = 0, c = 0, d = 0;
  std::string label;
  auto* kappa = app.add_subcommand("kappa", "Cohen's kappa from a 2x2 table");
  kappa->add_option("a", a, "both accept")->required();
  kappa->add_option("b", b, "human accept, machine reject")->required();
  kappa->add_option("c", c, "human reject, machine accept")->required();
  kappa->add_option("d", d, "both reject")->required();
  kappa->add_option("--label", label);

  std::string text_path;
  std::vector<std::string> corpus;
  std::size_t shingle = 5;
  auto* orig = app.add_subcommand("originality", "shingle overlap against a corpus");
  orig->add_option("text", text_path)->required();
  orig->add_option("--corpus", corpus)->required();
  orig->add_option("--shingle-size", shingle);

  auto* bank = app.add_subcommand("bank", "item bank operations");
  bank->require_subcommand(1);
  std::string bank_dir, bank_id, out_dir;
  int n = 1;
  std::uint64_t seed = 0;
  bool reuse = false;
  auto* compile = bank->add_subcommand("compile", "compile exam variants from the secret pool");
  compile->add_option("--dir", bank_dir)->required();
  compile->add_option("--id", bank_id)->required();
  compile->add_option("-n", n)->required();
  compile->add_option("--seed", seed);
  compile->add_flag("--reuse", reuse, "cycle series instead of refusing n above the smallest");
  compile->add_option("--out", out_dir, "directory for sheets and the answer key");

  std::string tdir;
  auto* tpl = app.add_subcommand("templates", "write the built-in prompt templates to a directory");
  tpl->add_option("dir", tdir)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_generate(common, input, node, index, out, audit);
    if (one->parsed()) return cmd_one_step(common, input, count, out);
    if (series->parsed()) return cmd_series(common, prototype, mode, count, out);
    if (lint_cmd->parsed()) return cmd_lint(items, as_json);
    if (sim->parsed()) {
      if (features.empty() && items.empty()) throw Error(ErrorCode::validation, "need --features or --items");
      return cmd_similarity(features, items, reference, theta, alpha, beta, full);
    }
    if (kappa->parsed()) return cmd_kappa(a, b, c, d, label);
    if (orig->parsed()) return cmd_originality(text_path, corpus, shingle);
    if (compile->parsed()) return cmd_bank_compile(bank_dir, bank_id, n, seed, reuse, out_dir);
    if (tpl->parsed()) return cmd_templates_dump(tdir);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what();
    if (!e.detail().empty()) std::cerr << " [" << e.detail() << "]";
    std::cerr << "\n";
    return 2;
  }
  return 0;
}
