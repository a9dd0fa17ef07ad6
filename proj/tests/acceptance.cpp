// Acceptance runner: one PASS/FAIL line per primary criterion.
// Exit status is nonzero when any line fails.

#include "mcqforge/agreement.hpp"
#include "mcqforge/audit.hpp"
#include "mcqforge/bank.hpp"
#include "mcqforge/error.hpp"
#include "mcqforge/pipeline.hpp"
#include "mcqforge/quality.hpp"
#include "mcqforge/similarity.hpp"
#include "mcqforge/text.hpp"
#include "pipeline_rig.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mcqforge;
using testsupport::approve_all;
using testsupport::decision;
using testsupport::dump;
using testsupport::Rig;

namespace {

constexpr double kKappaTolerance = 0.001;
constexpr double kFloatTolerance = 1e-9;
constexpr double kTverskyBudgetSeconds = 10.0;
constexpr double kStateMachineBudgetSeconds = 30.0;
constexpr double kEndToEndBudgetSeconds = 5.0;
constexpr std::size_t kRandomPairs = 10000;
constexpr std::size_t kTraceDepth = 10;

// Collects failure messages; a criterion passes when none were recorded.
struct Check {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

template <typename F>
std::optional<ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

void kappa(Check& c) {
  struct Case {
    ContingencyTable t;
    double expected;
  };
  for (const auto& [t, expected] : {Case{{18, 0, 18, 22}, 0.432}, Case{{11, 7, 5, 35}, 0.501}}) {
    const auto r = cohen_kappa(t);
    c.expect(r.defined(), "kappa undefined");
    if (!r.defined()) continue;
    // Independent closed form in counts.
    const double a = t.a, b = t.b, cc = t.c, d = t.d;
    const double oracle = 2.0 * (a * d - b * cc) / ((a + b) * (b + d) + (a + cc) * (cc + d));
    c.expect(std::fabs(*r.kappa - expected) <= kKappaTolerance,
             "kappa " + fmt(*r.kappa) + " vs " + fmt(expected));
    c.expect(std::fabs(*r.kappa - oracle) <= kFloatTolerance, "kappa disagrees with closed form");
    c.note += (c.note.empty() ? "" : ", ") + fmt(*r.kappa);
  }
}

void contextual(Check& c) {
  const auto m = pairwise_matrix(testsupport::herd_features(), FeatureKind::contextual);
  for (const auto& cell : testsupport::kVerifiedCells)
    c.expect(m.at(cell.i - 1, cell.j - 1) == cell.value,
             "cell (" + std::to_string(cell.i) + "," + std::to_string(cell.j) + ") = " +
                 fmt(m.at(cell.i - 1, cell.j - 1)) + ", want " + fmt(cell.value));
  const auto r = compare_with_reference(m, testsupport::herd_reference("contextual"));
  c.expect(r.compared == 55, "compared " + std::to_string(r.compared) + " cells");
  bool saw_3_4 = false;
  for (const auto& e : r.mismatches) {
    saw_3_4 = saw_3_4 || (e.row == 2 && e.col == 3);
    for (const auto& cell : testsupport::kVerifiedCells)
      c.expect(!(e.row == cell.i - 1 && e.col == cell.j - 1), "verified cell in errata");
  }
  c.expect(saw_3_4, "errata report does not list (3,4)");
  c.expect(r.render(m.ids).find("(mcq3, mcq4)") != std::string::npos, "rendered errata missing (mcq3, mcq4)");
  c.note = std::to_string(testsupport::kVerifiedCells.size()) + " verified cells, " +
           std::to_string(r.mismatches.size()) + " errata of " + std::to_string(r.compared);
}

void tversky_properties(Check& c) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> w(0.0, 3.0);
  std::size_t bad = 0;
  for (std::size_t k = 0; k < kRandomPairs; ++k) {
    const auto a = testsupport::random_set(rng, 25), b = testsupport::random_set(rng, 25);
    const double theta = w(rng), alpha = w(rng), beta = w(rng), d = w(rng);
    const TverskyParams p{theta, alpha, beta};
    const double base = tversky_score(a, b, p);
    auto near = [](double x, double y) { return std::fabs(x - y) <= kFloatTolerance; };
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    const auto only_a = a.size() - inter, only_b = b.size() - inter;
    const bool ok =
        near(base, testsupport::brute_tversky(a, b, theta, alpha, beta)) &&
        near(tversky_score(a, b, {theta, alpha, alpha}), tversky_score(b, a, {theta, alpha, alpha})) &&
        near(tversky_score(a, a, p), theta * static_cast<double>(a.size())) &&
        near(tversky_score(a, b, {theta + d, alpha, beta}) - base, d * static_cast<double>(inter)) &&
        near(tversky_score(a, b, {theta - d, alpha, beta}) - base, -d * static_cast<double>(inter)) &&
        near(tversky_score(a, b, {theta, alpha + d, beta}) - base, -d * static_cast<double>(only_a)) &&
        near(tversky_score(a, b, {theta, alpha, beta + d}) - base, -d * static_cast<double>(only_b));
    if (!ok) ++bad;
    // Disjoint split of the same draw.
    std::set<std::string> left, right;
    for (const auto& x : a) (std::stoi(x.substr(1)) % 2 ? left : right).insert(x);
    if (!near(tversky_score(left, right, p),
              -alpha * static_cast<double>(left.size()) - beta * static_cast<double>(right.size())))
      ++bad;
  }
  c.expect(bad == 0, std::to_string(bad) + " property violations");
  c.note = std::to_string(kRandomPairs) + " random pairs";
}

void linguistic(Check& c) {
  const auto items = testsupport::herd_items();
  std::vector<FeatureSet> sets;
  for (const auto& it : items) sets.push_back(tokenize_linguistic(linguistic_text(it), {}, it.id));
  const auto m = pairwise_matrix(sets, FeatureKind::linguistic);
  c.expect(m.symmetric(), "matrix not symmetric");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto want = testsupport::oracle_distinct_tokens(linguistic_text(items[i]));
    c.expect(m.at(i, i) == static_cast<double>(want),
             items[i].id + " diagonal " + fmt(m.at(i, i)) + ", want " + std::to_string(want));
  }
  c.note = std::to_string(items.size()) + " diagonals";
}

McqItem lint_item(const std::string& lead, const std::vector<std::string>& options, int correct) {
  std::string raw = lead + "\n";
  for (std::size_t i = 0; i < options.size(); ++i)
    raw += std::string(1, static_cast<char>('A' + i)) + ") " + options[i] +
           (static_cast<int>(i) == correct ? " (correct)" : "") + "\n";
  return testsupport::parse_or_die(raw, "q");
}

void linter(Check& c) {
  const auto session = testsupport::session_items();
  for (const auto& s : session) {
    const auto v = check_criterion2(testsupport::parse_or_die(s.text));
    c.expect(v.passed(), s.role + " fails criterion 2: " + v.rationale);
  }

  auto eight = testsupport::parse_or_die(session[3].text);
  eight.options[0] = "one two three four five six seven";
  c.expect(check_criterion2(eight).passed(), "7-word option rejected");
  eight.options[0] += " eight";
  c.expect(!check_criterion2(eight).passed(), "8-word option accepted");

  auto two = testsupport::parse_or_die(session[2].text);
  c.expect(check_criterion2(two).passed(), "3-sentence lead-in rejected");
  two.stem = text::replace_all(two.stem, "concerns. The planting", "concerns; the planting");
  c.expect(text::sentence_count(two.lead_in()) == 2, "mutation did not yield 2 sentences");
  c.expect(!check_criterion2(two).passed(), "2-sentence lead-in accepted");

  // General terms shared between stem and key are acceptable.
  const auto general = lint_item(
      "A hospital ward reports an outbreak caused by bacteria resistant to common drugs. "
      "Doctors isolate a virus that infects only that cell type. Patients improve within days. "
      "Which treatment did the doctors use?",
      {"Phage lysing the bacteria cell", "Broad antibiotic course", "Antifungal cream", "Vitamin supplements",
       "Surgical drainage"},
      0);
  c.expect(check_criterion9_lexical(general).passed(), "general terms flagged");

  // Unique terms are fine when a distractor repeats them, flagged otherwise.
  const std::string lead =
      "Researchers culture a strain that survives a new antibiotic. Sequencing reveals a mutation in a "
      "porin gene. The drug no longer accumulates inside the organism. Which change explains survival?";
  const auto exempt = lint_item(lead,
                                {"Porin mutation limiting uptake", "Porin overexpression", "Efflux pump mutation",
                                 "Target enzyme duplication", "Biofilm formation"},
                                0);
  c.expect(check_criterion9_lexical(exempt).passed(), "distractor exemption not applied");
  const auto salient = lint_item(lead,
                                 {"Porin mutation limiting uptake", "Efflux pump activation",
                                  "Target enzyme duplication", "Biofilm formation", "Capsule thickening"},
                                 0);
  c.expect(!check_criterion9_lexical(salient).passed(), "salient porin/mutation not flagged");
  const auto nutrient = lint_item(
      "Farmers add compost rich in nutrients to a field. Crop yields rise the next season. Soil tests "
      "change as well. What most likely explains the rise?",
      {"Better nutrient supply", "Lower rainfall", "Fewer pollinators", "Colder nights", "Later sowing"}, 0);
  c.expect(!check_criterion9_lexical(nutrient).passed(), "nutrient root not flagged");
  const auto resistance = lint_item(
      "A clinic tracks infections that show resistance to a first-line drug. Cases double in a year. "
      "Which factor drives the trend?",
      {"Spreading resistance genes", "Seasonal humidity", "New hospital beds", "Staff rotation", "Diet change"}, 0);
  c.expect(!check_criterion9_lexical(resistance).passed(), "resistance not flagged");
}

PipelineSession drive_to_g3(Rig& r) {
  auto s = r.pipeline.start_prototype_session(testsupport::session_input());
  auto d1 = decision(Gate::G1_concept_map, GateAction::select);
  d1.node = "Ecological Roles";
  s = r.pipeline.submit_gate_decision(s.id, d1);
  auto d2 = decision(Gate::G2_question_answer, GateAction::select);
  d2.index = 2;
  return r.pipeline.submit_gate_decision(s.id, d2);
}

void state_machine(Check& c) {
  const auto st = testsupport::enumerate_traces(kTraceDepth);
  for (const auto& v : st.violations) c.expect(false, v);
  c.expect(st.adjustment_cap_reached, "enumeration never reached the adjustment cap");
  c.expect(st.terminal_kinds.count("completed") && st.terminal_kinds.count("rejected"),
           "enumeration missed a terminal stage");

  Rig r;
  const auto s = drive_to_g3(r);
  const auto id = s.artifacts.candidates[0].id;
  for (int i = 0; i < 4; ++i) r.pipeline.apply_adjustment_prompt(s.id, id, 9);
  auto before = dump(r.pipeline.get(s.id));
  c.expect(error_of([&] { r.pipeline.apply_adjustment_prompt(s.id, id, 9); }) == ErrorCode::budget_exhausted,
           "5th adjustment not refused");
  c.expect(dump(r.pipeline.get(s.id)) == before, "5th adjustment changed state");

  const auto& cand = s.artifacts.candidates[3];
  const auto original = render_mcq(*cand.item);
  const auto words = text::words(original);
  std::string eleven;
  for (std::size_t i = 0; i < words.size(); ++i)
    eleven += (i ? " " : "") + (i < 11 ? "x" + std::to_string(i) : words[i]);
  c.expect(word_edit_distance(original, eleven) == 11, "edit is not 11 words");
  before = dump(r.pipeline.get(s.id));
  c.expect(error_of([&] { r.pipeline.apply_manual_edit(s.id, cand.id, eleven); }) == ErrorCode::budget_exhausted,
           "11-word edit not refused");
  c.expect(dump(r.pipeline.get(s.id)) == before, "11-word edit changed state");
  c.note = std::to_string(st.explored) + " actions, " + std::to_string(st.states.size()) + " states";
}

void end_to_end(Check& c) {
  Rig r;
  auto s = drive_to_g3(r);
  c.expect(s.stage == SessionStage::gate_G3, "session did not reach G3: " + s.failure);
  s = approve_all(r, s);
  c.expect(s.stage == SessionStage::completed, "session not completed");
  const auto expected = testsupport::session_items();
  const auto items = s.items();
  c.expect(items.size() == 4 && expected.size() == 4, "expected 4 items, got " + std::to_string(items.size()));
  auto norm = [](const std::string& t) { return text::collapse_whitespace(text::trim(t)); };
  for (std::size_t i = 0; i < std::min(items.size(), expected.size()); ++i) {
    c.expect(norm(render_mcq(items[i])) == norm(expected[i].text), expected[i].role + " text differs");
    const auto& p = items[i].provenance;
    c.expect(p.source_role == expected[i].role, expected[i].role + " provenance role");
    c.expect(p.session_id == s.id, expected[i].role + " provenance session");
    c.expect(p.prompt_ids.size() == 1 && r.log.find(p.prompt_ids[0]), expected[i].role + " provenance prompt");
  }
  const auto archive = audit_export(r.pipeline, r.log, s.id);
  const auto problems = verify_archive(archive);
  for (const auto& p : problems) c.expect(false, "audit: " + p);
  c.expect(archive.transcripts.size() == s.dispatches.size(), "audit transcript count");
  c.note = std::to_string(items.size()) + " items, " + std::to_string(archive.transcripts.size()) + " transcripts";
}

void variants(Check& c) {
  std::mt19937_64 rng(3);
  ItemBank bank;
  bank.id = "exam";
  bank.discipline = "biology";
  for (int s = 0; s < 3; ++s) {
    const auto label = "concept " + std::to_string(s);
    auto proto = testsupport::random_item(rng, "p" + std::to_string(s));
    proto.status = ItemStatus::accepted;
    add_prototype(bank, label, proto);
    std::vector<McqItem> series;
    SeriesEvidence ev;
    ev.match.prototype_id = proto.id;
    ev.match.main_concepts = label;
    for (int k = 0; k < 5; ++k) {
      auto item = testsupport::random_item(rng, "s" + std::to_string(s) + "-" + std::to_string(k));
      item.status = ItemStatus::accepted;
      ev.match.candidates.push_back({item.id, true});
      series.push_back(std::move(item));
    }
    ev.match.percentage = conceptual_percentage(5, 5);
    attach_series(bank, label, series, ev);
  }
  const auto vs = compile_variants(bank, 5, 42);
  c.expect(vs.size() == 5, "expected 5 variants");
  std::set<std::string> used;
  for (const auto& v : vs) {
    c.expect(v.item_ids.size() == 3, "variant does not cover every slot");
    for (std::size_t s = 0; s < v.item_ids.size() && s < 3; ++s) {
      const auto& ids = bank.slots[s].series_ids;
      c.expect(std::find(ids.begin(), ids.end(), v.item_ids[s]) != ids.end(), "item from the wrong slot");
      c.expect(used.insert(v.item_ids[s]).second, "item reused: " + v.item_ids[s]);
    }
  }
  c.expect(used.size() == 15, "coverage " + std::to_string(used.size()) + " of 15");
  c.expect(error_of([&] { compile_variants(bank, 6, 42); }) == ErrorCode::validation, "n=6 not refused");
  c.note = std::to_string(vs.size()) + " variants over " + std::to_string(used.size()) + " items";
}

void originality(Check& c) {
  std::string corpus_text;
  for (int i = 0; i < 60; ++i) corpus_text += "c" + std::to_string(i) + " ";
  ShingleIndex corpus(5);
  corpus.add_document(corpus_text);
  std::size_t cases = 0;
  for (int copied = 0; copied <= 40; ++copied)
    for (int fresh = 5; fresh <= 30; fresh += 5) {
      std::string item;
      for (int i = 0; i < copied; ++i) item += "c" + std::to_string(i) + " ";
      for (int i = 0; i < fresh; ++i) item += "n" + std::to_string(i) + " ";
      // Copied run of k words contributes k-4 shingles; every shingle is distinct.
      const auto total = static_cast<std::size_t>(copied + fresh - 4);
      const auto found = static_cast<std::size_t>(std::max(copied - 4, 0));
      const auto r = originality_overlap(item, corpus);
      const double want = 100.0 * static_cast<double>(found) / static_cast<double>(total);
      c.expect(r.total == total && r.found == found && r.percentage == want,
               "copied " + std::to_string(copied) + " fresh " + std::to_string(fresh) + ": " + fmt(r.percentage) +
                   " want " + fmt(want));
      c.expect(r.passed == (want < 10.0), "verdict at " + fmt(want));
      ++cases;
    }
  c.expect(!originality_passes(10.0), "10.0 passes");
  c.expect(originality_passes(9.99), "9.99 fails");
  ShingleIndex small(5);
  small.add_document("alpha beta gamma delta epsilon");
  const auto at = originality_overlap("alpha beta gamma delta epsilon n1 n2 n3 n4 n5 n6 n7 n8 n9", small);
  c.expect(at.percentage == 10.0 && !at.passed, "exactly 10% of shingles passes");
  c.note = std::to_string(cases) + " constructed items";
}

struct Criterion {
  const char* name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"kappa_reproduction", 0, kappa},
      {"contextual_tversky_reproduction", 0, contextual},
      {"tversky_property_suite", kTverskyBudgetSeconds, tversky_properties},
      {"linguistic_similarity_sanity", 0, linguistic},
      {"criteria_linter", 0, linter},
      {"pipeline_state_machine", kStateMachineBudgetSeconds, state_machine},
      {"end_to_end_mock_run", kEndToEndBudgetSeconds, end_to_end},
      {"variant_compiler", 0, variants},
      {"originality_screen", 0, originality},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_seconds > 0 && secs >= cr.budget_seconds)
      c.failures.push_back("took " + fmt(secs) + " s, budget " + fmt(cr.budget_seconds) + " s");
    const bool ok = c.failures.empty();
    if (!ok) ++failed;
    std::printf("%s %s (%.3f s)%s%s\n", ok ? "PASS" : "FAIL", cr.name, secs, c.note.empty() ? "" : ": ",
                c.note.c_str());
    for (const auto& f : c.failures) std::printf("    %s\n", f.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
