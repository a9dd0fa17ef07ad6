#pragma once

// Nine-criteria quality engine: deterministic checks for criterion 2 and the
// lexical half of criterion 9, evaluator-prompt checks for the rest, and
// aggregation into accept/reject with failed-criterion codes.

#include "mcqforge/criteria.hpp"
#include "mcqforge/item.hpp"

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mcqforge {

class ProviderHub;

// Criterion 9 is judged in two halves; `whole` covers both.
enum class Facet { whole, lexical, semantic };

struct CriterionRef {
  int id = 1;
  Facet facet = Facet::whole;

  bool operator==(const CriterionRef&) const = default;
};

std::string to_string(const CriterionRef& c);  // "2", "9-lexical", "9-semantic"
CriterionRef criterion_from_string(std::string_view s);

enum class EvaluatorKind { deterministic, automated, human };

struct Evaluator {
  EvaluatorKind kind = EvaluatorKind::deterministic;
  std::string name;  // provider role for automated, reviewer identity for human

  bool operator==(const Evaluator&) const = default;
};

std::string_view to_string(EvaluatorKind k);
EvaluatorKind evaluator_kind_from_string(std::string_view s);

enum class Verdict { pass, fail };

struct CriterionVerdict {
  CriterionRef criterion;
  Verdict verdict = Verdict::fail;
  Evaluator evaluator;
  std::string rationale;
  std::vector<std::string> evidence;

  bool passed() const { return verdict == Verdict::pass; }
  bool operator==(const CriterionVerdict&) const = default;
};

struct QualityReport {
  std::string item_id;
  std::vector<CriterionVerdict> verdicts;
  bool accepted = false;
  std::vector<int> failed_ids;  // ascending

  // "acceptable" or the comma-separated failed ids, e.g. "4,8,9".
  std::string compact() const;
};

struct LexicalConfig {
  std::set<std::string> stoplist;
  std::set<std::string> general_terms;

  static LexicalConfig defaults();
  static LexicalConfig load(const std::string& stoplist_path, const std::string& general_terms_path);
};

const std::vector<std::string>& default_stopwords();
const std::vector<std::string>& default_general_terms();
std::set<std::string> load_word_list(const std::string& path);

// Strips plural and verb suffixes only (-s, -es, -ies, -ing, -ed, final -e).
std::string stem_word(std::string_view word);

// Lowercased, stemmed, non-stoplist, non-general terms of a text.
std::set<std::string> content_terms(std::string_view text, const LexicalConfig& config);

CriterionVerdict check_criterion2(const McqItem& item);
CriterionVerdict check_criterion9_lexical(const McqItem& item,
                                          const LexicalConfig& config = LexicalConfig::defaults());

// {1, 3, 4, 5, 6, 7, 8, 9-semantic}
std::vector<CriterionRef> semantic_criteria();

std::string build_evaluation_prompt(const McqItem& item, const std::vector<CriterionRef>& criteria);

// Per-criterion "C<n>: PASS|FAIL - rationale" lines. Criteria without a
// readable answer fail with rationale "evaluator response unparseable";
// a response with no readable answer at all throws parse_failure.
std::vector<CriterionVerdict> parse_evaluation(std::string_view response,
                                               const std::vector<CriterionRef>& criteria,
                                               const Evaluator& evaluator);

std::vector<CriterionVerdict> evaluate_semantic_criteria(ProviderHub& hub, const McqItem& item,
                                                         const std::vector<CriterionRef>& criteria,
                                                         const std::string& role);

enum class GoverningPolicy { deterministic_first, human_overrides };

std::string_view to_string(GoverningPolicy p);
GoverningPolicy governing_policy_from_string(std::string_view s);

// deterministic_first: deterministic > human > automated.
// human_overrides:     human > deterministic > automated.
// Within the governing evaluator kind, any fail fails the facet. Criterion 9
// passes only if both halves pass. Throws validation if a criterion (or half
// of 9) has no verdict at all.
QualityReport aggregate(const McqItem& item, const std::vector<CriterionVerdict>& verdicts,
                        GoverningPolicy policy);

// Deterministic verdicts only (criterion 2 and 9-lexical).
std::vector<CriterionVerdict> lint(const McqItem& item,
                                   const LexicalConfig& config = LexicalConfig::defaults());

}  // namespace mcqforge
