#pragma once

// Tversky feature-model similarity over linguistic (token) and contextual
// (scenario feature) sets, pairwise matrices, conceptual-match screening and
// shingle-based originality screening.

#include "mcqforge/item.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace mcqforge {

class ProviderHub;

struct TverskyParams {
  double theta = 1.0;
  double alpha = 0.5;
  double beta = 0.5;

  void validate() const;  // throws validation on non-finite values
  bool operator==(const TverskyParams&) const = default;
};

enum class FeatureKind { linguistic, contextual };

std::string_view to_string(FeatureKind k);
FeatureKind feature_kind_from_string(std::string_view s);

struct FeatureSet {
  std::string item_id;
  FeatureKind kind = FeatureKind::contextual;
  std::set<std::string> features;

  bool operator==(const FeatureSet&) const = default;
};

// Lowercase + whitespace collapse. Idempotent.
std::string normalize_feature(std::string_view s);
FeatureSet make_feature_set(std::string item_id, FeatureKind kind,
                            const std::vector<std::string>& raw_features);

double tversky_score(const std::set<std::string>& a, const std::set<std::string>& b,
                     const TverskyParams& params = {});
// Throws validation when the kinds differ.
double tversky_score(const FeatureSet& a, const FeatureSet& b, const TverskyParams& params = {});

struct LinguisticPolicy {
  bool keep_stopwords = true;
  bool stemming = false;
  bool include_options = true;
  bool include_explanation = false;
};

// Lowercases, drops punctuation (hyphens inside a word are kept, apostrophes
// are removed), splits on whitespace.
std::vector<std::string> linguistic_tokens(std::string_view text);
// Distinct tokens under the policy. Throws validation if none remain.
FeatureSet tokenize_linguistic(std::string_view text, const LinguisticPolicy& policy = {},
                               std::string item_id = {});
// The text compared for an item: stem, question and, per policy, options and
// explanation.
std::string linguistic_text(const McqItem& item, const LinguisticPolicy& policy = {});

// Reads a bulleted (or numbered) list into normalized features. Throws
// parse_failure if nothing list-like is found.
std::vector<std::string> parse_feature_list(std::string_view response);

// Manual feature sets take precedence over extraction.
class FeatureRegistry {
 public:
  void set_override(FeatureSet set);
  bool clear_override(const std::string& item_id, FeatureKind kind);
  std::optional<FeatureSet> get(const std::string& item_id, FeatureKind kind) const;

  // Override if present; otherwise one dispatch to `role` and the parsed
  // result is cached.
  FeatureSet contextual(ProviderHub& hub, const McqItem& item, const std::string& concept_label,
                        const std::string& role = "feature_extractor");

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, FeatureKind>, FeatureSet> overrides_;
  std::map<std::string, FeatureSet> extracted_;
};

FeatureSet extract_contextual_features(ProviderHub& hub, const McqItem& item,
                                       const std::string& concept_label,
                                       const std::string& role = "feature_extractor");

struct SimilarityMatrix {
  FeatureKind kind = FeatureKind::contextual;
  TverskyParams params;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> values;

  std::size_t size() const { return ids.size(); }
  double at(std::size_t i, std::size_t j) const { return values.at(i).at(j); }
  bool symmetric(double tol = 0.0) const;
};

// Needs at least two sets, all of `kind`, with distinct ids.
SimilarityMatrix pairwise_matrix(const std::vector<FeatureSet>& sets, FeatureKind kind,
                                 const TverskyParams& params = {});

struct MatrixSummary {
  double mean = 0.0;
  double sd = 0.0;  // population
  std::size_t pairs = 0;
};

// Every unordered off-diagonal pair.
MatrixSummary summarize_all_pairs(const SimilarityMatrix& m);
// Row `prototype` against every other item.
MatrixSummary summarize_prototype_row(const SimilarityMatrix& m, std::size_t prototype = 0);
// "-1.25±0.50"
std::string format_summary(const MatrixSummary& s, int decimals = 2);

// Reference grid with optional cells (missing = no reference value).
using ReferenceGrid = std::vector<std::vector<std::optional<double>>>;

struct ErrataEntry {
  std::size_t row = 0;  // 0-based
  std::size_t col = 0;
  double computed = 0.0;
  double reference = 0.0;
};

struct ErrataReport {
  std::size_t compared = 0;
  std::size_t matched = 0;
  std::size_t unavailable = 0;
  std::vector<ErrataEntry> mismatches;  // upper triangle incl. diagonal, row-major

  std::string render(const std::vector<std::string>& ids) const;
};

// Compares the upper triangle (including the diagonal). Never throws on a
// mismatch; size disagreement is a validation error.
ErrataReport compare_with_reference(const SimilarityMatrix& m, const ReferenceGrid& reference,
                                    double tolerance = 1e-9);

enum class CsvPrecision { one_decimal, full };
std::string to_csv(const SimilarityMatrix& m, CsvPrecision precision = CsvPrecision::one_decimal);

struct CandidateMatch {
  std::string item_id;
  bool same_concept = false;

  bool operator==(const CandidateMatch&) const = default;
};

struct ConceptualMatchReport {
  std::string prototype_id;
  std::string main_concepts;
  std::vector<CandidateMatch> candidates;
  double percentage = 0.0;
  std::vector<std::string> transcript_ids;

  std::size_t matches() const;
  bool operator==(const ConceptualMatchReport&) const = default;
};

// 100 * (matches + 1) / (candidates + 1); the prototype counts as a match.
double conceptual_percentage(std::size_t matches, std::size_t candidates);

// Reads "MCQ<n>: YES|NO" lines for n = 2..candidates+1. Throws parse_failure
// if any candidate is missing.
std::vector<bool> parse_same_concept(std::string_view response, std::size_t candidates);

// "MCQ1:\n<prototype>\n\nMCQ2:\n..." as sent with both conceptual prompts.
std::string numbered_item_file(const McqItem& prototype, const std::vector<McqItem>& candidates);

// Two dispatches: main concepts of the prototype, then the same-concept
// judgment for every candidate.
ConceptualMatchReport conceptual_match(ProviderHub& hub, const McqItem& prototype,
                                       const std::vector<McqItem>& candidates,
                                       const std::string& role = "evaluator");

// Word shingles over the linguistic token sequence.
std::vector<std::string> shingles(std::string_view text, std::size_t size);

class ShingleIndex {
 public:
  explicit ShingleIndex(std::size_t shingle_size = 5);

  void add_document(std::string_view text);
  std::size_t documents() const { return documents_; }
  std::size_t shingle_size() const { return size_; }
  bool contains(const std::string& shingle) const { return index_.count(shingle) > 0; }

 private:
  std::size_t size_;
  std::size_t documents_ = 0;
  std::unordered_set<std::string> index_;
};

inline constexpr double kOriginalityThreshold = 10.0;

struct OriginalityResult {
  std::size_t total = 0;  // distinct item shingles
  std::size_t found = 0;  // of those, present somewhere in the corpus
  double percentage = 0.0;
  bool passed = false;
  std::vector<std::string> matched;
};

bool originality_passes(double percentage);

// Throws validation if the text has fewer words than the shingle size.
OriginalityResult originality_overlap(std::string_view item_text, const ShingleIndex& corpus);

}  // namespace mcqforge
