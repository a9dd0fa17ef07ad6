#include "mcqforge/similarity.hpp"

#include "mcqforge/error.hpp"
#include "mcqforge/providers.hpp"
#include "mcqforge/quality.hpp"
#include "mcqforge/templates.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

namespace mcqforge {

void TverskyParams::validate() const {
  if (!std::isfinite(theta) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw Error(ErrorCode::validation, "Tversky parameters must be finite");
}

std::string_view to_string(FeatureKind k) {
  return k == FeatureKind::linguistic ? "linguistic" : "contextual";
}

FeatureKind feature_kind_from_string(std::string_view s) {
  if (s == "linguistic") return FeatureKind::linguistic;
  if (s == "contextual") return FeatureKind::contextual;
  throw Error(ErrorCode::validation, "unknown feature kind: " + std::string(s));
}

std::string normalize_feature(std::string_view s) {
  return text::to_lower(text::collapse_whitespace(s));
}

FeatureSet make_feature_set(std::string item_id, FeatureKind kind,
                            const std::vector<std::string>& raw_features) {
  FeatureSet out{std::move(item_id), kind, {}};
  for (const auto& f : raw_features) {
    auto n = normalize_feature(f);
    if (!n.empty()) out.features.insert(std::move(n));
  }
  return out;
}

double tversky_score(const std::set<std::string>& a, const std::set<std::string>& b,
                     const TverskyParams& p) {
  p.validate();
  std::size_t common = 0;
  for (const auto& f : a) common += b.count(f);
  const double only_a = static_cast<double>(a.size() - common);
  const double only_b = static_cast<double>(b.size() - common);
  return p.theta * static_cast<double>(common) - p.alpha * only_a - p.beta * only_b;
}

double tversky_score(const FeatureSet& a, const FeatureSet& b, const TverskyParams& p) {
  if (a.kind != b.kind)
    throw Error(ErrorCode::validation, "cannot compare " + std::string(to_string(a.kind)) +
                                           " and " + std::string(to_string(b.kind)) + " features");
  return tversky_score(a.features, b.features, p);
}

std::vector<std::string> linguistic_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  auto word_start = [&](std::size_t i) {
    if (i >= text.size()) return false;
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isalnum(c)) return true;
    // U+2000..U+206F is punctuation; other multibyte letters are word text.
    return c >= 0x80 && !(c == 0xE2 && i + 1 < text.size() &&
                          (static_cast<unsigned char>(text[i + 1]) & 0xFE) == 0x80);
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == 0xE2 && i + 2 < text.size() && (static_cast<unsigned char>(text[i + 1]) & 0xFE) == 0x80) {
      const auto third = static_cast<unsigned char>(text[i + 2]);
      const bool apostrophe = text[i + 1] == '\x80' && (third == 0x98 || third == 0x99);
      if (!apostrophe) flush();
      i += 2;
    } else if (c == '\'') {
      // dropped in place: "community's" -> "communitys"
    } else if (c == '-' && !cur.empty() && word_start(i + 1)) {
      cur.push_back('-');
    } else if (word_start(i)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

FeatureSet tokenize_linguistic(std::string_view text, const LinguisticPolicy& policy,
                               std::string item_id) {
  FeatureSet out{std::move(item_id), FeatureKind::linguistic, {}};
  const auto& stop = default_stopwords();
  for (auto& t : linguistic_tokens(text)) {
    if (!policy.keep_stopwords && std::binary_search(stop.begin(), stop.end(), t)) continue;
    out.features.insert(policy.stemming ? stem_word(t) : std::move(t));
  }
  if (out.features.empty())
    throw Error(ErrorCode::validation, "text has no tokens after normalization");
  return out;
}

std::string linguistic_text(const McqItem& item, const LinguisticPolicy& policy) {
  std::string out = item.stem + "\n" + item.question;
  if (policy.include_options)
    for (const auto& o : item.options) out += "\n" + o;
  if (policy.include_explanation && item.explanation) out += "\n" + *item.explanation;
  return out;
}

std::vector<std::string> parse_feature_list(std::string_view response) {
  static const std::regex kItem(
      "^\\s*(?:\xE2\x80\xA2|\xE2\x97\x8F|\xE2\x97\xA6|\xE2\x96\xAA|-|\\*|\\d+[.)])\\s*(.+?)\\s*$");
  std::vector<std::string> out;
  std::istringstream in{std::string(response)};
  std::string line;
  while (std::getline(in, line)) {
    // A single line may hold several "• x • y" bullets.
    const std::string marker = "\xE2\x80\xA2";
    const auto first = line.find(marker);
    if (first != std::string::npos && line.find(marker, first + 1) != std::string::npos) {
      std::size_t pos = 0;
      while ((pos = line.find(marker, pos)) != std::string::npos) {
        pos += marker.size();
        const auto next = line.find(marker, pos);
        const auto f = normalize_feature(line.substr(pos, next == std::string::npos ? next : next - pos));
        if (!f.empty()) out.push_back(f);
        pos = next == std::string::npos ? line.size() : next;
      }
      continue;
    }
    std::smatch m;
    if (std::regex_match(line, m, kItem)) {
      auto f = normalize_feature(m[1].str());
      if (!f.empty()) out.push_back(std::move(f));
    }
  }
  if (out.empty()) throw Error(ErrorCode::parse_failure, "no feature list found in response");
  return out;
}

FeatureSet extract_contextual_features(ProviderHub& hub, const McqItem& item,
                                       const std::string& concept_label, const std::string& role) {
  static const PromptTemplates kTemplates = PromptTemplates::defaults();
  const auto prompt = kTemplates.render(templates::contextual_features,
                                        {{"concept", concept_label}, {"prototype_item", render_mcq(item)}});
  const auto r = hub.dispatch(role, prompt);
  return make_feature_set(item.id, FeatureKind::contextual, parse_feature_list(r.response));
}

void FeatureRegistry::set_override(FeatureSet set) {
  if (set.features.empty()) throw Error(ErrorCode::validation, "feature set must be non-empty");
  std::lock_guard lk(mu_);
  const auto key = std::make_pair(set.item_id, set.kind);
  overrides_[key] = std::move(set);
}

bool FeatureRegistry::clear_override(const std::string& item_id, FeatureKind kind) {
  std::lock_guard lk(mu_);
  return overrides_.erase({item_id, kind}) > 0;
}

std::optional<FeatureSet> FeatureRegistry::get(const std::string& item_id, FeatureKind kind) const {
  std::lock_guard lk(mu_);
  if (const auto it = overrides_.find({item_id, kind}); it != overrides_.end()) return it->second;
  if (kind == FeatureKind::contextual)
    if (const auto it = extracted_.find(item_id); it != extracted_.end()) return it->second;
  return std::nullopt;
}

FeatureSet FeatureRegistry::contextual(ProviderHub& hub, const McqItem& item,
                                       const std::string& concept_label, const std::string& role) {
  if (auto hit = get(item.id, FeatureKind::contextual)) return *hit;
  auto fs = extract_contextual_features(hub, item, concept_label, role);
  std::lock_guard lk(mu_);
  extracted_[item.id] = fs;
  return fs;
}

bool SimilarityMatrix::symmetric(double tol) const {
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j)
      if (std::fabs(values[i][j] - values[j][i]) > tol) return false;
  return true;
}

SimilarityMatrix pairwise_matrix(const std::vector<FeatureSet>& sets, FeatureKind kind,
                                 const TverskyParams& params) {
  params.validate();
  if (sets.size() < 2) throw Error(ErrorCode::validation, "a similarity matrix needs at least two items");
  std::set<std::string> seen;
  for (const auto& s : sets) {
    if (s.kind != kind)
      throw Error(ErrorCode::validation, "missing " + std::string(to_string(kind)) +
                                             " feature set for item " + s.item_id);
    if (!seen.insert(s.item_id).second)
      throw Error(ErrorCode::validation, "duplicate item id in matrix: " + s.item_id);
  }
  SimilarityMatrix m;
  m.kind = kind;
  m.params = params;
  for (const auto& s : sets) m.ids.push_back(s.item_id);
  m.values.assign(sets.size(), std::vector<double>(sets.size(), 0.0));
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t j = 0; j < sets.size(); ++j)
      m.values[i][j] = tversky_score(sets[i].features, sets[j].features, params);
  return m;
}

namespace {
MatrixSummary summarize(const std::vector<double>& xs) {
  MatrixSummary s;
  s.pairs = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}
}  // namespace

MatrixSummary summarize_all_pairs(const SimilarityMatrix& m) {
  std::vector<double> xs;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) xs.push_back(m.values[i][j]);
  return summarize(xs);
}

MatrixSummary summarize_prototype_row(const SimilarityMatrix& m, std::size_t prototype) {
  if (prototype >= m.size()) throw Error(ErrorCode::validation, "prototype index out of range");
  std::vector<double> xs;
  for (std::size_t j = 0; j < m.size(); ++j)
    if (j != prototype) xs.push_back(m.values[prototype][j]);
  return summarize(xs);
}

std::string format_summary(const MatrixSummary& s, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f\xC2\xB1%.*f", decimals, s.mean, decimals, s.sd);
  return buf;
}

ErrataReport compare_with_reference(const SimilarityMatrix& m, const ReferenceGrid& reference,
                                    double tolerance) {
  if (reference.size() != m.size())
    throw Error(ErrorCode::validation, "reference grid size does not match the matrix");
  ErrataReport r;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i; j < m.size(); ++j) {
      const auto& row = reference[i];
      const std::optional<double> ref = j < row.size() ? row[j] : std::nullopt;
      if (!ref) {
        ++r.unavailable;
        continue;
      }
      ++r.compared;
      if (std::fabs(m.values[i][j] - *ref) <= tolerance)
        ++r.matched;
      else
        r.mismatches.push_back({i, j, m.values[i][j], *ref});
    }
  }
  return r;
}

std::string ErrataReport::render(const std::vector<std::string>& ids) const {
  auto name = [&](std::size_t k) { return k < ids.size() ? ids[k] : std::to_string(k + 1); };
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "compared %zu cells, %zu match, %zu differ, %zu unavailable\n",
                compared, matched, mismatches.size(), unavailable);
  out += buf;
  for (const auto& e : mismatches) {
    std::snprintf(buf, sizeof buf, "  (%s, %s): computed %g, reference %g\n", name(e.row).c_str(),
                  name(e.col).c_str(), e.computed, e.reference);
    out += buf;
  }
  return out;
}

std::string to_csv(const SimilarityMatrix& m, CsvPrecision precision) {
  auto cell = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    return "\"" + text::replace_all(s, "\"", "\"\"") + "\"";
  };
  std::string out = "id";
  for (const auto& id : m.ids) out += "," + cell(id);
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += cell(m.ids[i]);
    for (std::size_t j = 0; j < m.size(); ++j) {
      double v = m.values[i][j];
      if (v == 0.0) v = 0.0;  // no "-0.0"
      if (precision == CsvPrecision::one_decimal)
        std::snprintf(buf, sizeof buf, "%.1f", v);
      else
        std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s = buf;
      if (s == "-0.0") s = "0.0";
      out += "," + s;
    }
    out += '\n';
  }
  return out;
}

std::size_t ConceptualMatchReport::matches() const {
  return static_cast<std::size_t>(std::count_if(candidates.begin(), candidates.end(),
                                                [](const CandidateMatch& c) { return c.same_concept; }));
}

double conceptual_percentage(std::size_t matches, std::size_t candidates) {
  return 100.0 * static_cast<double>(matches + 1) / static_cast<double>(candidates + 1);
}

std::vector<bool> parse_same_concept(std::string_view response, std::size_t candidates) {
  static const std::regex kLine(R"(MCQ\s*(\d+)[\s:.)\-*]*(YES|NO)\b)", std::regex::icase);
  std::map<std::size_t, bool> seen;
  const std::string body(response);
  for (auto it = std::sregex_iterator(body.begin(), body.end(), kLine); it != std::sregex_iterator();
       ++it) {
    const auto n = static_cast<std::size_t>(std::stoul((*it)[1].str()));
    if (!seen.count(n)) seen[n] = text::to_lower((*it)[2].str()) == "yes";
  }
  std::vector<bool> out;
  std::vector<std::string> missing;
  for (std::size_t n = 2; n <= candidates + 1; ++n) {
    const auto it = seen.find(n);
    if (it == seen.end())
      missing.push_back("MCQ" + std::to_string(n));
    else
      out.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string m;
    for (const auto& s : missing) m += (m.empty() ? "" : ", ") + s;
    throw Error(ErrorCode::parse_failure, "same-concept judgment missing for " + m);
  }
  return out;
}

std::string numbered_item_file(const McqItem& prototype, const std::vector<McqItem>& candidates) {
  std::string out = "MCQ1:\n" + render_mcq(prototype, false) + "\n";
  for (std::size_t i = 0; i < candidates.size(); ++i)
    out += "\nMCQ" + std::to_string(i + 2) + ":\n" + render_mcq(candidates[i], false) + "\n";
  return out;
}

ConceptualMatchReport conceptual_match(ProviderHub& hub, const McqItem& prototype,
                                       const std::vector<McqItem>& candidates,
                                       const std::string& role) {
  if (candidates.empty())
    throw Error(ErrorCode::validation, "conceptual match needs at least one candidate");
  static const PromptTemplates kTemplates = PromptTemplates::defaults();
  const std::string file = numbered_item_file(prototype, candidates);

  ConceptualMatchReport report;
  report.prototype_id = prototype.id;
  const auto first = hub.dispatch(role, kTemplates.render(templates::main_concepts, {}), file);
  report.transcript_ids.push_back(first.entry.id);
  report.main_concepts = text::trim(first.response);

  const auto second = hub.dispatch(
      role,
      kTemplates.render(templates::same_concept, {{"count", std::to_string(candidates.size() + 1)},
                                                  {"concept", report.main_concepts}}),
      file);
  report.transcript_ids.push_back(second.entry.id);
  const auto verdicts = parse_same_concept(second.response, candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    report.candidates.push_back({candidates[i].id, verdicts[i]});
  report.percentage = conceptual_percentage(report.matches(), candidates.size());
  return report;
}

std::vector<std::string> shingles(std::string_view text, std::size_t size) {
  if (size == 0) throw Error(ErrorCode::validation, "shingle size must be >= 1");
  const auto toks = linguistic_tokens(text);
  std::vector<std::string> out;
  if (toks.size() < size) return out;
  for (std::size_t i = 0; i + size <= toks.size(); ++i) {
    std::string s = toks[i];
    for (std::size_t k = 1; k < size; ++k) s += " " + toks[i + k];
    out.push_back(std::move(s));
  }
  return out;
}

ShingleIndex::ShingleIndex(std::size_t shingle_size) : size_(shingle_size) {
  if (size_ == 0) throw Error(ErrorCode::validation, "shingle size must be >= 1");
}

void ShingleIndex::add_document(std::string_view text) {
  for (auto& s : shingles(text, size_)) index_.insert(std::move(s));
  ++documents_;
}

bool originality_passes(double percentage) { return percentage < kOriginalityThreshold; }

OriginalityResult originality_overlap(std::string_view item_text, const ShingleIndex& corpus) {
  const auto all = shingles(item_text, corpus.shingle_size());
  if (all.empty())
    throw Error(ErrorCode::validation, "item has fewer than " + std::to_string(corpus.shingle_size()) +
                                           " words");
  std::set<std::string> distinct(all.begin(), all.end());
  OriginalityResult r;
  r.total = distinct.size();
  for (const auto& s : distinct) {
    if (!corpus.contains(s)) continue;
    ++r.found;
    r.matched.push_back(s);
  }
  r.percentage = 100.0 * static_cast<double>(r.found) / static_cast<double>(r.total);
  r.passed = originality_passes(r.percentage);
  return r;
}

}  // namespace mcqforge
