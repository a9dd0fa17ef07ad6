#include "mcqforge/quality.hpp"

#include "mcqforge/error.hpp"
#include "mcqforge/providers.hpp"
#include "mcqforge/templates.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <regex>

namespace mcqforge {

const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> kWords = {
      "a", "about", "above", "across", "after", "again", "against", "all", "along", "already",
      "also", "although", "always", "am", "among", "an", "and", "another", "any", "anyone",
      "anything", "are", "around", "as", "at", "be", "became", "because", "become", "becomes",
      "been", "before", "being", "below", "besides", "between", "beyond", "both", "but", "by", "can",
      "cannot", "cause", "certain", "could", "despite", "did", "do", "does", "doing", "down",
      "during", "each", "either", "else", "enough", "especially", "etc", "even", "ever", "every",
      "few", "following", "for", "from", "further", "given", "had", "has", "have", "having", "he",
      "hence", "her", "here", "hers", "herself", "him", "himself", "his", "how", "however", "i",
      "if", "in", "instead", "into", "is", "it", "its", "itself", "just", "later", "least", "less",
      "like", "likely", "mainly", "many", "may", "me", "meanwhile", "might", "more", "most",
      "mostly", "much", "must", "my", "myself", "namely", "nearly", "neither", "never", "next", "no",
      "nor", "not", "nothing", "now", "of", "off", "often", "on", "once", "one", "only", "or",
      "other", "others", "otherwise", "our", "ours", "ourselves", "out", "over", "own",
      "particularly", "per", "perhaps", "quite", "rather", "really", "regarding", "same", "several",
      "shall", "she", "should", "since", "so", "some", "something", "sometimes", "still", "such",
      "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there", "thereby",
      "therefore", "therein", "these", "they", "this", "those", "though", "through", "thus", "to",
      "too", "toward", "towards", "under", "until", "up", "upon", "us", "very", "via", "was", "we",
      "were", "what", "whatever", "when", "where", "whereas", "whereby", "whether", "which", "while",
      "who", "whom", "whose", "why", "will", "with", "within", "without", "would", "yet", "you",
      "your", "yours", "yourself", "yourselves",
  };
  return kWords;
}

const std::vector<std::string>& default_general_terms() {
  static const std::vector<std::string> kTerms = {"cell", "bacteria"};
  return kTerms;
}

std::set<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot open word list: " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto w = text::to_lower(text::trim(line));
    if (!w.empty() && w[0] != '#') out.insert(w);
  }
  return out;
}

LexicalConfig LexicalConfig::defaults() {
  LexicalConfig c;
  c.stoplist.insert(default_stopwords().begin(), default_stopwords().end());
  c.general_terms.insert(default_general_terms().begin(), default_general_terms().end());
  return c;
}

LexicalConfig LexicalConfig::load(const std::string& stoplist_path,
                                  const std::string& general_terms_path) {
  return {load_word_list(stoplist_path), load_word_list(general_terms_path)};
}

namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// "runn" -> "run"; leaves "ll", "ss" and "zz" alone.
std::string undouble(std::string s) {
  const auto n = s.size();
  if (n >= 2 && s[n - 1] == s[n - 2] && !is_vowel(s[n - 1]) && s[n - 1] != 'l' && s[n - 1] != 's' &&
      s[n - 1] != 'z')
    s.pop_back();
  return s;
}

std::vector<std::string> raw_terms(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

std::string stem_word(std::string_view word) {
  std::string w = text::to_lower(word);
  if (w.size() <= 3) return w;
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "sses")) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  if (ends_with(w, "es")) {
    const std::string base = w.substr(0, w.size() - 2);
    if (ends_with(base, "s") || ends_with(base, "x") || ends_with(base, "z") ||
        ends_with(base, "ch") || ends_with(base, "sh"))
      return base;
  }
  if (ends_with(w, "s")) {
    w.pop_back();
    if (ends_with(w, "e") && w.size() > 3) w.pop_back();
    return w;
  }
  if (ends_with(w, "ing") && w.size() >= 6) return undouble(w.substr(0, w.size() - 3));
  if (ends_with(w, "ed") && w.size() >= 5) return undouble(w.substr(0, w.size() - 2));
  if (ends_with(w, "e") && w.size() > 3) w.pop_back();
  return w;
}

std::set<std::string> content_terms(std::string_view text, const LexicalConfig& config) {
  std::set<std::string> general;
  for (const auto& g : config.general_terms) general.insert(stem_word(g));
  std::set<std::string> out;
  for (const auto& w : raw_terms(text)) {
    if (config.stoplist.count(w)) continue;
    auto s = stem_word(w);
    if (config.stoplist.count(s) || general.count(s) || config.general_terms.count(w)) continue;
    out.insert(std::move(s));
  }
  return out;
}

std::string to_string(const CriterionRef& c) {
  std::string out = std::to_string(c.id);
  if (c.facet == Facet::lexical) out += "-lexical";
  if (c.facet == Facet::semantic) out += "-semantic";
  return out;
}

CriterionRef criterion_from_string(std::string_view s) {
  static const std::regex kRe(R"(^\s*C?(\d)(?:-(lexical|semantic))?\s*$)", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(s.begin(), s.end(), m, kRe))
    throw Error(ErrorCode::validation, "unknown criterion: " + std::string(s));
  CriterionRef c;
  c.id = m[1].str()[0] - '0';
  if (c.id < 1 || c.id > kCriterionCount)
    throw Error(ErrorCode::validation, "criterion id must be in [1, 9]: " + std::string(s));
  if (m[2].matched) {
    if (c.id != 9) throw Error(ErrorCode::validation, "only criterion 9 has facets");
    c.facet = text::to_lower(m[2].str()) == "lexical" ? Facet::lexical : Facet::semantic;
  }
  return c;
}

std::string_view to_string(EvaluatorKind k) {
  switch (k) {
    case EvaluatorKind::deterministic: return "deterministic";
    case EvaluatorKind::automated: return "automated";
    case EvaluatorKind::human: return "human";
  }
  return "human";
}

EvaluatorKind evaluator_kind_from_string(std::string_view s) {
  if (s == "deterministic") return EvaluatorKind::deterministic;
  if (s == "automated") return EvaluatorKind::automated;
  if (s == "human") return EvaluatorKind::human;
  throw Error(ErrorCode::validation, "unknown evaluator kind: " + std::string(s));
}

std::string QualityReport::compact() const {
  if (accepted) return "acceptable";
  std::vector<std::string> ids;
  for (int id : failed_ids) ids.push_back(std::to_string(id));
  return join(ids, ",");
}

CriterionVerdict check_criterion2(const McqItem& item) {
  CriterionVerdict v;
  v.criterion = {2, Facet::whole};
  v.evaluator = {EvaluatorKind::deterministic, "criterion2"};

  // Stem and question are stored apart; the lead-in as a whole is what the
  // sentence threshold applies to.
  const auto sentences = text::sentence_count(item.lead_in());
  bool ok = true;
  if (sentences < 3) {
    ok = false;
    v.evidence.push_back("stem: " + std::to_string(sentences) + " sentences");
  }
  if (item.options.size() != static_cast<std::size_t>(kDefaultOptionCount)) {
    ok = false;
    v.evidence.push_back("options: " + std::to_string(item.options.size()) + " given");
  }
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    const auto n = text::word_count(item.options[i]);
    if (n > 7) {
      ok = false;
      v.evidence.push_back(std::string("option ") + static_cast<char>('A' + i) + ": " +
                           std::to_string(n) + " words");
    }
  }
  v.verdict = ok ? Verdict::pass : Verdict::fail;
  v.rationale = ok ? "lead-in has " + std::to_string(sentences) + " sentences; all options <= 7 words"
                   : join(v.evidence, "; ");
  return v;
}

CriterionVerdict check_criterion9_lexical(const McqItem& item, const LexicalConfig& config) {
  CriterionVerdict v;
  v.criterion = {9, Facet::lexical};
  v.evaluator = {EvaluatorKind::deterministic, "criterion9-lexical"};

  const auto lead = content_terms(item.lead_in(), config);
  const auto key = content_terms(item.key(), config);
  std::set<std::string> distractors;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    if (static_cast<int>(i) == item.correct_index) continue;
    const auto t = content_terms(item.options[i], config);
    distractors.insert(t.begin(), t.end());
  }
  std::vector<std::string> exempt;
  for (const auto& t : lead) {
    if (!key.count(t)) continue;
    if (distractors.count(t))
      exempt.push_back(t);
    else
      v.evidence.push_back(t);
  }
  v.verdict = v.evidence.empty() ? Verdict::pass : Verdict::fail;
  if (!v.evidence.empty())
    v.rationale = "key shares terms with the stem: " + join(v.evidence, ", ");
  else if (!exempt.empty())
    v.rationale = "shared terms also appear in distractors: " + join(exempt, ", ");
  else
    v.rationale = "no content terms shared between stem and key";
  return v;
}

std::vector<CriterionRef> semantic_criteria() {
  return {{1, Facet::whole}, {3, Facet::whole}, {4, Facet::whole}, {5, Facet::whole},
          {6, Facet::whole}, {7, Facet::whole}, {8, Facet::whole}, {9, Facet::semantic}};
}

std::string build_evaluation_prompt(const McqItem& item, const std::vector<CriterionRef>& criteria) {
  std::vector<int> ids;
  for (const auto& c : criteria)
    if (std::find(ids.begin(), ids.end(), c.id) == ids.end()) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  static const PromptTemplates kTemplates = PromptTemplates::defaults();
  return kTemplates.render(templates::evaluation,
                           {{"criteria_block", criteria_block(ids)}, {"prototype_item", render_mcq(item)}});
}

std::vector<CriterionVerdict> parse_evaluation(std::string_view response,
                                               const std::vector<CriterionRef>& criteria,
                                               const Evaluator& evaluator) {
  static const std::regex kLine(
      R"(^[\s*#>-]*(?:C|Criterion)\s*(\d)\s*(?:\((?:lexical|semantic)\))?\s*[:.)\-]*\s*\**\s*(PASS|FAIL)\b\**\s*[-:–]*\s*(.*)$)",
      std::regex::icase);
  std::map<int, std::pair<bool, std::string>> answers;
  std::string line;
  const std::string body(response);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const auto nl = body.find('\n', pos);
    line = body.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? body.size() + 1 : nl + 1;
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    const int id = m[1].str()[0] - '0';
    if (answers.count(id)) continue;
    answers[id] = {text::to_lower(m[2].str()) == "pass", text::trim(m[3].str())};
  }

  std::vector<CriterionVerdict> out;
  std::size_t readable = 0;
  for (const auto& c : criteria) {
    CriterionVerdict v;
    v.criterion = c;
    v.evaluator = evaluator;
    const auto it = answers.find(c.id);
    if (it == answers.end()) {
      v.verdict = Verdict::fail;
      v.rationale = "evaluator response unparseable";
    } else {
      ++readable;
      v.verdict = it->second.first ? Verdict::pass : Verdict::fail;
      v.rationale = it->second.second;
    }
    out.push_back(std::move(v));
  }
  if (readable == 0 && !criteria.empty())
    throw Error(ErrorCode::parse_failure, "evaluator response has no readable verdicts");
  return out;
}

std::vector<CriterionVerdict> evaluate_semantic_criteria(ProviderHub& hub, const McqItem& item,
                                                         const std::vector<CriterionRef>& criteria,
                                                         const std::string& role) {
  for (const auto& c : criteria)
    if (machine_decidable(c.id) && !(c.id == 9 && c.facet == Facet::semantic))
      throw Error(ErrorCode::validation,
                  "criterion " + to_string(c) + " is checked deterministically");
  const auto r = hub.dispatch(role, build_evaluation_prompt(item, criteria));
  auto out = parse_evaluation(r.response, criteria, {EvaluatorKind::automated, role});
  for (auto& v : out) v.evidence.push_back("transcript:" + r.entry.id);
  return out;
}

std::string_view to_string(GoverningPolicy p) {
  return p == GoverningPolicy::human_overrides ? "human_overrides" : "deterministic_first";
}

GoverningPolicy governing_policy_from_string(std::string_view s) {
  if (s == "deterministic_first") return GoverningPolicy::deterministic_first;
  if (s == "human_overrides") return GoverningPolicy::human_overrides;
  throw Error(ErrorCode::validation, "unknown governing policy: " + std::string(s));
}

QualityReport aggregate(const McqItem& item, const std::vector<CriterionVerdict>& verdicts,
                        GoverningPolicy policy) {
  const std::vector<EvaluatorKind> order =
      policy == GoverningPolicy::deterministic_first
          ? std::vector<EvaluatorKind>{EvaluatorKind::deterministic, EvaluatorKind::human,
                                       EvaluatorKind::automated}
          : std::vector<EvaluatorKind>{EvaluatorKind::human, EvaluatorKind::deterministic,
                                       EvaluatorKind::automated};

  auto covers = [](const CriterionRef& v, const CriterionRef& facet) {
    return v.id == facet.id && (v.facet == Facet::whole || v.facet == facet.facet);
  };

  std::vector<CriterionRef> facets;
  for (int id = 1; id <= 8; ++id) facets.push_back({id, Facet::whole});
  facets.push_back({9, Facet::lexical});
  facets.push_back({9, Facet::semantic});

  QualityReport report;
  report.item_id = item.id;
  report.verdicts = verdicts;
  std::set<int> failed;
  std::vector<std::string> missing;
  for (const auto& f : facets) {
    bool decided = false;
    for (auto kind : order) {
      bool any = false, ok = true;
      for (const auto& v : verdicts) {
        if (v.evaluator.kind != kind || !covers(v.criterion, f)) continue;
        any = true;
        ok = ok && v.passed();
      }
      if (!any) continue;
      decided = true;
      if (!ok) failed.insert(f.id);
      break;
    }
    if (!decided) missing.push_back(to_string(f));
  }
  if (!missing.empty())
    throw Error(ErrorCode::validation, "no verdict for criteria " + join(missing, ", "),
                join(missing, ","));
  report.failed_ids.assign(failed.begin(), failed.end());
  report.accepted = report.failed_ids.empty();
  return report;
}

std::vector<CriterionVerdict> lint(const McqItem& item, const LexicalConfig& config) {
  return {check_criterion2(item), check_criterion9_lexical(item, config)};
}

}  // namespace mcqforge
