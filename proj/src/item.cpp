#include "mcqforge/item.hpp"

#include "mcqforge/error.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

namespace mcqforge {

std::string_view to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::draft: return "draft";
    case ItemStatus::under_review: return "under_review";
    case ItemStatus::accepted: return "accepted";
    case ItemStatus::rejected: return "rejected";
  }
  return "draft";
}

std::string_view to_string(EditKind k) {
  return k == EditKind::adjustment_prompt ? "adjustment_prompt" : "manual_edit";
}

ItemStatus item_status_from_string(std::string_view s) {
  if (s == "draft") return ItemStatus::draft;
  if (s == "under_review") return ItemStatus::under_review;
  if (s == "accepted") return ItemStatus::accepted;
  if (s == "rejected") return ItemStatus::rejected;
  throw Error(ErrorCode::validation, "unknown item status: " + std::string(s));
}

EditKind edit_kind_from_string(std::string_view s) {
  if (s == "adjustment_prompt") return EditKind::adjustment_prompt;
  if (s == "manual_edit") return EditKind::manual_edit;
  throw Error(ErrorCode::validation, "unknown edit kind: " + std::string(s));
}

std::string_view to_string(McqElement e) {
  switch (e) {
    case McqElement::stem: return "stem";
    case McqElement::question: return "question";
    case McqElement::option_labels: return "option_labels";
    case McqElement::option_count: return "option_count";
    case McqElement::correct_marker: return "correct_marker";
    case McqElement::options: return "options";
  }
  return "unknown";
}

bool ParseReport::has(McqElement e) const {
  return std::any_of(problems.begin(), problems.end(),
                     [e](const ParseProblem& p) { return p.element == e; });
}

std::string ParseReport::summary() const {
  std::string out;
  for (const auto& p : problems) {
    if (!out.empty()) out += "; ";
    out += std::string(to_string(p.element)) + ": " + p.message;
  }
  return out;
}

bool same_text(const McqItem& a, const McqItem& b) {
  return a.stem == b.stem && a.question == b.question && a.options == b.options &&
         a.correct_index == b.correct_index && a.explanation == b.explanation;
}

std::vector<std::string> validate(const McqItem& item, int expected_options) {
  std::vector<std::string> out;
  if (static_cast<int>(item.options.size()) != expected_options)
    out.push_back("expected " + std::to_string(expected_options) + " options, got " +
                  std::to_string(item.options.size()));
  if (item.correct_index < 0 || item.correct_index >= static_cast<int>(item.options.size()))
    out.push_back("correct_index out of range");
  if (text::trim(item.stem).empty()) out.push_back("stem is empty");
  if (text::trim(item.question).empty()) out.push_back("question is empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    if (text::trim(item.options[i]).empty())
      out.push_back("option " + std::string(1, static_cast<char>('A' + i)) + " is empty");
    else if (!seen.insert(item.options[i]).second)
      out.push_back("option " + std::string(1, static_cast<char>('A' + i)) + " duplicates another option");
  }
  if (!item.question.empty() && item.question.back() != '?')
    out.push_back("question must end with '?'");
  if (text::sentence_count(item.question) > 1) out.push_back("question must be a single sentence");
  if (!item.stem.empty()) {
    const char last = item.stem.back();
    if (last != '.' && last != '!' && last != '?')
      out.push_back("stem must end with a sentence terminator");
  }
  return out;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Positions of "X)" / "X." / "X:" labels for a given letter, where the label
// is preceded by start-of-text or whitespace and followed by whitespace or end.
std::vector<std::size_t> label_positions(std::string_view s, char letter) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] != letter) continue;
    if (i > 0 && !is_space(s[i - 1])) continue;
    const char p = s[i + 1];
    if (p != ')' && p != '.' && p != ':') continue;
    if (i + 2 < s.size() && !is_space(s[i + 2])) continue;
    out.push_back(i);
  }
  return out;
}

// Removes a "(correct)" or "(correct answer)" marker; returns true if found.
bool strip_correct_marker(std::string& option) {
  static const char* const kMarkers[] = {"(correct answer)", "(correct)"};
  for (const char* marker : kMarkers) {
    const auto pos = text::find_ci(option, marker);
    if (pos == std::string::npos) continue;
    option.erase(pos, std::string_view(marker).size());
    option = text::collapse_whitespace(option);
    return true;
  }
  return false;
}

}  // namespace

ParseResult parse_mcq(std::string_view raw, int expected_options) {
  ParseReport report;
  if (expected_options < 2 || expected_options > 26) {
    report.problems.push_back({McqElement::option_count, "expected_options must be in [2, 26]"});
    return report;
  }

  std::string body(raw);
  std::optional<std::string> explanation;
  if (const auto ex = text::find_ci(body, "Explanation:"); ex != std::string::npos) {
    auto tail = text::collapse_whitespace(std::string_view(body).substr(ex + 12));
    if (!tail.empty()) explanation = std::move(tail);
    body.erase(ex);
  }
  const std::string flat = text::collapse_whitespace(body);
  if (flat.empty()) {
    report.problems.push_back({McqElement::stem, "empty input"});
    return report;
  }

  // Walk backwards from the last label so that letter-plus-period sequences
  // inside the stem ("vitamin A.") are not mistaken for the option list.
  const auto n = static_cast<std::size_t>(expected_options);
  std::vector<std::size_t> pos(n, std::string::npos);
  bool chain_ok = true;
  std::size_t limit = flat.size();
  for (std::size_t k = n; k-- > 0;) {
    const auto candidates = label_positions(flat, static_cast<char>('A' + k));
    std::size_t best = std::string::npos;
    for (auto p : candidates)
      if (p < limit) best = p;
    if (best == std::string::npos) {
      chain_ok = false;
      break;
    }
    pos[k] = best;
    limit = best;
  }

  if (!chain_ok) {
    std::size_t found = 0;
    std::size_t from = 0;
    for (std::size_t k = 0; k < 26; ++k) {
      const auto candidates = label_positions(flat, static_cast<char>('A' + k));
      auto it = std::find_if(candidates.begin(), candidates.end(),
                             [from](std::size_t p) { return p >= from; });
      if (it == candidates.end()) break;
      ++found;
      from = *it + 2;
    }
    if (found == 0) {
      report.problems.push_back({McqElement::option_labels, "no option labels A)-E) found"});
    } else {
      report.problems.push_back({McqElement::option_count,
                                 "found " + std::to_string(found) + " options, expected " +
                                     std::to_string(expected_options)});
      if (found < n)
        report.problems.push_back(
            {McqElement::option_labels,
             "missing option label " + std::string(1, static_cast<char>('A' + found)) + ")"});
    }
    return report;
  }

  const auto extra = label_positions(flat, static_cast<char>('A' + n));
  if (std::any_of(extra.begin(), extra.end(), [&](std::size_t p) { return p > pos[n - 1]; })) {
    report.problems.push_back({McqElement::option_count,
                               "found more than " + std::to_string(expected_options) + " options"});
  }

  McqItem item;
  item.options.reserve(n);
  int marked = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t begin = pos[k] + 2;
    const std::size_t end = k + 1 < n ? pos[k + 1] : flat.size();
    std::string option = text::trim(std::string_view(flat).substr(begin, end - begin));
    if (strip_correct_marker(option)) {
      ++marked;
      item.correct_index = static_cast<int>(k);
    }
    if (option.empty())
      report.problems.push_back(
          {McqElement::options, "option " + std::string(1, static_cast<char>('A' + k)) + " is empty"});
    item.options.push_back(std::move(option));
  }
  if (marked != 1)
    report.problems.push_back({McqElement::correct_marker,
                               std::to_string(marked) + " options marked (correct), expected 1"});
  {
    std::set<std::string> distinct(item.options.begin(), item.options.end());
    if (distinct.size() != item.options.size())
      report.problems.push_back({McqElement::options, "duplicate option texts"});
  }

  const std::string prefix = text::trim(std::string_view(flat).substr(0, pos[0]));
  const auto qmark = prefix.rfind('?');
  if (qmark == std::string::npos) {
    report.problems.push_back({McqElement::question, "no interrogative sentence found"});
  } else {
    std::size_t start = 0;
    for (std::size_t i = qmark; i-- > 0;) {
      const char c = prefix[i];
      if ((c == '.' || c == '!' || c == '?') && i + 1 < prefix.size() && is_space(prefix[i + 1])) {
        start = i + 2;
        break;
      }
    }
    item.question = text::trim(std::string_view(prefix).substr(start));
    item.stem = text::trim(std::string_view(prefix).substr(0, start));
    if (item.stem.empty()) report.problems.push_back({McqElement::stem, "stem missing"});
  }

  if (!report.problems.empty()) return report;
  item.explanation = std::move(explanation);
  return item;
}

std::vector<std::string> split_items(std::string_view raw) {
  static const std::regex kHeader(
      R"(^\s*(?:\*\*|#+)?\s*(?:MCQ|Question|Item)\s*#?\s*(\d+)\s*(?:\([^)]*\))?\s*[:.)]?\s*(?:\*\*)?\s*(.*)$)",
      std::regex::icase);
  static const std::regex kNumbered(R"(^\s*(\d+)\s*(?:\([^)]*\))?\s*[.)]\s+(.*)$)");

  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(raw)};
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }

  auto split_with = [&](const std::regex& re, bool sequential) {
    std::vector<std::string> chunks;
    std::string current;
    bool started = false;
    int expected = 1;
    for (const auto& line : lines) {
      std::smatch m;
      if (std::regex_match(line, m, re) &&
          (!sequential || std::stoi(m[1].str()) == expected)) {
        if (started && !text::trim(current).empty()) chunks.push_back(text::trim(current));
        current = m[2].str() + "\n";
        started = true;
        ++expected;
        continue;
      }
      current += line + "\n";
    }
    if (!text::trim(current).empty()) chunks.push_back(text::trim(current));
    return std::make_pair(chunks, started);
  };

  auto [by_header, any_header] = split_with(kHeader, false);
  if (any_header) return by_header;
  auto [by_number, any_number] = split_with(kNumbered, true);
  if (any_number && by_number.size() > 1) return by_number;
  auto whole = text::trim(raw);
  if (whole.empty()) return {};
  return {whole};
}

std::string render_mcq(const McqItem& item, bool mark_correct) {
  std::string out = item.stem + "\n" + item.question + "\n";
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    out += static_cast<char>('A' + i);
    out += ") " + item.options[i];
    if (mark_correct && static_cast<int>(i) == item.correct_index) out += " (correct)";
    out += "\n";
  }
  if (item.explanation) out += "Explanation: " + *item.explanation + "\n";
  return out;
}

std::size_t word_edit_distance(std::string_view before, std::string_view after) {
  const auto a = text::words(before);
  const auto b = text::words(after);
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace mcqforge
