#include "mcqforge/concept_map.hpp"

#include "mcqforge/text.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace mcqforge {

std::vector<ConceptNode> parse_concept_map(std::string_view text) {
  static const std::regex kNumbered(R"(^\s*(\d+(?:\.\d+)*)[.)]?\s+(.+)$)");
  static const std::regex kBullet(
      "^(\\s*)(?:\xE2\x80\xA2|\xE2\x97\x8F|\xE2\x97\x8B|\xE2\x97\xA6|\xE2\x96\xAA|\xE2\x96\xAB|"
      "\xE2\x96\xA0|\xE2\x96\xA1|\xE2\x80\x93|-|\\*)\\s*(.+)$");

  std::vector<ConceptNode> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    std::smatch m;
    if (std::regex_match(line, m, kNumbered)) {
      ConceptNode node;
      node.number = m[1].str();
      node.label = text::trim(m[2].str());
      node.depth = static_cast<int>(std::count(node.number.begin(), node.number.end(), '.'));
      out.push_back(std::move(node));
    } else if (std::regex_match(line, m, kBullet)) {
      ConceptNode node;
      node.label = text::trim(m[2].str());
      node.depth = 1 + static_cast<int>(m[1].length()) / 2;
      out.push_back(std::move(node));
    }
  }
  return out;
}

std::optional<ConceptNode> find_concept(const std::vector<ConceptNode>& nodes, std::string_view query) {
  const std::string q = text::to_lower(text::collapse_whitespace(query));
  if (q.empty()) return std::nullopt;
  for (const auto& n : nodes)
    if (text::to_lower(n.label) == q || text::to_lower(n.display()) == q) return n;
  for (const auto& n : nodes)
    if (!n.number.empty() && (n.number == q || n.number + "." == q)) return n;
  return std::nullopt;
}

std::string QaCandidate::render() const {
  return "Question " + std::to_string(number) + ": " + question + "\nAnswer: " + answer;
}

std::vector<QaCandidate> parse_qa_candidates(std::string_view raw) {
  static const std::regex kHeader(R"(Question\s+(\d+)\s*[:.)])", std::regex::icase);
  const std::string flat = text::collapse_whitespace(raw);

  std::vector<std::pair<int, std::size_t>> heads;  // number, start of body
  std::vector<std::size_t> starts;
  for (auto it = std::sregex_iterator(flat.begin(), flat.end(), kHeader); it != std::sregex_iterator();
       ++it) {
    heads.emplace_back(std::stoi((*it)[1].str()),
                       static_cast<std::size_t>(it->position() + it->length()));
    starts.push_back(static_cast<std::size_t>(it->position()));
  }

  std::vector<QaCandidate> out;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    const std::size_t end = i + 1 < heads.size() ? starts[i + 1] : flat.size();
    const std::string block = flat.substr(heads[i].second, end - heads[i].second);
    std::size_t ans = std::string::npos;
    for (std::size_t p = text::find_ci(block, "Answer:"); p != std::string::npos;
         p = text::find_ci(block, "Answer:", p + 1))
      ans = p;
    if (ans == std::string::npos) continue;
    QaCandidate c;
    c.number = heads[i].first;
    c.question = text::trim(std::string_view(block).substr(0, ans));
    c.answer = text::trim(std::string_view(block).substr(ans + 7));
    if (c.question.empty() || c.answer.empty()) continue;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace mcqforge
