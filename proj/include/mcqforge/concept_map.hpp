#pragma once

// Readers for the two intermediate pipeline artifacts: the hierarchical
// concept map and the list of question + one-phrase-answer candidates.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcqforge {

struct ConceptNode {
  std::string number;  // "6" for "6. Ecological Roles"; empty for bullets
  std::string label;
  int depth = 0;

  // "6. Ecological Roles" for numbered nodes, the bare label otherwise.
  std::string display() const { return number.empty() ? label : number + ". " + label; }
  bool operator==(const ConceptNode&) const = default;
};

std::vector<ConceptNode> parse_concept_map(std::string_view text);

// Matches "Ecological Roles", "6. Ecological Roles" or "6", case-insensitively.
std::optional<ConceptNode> find_concept(const std::vector<ConceptNode>& nodes, std::string_view query);

struct QaCandidate {
  int number = 0;
  std::string question;
  std::string answer;

  // "Question 2: <question>\nAnswer: <answer>"
  std::string render() const;
  bool operator==(const QaCandidate&) const = default;
};

// Reads "Question N: ... Answer: ..." blocks.
std::vector<QaCandidate> parse_qa_candidates(std::string_view text);

}  // namespace mcqforge
