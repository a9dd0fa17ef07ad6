#pragma once

// Canonical multiple-choice item, its text layout, and word-level edit
// accounting.

#include "mcqforge/text.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mcqforge {

inline constexpr int kDefaultOptionCount = 5;

enum class ItemStatus { draft, under_review, accepted, rejected };
enum class EditKind { adjustment_prompt, manual_edit };

std::string_view to_string(ItemStatus s);
std::string_view to_string(EditKind k);
ItemStatus item_status_from_string(std::string_view s);
EditKind edit_kind_from_string(std::string_view s);

struct EditRecord {
  EditKind kind = EditKind::manual_edit;
  std::optional<int> word_delta;  // present iff kind == manual_edit
  std::optional<int> criterion_targeted;
  Timestamp timestamp{};
  std::string previous_text;  // rendered item before the edit

  bool operator==(const EditRecord&) const = default;
};

struct ProvenanceRecord {
  std::string source_role;  // provider role name or "human"
  std::optional<std::string> session_id;
  std::vector<std::string> prompt_ids;  // transcript ids
  Timestamp created_at{};
  std::vector<EditRecord> edits;

  bool empty() const { return source_role.empty(); }
  bool operator==(const ProvenanceRecord&) const = default;
};

struct McqItem {
  std::string id;
  std::string stem;
  std::string question;
  std::vector<std::string> options;
  int correct_index = 0;
  std::optional<std::string> explanation;
  std::string discipline;
  std::string education_level;
  std::string topic;
  ProvenanceRecord provenance;
  ItemStatus status = ItemStatus::draft;

  const std::string& key() const { return options.at(static_cast<std::size_t>(correct_index)); }
  // Stem and question joined; used wherever a metric needs the whole lead-in.
  std::string lead_in() const { return stem + " " + question; }

  bool operator==(const McqItem&) const = default;
};

// Compares the parts of an item that survive a render/parse round trip.
bool same_text(const McqItem& a, const McqItem& b);

// Returns human-readable invariant violations; empty means valid.
std::vector<std::string> validate(const McqItem& item, int expected_options = kDefaultOptionCount);

enum class McqElement { stem, question, option_labels, option_count, correct_marker, options };
std::string_view to_string(McqElement e);

struct ParseProblem {
  McqElement element;
  std::string message;
};

struct ParseReport {
  std::vector<ParseProblem> problems;

  bool has(McqElement e) const;
  std::string summary() const;
};

using ParseResult = std::variant<McqItem, ParseReport>;

inline bool parsed_ok(const ParseResult& r) { return std::holds_alternative<McqItem>(r); }

// Accepts "A)", "A." and "A:" labels, a "(correct)" marker on exactly one
// option, and an optional trailing "Explanation:" section. The question is
// the final interrogative sentence before the options; everything before it
// is the stem. Metadata fields of the returned item are left empty.
ParseResult parse_mcq(std::string_view raw, int expected_options = kDefaultOptionCount);

// Splits a provider response holding several items ("MCQ 1:", "Question 2.",
// "3." headers) into per-item chunks.
std::vector<std::string> split_items(std::string_view raw);

std::string render_mcq(const McqItem& item, bool mark_correct = true);

std::size_t word_edit_distance(std::string_view before, std::string_view after);

}  // namespace mcqforge
