#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mcqforge {

inline constexpr std::array<std::string_view, 9> kPlaceholders = {
    "education_level", "speciality",      "discipline",     "input_body",    "concept",
    "question_answer", "criteria_block", "prototype_item", "count"};

namespace templates {
inline constexpr std::string_view concept_map_objective = "concept_map_objective";
inline constexpr std::string_view concept_map_textbook = "concept_map_textbook";
inline constexpr std::string_view question_answer = "question_answer";
inline constexpr std::string_view item_from_question = "item_from_question";
inline constexpr std::string_view series_example_based = "series_example_based";
inline constexpr std::string_view series_concept_derived = "series_concept_derived";
inline constexpr std::string_view one_step = "one_step";
inline constexpr std::string_view adjustment = "adjustment";
inline constexpr std::string_view evaluation = "evaluation";
inline constexpr std::string_view contextual_features = "contextual_features";
inline constexpr std::string_view main_concepts = "main_concepts";
inline constexpr std::string_view same_concept = "same_concept";
}  // namespace templates

using TemplateVars = std::map<std::string, std::string, std::less<>>;

// Named prompt templates with {placeholder} slots. Only the names in
// kPlaceholders are legal; render() fails on a slot without a value.
class PromptTemplates {
 public:
  static PromptTemplates defaults();
  // Defaults overridden by "<name>.txt" files found in `dir`.
  static PromptTemplates load_dir(const std::string& dir);

  const std::string& get(std::string_view name) const;
  void set(std::string name, std::string text);
  std::vector<std::string> names() const;

  std::string render(std::string_view name, const TemplateVars& vars) const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

std::vector<std::string> placeholders_in(std::string_view text);

}  // namespace mcqforge
