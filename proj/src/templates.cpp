#include "mcqforge/templates.hpp"

#include "mcqforge/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mcqforge {

namespace {

const std::map<std::string, std::string, std::less<>>& builtin() {
  static const std::map<std::string, std::string, std::less<>> kBuiltin = {
      {std::string(templates::concept_map_objective),
       "Compile the concepts related to the learning objective of {education_level} {discipline} "
       "course '{input_body}' into a hierarchical semantic network."},
      {std::string(templates::concept_map_textbook),
       "Compile the concepts presented in the attached textbook fragment of {education_level} "
       "{discipline} course into a hierarchical semantic network."},
      {std::string(templates::question_answer),
       "Use the concept {concept} to formulate questions with a real-world scenario that require "
       "high-order thinking and provide correct one-phrase answer."},
      {std::string(templates::item_from_question),
       "Present the Question below as an MCQ with 5 answer options. It should meet 9 criteria:\n\n"
       "{criteria_block}\n\n{question_answer}\n\nMark the correct option with (correct)."},
      {std::string(templates::series_example_based),
       "Generate {count} MCQs which should differ as much as possible but be focusing on the same "
       "problem and have the same difficulty as the example provided:\n\n{prototype_item}\n"
       "In generated MCQs, the formulation of key words in stems and correct answers should differ "
       "from that in initial MCQs. The MCQs are for {discipline} and {education_level}. "
       "They should meet 9 criteria:\n\n{criteria_block}\n\n"
       "Start each MCQ with a line \"MCQ <n>:\" and mark the correct option with (correct)."},
      {std::string(templates::series_concept_derived),
       "Use this MCQ\n\n{prototype_item}\nas a prototype and generate {count} MCQs related to the "
       "same concept and have the same difficulty but differ on their contexts and phrasing/ "
       "wording as much as possible. The MCQs are for {discipline} and {education_level}. "
       "They should meet 9 criteria:\n\n{criteria_block}\n\n"
       "Start each MCQ with a line \"MCQ <n>:\" and mark the correct option with (correct)."},
      {std::string(templates::one_step),
       "Write {count} multiple-choice question(s) for students of {education_level}, "
       "{speciality}, {discipline} oriented to higher-order thinking, with the stem formulated as "
       "a real-world situation and five answer options, among which only one is correct. Keep "
       "academic style and avoid unnecessary details. Provide the explanation why one answer is "
       "correct, and the other options are not correct.\n"
       "Learning content: {input_body}\n"
       "Start each MCQ with a line \"MCQ <n>:\", mark the correct option with (correct) and begin "
       "the explanation with \"Explanation:\"."},
      {std::string(templates::adjustment),
       "Revise the MCQ below so that it meets the following quality criterion. Keep the same "
       "concept and the same structure with 5 answer options, and mark the correct option with "
       "(correct).\n\n{criteria_block}\n\n{prototype_item}"},
      {std::string(templates::evaluation),
       "Check whether the uploaded MCQ meets the quality criteria below. For every criterion "
       "answer on its own line in the form \"C<number>: PASS - <one-sentence rationale>\" or "
       "\"C<number>: FAIL - <one-sentence rationale>\".\n\n{criteria_block}\n\nMCQ:\n"
       "{prototype_item}"},
      {std::string(templates::contextual_features),
       "Identify the contextual features of the MCQ below. 'Context' means the concrete "
       "manifestations of {concept}. This could relate to human health, livestock, food safety, "
       "environment, education, fundamental research in different areas and so on, as well as "
       "specific locations or participants. List each feature on its own line starting with "
       "\"• \".\n\n{prototype_item}"},
      {std::string(templates::main_concepts),
       "In the file uploaded, what are the main concepts of MCQ1?"},
      {std::string(templates::same_concept),
       "Do MCQs2-{count} focus on the same concepts that MCQ1? You should compare the main ideas "
       "presented in MCQs, i.e., do they evaluate the same or different piece of knowledge/ "
       "competence.\nMain concepts of MCQ1: {concept}\n"
       "Answer for each MCQ on its own line in the form \"MCQ<n>: YES\" or \"MCQ<n>: NO\"."},
  };
  return kBuiltin;
}

void check_placeholders(const std::string& name, const std::string& text) {
  for (const auto& p : placeholders_in(text)) {
    if (std::find(kPlaceholders.begin(), kPlaceholders.end(), p) == kPlaceholders.end())
      throw Error(ErrorCode::config, "template '" + name + "' uses unknown placeholder {" + p + "}");
  }
}

}  // namespace

std::vector<std::string> placeholders_in(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && ((text[j] >= 'a' && text[j] <= 'z') || text[j] == '_')) ++j;
    if (j < text.size() && text[j] == '}' && j > i + 1) {
      out.emplace_back(text.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return out;
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.templates_ = builtin();
  return t;
}

PromptTemplates PromptTemplates::load_dir(const std::string& dir) {
  auto t = defaults();
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::config, "template directory not found: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::stringstream ss;
    ss << in.rdbuf();
    std::string body = ss.str();
    while (!body.empty() && body.back() == '\n') body.pop_back();
    t.set(entry.path().stem().string(), std::move(body));
  }
  return t;
}

const std::string& PromptTemplates::get(std::string_view name) const {
  const auto it = templates_.find(name);
  if (it == templates_.end())
    throw Error(ErrorCode::config, "unknown prompt template: " + std::string(name));
  return it->second;
}

void PromptTemplates::set(std::string name, std::string text) {
  check_placeholders(name, text);
  templates_[std::move(name)] = std::move(text);
}

std::vector<std::string> PromptTemplates::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : templates_) out.push_back(k);
  return out;
}

std::string PromptTemplates::render(std::string_view name, const TemplateVars& vars) const {
  const std::string& tpl = get(name);
  std::string out;
  out.reserve(tpl.size() * 2);
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tpl.size() && ((tpl[j] >= 'a' && tpl[j] <= 'z') || tpl[j] == '_')) ++j;
      if (j < tpl.size() && tpl[j] == '}' && j > i + 1) {
        const std::string_view key(tpl.data() + i + 1, j - i - 1);
        const auto it = vars.find(key);
        if (it == vars.end())
          throw Error(ErrorCode::validation, "template '" + std::string(name) +
                                                 "' needs a value for {" + std::string(key) + "}");
        out += it->second;
        i = j;
        continue;
      }
    }
    out.push_back(tpl[i]);
  }
  return out;
}

}  // namespace mcqforge
