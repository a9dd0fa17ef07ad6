#include "mcqforge/criteria.hpp"

#include "mcqforge/error.hpp"

#include <array>

namespace mcqforge {

namespace {

constexpr std::array<std::string_view, kCriterionCount> kCriteria = {
    // 1
    "All information presented in the MCQ — including the stem, correct answer, and "
    "distractors — must be fully scientifically accurate (every phrase separately and entire "
    "text) and can be supported by references, such as scientific articles, books, or textbooks, "
    "It is unambiguous, and free from misleading simplifications, assumptions, or comparative "
    "claims that could distort understanding.\n"
    "This includes:\n"
    "- Avoiding oversimplified generalizations (e.g., implying that only one group possesses a "
    "function that is actually shared).\n"
    "- Ensuring that comparative or superlative terms (e.g., “better,” “more,” "
    "“only”) are used only when clearly supported by evidence and contextually valid.\n"
    "- Verifying that the correct answer is not just more correct than the others, but entirely "
    "correct on its own merits and in alignment with scientific consensus.",
    // 2
    "The MCQ must have:\n"
    "- a long stem containing at least 3 sentences,\n"
    "- 5 short answer options each containing no more than 7 words.",
    // 3
    "The stem of the MCQ presents a realistic, context-rich scenario that exemplifies a specific, "
    "plausible instance of a broader scientific principle or pattern (for example, subject-matter "
    "pattern: ‘bacteriophages can selectively kill bacteria’, real-world scenario: a "
    "case of phage therapy of a certain bacterial infection, with necessary realistic details). "
    "Scenario must describe a plausible situation that could realistically occur in the relevant "
    "scientific or professional context. All actions, settings, and roles must be scientifically "
    "appropriate and consistent with how such work is typically conducted in real life or clearly "
    "framed as a model or simulation if not.",
    // 4
    "The entire text of the MCQ must provide a complete and self-contained set of information that "
    "allows students of a defined speciality and level of education to make a conscious decision "
    "about the correct answer. All concepts, terms, and procedures referenced in the stem must be "
    "clearly stated and should align with the expected knowledge base of the target learners (for "
    "example, the MCQ for an introductory biology course can be based on a medical-related "
    "scenario, but it shouldn't refer to specific medical knowledge). The question should not rely "
    "on inference, unstated assumptions, or ambiguous phrasing that could confuse students or "
    "require knowledge beyond the course scope.",
    // 5
    "There must be a clear and necessary logical connection between the stem and the question. The "
    "stem must provide specific information—such as data, context, or observations—that "
    "is essential for selecting the correct answer. It should be impossible to answer the question "
    "correctly using prior knowledge alone, without analyzing the details provided in the stem. The "
    "stem shouldn't merely introduce a topic, it must contribute necessary information to the "
    "reasoning process.",
    // 6
    "MCQ requires high-order thinking to select the correct answer, not just recall some fact. "
    "(Not like in this example: 'In the context of antibiotic resistance, if a hospital-acquired "
    "infection presents with a mutation arising through non-replicative transposition of a "
    "transposon, what key feature distinguishes this mechanism from replicative transposition?'\n"
    "- A) The transposon remains in the original location after the process (correct answer)\n"
    "- B) The process involves the replication of DNA at the insertion site.\n"
    "- C) There is an integration of mobile genetic elements without any DNA breakage.\n"
    "- D) It creates a copy of the transposon at a new site without altering the original.\n"
    "- E) The transposase enzyme is not involved in the mechanism.')",
    // 7
    "Only one answer option must be clearly and definitively correct based on the information "
    "provided in the stem. The stem must include sufficient detail to rule out all other options "
    "as incorrect, incomplete, or less appropriate. If more than one option could reasonably apply "
    "without additional clarification, the criterion is not met.",
    // 8
    "All distractors must be conceptually related to the same domain or framework as the correct "
    "answer and be plausible responses based on the scenario. They should require a comparable "
    "level of reasoning and appear equally relevant or attractive to a student who does not yet "
    "know the correct answer. There should be no distractors that are clearly irrelevant, "
    "implausible, or based on concepts not supported or implied by the information in the stem.",
    // 9
    "The stem and the correct answer should not share exact or closely related key terms—"
    "especially those central to the question's logic—unless those terms are also "
    "represented in one or more distractors. A term is considered \"closely related\" if:\n"
    "- Exact word matches, including abbreviations, acronyms, and sharing the same root or meaning "
    "(e.g., \"adhesins\" vs \"adhesion factors\"),\n"
    "- Synonyms or paraphrases that provide semantic and conceptual overlap, even if wording differ "
    "(e.g., \"biofilm formation\" vs \"quorum sensing-dependent attachment\"),\n"
    "- It would be recognized by a test-wise student as semantically linked based on the context "
    "provided in the stem.\n"
    "Shared general terms (e.g., \"cell,\" \"bacteria\") are acceptable, but repetition of unique "
    "terminology or context-specific words (e.g., \"nutrient,\" \"porin,\" \"mutation,\" "
    "\"resistance\") should be avoided if it makes the correct answer more salient than the "
    "others.",
};

}  // namespace

std::string_view criterion_text(int id) {
  if (id < 1 || id > kCriterionCount)
    throw Error(ErrorCode::validation, "criterion id must be in [1, 9]: " + std::to_string(id));
  return kCriteria[static_cast<std::size_t>(id - 1)];
}

std::string criteria_block(const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += "\n\n";
    out += std::to_string(id) + ". ";
    out += criterion_text(id);
  }
  return out;
}

std::string criteria_block() { return criteria_block({1, 2, 3, 4, 5, 6, 7, 8, 9}); }

bool machine_decidable(int id) { return id == 2 || id == 9; }

}  // namespace mcqforge
