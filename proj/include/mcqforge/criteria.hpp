#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mcqforge {

inline constexpr int kCriterionCount = 9;

// Full wording of the nine item-quality criteria, as embedded in generation
// and evaluation prompts.
std::string_view criterion_text(int id);

// "1. ...\n\n2. ...\n\n...9. ..." in order.
std::string criteria_block();
std::string criteria_block(const std::vector<int>& ids);

// Criterion 2 and the lexical half of 9 are machine-decidable.
bool machine_decidable(int id);

}  // namespace mcqforge
