#include "mcqforge/concept_map.hpp"
#include "mcqforge/criteria.hpp"
#include "mcqforge/error.hpp"
#include "mcqforge/templates.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace mcqforge;

TEST(Templates, ShippedDirectoryMatchesBuiltins) {
  const auto defaults = PromptTemplates::defaults();
  const auto shipped = PromptTemplates::load_dir(MCQFORGE_TEMPLATE_DIR);
  ASSERT_EQ(shipped.names(), defaults.names());
  for (const auto& name : defaults.names()) EXPECT_EQ(shipped.get(name), defaults.get(name)) << name;
}

TEST(Templates, OnlyKnownPlaceholders) {
  const auto t = PromptTemplates::defaults();
  for (const auto& name : t.names())
    for (const auto& p : placeholders_in(t.get(name)))
      EXPECT_NE(std::find(kPlaceholders.begin(), kPlaceholders.end(), p), kPlaceholders.end())
          << name << ": " << p;
  auto copy = t;
  try {
    copy.set("bad", "Hello {nonsense}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
}

TEST(Templates, RenderFillsAndRequiresValues) {
  const auto t = PromptTemplates::defaults();
  const auto out = t.render(templates::concept_map_objective,
                            {{"education_level", "upper secondary school"},
                             {"discipline", "biology"},
                             {"input_body", "Compare photosynthesis and respiration"}});
  EXPECT_EQ(out,
            "Compile the concepts related to the learning objective of upper secondary school "
            "biology course 'Compare photosynthesis and respiration' into a hierarchical semantic "
            "network.");
  EXPECT_THROW(t.render(templates::concept_map_objective, {{"discipline", "biology"}}), Error);
  EXPECT_THROW(t.get("no_such_template"), Error);
}

TEST(Criteria, NineCriteriaInOrder) {
  EXPECT_EQ(kCriterionCount, 9);
  const auto block = criteria_block();
  std::size_t pos = 0;
  for (int i = 1; i <= 9; ++i) {
    EXPECT_FALSE(criterion_text(i).empty());
    const auto at = block.find(std::to_string(i) + ". ", pos);
    ASSERT_NE(at, std::string::npos) << i;
    pos = at;
  }
  EXPECT_NE(criterion_text(2).find("at least 3 sentences"), std::string_view::npos);
  EXPECT_NE(criterion_text(2).find("no more than 7 words"), std::string_view::npos);
  EXPECT_TRUE(machine_decidable(2));
  EXPECT_TRUE(machine_decidable(9));
  EXPECT_FALSE(machine_decidable(5));
  EXPECT_EQ(criteria_block({4}).rfind("4. ", 0), 0u);
}

TEST(ConceptMap, ParsesFixtureResponse) {
  const auto doc = testsupport::fixture_json("photosynthesis_session.json");
  std::string map_text;
  for (const auto& f : doc["fixtures"])
    if (f["role"] == "concept_mapper") map_text = f["response"];
  const auto nodes = parse_concept_map(map_text);
  int top = 0;
  for (const auto& n : nodes)
    if (!n.number.empty()) ++top;
  EXPECT_EQ(top, 7);
  const auto eco = find_concept(nodes, "Ecological Roles");
  ASSERT_TRUE(eco);
  EXPECT_EQ(eco->display(), "6. Ecological Roles");
  EXPECT_EQ(find_concept(nodes, "6")->label, "Ecological Roles");
  EXPECT_EQ(find_concept(nodes, "6. ecological roles")->number, "6");
  EXPECT_FALSE(find_concept(nodes, "Plate Tectonics"));
}

TEST(ConceptMap, ParsesQuestionCandidates) {
  const auto doc = testsupport::fixture_json("photosynthesis_session.json");
  std::string qa;
  for (const auto& f : doc["fixtures"])
    if (f["role"] == "question_writer") qa = f["response"];
  const auto cands = parse_qa_candidates(qa);
  ASSERT_EQ(cands.size(), 5u);
  EXPECT_EQ(cands[1].number, 2);
  EXPECT_EQ(cands[1].answer, "Carbon cycling.");
  EXPECT_EQ(cands[1].question.rfind("A city plans", 0), 0u);
  EXPECT_EQ(cands[1].render().rfind("Question 2: A city plans", 0), 0u);

  const auto inline_form = parse_qa_candidates(
      "Question 1: Why? Answer: Because\nQuestion 2: How? Answer: Like this");
  ASSERT_EQ(inline_form.size(), 2u);
  EXPECT_EQ(inline_form[0].answer, "Because");
}
