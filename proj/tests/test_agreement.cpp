#include "mcqforge/agreement.hpp"
#include "mcqforge/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mcqforge;

namespace {

// Closed form in counts only: 2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d)).
double kappa_from_counts(double a, double b, double c, double d) {
  return 2.0 * (a * d - b * c) / ((a + b) * (b + d) + (a + c) * (c + d));
}

}  // namespace

TEST(Kappa, ObjectiveBasedRun) {
  const auto r = cohen_kappa({18, 0, 18, 22});
  ASSERT_TRUE(r.defined());
  EXPECT_NEAR(*r.kappa, 0.432, 0.001);
  EXPECT_NEAR(*r.kappa, kappa_from_counts(18, 0, 18, 22), 1e-12);
  EXPECT_NEAR(r.p_o, 40.0 / 58.0, 1e-12);
  EXPECT_EQ(*r.band, KappaBand::moderate);
}

TEST(Kappa, TextbookBasedRun) {
  const auto r = cohen_kappa({11, 7, 5, 35});
  ASSERT_TRUE(r.defined());
  EXPECT_NEAR(*r.kappa, 0.501, 0.001);
  EXPECT_NEAR(*r.kappa, kappa_from_counts(11, 7, 5, 35), 1e-12);
  EXPECT_NEAR(r.p_o, 46.0 / 58.0, 1e-12);
  EXPECT_EQ(*r.band, KappaBand::moderate);
}

TEST(Kappa, RandomTablesAgreeWithClosedForm) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cnt(0, 60);
  for (int k = 0; k < 20000; ++k) {
    const ContingencyTable t{cnt(rng), cnt(rng), cnt(rng), cnt(rng)};
    if (t.n() == 0) continue;
    const auto r = cohen_kappa(t);
    ASSERT_GE(r.p_o, 0.0);
    ASSERT_LE(r.p_o, 1.0);
    ASSERT_GE(r.p_e, 0.0);
    ASSERT_LE(r.p_e, 1.0 + 1e-12);
    if (!r.defined()) continue;
    ASSERT_NEAR(*r.kappa, kappa_from_counts(t.a, t.b, t.c, t.d), 1e-9);
    ASSERT_LE(*r.kappa, 1.0 + 1e-12);
    ASSERT_GE(*r.kappa, -1.0 - 1e-12);
    // Swapping the raters leaves kappa unchanged.
    ASSERT_NEAR(*cohen_kappa({t.a, t.c, t.b, t.d}).kappa, *r.kappa, 1e-12);
  }
}

TEST(Kappa, ScalingAndPerfectAgreement) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> cnt(0, 40), factor(2, 9);
  for (int k = 0; k < 5000; ++k) {
    const ContingencyTable t{cnt(rng), cnt(rng), cnt(rng), cnt(rng)};
    if (t.n() == 0) continue;
    const int f = factor(rng);
    const auto r = cohen_kappa(t), s = cohen_kappa({f * t.a, f * t.b, f * t.c, f * t.d});
    ASSERT_NEAR(s.p_o, r.p_o, 1e-12);
    ASSERT_NEAR(s.p_e, r.p_e, 1e-12);
    ASSERT_EQ(s.defined(), r.defined());
    if (r.defined()) ASSERT_NEAR(*s.kappa, *r.kappa, 1e-12);
    // Kappa is 1 exactly when the raters never disagree.
    if (r.defined()) ASSERT_EQ(std::fabs(*r.kappa - 1.0) < 1e-12, t.b == 0 && t.c == 0) << t.a << t.b << t.c << t.d;
  }
  const auto balanced = cohen_kappa({10, 0, 0, 10});
  EXPECT_DOUBLE_EQ(balanced.p_o, 1.0);
  EXPECT_DOUBLE_EQ(balanced.p_e, 0.5);
  EXPECT_DOUBLE_EQ(*balanced.kappa, 1.0);
}

TEST(Kappa, PerfectAndUndefined) {
  EXPECT_DOUBLE_EQ(*cohen_kappa({10, 0, 0, 5}).kappa, 1.0);
  EXPECT_EQ(*cohen_kappa({10, 0, 0, 5}).band, KappaBand::almost_perfect);
  for (const ContingencyTable t : {ContingencyTable{10, 0, 0, 0}, ContingencyTable{0, 0, 0, 7}}) {
    const auto r = cohen_kappa(t);
    EXPECT_FALSE(r.defined());
    EXPECT_FALSE(r.band);
    EXPECT_DOUBLE_EQ(r.p_e, 1.0);
    EXPECT_NE(kappa_report(t, r).find("kappa undefined"), std::string::npos);
  }
  EXPECT_THROW(cohen_kappa({0, 0, 0, 0}), Error);
  EXPECT_THROW(cohen_kappa({-1, 2, 3, 4}), Error);
}

TEST(Kappa, BandEdges) {
  EXPECT_EQ(kappa_band(-0.3), KappaBand::none_or_negative);
  EXPECT_EQ(kappa_band(0.0), KappaBand::none_or_negative);
  EXPECT_EQ(kappa_band(0.01), KappaBand::slight);
  EXPECT_EQ(kappa_band(0.20), KappaBand::slight);
  EXPECT_EQ(kappa_band(0.21), KappaBand::fair);
  EXPECT_EQ(kappa_band(0.40), KappaBand::fair);
  EXPECT_EQ(kappa_band(0.41), KappaBand::moderate);
  EXPECT_EQ(kappa_band(0.60), KappaBand::moderate);
  EXPECT_EQ(kappa_band(0.61), KappaBand::substantial);
  EXPECT_EQ(kappa_band(0.80), KappaBand::substantial);
  EXPECT_EQ(kappa_band(0.81), KappaBand::almost_perfect);
  EXPECT_EQ(kappa_band(1.0), KappaBand::almost_perfect);
  EXPECT_EQ(to_string(KappaBand::almost_perfect), "almost_perfect");
}

TEST(Contingency, BuildFromDecisions) {
  std::map<std::string, bool> human, machine;
  for (int i = 0; i < 58; ++i) {
    const auto id = "q" + std::to_string(i);
    human[id] = i < 18;             // 18 human yes
    machine[id] = i < 36;           // every human yes plus 18 more
  }
  const auto t = build_contingency(human, machine);
  EXPECT_EQ(t, (ContingencyTable{18, 0, 18, 22}));
  machine.erase("q3");
  machine["extra"] = true;
  try {
    build_contingency(human, machine);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
    EXPECT_NE(e.detail().find("q3 (human only)"), std::string::npos);
    EXPECT_NE(e.detail().find("extra (machine only)"), std::string::npos);
  }
  EXPECT_THROW(build_contingency({}, {}), Error);
}

TEST(Contingency, ReportLayout) {
  const ContingencyTable t{18, 0, 18, 22};
  const auto text = kappa_report(t, cohen_kappa(t), "objectives");
  EXPECT_EQ(text.rfind("objectives\n", 0), 0u);
  EXPECT_NE(text.find("kappa = 0.431 (moderate)"), std::string::npos) << text;
  EXPECT_NE(text.find("p_o = 0.690"), std::string::npos);
  EXPECT_NE(text.find("58"), std::string::npos);
}
