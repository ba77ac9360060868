#include "helpers.hpp"
#include "rollin/tabular.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rollin;

namespace {

SoftmaxPolicy row_policy(std::vector<double> row) {
  Table t(1, static_cast<Eigen::Index>(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) t(0, static_cast<Eigen::Index>(i)) = row[i];
  return SoftmaxPolicy(t);
}

TabularMdp two_state() {
  return oracle::make_mdp({{{1, 0}, {0, 1}}, {{0, 1}, {1, 0}}}, {{1, 0}, {0, 0.5}}, 0.9, {0.5, 0.5});
}

}  // namespace

TEST(PolicyProbs, UniformAtZero) {
  const Vector p = policy_probs(row_policy({0, 0, 0}), 0);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(p(a), 1.0 / 3.0, 1e-15);
}

TEST(PolicyProbs, TwoActionClosedForm) {
  const Vector p = policy_probs(row_policy({1, 0}), 0);
  EXPECT_NEAR(p(0), 0.7310585786, 1e-10);
  EXPECT_NEAR(p(1), 0.2689414214, 1e-10);
}

TEST(PolicyProbs, LargeParametersShiftInvariant) {
  const Vector big = policy_probs(row_policy({1001, 1000}), 0);
  const Vector small = policy_probs(row_policy({1, 0}), 0);
  EXPECT_NEAR(big(0), small(0), 1e-12);
  EXPECT_NEAR(big(1), small(1), 1e-12);
}

TEST(PolicyLogProb, Examples) {
  EXPECT_NEAR(policy_log_prob(row_policy({0, 0}), 0, 0), -0.6931471806, 1e-10);
  EXPECT_NEAR(policy_log_prob(row_policy({1, 0}), 0, 0), -0.3132616875, 1e-10);
}

TEST(PolicyLogProb, ExtremeParametersStayFinite) {
  const auto policy = row_policy({800, -800});
  EXPECT_NEAR(policy_log_prob(policy, 0, 0), 0.0, 1e-15);
  EXPECT_NEAR(policy_log_prob(policy, 0, 1), -1600.0, 1e-9);
}

TEST(PolicyProperties, NormalizedPositiveShiftInvariant) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> shift(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const Table theta = oracle::random_table(gen, 3, 5, 30.0);
    const SoftmaxPolicy policy(theta);
    const double c = shift(gen);
    const SoftmaxPolicy shifted(Table((theta.array() + c).matrix()));
    for (int s = 0; s < 3; ++s) {
      const Vector p = policy_probs(policy, s);
      const Vector q = policy_probs(shifted, s);
      EXPECT_NEAR(p.sum(), 1.0, 1e-12);
      EXPECT_TRUE((p.array() > 0.0).all());
      double log_total = 0.0;
      for (int a = 0; a < 5; ++a) {
        EXPECT_NEAR(p(a), q(a), 1e-12);
        EXPECT_NEAR(policy_log_prob(policy, s, a), std::log(p(a)), 1e-10);
        log_total += std::exp(policy_log_prob(policy, s, a));
      }
      EXPECT_NEAR(log_total, 1.0, 1e-12);
    }
  }
}

TEST(SoftmaxPolicyTest, RejectsNonFinite) {
  Table t = Table::Zero(2, 2);
  t(1, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(SoftmaxPolicy{t}, std::invalid_argument);
  t(1, 0) = std::nan("");
  EXPECT_THROW(SoftmaxPolicy{t}, std::invalid_argument);
}

TEST(ValidateMdp, WellFormed) { EXPECT_TRUE(validate_mdp(two_state()).ok()); }

TEST(ValidateMdp, RowSumViolationNamesIndices) {
  const auto mdp = oracle::make_mdp({{{0.5, 0.6}}, {{0, 1}}}, {{0}, {0}}, 0.9, {0.5, 0.5});
  const auto report = validate_mdp(mdp);
  ASSERT_FALSE(report.ok());
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0], "row sum 1.1 at (0,0)");
}

TEST(ValidateMdp, RewardOutOfRange) {
  const auto mdp = oracle::make_mdp({{{1, 0}}, {{0, 1}}}, {{1.5}, {0}}, 0.9, {0.5, 0.5});
  const auto report = validate_mdp(mdp);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_NE(report.violations[0].find("out of [0,1]"), std::string::npos);
  EXPECT_NE(report.violations[0].find("(0,0)"), std::string::npos);
}

TEST(ValidateMdp, ReportsEveryViolation) {
  auto mdp = oracle::make_mdp({{{0.5, 0.6}}, {{-0.1, 1.1}}}, {{1.5}, {-1}}, 1.0, {0.7, 0.7});
  const auto report = validate_mdp(mdp);
  // row sum, negative entry, two rewards, discount, initial mass
  EXPECT_EQ(report.violations.size(), 6u) << report.to_string();
}

TEST(StateDistributionTest, Invariants) {
  EXPECT_NO_THROW(StateDistribution::uniform(7));
  EXPECT_THROW(StateDistribution(Vector::Constant(2, 0.6)), std::invalid_argument);
  Vector neg(2);
  neg << 1.5, -0.5;
  EXPECT_THROW(StateDistribution{neg}, std::invalid_argument);
}

TEST(TrajectoryTest, Consistency) {
  Trajectory t{{0, 1}, {1}, {0.5}};
  EXPECT_TRUE(t.consistent(2, 2));
  EXPECT_FALSE(t.consistent(1, 2));
  t.rewards.push_back(0.0);
  EXPECT_FALSE(t.consistent(2, 2));
}

TEST(MdpJson, RoundTripAndFieldNames) {
  const auto mdp = two_state();
  const auto doc = mdp_to_json(mdp);
  for (const char* key : {"n_states", "n_actions", "discount", "transition", "reward", "init_dist"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  const auto back = mdp_from_json(doc);
  EXPECT_EQ(back.transition->dense(), mdp.transition->dense());
  EXPECT_EQ(back.reward, mdp.reward);
  EXPECT_EQ(back.discount, mdp.discount);
  EXPECT_EQ(back.init_dist, mdp.init_dist);
}

TEST(TransitionModelTest, OutcomesAndChecksum) {
  const auto mdp = two_state();
  const auto out = mdp.transition->outcomes(1, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].next, 0);
  const auto copy = two_state();
  EXPECT_EQ(copy.transition->checksum(), mdp.transition->checksum());
}
