#include "helpers.hpp"
#include "rollin/verify.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rollin;
using namespace rollin::verify;

namespace {

TabularMdp random_instance(std::uint64_t seed, int S, int A, double gamma) {
  std::mt19937_64 gen(seed);
  return oracle::random_mdp(gen, S, A, gamma);
}

}  // namespace

TEST(Suboptimality, AtOptimumBothSidesZero) {
  const auto mdp = random_instance(1, 4, 3, 0.9);
  const auto sol = soft_value_iteration(mdp, 0.1, 1e-12);
  const auto r = check_suboptimality_identity(mdp, 0.1, sol.policy());
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.lhs, 0.0, 1e-8);
  EXPECT_NEAR(r.rhs, 0.0, 1e-8);
}

// Both sides recomputed with the test-side oracles.
TEST(Suboptimality, UniformPolicyAgainstOracle) {
  const auto mdp = random_instance(2, 5, 3, 0.9);
  const double alpha = 0.1;
  const auto r = check_suboptimality_identity(mdp, alpha, SoftmaxPolicy::uniform(5, 3));
  EXPECT_TRUE(r.pass) << r.lhs << " vs " << r.rhs;
  const Vector v_star = oracle::soft_optimal_values(mdp, alpha);
  const Table pi = Table::Constant(5, 3, 1.0 / 3.0);
  const Vector v = oracle::evaluate(mdp, pi, alpha);
  EXPECT_NEAR(r.lhs, v_star.dot(mdp.init_dist) - v.dot(mdp.init_dist), 1e-9);
  const Table pi_star = oracle::softmax_rows(oracle::q_of(mdp, v_star) / alpha);
  const Vector d = oracle::visitation_series(mdp, pi, mdp.init_dist);
  double rhs = 0;
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 3; ++a) rhs += d(s) * alpha * pi(s, a) * std::log(pi(s, a) / pi_star(s, a));
  EXPECT_NEAR(r.rhs, rhs / (1 - 0.9), 1e-9);
}

TEST(Suboptimality, StressedEntropy) {
  const auto mdp = random_instance(3, 5, 3, 0.9);
  std::mt19937_64 gen(3);
  const Table theta = 10.0 * oracle::random_table(gen, 5, 3, 1.0);
  const auto r = check_suboptimality_identity(mdp, 0.5, SoftmaxPolicy(theta));
  EXPECT_TRUE(r.pass) << r.lhs << " vs " << r.rhs;
  EXPECT_GT(r.lhs, 0.0);
}

TEST(Suboptimality, FaultIsDetected) {
  const auto mdp = random_instance(4, 3, 2, 0.5);
  const auto r = check_suboptimality_identity(mdp, 0.1, SoftmaxPolicy::uniform(3, 2), {1e-6});
  EXPECT_FALSE(r.pass);
}

TEST(Contraction, Examples) {
  const auto mdp = random_instance(5, 4, 3, 0.9);
  std::mt19937_64 gen(5);
  const Table q = oracle::random_table(gen, 4, 3, 10.0);
  const auto same = check_contraction(mdp, 0.1, q, q);
  EXPECT_TRUE(same.pass);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
  const auto shifted = check_contraction(mdp, 0.1, q, (q.array() + 3.0).matrix());
  EXPECT_TRUE(shifted.pass);
  EXPECT_NEAR(shifted.lhs, 0.9 * 3.0, 1e-12);
  for (int i = 0; i < 100; ++i) {
    const auto r = check_contraction(mdp, 0.1, oracle::random_table(gen, 4, 3, 10.0),
                                     oracle::random_table(gen, 4, 3, 10.0));
    EXPECT_TRUE(r.pass);
    EXPECT_LE(r.lhs, r.rhs + 1e-12);
  }
}

TEST(ContextBound, IdenticalAndShiftedRewards) {
  auto mdp = random_instance(6, 5, 3, 0.9);
  mdp.reward *= 0.9;
  const auto same = check_policy_context_bound(mdp, mdp.reward, 0.1);
  EXPECT_TRUE(same.pass);
  EXPECT_EQ(same.lhs, 0.0);
  const auto shifted = check_policy_context_bound(mdp, (mdp.reward.array() + 0.01).matrix(), 0.1);
  EXPECT_TRUE(shifted.pass);
  EXPECT_NEAR(shifted.details["policy_lhs"].get<double>(), 0.0, 1e-10);
  EXPECT_NEAR(shifted.lhs, 0.01 / 0.1, 1e-9);
}

TEST(ContextBound, RandomPairs) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20; ++i) {
    const auto mdp = oracle::random_mdp(gen, 5, 3, 0.9);
    Table r2 = mdp.reward;
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 3; ++a) r2(s, a) = std::clamp(r2(s, a) + 0.2 * (u(gen) - 0.5), 0.0, 1.0);
    const auto r = check_policy_context_bound(mdp, r2, 0.05);
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.details["lipschitz_holds"].get<bool>());
  }
}

TEST(AdjacentValue, IdenticalContextsHaveZeroGap) {
  const auto mdp = random_instance(8, 4, 2, 0.9);
  const auto r = check_adjacent_value_bound(mdp, mdp.reward, 0.1);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.lhs, 0.0, 1e-12);
}

TEST(AdjacentValue, GapAgainstOracle) {
  const auto mdp = random_instance(9, 4, 2, 0.8);
  std::mt19937_64 gen(9);
  Table prev = mdp.reward;
  prev(0, 0) = 1.0 - prev(0, 0);
  const auto r = check_adjacent_value_bound(mdp, prev, 0.2);
  EXPECT_TRUE(r.pass);
  auto prev_mdp = mdp;
  prev_mdp.reward = prev;
  const Vector v_prev_star = oracle::soft_optimal_values(prev_mdp, 0.2);
  const Table pi_prev = oracle::softmax_rows(oracle::q_of(prev_mdp, v_prev_star) / 0.2);
  const double gap = oracle::soft_optimal_values(mdp, 0.2).dot(mdp.init_dist) -
                     oracle::evaluate(mdp, pi_prev, 0.2).dot(mdp.init_dist);
  EXPECT_NEAR(r.lhs, gap, 1e-9);
  EXPECT_GE(r.lhs, -1e-12);
}

TEST(Mismatch, RepeatedContextAndBetaRange) {
  const auto mdp = random_instance(10, 6, 2, 0.9);
  for (double beta : {0.25, 0.5, 0.75}) {
    const auto r = check_mismatch_decomposition(mdp, {mdp.reward, mdp.reward}, 0.1, beta);
    EXPECT_TRUE(r.pass);
  }
  EXPECT_THROW(check_mismatch_decomposition(mdp, {mdp.reward, mdp.reward}, 0.1, 0.0), std::invalid_argument);
}

TEST(Mismatch, RandomChains) {
  std::mt19937_64 gen(11);
  for (double beta : {0.25, 0.5, 0.75}) {
    for (int i = 0; i < 5; ++i) {
      const auto mdp = oracle::random_mdp(gen, 6, 2, 0.9);
      std::vector<Table> rewards{mdp.reward};
      for (int k = 0; k < 3; ++k) rewards.push_back(oracle::random_table(gen, 6, 2, 0.5).array().abs().matrix());
      const auto r = check_mismatch_decomposition(mdp, rewards, 0.1, beta);
      EXPECT_TRUE(r.pass) << r.lhs << " vs " << r.rhs;
    }
  }
}

TEST(GradientSuite, OptimumRandomAndDegenerate) {
  const auto mdp = random_instance(12, 4, 3, 0.9);
  const auto sol = soft_value_iteration(mdp, 0.1, 1e-12);
  const auto at_opt = check_gradient_suite(mdp, 0.1, sol.q_star / 0.1, 200'000, RngStream(12));
  EXPECT_TRUE(at_opt.pass);
  EXPECT_LE(at_opt.details["exact_gradient_max_abs"].get<double>(), 1e-8);

  std::mt19937_64 gen(12);
  const auto random = check_gradient_suite(mdp, 0.1, oracle::random_table(gen, 4, 3, 5.0), 0, RngStream(1));
  EXPECT_TRUE(random.pass);

  const auto flat = random_instance(13, 3, 2, 0.0);
  const auto degenerate = check_gradient_suite(flat, 0.0, oracle::random_table(gen, 3, 2, 2.0), 100'000, RngStream(13));
  EXPECT_TRUE(degenerate.pass);
}

TEST(Suites, ContractionAndIdentityPass) {
  SuiteOptions options;
  const auto contraction = run_suite("contraction", options);
  EXPECT_EQ(contraction.size(), 1000u);
  EXPECT_TRUE(all_pass(contraction));
  const auto identity = run_suite("identity", options);
  EXPECT_EQ(identity.size(), 200u);
  EXPECT_TRUE(all_pass(identity));
}

TEST(Suites, DeterministicReports) {
  SuiteOptions options;
  const auto a = run_suite("contraction", options);
  options.threads = 3;
  const auto b = run_suite("contraction", options);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
}

TEST(Suites, InjectedFaultFails) {
  SuiteOptions options;
  options.fault.lhs_offset = 1.0;
  EXPECT_FALSE(all_pass(run_suite("contraction", options)));
  EXPECT_THROW(run_suite("nonsense", options), std::invalid_argument);
}
