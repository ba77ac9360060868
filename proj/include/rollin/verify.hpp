#pragma once

// Exact checks of the supporting identities and inequalities, with the
// exact solvers as oracle. Checks report failures; they never throw on a
// violated relation.
//
// Contexts are full reward tables and the context distance is the Euclidean
// norm of the flattened reward difference, so the reward Lipschitz constant
// is L_r = 1.

#include "rollin/exact.hpp"
#include "rollin/fourroom.hpp"
#include "rollin/parallel.hpp"
#include "rollin/rng.hpp"
#include "rollin/spg.hpp"
#include "rollin/tabular.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace rollin::verify {

struct CheckReport {
  std::string check;
  nlohmann::json instance = nlohmann::json::object();  // seed, sizes, alpha, gamma, beta, ...
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  double tolerance = 0.0;
  nlohmann::json details = nlohmann::json::object();
};

inline nlohmann::json to_json(const CheckReport& r) {
  return {{"check", r.check}, {"instance", r.instance}, {"lhs", r.lhs},          {"rhs", r.rhs},
          {"pass", r.pass},   {"tolerance", r.tolerance}, {"details", r.details}};
}

/// Deliberate defects for exercising the failure path of the suite.
struct FaultInjection {
  double lhs_offset = 0.0;  // added to every reported left-hand side
};

// ---------------------------------------------------------------------------
// Random instances

inline double uniform_in(RngStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline int uniform_int(RngStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

/// Random kernel with roughly half of each row zeroed (at least one
/// successor kept).
inline std::shared_ptr<const TransitionModel> random_transition(RngStream& rng, int S, int A) {
  std::vector<double> dense(static_cast<std::size_t>(S) * A * S, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double* row = dense.data() + (static_cast<std::size_t>(s) * A + a) * S;
      double total = 0.0;
      for (int n = 0; n < S; ++n) {
        if (rng.uniform() < 0.5) continue;
        row[n] = rng.uniform_positive();
        total += row[n];
      }
      if (total == 0.0) {
        row[uniform_int(rng, 0, S - 1)] = 1.0;
        total = 1.0;
      }
      for (int n = 0; n < S; ++n) row[n] /= total;
    }
  }
  return std::make_shared<const TransitionModel>(S, A, std::move(dense));
}

inline Table random_reward(RngStream& rng, int S, int A) {
  Table r(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) r(s, a) = rng.uniform();
  }
  return r;
}

/// Strictly positive random distribution.
inline Vector random_distribution(RngStream& rng, int n) {
  Vector p(n);
  for (int i = 0; i < n; ++i) p(i) = 0.05 + rng.uniform();
  return p / p.sum();
}

inline Table random_theta(RngStream& rng, int S, int A, double scale) {
  Table t(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) t(s, a) = uniform_in(rng, -scale, scale);
  }
  return t;
}

inline TabularMdp random_mdp(RngStream& rng, int S, int A, double gamma) {
  TabularMdp mdp;
  mdp.transition = random_transition(rng, S, A);
  mdp.reward = random_reward(rng, S, A);
  mdp.discount = gamma;
  mdp.init_dist = random_distribution(rng, S);
  return mdp;
}

inline nlohmann::json describe(const TabularMdp& mdp, double alpha) {
  return {{"n_states", mdp.n_states()},
          {"n_actions", mdp.n_actions()},
          {"gamma", mdp.discount},
          {"alpha", alpha}};
}

/// Flattened Euclidean distance between two reward tables.
inline double context_distance(const Table& r, const Table& r2) { return (r - r2).norm(); }

// ---------------------------------------------------------------------------
// Checks

inline constexpr double kIdentityTolerance = 1e-8;
inline constexpr double kContractionSlack = 1e-12;
inline constexpr double kBoundSlack = 1e-8;
inline constexpr double kFixedPointTolerance = 1e-10;
inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kFiniteDifferenceTolerance = 1e-6;
inline constexpr double kVerifyViTolerance = 1e-12;

/// Memo of soft value iteration results keyed by kernel, reward, discount and
/// alpha, so suites can share the expensive four-room solves.
class SolutionCache {
 public:
  const SoftSolution& solve(const TabularMdp& mdp, double alpha) {
    const Key key{mdp.transition->checksum(),
                  ::rollin::detail::fnv1a({mdp.reward.data(), static_cast<std::size_t>(mdp.reward.size())}),
                  mdp.discount, alpha};
    {
      std::lock_guard lock(mutex_);
      const auto it = entries_.find(key);
      if (it != entries_.end()) return *it->second;
    }
    auto sol = std::make_shared<const SoftSolution>(soft_value_iteration(mdp, alpha, kVerifyViTolerance));
    std::lock_guard lock(mutex_);
    return *entries_.emplace(key, std::move(sol)).first->second;
  }

 private:
  using Key = std::tuple<std::uint64_t, std::uint64_t, double, double>;
  std::mutex mutex_;
  std::map<Key, std::shared_ptr<const SoftSolution>> entries_;
};

namespace detail {

inline SoftSolution solve(const TabularMdp& mdp, double alpha, SolutionCache* cache) {
  return cache ? cache->solve(mdp, alpha) : soft_value_iteration(mdp, alpha, kVerifyViTolerance);
}

}  // namespace detail

inline Table optimal_log_policy(const SoftSolution& sol) {
  Table out(sol.q_star.rows(), sol.q_star.cols());
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    out.row(s) = (sol.q_star.row(s).array() - sol.v_star(s)) / sol.alpha;
  }
  return out;
}

/// V*(rho) - V^pi(rho) against (1/(1-gamma)) sum_s d^pi_rho(s) alpha KL(pi(.|s) || pi*(.|s)).
inline CheckReport check_suboptimality_identity(const TabularMdp& mdp, double alpha,
                                                const SoftmaxPolicy& policy,
                                                const FaultInjection& fault = {}) {
  CheckReport r{"suboptimality_identity", describe(mdp, alpha)};
  r.tolerance = kIdentityTolerance;
  const SoftSolution sol = soft_value_iteration(mdp, alpha, kVerifyViTolerance);
  const StateDistribution rho(mdp.init_dist);
  const Vector v = exact_policy_evaluation(mdp, policy, alpha);
  const StateDistribution d = visitation_distribution(mdp, policy, rho);
  const Table logp = log_prob_table(policy);
  const Table log_star = optimal_log_policy(sol);
  double weighted_kl = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s) {
    weighted_kl += d(s) * alpha * kl_divergence(logp.row(s), log_star.row(s));
  }
  r.lhs = expected_value(sol.v_star, rho) - expected_value(v, rho) + fault.lhs_offset;
  r.rhs = weighted_kl / (1.0 - mdp.discount);
  r.pass = std::abs(r.lhs - r.rhs) <= r.tolerance;
  r.details = {{"vi_residual", sol.residual}, {"vi_iterations", sol.iterations}};
  return r;
}

/// v* = alpha logsumexp(q*/alpha), pi* = exp((q* - v*)/alpha) = softmax(q*/alpha)
/// and T q* = q*; lhs is the worst deviation.
inline CheckReport check_fixed_point(const TabularMdp& mdp, double alpha,
                                     const FaultInjection& fault = {}) {
  CheckReport r{"fixed_point", describe(mdp, alpha)};
  r.tolerance = kFixedPointTolerance;
  const SoftSolution sol = soft_value_iteration(mdp, alpha, kVerifyViTolerance);
  const Vector v = soft_state_values(sol.q_star, alpha);
  double value_gap = (v - sol.v_star).cwiseAbs().maxCoeff();
  double policy_gap = 0.0;
  const SoftmaxPolicy greedy = sol.policy();
  for (int s = 0; s < mdp.n_states(); ++s) {
    const Vector softmax = policy_probs(greedy, s);
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double expected = std::exp((sol.q_star(s, a) - sol.v_star(s)) / alpha);
      policy_gap = std::max({policy_gap, std::abs(expected - sol.pi_star(s, a)),
                             std::abs(softmax(a) - sol.pi_star(s, a))});
    }
  }
  // The solution must also be a fixed point of the operator itself.
  const double bellman_gap = (soft_bellman(mdp, alpha, sol.q_star) - sol.q_star).cwiseAbs().maxCoeff();
  r.lhs = std::max({value_gap, policy_gap, bellman_gap}) + fault.lhs_offset;
  r.rhs = 0.0;
  r.pass = r.lhs <= r.tolerance;
  r.details = {{"value_gap", value_gap},
               {"policy_gap", policy_gap},
               {"bellman_residual", bellman_gap},
               {"vi_iterations", sol.iterations}};
  return r;
}

/// ||T q1 - T q2||_inf <= gamma ||q1 - q2||_inf + 1e-12.
inline CheckReport check_contraction(const TabularMdp& mdp, double alpha, const Table& q1,
                                     const Table& q2, const FaultInjection& fault = {}) {
  CheckReport r{"contraction", describe(mdp, alpha)};
  r.tolerance = kContractionSlack;
  r.lhs = (soft_bellman(mdp, alpha, q1) - soft_bellman(mdp, alpha, q2)).cwiseAbs().maxCoeff() +
          fault.lhs_offset;
  r.rhs = mdp.discount * (q1 - q2).cwiseAbs().maxCoeff();
  r.pass = r.lhs <= r.rhs + r.tolerance;
  return r;
}

/// ||Q*_w - Q*_w'||_inf <= ||w - w'||_2 / (1 - gamma) and
/// max |pi*_w - pi*_w'| <= ||w - w'||_2 / (alpha (1 - gamma)). lhs / rhs carry
/// the Q part; the policy part is in details and both must hold.
inline CheckReport check_policy_context_bound(const TabularMdp& mdp, const Table& r2, double alpha,
                                              const FaultInjection& fault = {},
                                              SolutionCache* cache = nullptr) {
  CheckReport r{"policy_context_bound", describe(mdp, alpha)};
  r.tolerance = kBoundSlack;
  const TabularMdp other = with_reward(mdp, r2);
  const SoftSolution a = detail::solve(mdp, alpha, cache);
  const SoftSolution b = detail::solve(other, alpha, cache);
  const double dist = context_distance(mdp.reward, r2);
  const double sup_reward = (mdp.reward - r2).cwiseAbs().maxCoeff();
  const double gamma = mdp.discount;
  r.lhs = (a.q_star - b.q_star).cwiseAbs().maxCoeff() + fault.lhs_offset;
  r.rhs = dist / (1.0 - gamma);
  const double policy_lhs = (a.pi_star - b.pi_star).cwiseAbs().maxCoeff() + fault.lhs_offset;
  const double policy_rhs = dist / (alpha * (1.0 - gamma));
  const bool lipschitz = sup_reward <= dist;
  r.pass = r.lhs <= r.rhs + r.tolerance && policy_lhs <= policy_rhs + r.tolerance && lipschitz;
  r.details = {{"context_distance", dist},
               {"L_r", 1.0},
               {"sup_reward_difference", sup_reward},
               {"lipschitz_holds", lipschitz},
               {"policy_lhs", policy_lhs},
               {"policy_rhs", policy_rhs}};
  return r;
}

/// V_k^{pi*_k}(rho) - V_k^{pi*_{k-1}}(rho) <= 2 ||w_k - w_{k-1}||_2 / (1 - gamma)^2,
/// both values under the reward of context k. `mdp` carries r_k.
inline CheckReport check_adjacent_value_bound(const TabularMdp& mdp, const Table& r_prev,
                                              double alpha, const FaultInjection& fault = {},
                                              SolutionCache* cache = nullptr) {
  CheckReport r{"adjacent_value_bound", describe(mdp, alpha)};
  r.tolerance = kBoundSlack;
  const SoftSolution cur = detail::solve(mdp, alpha, cache);
  const SoftSolution prev = detail::solve(with_reward(mdp, r_prev), alpha, cache);
  const StateDistribution rho(mdp.init_dist);
  const double v_cur = expected_value(exact_policy_evaluation(mdp, cur.policy(), alpha), rho);
  const double v_prev = expected_value(exact_policy_evaluation(mdp, prev.policy(), alpha), rho);
  const double dist = context_distance(mdp.reward, r_prev);
  const double gamma = mdp.discount;
  r.lhs = v_cur - v_prev + fault.lhs_offset;
  r.rhs = 2.0 * dist / ((1.0 - gamma) * (1.0 - gamma));
  r.pass = r.lhs <= r.rhs + r.tolerance;
  r.details = {{"context_distance", dist}, {"L_r", 1.0}, {"v_optimal", v_cur}, {"v_previous", v_prev}};
  return r;
}

/// With mu_0 = rho, mu_i = beta d^{pi*_{i-1}}_{mu_{i-1}} + (1 - beta) rho and
/// d_i = d^{pi*_i}_{mu_i}:
///   ||d_k / mu_k||_inf <= ||d_k - d_{k-1}||_1 / min mu_k + 1 / beta.
/// `rewards` holds the contexts w_0..w_k (k >= 1) over the kernel of `mdp`.
inline CheckReport check_mismatch_decomposition(const TabularMdp& mdp,
                                                const std::vector<Table>& rewards, double alpha,
                                                double beta, const FaultInjection& fault = {},
                                                SolutionCache* cache = nullptr) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("mismatch decomposition needs beta in (0,1]");
  }
  if (rewards.size() < 2) throw std::invalid_argument("mismatch decomposition needs k >= 1");
  const std::size_t k = rewards.size() - 1;
  CheckReport r{"mismatch_decomposition", describe(mdp, alpha)};
  r.instance["beta"] = beta;
  r.instance["k"] = k;
  r.tolerance = kBoundSlack;
  std::vector<SoftmaxPolicy> optimal;
  for (const auto& rw : rewards) {
    optimal.push_back(detail::solve(with_reward(mdp, rw), alpha, cache).policy());
  }
  const StateDistribution rho(mdp.init_dist);
  const auto mus = mixture_initial_distributions(
      mdp, std::span<const SoftmaxPolicy>(optimal.data(), k), beta, rho);
  const StateDistribution d_k = visitation_distribution(mdp, optimal[k], mus[k]);
  const StateDistribution d_prev = visitation_distribution(mdp, optimal[k - 1], mus[k - 1]);
  const double min_mu = mus[k].probs().minCoeff();
  r.lhs = mismatch_ratio(d_k, mus[k]) + fault.lhs_offset;
  r.rhs = (d_k.probs() - d_prev.probs()).lpNorm<1>() / min_mu + 1.0 / beta;
  r.pass = r.lhs <= r.rhs + r.tolerance;

  double delta_omega = 0.0;
  for (std::size_t i = 1; i < rewards.size(); ++i) {
    delta_omega = std::max(delta_omega, context_distance(rewards[i], rewards[i - 1]));
  }
  // Near-optimal initialization condition on the first pair; reported only.
  const StateDistribution d0 = visitation_distribution(mdp, optimal[0], rho);
  r.details = {{"delta_omega", delta_omega},
               {"L_r", 1.0},
               {"min_mu_k", min_mu},
               {"ratio_under_rho", mismatch_ratio(visitation_distribution(mdp, optimal[k], rho), rho)},
               {"init_condition_lhs", (rho.probs() - d0.probs()).lpNorm<1>()},
               {"init_condition_rhs", context_distance(rewards[1], rewards[0])}};
  return r;
}

/// Central finite differences of theta -> V^{pi_theta}(mu).
inline Table finite_difference_gradient(const TabularMdp& mdp, const Table& theta, double alpha,
                                        const StateDistribution& mu,
                                        double step = kFiniteDifferenceStep) {
  Table g(theta.rows(), theta.cols());
  Table probe = theta;
  for (Eigen::Index s = 0; s < theta.rows(); ++s) {
    for (Eigen::Index a = 0; a < theta.cols(); ++a) {
      probe(s, a) = theta(s, a) + step;
      const double up = expected_value(exact_policy_evaluation(mdp, SoftmaxPolicy(probe), alpha), mu);
      probe(s, a) = theta(s, a) - step;
      const double down = expected_value(exact_policy_evaluation(mdp, SoftmaxPolicy(probe), alpha), mu);
      probe(s, a) = theta(s, a);
      g(s, a) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

/// (a) exact gradient vs central finite differences, max abs <= 1e-6;
/// (b) with n_samples > 0, the random-horizon estimator's Monte Carlo mean
/// within 3 standard errors of the exact gradient in every coordinate.
/// lhs / rhs carry part (a); the Monte Carlo part is in details.
inline CheckReport check_gradient_suite(const TabularMdp& mdp, double alpha, const Table& theta,
                                        std::size_t n_samples, const RngStream& rng,
                                        unsigned threads = 1, const FaultInjection& fault = {}) {
  CheckReport r{"gradient_suite", describe(mdp, alpha)};
  r.instance["n_samples"] = n_samples;
  r.tolerance = kFiniteDifferenceTolerance;
  const SoftmaxPolicy policy(theta);
  const StateDistribution rho(mdp.init_dist);
  const Table exact = exact_gradient(mdp, policy, alpha, rho);
  const Table fd = finite_difference_gradient(mdp, theta, alpha, rho);
  r.lhs = (exact - fd).cwiseAbs().maxCoeff() + fault.lhs_offset;
  r.rhs = r.tolerance;
  r.pass = r.lhs <= r.rhs;
  if (n_samples > 0) {
    const TableMoments m = alg4_moments(mdp, policy, alpha, n_samples, rng, threads);
    const Table mean = m.mean();
    const Table se = m.std_error();
    double worst_z = 0.0;
    bool within = true;
    for (Eigen::Index s = 0; s < exact.rows(); ++s) {
      for (Eigen::Index a = 0; a < exact.cols(); ++a) {
        const double dev = std::abs(mean(s, a) - exact(s, a)) + fault.lhs_offset;
        // Zero-variance coordinates must agree to round-off.
        const double allowed = 3.0 * se(s, a) + 1e-12;
        if (dev > allowed) within = false;
        if (se(s, a) > 0.0) worst_z = std::max(worst_z, dev / se(s, a));
      }
    }
    r.pass = r.pass && within;
    r.details["monte_carlo_within_3se"] = within;
    r.details["monte_carlo_worst_z"] = worst_z;
  }
  r.details["exact_gradient_max_abs"] = exact.cwiseAbs().maxCoeff();
  return r;
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteOptions {
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::size_t gradient_samples = 1'000'000;
  double fourroom_alpha = 0.01;
  FaultInjection fault{};
  std::shared_ptr<SolutionCache> cache = std::make_shared<SolutionCache>();
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"identity",      "contraction", "context_bound",
                                              "adjacent_value", "mismatch",    "gradient"};
  return names;
}

namespace detail {

inline constexpr double kGammas[] = {0.5, 0.9, 0.99};
inline constexpr double kAlphas[] = {0.01, 0.1, 0.5};
inline constexpr double kBetas[] = {0.25, 0.5, 0.75};

template <class Fn>
std::vector<CheckReport> run_instances(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<CheckReport> out(n);
  parallel_for(n, threads, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

inline void tag(CheckReport& r, std::uint64_t seed, std::size_t index) {
  r.instance["seed"] = seed;
  r.instance["index"] = index;
}

inline Table fourroom_reward(const fourroom::GridLayout& layout, fourroom::Cell goal) {
  return fourroom::reward_table(layout, {goal, fourroom::RewardVariant::hard});
}

inline TabularMdp fourroom_theory_mdp(const fourroom::GridLayout& layout, fourroom::Cell goal) {
  const ContextualMdp cmdp =
      fourroom::build_contextual(layout, fourroom::RewardVariant::hard, fourroom::InitMode::theory);
  return cmdp.mdp(layout.index(goal));
}

}  // namespace detail

/// 100 random MDPs (S <= 6, A <= 4, gamma in {0.5, 0.9, 0.99}, alpha in
/// {0.01, 0.1, 0.5}): sub-optimality identity at a random policy and the
/// fixed-point identities of the solver.
inline std::vector<CheckReport> identity_suite(const SuiteOptions& opt) {
  const RngStream base(opt.seed, {1});
  auto reports = detail::run_instances(200, opt.threads, [&](std::size_t i) {
    RngStream rng = base.derive(i / 2);
    const int S = uniform_int(rng, 2, 6);
    const int A = uniform_int(rng, 2, 4);
    const double gamma = detail::kGammas[(i / 2) % 3];
    const double alpha = detail::kAlphas[(i / 6) % 3];
    const TabularMdp mdp = random_mdp(rng, S, A, gamma);
    // Every fourth policy is nearly deterministic to stress the entropy term.
    const double scale = (i / 2) % 4 == 3 ? 30.0 : 3.0;
    CheckReport r = i % 2 == 0
                        ? check_suboptimality_identity(mdp, alpha,
                                                       SoftmaxPolicy(random_theta(rng, S, A, scale)),
                                                       opt.fault)
                        : check_fixed_point(mdp, alpha, opt.fault);
    detail::tag(r, opt.seed, i / 2);
    return r;
  });
  return reports;
}

/// 1000 random Q pairs with entries in [-10, 10] (every tenth pair is a
/// constant shift) on random MDPs.
inline std::vector<CheckReport> contraction_suite(const SuiteOptions& opt) {
  const RngStream base(opt.seed, {2});
  return detail::run_instances(1000, opt.threads, [&](std::size_t i) {
    RngStream rng = base.derive(i);
    const int S = uniform_int(rng, 2, 6);
    const int A = uniform_int(rng, 2, 4);
    const double gamma = detail::kGammas[i % 3];
    const double alpha = detail::kAlphas[(i / 3) % 3];
    const TabularMdp mdp = random_mdp(rng, S, A, gamma);
    const Table q1 = random_theta(rng, S, A, 10.0);
    const Table q2 = i % 10 == 9 ? Table((q1.array() + uniform_in(rng, -10.0, 10.0)).matrix())
                                 : random_theta(rng, S, A, 10.0);
    CheckReport r = check_contraction(mdp, alpha, q1, q2, opt.fault);
    detail::tag(r, opt.seed, i);
    return r;
  });
}

/// Random context pairs; the last pair of every ten is a constant reward
/// shift. Rewards stay in [0, 1].
inline std::pair<TabularMdp, Table> random_context_pair(RngStream& rng, std::size_t i) {
  const int S = uniform_int(rng, 2, 5);
  const int A = uniform_int(rng, 2, 4);
  const TabularMdp mdp = random_mdp(rng, S, A, detail::kGammas[i % 3]);
  Table r2 = mdp.reward;
  if (i % 10 == 9) {
    TabularMdp shifted = mdp;
    shifted.reward = (mdp.reward.array() * 0.98).matrix();
    return {shifted, (shifted.reward.array() + 0.01).matrix()};
  }
  const double scale = uniform_in(rng, 0.001, 0.3);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      r2(s, a) = std::clamp(r2(s, a) + uniform_in(rng, -scale, scale), 0.0, 1.0);
    }
  }
  return {mdp, r2};
}

/// 100 random context pairs plus every adjacent pair of the four-room
/// curriculum.
inline std::vector<CheckReport> context_bound_suite(const SuiteOptions& opt) {
  const RngStream base(opt.seed, {3});
  const fourroom::GridLayout layout = fourroom::default_layout();
  const std::size_t pairs = layout.curriculum.size() - 1;
  return detail::run_instances(100 + pairs, opt.threads, [&](std::size_t i) {
    if (i < 100) {
      RngStream rng = base.derive(i);
      const auto [mdp, r2] = random_context_pair(rng, i);
      CheckReport r = check_policy_context_bound(mdp, r2, detail::kAlphas[(i / 3) % 3], opt.fault);
      detail::tag(r, opt.seed, i);
      return r;
    }
    const std::size_t k = i - 100 + 1;
    const TabularMdp mdp = detail::fourroom_theory_mdp(layout, layout.curriculum[k - 1]);
    CheckReport r = check_policy_context_bound(
        mdp, detail::fourroom_reward(layout, layout.curriculum[k]), opt.fourroom_alpha, opt.fault,
        opt.cache.get());
    r.instance["fourroom_pair"] = k;
    return r;
  });
}

inline std::vector<CheckReport> adjacent_value_suite(const SuiteOptions& opt) {
  const RngStream base(opt.seed, {4});
  const fourroom::GridLayout layout = fourroom::default_layout();
  const std::size_t pairs = layout.curriculum.size() - 1;
  return detail::run_instances(100 + pairs, opt.threads, [&](std::size_t i) {
    if (i < 100) {
      RngStream rng = base.derive(i);
      const auto [mdp, r2] = random_context_pair(rng, i);
      CheckReport r = check_adjacent_value_bound(with_reward(mdp, r2), mdp.reward,
                                                 detail::kAlphas[(i / 3) % 3], opt.fault);
      detail::tag(r, opt.seed, i);
      return r;
    }
    const std::size_t k = i - 100 + 1;
    const TabularMdp mdp = detail::fourroom_theory_mdp(layout, layout.curriculum[k]);
    CheckReport r = check_adjacent_value_bound(
        mdp, detail::fourroom_reward(layout, layout.curriculum[k - 1]), opt.fourroom_alpha, opt.fault,
        opt.cache.get());
    r.instance["fourroom_pair"] = k;
    return r;
  });
}

/// Random 6-state chains (k in 1..3, with w_i a small perturbation of
/// w_{i-1}) for beta in {0.25, 0.5, 0.75}, plus the four-room prefix
/// w_0, w_1, w_2 at beta = 0.75.
inline std::vector<CheckReport> mismatch_suite(const SuiteOptions& opt) {
  const RngStream base(opt.seed, {5});
  const fourroom::GridLayout layout = fourroom::default_layout();
  return detail::run_instances(31, opt.threads, [&](std::size_t i) {
    if (i < 30) {
      RngStream rng = base.derive(i);
      const double beta = detail::kBetas[i % 3];
      const double gamma = detail::kGammas[(i / 3) % 3];
      const double alpha = detail::kAlphas[(i / 9) % 3];
      const TabularMdp mdp = random_mdp(rng, 6, 3, gamma);
      const int k = uniform_int(rng, 1, 3);
      std::vector<Table> rewards{mdp.reward};
      for (int j = 0; j < k; ++j) {
        Table next = rewards.back();
        for (Eigen::Index s = 0; s < next.rows(); ++s) {
          for (Eigen::Index a = 0; a < next.cols(); ++a) {
            next(s, a) = std::clamp(next(s, a) + uniform_in(rng, -0.1, 0.1), 0.0, 1.0);
          }
        }
        rewards.push_back(std::move(next));
      }
      CheckReport r = check_mismatch_decomposition(mdp, rewards, alpha, beta, opt.fault);
      detail::tag(r, opt.seed, i);
      return r;
    }
    const TabularMdp mdp = detail::fourroom_theory_mdp(layout, layout.curriculum[0]);
    std::vector<Table> rewards;
    for (std::size_t j = 0; j < 3; ++j) rewards.push_back(detail::fourroom_reward(layout, layout.curriculum[j]));
    CheckReport r =
        check_mismatch_decomposition(mdp, rewards, opt.fourroom_alpha, 0.75, opt.fault, opt.cache.get());
    r.instance["fourroom_prefix"] = 3;
    return r;
  });
}

/// 20 finite-difference instances (gamma = 0 included) and one Monte Carlo
/// unbiasedness instance on a 4-state MDP.
inline std::vector<CheckReport> gradient_suite(const SuiteOptions& opt) {
  const RngStream base(opt.seed, {6});
  auto reports = detail::run_instances(20, opt.threads, [&](std::size_t i) {
    RngStream rng = base.derive(i);
    const int S = uniform_int(rng, 2, 5);
    const int A = uniform_int(rng, 2, 4);
    const double gamma = i == 0 ? 0.0 : detail::kGammas[i % 3];
    const double alpha = i % 4 == 0 ? 0.0 : detail::kAlphas[i % 3];
    const TabularMdp mdp = random_mdp(rng, S, A, gamma);
    CheckReport r = check_gradient_suite(mdp, alpha, random_theta(rng, S, A, 5.0), 0, rng, 1, opt.fault);
    detail::tag(r, opt.seed, i);
    return r;
  });
  RngStream rng = base.derive(1000);
  const TabularMdp mdp = random_mdp(rng, 4, 3, 0.9);
  CheckReport r = check_gradient_suite(mdp, 0.1, random_theta(rng, 4, 3, 1.0), opt.gradient_samples,
                                       rng.derive(1), opt.threads, opt.fault);
  detail::tag(r, opt.seed, 1000);
  reports.push_back(std::move(r));
  return reports;
}

inline std::vector<CheckReport> run_suite(const std::string& name, const SuiteOptions& opt) {
  if (name == "identity") return identity_suite(opt);
  if (name == "contraction") return contraction_suite(opt);
  if (name == "context_bound") return context_bound_suite(opt);
  if (name == "adjacent_value") return adjacent_value_suite(opt);
  if (name == "mismatch") return mismatch_suite(opt);
  if (name == "gradient") return gradient_suite(opt);
  if (name == "all") {
    std::vector<CheckReport> all;
    for (const auto& n : suite_names()) {
      auto part = run_suite(n, opt);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw std::invalid_argument("unknown suite " + name);
}

inline bool all_pass(const std::vector<CheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

struct SuiteTally {
  std::size_t total = 0;
  std::size_t passed = 0;
  double worst_margin = 0.0;  // max of lhs - rhs (identity checks: |lhs - rhs|)
};

inline std::map<std::string, SuiteTally> tally(const std::vector<CheckReport>& reports) {
  std::map<std::string, SuiteTally> out;
  for (const auto& r : reports) {
    auto& t = out[r.check];
    if (t.total == 0) t.worst_margin = -std::numeric_limits<double>::infinity();
    ++t.total;
    t.passed += r.pass ? 1 : 0;
    const double margin = r.check == "suboptimality_identity" ? std::abs(r.lhs - r.rhs) : r.lhs - r.rhs;
    t.worst_margin = std::max(t.worst_margin, margin);
  }
  return out;
}

}  // namespace rollin::verify
