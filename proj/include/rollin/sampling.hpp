#pragma once

// Seeded stochastic primitives: geometric horizons, rollouts, random-horizon
// (s, a) sampling, unbiased soft-Q estimation and the curriculum mixture
// initial-state sampler.

#include "rollin/rng.hpp"
#include "rollin/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

namespace rollin {

/// H with P(H = h) = (1 - gamma) gamma^h, h >= 0. Inversion on one uniform.
inline int sample_geometric(RngStream& rng, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("geometric continuation probability must lie in [0,1)");
  }
  const double u = rng.uniform_positive();
  if (gamma == 0.0) return 0;
  const double h = std::floor(std::log(u) / std::log(gamma));
  constexpr double cap = static_cast<double>(std::numeric_limits<int>::max());
  return static_cast<int>(std::min(h, cap));
}

/// Index i with cdf[i-1] <= u * total < cdf[i].
inline int sample_from_cdf(std::span<const double> cdf, RngStream& rng) {
  const double target = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                   static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

/// Cumulative distribution of a state distribution, for repeated sampling.
class StateSampler {
 public:
  explicit StateSampler(const Vector& probs) : cdf_(static_cast<std::size_t>(probs.size())) {
    double c = 0.0;
    for (Eigen::Index s = 0; s < probs.size(); ++s) {
      c += probs(s);
      cdf_[static_cast<std::size_t>(s)] = c;
    }
  }
  explicit StateSampler(const StateDistribution& dist) : StateSampler(dist.probs()) {}

  int sample(RngStream& rng) const { return sample_from_cdf(cdf_, rng); }

 private:
  std::vector<double> cdf_;
};

/// Successor of (s, a). Deterministic rows consume no randomness.
inline int sample_next_state(const TransitionModel& model, int s, int a, RngStream& rng) {
  const auto outcomes = model.outcomes(s, a);
  if (outcomes.size() == 1) return outcomes.front().next;
  const double target = rng.uniform() * outcomes.back().cdf;
  const auto it = std::upper_bound(outcomes.begin(), outcomes.end(), target,
                                   [](double t, const Outcome& o) { return t < o.cdf; });
  return it == outcomes.end() ? outcomes.back().next : it->next;
}

/// Precomputed probability, log-probability and CDF tables of a softmax
/// policy, so that sampling and log pi lookups are O(log A) / O(1).
class PolicyTables {
 public:
  explicit PolicyTables(const SoftmaxPolicy& policy)
      : log_probs_(log_prob_table(policy)),
        probs_(log_probs_.array().exp().matrix()),
        cdf_(probs_.rows(), probs_.cols()) {
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
      double c = 0.0;
      for (Eigen::Index a = 0; a < probs_.cols(); ++a) {
        c += probs_(s, a);
        cdf_(s, a) = c;
      }
    }
  }

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  double prob(int s, int a) const { return probs_(s, a); }
  double log_prob(int s, int a) const { return log_probs_(s, a); }
  const Table& probs() const { return probs_; }
  const Table& log_probs() const { return log_probs_; }

  int sample_action(int s, RngStream& rng) const {
    return sample_from_cdf({cdf_.row(s).data(), static_cast<std::size_t>(cdf_.cols())}, rng);
  }

 private:
  Table log_probs_;
  Table probs_;
  Table cdf_;
};

/// Rolls the policy for exactly `horizon` steps from s0 with no early
/// termination: a_t ~ pi(.|s_t), r_t = r(s_t, a_t), s_{t+1} ~ P(.|s_t, a_t).
inline Trajectory rollout(const TransitionModel& model, const Table& reward,
                          const PolicyTables& policy, int s0, int horizon, RngStream& rng) {
  if (horizon < 1) throw std::invalid_argument("rollout horizon must be at least 1");
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(horizon) + 1);
  traj.actions.reserve(static_cast<std::size_t>(horizon));
  traj.rewards.reserve(static_cast<std::size_t>(horizon));
  int s = s0;
  traj.states.push_back(s);
  for (int t = 0; t < horizon; ++t) {
    const int a = policy.sample_action(s, rng);
    traj.actions.push_back(a);
    traj.rewards.push_back(reward(s, a));
    s = sample_next_state(model, s, a, rng);
    traj.states.push_back(s);
  }
  return traj;
}

inline Trajectory rollout(const TabularMdp& mdp, const SoftmaxPolicy& policy, int s0, int horizon,
                          RngStream& rng) {
  return rollout(*mdp.transition, mdp.reward, PolicyTables(policy), s0, horizon, rng);
}

/// Runs the policy `steps` transitions from s and returns the final state.
inline int roll_forward(const TransitionModel& model, const PolicyTables& policy, int s, int steps,
                        RngStream& rng) {
  for (int h = 0; h < steps; ++h) {
    const int a = policy.sample_action(s, rng);
    s = sample_next_state(model, s, a, rng);
  }
  return s;
}

struct StateAction {
  int state = 0;
  int action = 0;
};

/// Random-horizon (s, a) sampler: H ~ Geom(1 - gamma), s_0 ~ mu, roll H
/// steps, return (s_H, a_H). The state marginal is d^pi_mu.
inline StateAction sam_sa(const TabularMdp& mdp, const PolicyTables& policy,
                          const StateSampler& initial, RngStream& rng) {
  const int horizon = sample_geometric(rng, mdp.discount);
  int s = initial.sample(rng);
  s = roll_forward(*mdp.transition, policy, s, horizon, rng);
  return {s, policy.sample_action(s, rng)};
}

inline StateAction sam_sa(const TabularMdp& mdp, const SoftmaxPolicy& policy, RngStream& rng) {
  return sam_sa(mdp, PolicyTables(policy), StateSampler(mdp.init_dist), rng);
}

/// Unbiased estimate of the soft Q^pi(s, a):
///   Q = r(s,a) + sum_{h<H} gamma^{(h+1)/2} (r_{h+1} - alpha log pi(a_{h+1}|s_{h+1}))
/// with H ~ Geom(1 - sqrt(gamma)). Since P(H > h) = gamma^{(h+1)/2}, the
/// expectation weights step h+1 by exactly gamma^{h+1}.
inline double est_ent_q(const TabularMdp& mdp, const PolicyTables& policy, double alpha, int s,
                        int a, RngStream& rng) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("est_ent_q needs alpha >= 0");
  const double root = std::sqrt(mdp.discount);
  double q = mdp.reward(s, a);
  const int horizon = sample_geometric(rng, root);
  double weight = 1.0;
  for (int h = 0; h < horizon; ++h) {
    s = sample_next_state(*mdp.transition, s, a, rng);
    a = policy.sample_action(s, rng);
    weight *= root;
    q += weight * (mdp.reward(s, a) - alpha * policy.log_prob(s, a));
  }
  return q;
}

inline double est_ent_q(const TabularMdp& mdp, const SoftmaxPolicy& policy, double alpha, int s,
                        int a, RngStream& rng) {
  return est_ent_q(mdp, PolicyTables(policy), alpha, s, a, rng);
}

/// Frozen copy of a policy captured at a context switch.
struct Snapshot {
  SoftmaxPolicy policy;
  PolicyTables tables;
  std::uint64_t checksum;

  explicit Snapshot(SoftmaxPolicy p)
      : policy(std::move(p)),
        tables(policy),
        checksum(detail::fnv1a({policy.theta().data(),
                                static_cast<std::size_t>(policy.theta().size())})) {}

  bool intact() const {
    return checksum ==
           detail::fnv1a({policy.theta().data(), static_cast<std::size_t>(policy.theta().size())});
  }
};

/// Ordered snapshots of the policies of completed contexts (index 0..k-1).
/// Entries are immutable and shared, so copies of the chain are cheap.
class SnapshotChain {
 public:
  void push(SoftmaxPolicy policy) {
    entries_.push_back(std::make_shared<const Snapshot>(std::move(policy)));
  }

  std::size_t size() const { return entries_.size(); }
  const Snapshot& at(std::size_t i) const { return *entries_.at(i); }

  bool intact() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const auto& e) { return e->intact(); });
  }

  std::vector<std::uint64_t> checksums() const {
    std::vector<std::uint64_t> out;
    for (const auto& e : entries_) out.push_back(e->checksum);
    return out;
  }

  std::vector<SoftmaxPolicy> policies() const {
    std::vector<SoftmaxPolicy> out;
    for (const auto& e : entries_) out.push_back(e->policy);
    return out;
  }

 private:
  std::vector<std::shared_ptr<const Snapshot>> entries_;
};

enum class MixtureMode {
  recursive,  // mu_k = beta d^{pi_{k-1}}_{mu_{k-1}} + (1 - beta) rho
  shallow,    // roll pi_{k-1} from rho directly
};

/// Draws an initial state from the curriculum mixture mu_k. With probability
/// 1 - beta (and always when k = 0) the state comes from rho; otherwise a
/// state from mu_{k-1} (recursive) or rho (shallow) is rolled forward under
/// snapshot k-1 for H ~ Geom(1 - gamma) steps.
inline int sample_mixture_initial(const SnapshotChain& chain, std::size_t k, double beta,
                                  const StateSampler& rho, const TransitionModel& model,
                                  double gamma, RngStream& rng,
                                  MixtureMode mode = MixtureMode::recursive) {
  if (chain.size() < k) throw std::invalid_argument("snapshot chain is shorter than k");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
  if (k == 0) return rho.sample(rng);
  if (!(rng.uniform() < beta)) return rho.sample(rng);
  const int start = mode == MixtureMode::recursive
                        ? sample_mixture_initial(chain, k - 1, beta, rho, model, gamma, rng, mode)
                        : rho.sample(rng);
  const int horizon = sample_geometric(rng, gamma);
  return roll_forward(model, chain.at(k - 1).tables, start, horizon, rng);
}

}  // namespace rollin
