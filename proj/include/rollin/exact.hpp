#pragma once

// Exact (non-sampled) solvers for entropy-regularized tabular MDPs.
//
// Conventions, with alpha the entropy coefficient:
//   V^pi(s)   = sum_a pi(a|s) (Q^pi(s,a) - alpha log pi(a|s))
//   Q^pi(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) V^pi(s')
//   d^pi_mu   = (1 - gamma) sum_t gamma^t Pr(s_t = . | s_0 ~ mu)

#include "rollin/tabular.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rollin {

/// Thrown when soft value iteration does not reach its stopping rule.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct SoftSolution {
  Table q_star;
  Vector v_star;
  Table pi_star;
  double alpha = 0.0;
  double residual = 0.0;
  int iterations = 0;

  /// The optimal policy as softmax parameters theta = Q*/alpha. Stays finite
  /// even when pi_star underflows to zero for tiny alpha.
  SoftmaxPolicy policy() const { return SoftmaxPolicy(q_star / alpha); }
};

namespace detail {

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw std::runtime_error(std::string(what) + ": non-finite solution");
}

}  // namespace detail

/// alpha * log sum_a exp(Q(s,a)/alpha) for every state.
inline Vector soft_state_values(const Table& q, double alpha) {
  Vector v(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const auto row = q.row(s).array();
    const double m = row.maxCoeff();
    v(s) = m + alpha * std::log(((row - m) / alpha).exp().sum());
  }
  return v;
}

/// r(s,a) + gamma * sum_s' P(s'|s,a) v(s').
inline Table q_from_values(const TabularMdp& mdp, const Vector& v) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  Table q(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double expected = 0.0;
      for (const auto& o : mdp.transition->outcomes(s, a)) expected += o.prob * v(o.next);
      q(s, a) = mdp.reward(s, a) + mdp.discount * expected;
    }
  }
  return q;
}

/// The soft Bellman optimality operator T applied once.
inline Table soft_bellman(const TabularMdp& mdp, double alpha, const Table& q) {
  if (!(alpha > 0.0)) throw std::invalid_argument("soft Bellman operator needs alpha > 0");
  return q_from_values(mdp, soft_state_values(q, alpha));
}

/// Iterates the soft Bellman operator from Q = 0. Stops once
/// ||Q_{t+1} - Q_t||_inf <= tol (1 - gamma) / gamma, which certifies
/// ||Q - Q*||_inf <= tol, or once the residual reaches the floating-point
/// floor of the iterates (a few ulps of ||Q||_inf), whichever is larger.
inline SoftSolution soft_value_iteration(const TabularMdp& mdp, double alpha, double tol = 1e-10,
                                         int max_iter = 1'000'000) {
  if (!(alpha > 0.0)) throw std::invalid_argument("soft value iteration needs alpha > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("soft value iteration needs tol > 0");
  const double gamma = mdp.discount;
  const double target = gamma > 0.0 ? tol * (1.0 - gamma) / gamma
                                    : std::numeric_limits<double>::infinity();
  Table q = Table::Zero(mdp.n_states(), mdp.n_actions());
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (true) {
    if (it >= max_iter) {
      throw ConvergenceError("soft value iteration did not converge in " +
                                 std::to_string(max_iter) + " iterations (residual " +
                                 detail::format_real(residual) + ")",
                             residual);
    }
    Table next = soft_bellman(mdp, alpha, q);
    residual = (next - q).cwiseAbs().maxCoeff();
    q = std::move(next);
    ++it;
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, q.cwiseAbs().maxCoeff());
    if (residual <= std::max(target, floor)) break;
  }
  SoftSolution sol;
  sol.alpha = alpha;
  sol.q_star = std::move(q);
  sol.v_star = soft_state_values(sol.q_star, alpha);
  sol.pi_star.resize(sol.q_star.rows(), sol.q_star.cols());
  for (Eigen::Index s = 0; s < sol.q_star.rows(); ++s) {
    sol.pi_star.row(s) = ((sol.q_star.row(s).array() - sol.v_star(s)) / alpha).exp();
  }
  sol.residual = residual;
  sol.iterations = it;
  return sol;
}

/// Solves V = r_pi + gamma P_pi V with a dense LU factorization.
inline Vector exact_policy_evaluation(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                      double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("policy evaluation needs alpha >= 0");
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const Table logp = log_prob_table(policy);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
  Vector rhs = Vector::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double p = std::exp(logp(s, a));
      if (p == 0.0) continue;
      rhs(s) += p * (mdp.reward(s, a) - alpha * logp(s, a));
      for (const auto& o : mdp.transition->outcomes(s, a)) {
        system(s, o.next) -= mdp.discount * p * o.prob;
      }
    }
  }
  Vector v = system.partialPivLu().solve(rhs);
  detail::require_finite(v, "policy evaluation");
  return v;
}

/// Soft Q^pi: one Bellman backup of the exact policy value.
inline Table exact_soft_q(const TabularMdp& mdp, const SoftmaxPolicy& policy, double alpha) {
  return q_from_values(mdp, exact_policy_evaluation(mdp, policy, alpha));
}

/// Unique solution of d = (1 - gamma) mu + gamma P_pi^T d.
inline StateDistribution visitation_distribution(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                                 const StateDistribution& mu) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  if (mu.size() != S) throw std::invalid_argument("mu has the wrong number of states");
  const Table probs = prob_table(policy);
  // (I - gamma P_pi^T) d = (1 - gamma) mu
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double p = probs(s, a);
      if (p == 0.0) continue;
      for (const auto& o : mdp.transition->outcomes(s, a)) {
        system(o.next, s) -= mdp.discount * p * o.prob;
      }
    }
  }
  Vector d = system.partialPivLu().solve((1.0 - mdp.discount) * mu.probs());
  detail::require_finite(d, "visitation distribution");
  // Round-off can leave entries like -1e-17.
  d = d.cwiseMax(0.0);
  if (std::abs(d.sum() - 1.0) > 1e-10) {
    throw std::runtime_error("visitation distribution sums to " + detail::format_real(d.sum()));
  }
  return StateDistribution(std::move(d), 1e-10);
}

/// dV^pi(mu)/dtheta(s,a) = d^pi_mu(s) pi(a|s) A^pi(s,a) / (1 - gamma), with
/// the soft advantage A^pi = Q^pi - alpha log pi - V^pi.
inline Table exact_gradient(const TabularMdp& mdp, const SoftmaxPolicy& policy, double alpha,
                            const StateDistribution& mu) {
  const Vector v = exact_policy_evaluation(mdp, policy, alpha);
  const Table q = q_from_values(mdp, v);
  const Table logp = log_prob_table(policy);
  const StateDistribution d = visitation_distribution(mdp, policy, mu);
  Table g(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double advantage = q(s, a) - alpha * logp(s, a) - v(s);
      g(s, a) = d(s) * std::exp(logp(s, a)) * advantage / (1.0 - mdp.discount);
    }
  }
  return g;
}

/// max_{s: d(s) > 0} d(s) / mu(s).
inline double mismatch_ratio(const StateDistribution& d, const StateDistribution& mu) {
  if (d.size() != mu.size()) throw std::invalid_argument("distribution sizes differ");
  double ratio = 0.0;
  for (int s = 0; s < d.size(); ++s) {
    if (d(s) <= 0.0) continue;
    if (mu(s) <= 0.0) {
      throw std::domain_error("mismatch ratio is infinite: mu(" + std::to_string(s) +
                              ") = 0 while d > 0");
    }
    ratio = std::max(ratio, d(s) / mu(s));
  }
  return ratio;
}

/// KL(pi(.|s) || pi'(.|s)) from log-probability rows.
inline double kl_divergence(const auto& log_p, const auto& log_q) {
  double kl = 0.0;
  for (Eigen::Index a = 0; a < log_p.size(); ++a) {
    const double p = std::exp(log_p(a));
    if (p > 0.0) kl += p * (log_p(a) - log_q(a));
  }
  return kl;
}

inline double expected_value(const Vector& v, const StateDistribution& mu) {
  return v.dot(mu.probs());
}

/// Exact initial-state laws of the curriculum mixture:
///   mu_0 = rho,  mu_k = beta d^{pi_{k-1}}_{mu_{k-1}} + (1 - beta) rho,
/// for k = 0..policies.size(). Entry k of the result is mu_k.
inline std::vector<StateDistribution> mixture_initial_distributions(
    const TabularMdp& mdp, std::span<const SoftmaxPolicy> policies, double beta,
    const StateDistribution& rho) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
  std::vector<StateDistribution> mus{rho};
  for (const auto& policy : policies) {
    const StateDistribution d = visitation_distribution(mdp, policy, mus.back());
    Vector next = beta * d.probs() + (1.0 - beta) * rho.probs();
    mus.emplace_back(std::move(next), 1e-10);
  }
  return mus;
}

namespace detail {

inline nlohmann::json table_to_json(const Table& t) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    out.push_back(std::vector<double>(t.row(r).data(), t.row(r).data() + t.cols()));
  }
  return out;
}

}  // namespace detail

inline nlohmann::json solution_to_json(const SoftSolution& sol) {
  return {{"q_star", detail::table_to_json(sol.q_star)},
          {"v_star", std::vector<double>(sol.v_star.data(), sol.v_star.data() + sol.v_star.size())},
          {"pi_star", detail::table_to_json(sol.pi_star)},
          {"residual", sol.residual},
          {"iterations", sol.iterations}};
}

}  // namespace rollin
