#pragma once

// Stochastic softmax policy gradient for entropy-regularized RL: the
// finite-horizon REINFORCE estimator used by the four-room experiment, the
// unbiased random-horizon estimator, Adam / plain ascent steps and the
// two-phase step-size schedule.
//
// Every gradient here is an ASCENT direction on the entropy-regularized
// return. Optimizers add the step.

#include "rollin/exact.hpp"
#include "rollin/parallel.hpp"
#include "rollin/rng.hpp"
#include "rollin/sampling.hpp"
#include "rollin/stats.hpp"
#include "rollin/tabular.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace rollin {

struct GradEstimate {
  Table gradient;
  int batch_size = 0;
  double mean_undiscounted_return = 0.0;
  double mean_discounted_entreg_return = 0.0;
  int success_count = 0;
};

/// Discounted entropy-regularized returns-to-go of one trajectory:
/// R_t = (r_t - alpha log pi(a_t|s_t)) + gamma R_{t+1}, R_T = 0.
inline std::vector<double> returns_to_go(const Trajectory& traj, const PolicyTables& policy,
                                         double alpha, double gamma) {
  const std::size_t T = traj.length();
  std::vector<double> out(T);
  double running = 0.0;
  for (std::size_t i = T; i-- > 0;) {
    const double r_ent = traj.rewards[i] - alpha * policy.log_prob(traj.states[i], traj.actions[i]);
    running = r_ent + gamma * running;
    out[i] = running;
  }
  return out;
}

/// g = (1/(B T)) sum_b sum_t grad log pi(a_t|s_t) R_t, where the score of
/// row s is (indicator(a) - pi(.|s)). Accumulated as
/// g(s,a) = (C(s,a) - W(s) pi(a|s)) / (B T), with C the return mass on
/// (s,a) and W the return mass on s.
inline GradEstimate reinforce_gradient(std::span<const Trajectory> batch,
                                       const PolicyTables& policy, double alpha, double gamma) {
  if (batch.empty()) throw std::invalid_argument("reinforce_gradient needs a nonempty batch");
  const std::size_t T = batch.front().length();
  for (const auto& traj : batch) {
    if (traj.length() != T) throw std::invalid_argument("ragged batch: trajectory lengths differ");
  }
  if (T == 0) throw std::invalid_argument("trajectories must have at least one step");
  const int S = policy.n_states();
  const int A = policy.n_actions();
  Table action_mass = Table::Zero(S, A);
  Vector state_mass = Vector::Zero(S);
  double undiscounted = 0.0;
  double entreg = 0.0;
  for (const auto& traj : batch) {
    const auto returns = returns_to_go(traj, policy, alpha, gamma);
    for (std::size_t t = 0; t < T; ++t) {
      action_mass(traj.states[t], traj.actions[t]) += returns[t];
      state_mass(traj.states[t]) += returns[t];
      undiscounted += traj.rewards[t];
    }
    entreg += returns.front();
  }
  const double norm = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(T));
  GradEstimate est;
  est.gradient.resize(S, A);
  for (int s = 0; s < S; ++s) {
    est.gradient.row(s) =
        (action_mass.row(s) - state_mass(s) * policy.probs().row(s)) * norm;
  }
  est.batch_size = static_cast<int>(batch.size());
  est.mean_undiscounted_return = undiscounted / static_cast<double>(batch.size());
  est.mean_discounted_entreg_return = entreg / static_cast<double>(batch.size());
  return est;
}

/// Monte Carlo work is split into fixed-size blocks, each with its own
/// stream derived from the block index, so results do not depend on the
/// number of worker threads.
inline constexpr std::size_t kSampleBlock = 4096;

/// fn(block, begin, end, rng) for every block covering [0, n).
template <class Fn>
void for_each_sample_block(std::size_t n, unsigned threads, const RngStream& base, Fn&& fn) {
  const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    RngStream rng = base.derive(b);
    const std::size_t begin = b * kSampleBlock;
    fn(b, begin, std::min(n, begin + kSampleBlock), rng);
  });
}

/// One draw of the random-horizon estimator: (s, a) from SamSA and the
/// scalar weight (Qhat - alpha log pi(a|s)) / (1 - gamma). The gradient
/// sample is weight * (indicator(a) - pi(.|s)) on row s.
struct ScoreSample {
  int state = 0;
  int action = 0;
  double weight = 0.0;
};

inline ScoreSample alg4_draw(const TabularMdp& mdp, const PolicyTables& policy, double alpha,
                             const StateSampler& initial, RngStream& rng) {
  const StateAction sa = sam_sa(mdp, policy, initial, rng);
  const double q = est_ent_q(mdp, policy, alpha, sa.state, sa.action, rng);
  const double w = (q - alpha * policy.log_prob(sa.state, sa.action)) / (1.0 - mdp.discount);
  return {sa.state, sa.action, w};
}

/// Coordinatewise moments of n independent random-horizon gradient samples.
inline TableMoments alg4_moments(const TabularMdp& mdp, const SoftmaxPolicy& policy, double alpha,
                                 std::size_t n, const RngStream& rng, unsigned threads = 1,
                                 const std::optional<StateDistribution>& mu = std::nullopt) {
  const PolicyTables tables(policy);
  const StateSampler initial(mu ? mu->probs() : mdp.init_dist);
  const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
  std::vector<TableMoments> partial(blocks, TableMoments(mdp.n_states(), mdp.n_actions()));
  for_each_sample_block(n, threads, rng,
                        [&](std::size_t b, std::size_t begin, std::size_t end, RngStream& r) {
                          auto& acc = partial[b];
                          for (std::size_t i = begin; i < end; ++i) {
                            const ScoreSample x = alg4_draw(mdp, tables, alpha, initial, r);
                            Vector row = -x.weight * tables.probs().row(x.state).transpose();
                            row(x.action) += x.weight;
                            acc.add_row_sample(x.state, row);
                          }
                          acc.count(end - begin);
                        });
  TableMoments total(mdp.n_states(), mdp.n_actions());
  for (const auto& p : partial) total.merge(p);
  return total;
}

/// Unbiased random-horizon estimate of dV^pi(mu)/dtheta from B samples
/// (mu defaults to the MDP's initial distribution).
inline GradEstimate alg4_gradient(const TabularMdp& mdp, const SoftmaxPolicy& policy, double alpha,
                                  int batch_size, const RngStream& rng, unsigned threads = 1,
                                  const std::optional<StateDistribution>& mu = std::nullopt) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  GradEstimate est;
  est.gradient =
      alg4_moments(mdp, policy, alpha, static_cast<std::size_t>(batch_size), rng, threads, mu)
          .mean();
  est.batch_size = batch_size;
  return est;
}

struct AdamState {
  Table first_moment;
  Table second_moment;
  long step = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState(Eigen::Index rows, Eigen::Index cols, double learning_rate = 0.001)
      : first_moment(Table::Zero(rows, cols)),
        second_moment(Table::Zero(rows, cols)),
        lr(learning_rate) {}
};

/// Bias-corrected Adam ascent step: theta += lr * mhat / (sqrt(vhat) + eps).
inline void adam_step(AdamState& state, Table& theta, const Table& grad) {
  if (grad.rows() != theta.rows() || grad.cols() != theta.cols() ||
      grad.rows() != state.first_moment.rows() || grad.cols() != state.first_moment.cols()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grad.allFinite()) throw std::invalid_argument("adam_step: non-finite gradient");
  ++state.step;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment =
      state.beta2 * state.second_moment + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  theta.array() += state.lr * (state.first_moment.array() / c1) /
                   ((state.second_moment.array() / c2).sqrt() + state.eps);
}

inline void sgd_step(Table& theta, const Table& grad, double eta) { theta += eta * grad; }

/// Two-phase schedule: steps t = 1..t1 use batch b1 and step size eta;
/// steps t > t1 use batch b2 and step size 1 / (t - t1 + t0).
struct ScheduleConfig {
  int t1 = 0;
  int b1 = 64;
  int b2 = 64;
  double eta = 0.1;
  int t0 = 100;
  int total_steps = 2000;

  void validate() const {
    if (t1 < 0 || b1 < 1 || b2 < 1 || !(eta > 0.0) || t0 < 1 || total_steps < 0 ||
        t1 > total_steps) {
      throw std::invalid_argument("invalid two-phase schedule");
    }
  }

  int batch_at(int t) const { return t <= t1 ? b1 : b2; }
  double step_size_at(int t) const {
    return t <= t1 ? eta : 1.0 / static_cast<double>(t - t1 + t0);
  }
};

struct ValueLogRow {
  int step = 0;
  double exact_value = 0.0;
};

struct TwoPhaseResult {
  Table theta;
  std::vector<ValueLogRow> log;
};

/// Runs the two-phase schedule from theta0, sampling initial states from mu
/// (default rho). Step t draws its samples from rng.derive(t). The exact
/// V^{pi_theta}(rho) is logged after every `log_interval`-th step.
inline TwoPhaseResult two_phase_run(const TabularMdp& mdp, double alpha,
                                    const ScheduleConfig& schedule, Table theta0,
                                    const RngStream& rng, int log_interval = 100,
                                    unsigned threads = 1,
                                    const std::optional<StateDistribution>& mu = std::nullopt) {
  schedule.validate();
  if (log_interval < 1) throw std::invalid_argument("log interval must be positive");
  const StateDistribution rho(mdp.init_dist);
  const StateDistribution start = mu ? *mu : rho;
  TwoPhaseResult result{std::move(theta0), {}};
  for (int t = 1; t <= schedule.total_steps; ++t) {
    const SoftmaxPolicy policy(result.theta);
    const GradEstimate g =
        alg4_gradient(mdp, policy, alpha, schedule.batch_at(t), rng.derive(t), threads, start);
    sgd_step(result.theta, g.gradient, schedule.step_size_at(t));
    if (t % log_interval == 0) {
      const Vector v = exact_policy_evaluation(mdp, SoftmaxPolicy(result.theta), alpha);
      result.log.push_back({t, expected_value(v, rho)});
    }
  }
  return result;
}

}  // namespace rollin
