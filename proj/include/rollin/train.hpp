#pragma once

// Four-room curriculum training with the finite-horizon REINFORCE estimator
// and Adam. The baseline is the same loop with beta = 0: contexts still
// switch on the success rate, but every initial state comes from rho.

#include "rollin/exact.hpp"
#include "rollin/fourroom.hpp"
#include "rollin/metrics.hpp"
#include "rollin/parallel.hpp"
#include "rollin/rollin.hpp"
#include "rollin/sampling.hpp"
#include "rollin/spg.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rollin::fourroom {

enum class Method { baseline, rollin };

inline Method parse_method(const std::string& name) {
  if (name == "baseline") return Method::baseline;
  if (name == "rollin") return Method::rollin;
  throw std::invalid_argument("method must be baseline or rollin, got " + name);
}

inline std::string to_string(Method m) { return m == Method::baseline ? "baseline" : "rollin"; }

inline MixtureMode parse_mixture(const std::string& name) {
  if (name == "recursive") return MixtureMode::recursive;
  if (name == "shallow") return MixtureMode::shallow;
  throw std::invalid_argument("mixture mode must be recursive or shallow, got " + name);
}

inline std::string to_string(MixtureMode m) {
  return m == MixtureMode::recursive ? "recursive" : "shallow";
}

struct TrainConfig {
  RewardVariant variant = RewardVariant::hard;
  Method method = Method::rollin;
  double alpha = 0.001;
  double beta = 0.75;  // ignored (treated as 0) for the baseline
  double gamma = 0.99;
  int batch = 2000;
  int horizon = 50;
  long steps = 50'000;
  double lr = 0.001;
  int log_interval = 100;
  MixtureMode mixture = MixtureMode::recursive;
  double switch_threshold = 0.5;
  bool stop_on_completion = false;
  bool exact_value = false;     // exact V^pi(rho) of the current context in each logged row
  bool record_wall_time = false;  // off by default so reruns are byte-identical
  unsigned threads = 1;
  std::uint64_t seed = 0;

  double effective_beta() const { return method == Method::baseline ? 0.0 : beta; }

  void validate() const {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0,1)");
    if (batch < 1) throw std::invalid_argument("batch must be at least 1");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (log_interval < 1) throw std::invalid_argument("log interval must be positive");
    if (!(switch_threshold >= 0.0 && switch_threshold <= 1.0)) {
      throw std::invalid_argument("switch threshold must lie in [0,1]");
    }
  }
};

/// Optional per-step taps, used by tests and diagnostics.
struct TrainHooks {
  std::function<void(long step, const std::vector<int>& initial_states)> on_initial_states;
  std::function<void(long step, const std::vector<Trajectory>& batch, const PolicyTables& policy)>
      on_batch;
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  Table theta;
  long steps_run = 0;
  int final_k = 0;
  double final_kappa = 0.0;
  bool finished = false;
  std::vector<double> kappa_per_step;
  std::vector<std::uint64_t> snapshot_checksums;
  bool snapshots_intact = true;
};

inline bool reached_goal(const Trajectory& traj, int goal) {
  for (std::size_t t = 0; t < traj.length(); ++t) {
    if (traj.states[t] == goal && traj.actions[t] == kRewardAction) return true;
  }
  return false;
}

/// One gradient step per call: B rollouts of the given horizon under the
/// current goal's reward, initial states from the curriculum mixture, a
/// REINFORCE gradient and an Adam ascent step. Trajectory b of step t draws
/// from RngStream(seed, {t, b}).
class FourRoomTrainer {
 public:
  FourRoomTrainer(const ContextualMdp& cmdp, const Curriculum& curriculum, const TrainConfig& config,
                  const TrainHooks& hooks)
      : cmdp_(cmdp),
        curriculum_(curriculum),
        config_(config),
        hooks_(hooks),
        rho_(cmdp.init_dist),
        adam_(cmdp.transition->n_states(), cmdp.transition->n_actions(), config.lr) {}

  StepOutcome operator()(const CurriculumState& state, Table& theta, long t) {
    const int goal = curriculum_.contexts.at(static_cast<std::size_t>(state.k));
    const Table& reward = cmdp_.rewards.at(static_cast<std::size_t>(goal));
    const PolicyTables tables{SoftmaxPolicy(theta)};
    const auto B = static_cast<std::size_t>(config_.batch);
    std::vector<Trajectory> batch(B);
    std::vector<int> starts(B);
    parallel_for(B, config_.threads, [&](std::size_t b) {
      RngStream rng(config_.seed, {static_cast<std::uint64_t>(t), b});
      starts[b] = sample_mixture_initial(state.chain, static_cast<std::size_t>(state.k),
                                         curriculum_.beta, rho_, *cmdp_.transition,
                                         cmdp_.discount, rng, config_.mixture);
      batch[b] = rollout(*cmdp_.transition, reward, tables, starts[b], config_.horizon, rng);
    });
    if (hooks_.on_initial_states) hooks_.on_initial_states(t, starts);
    if (hooks_.on_batch) hooks_.on_batch(t, batch, tables);

    GradEstimate g = reinforce_gradient(batch, tables, config_.alpha, cmdp_.discount);
    int successes = 0;
    for (const auto& traj : batch) successes += reached_goal(traj, goal) ? 1 : 0;
    adam_step(adam_, theta, g.gradient);

    StepOutcome out;
    out.success_rate = static_cast<double>(successes) / static_cast<double>(B);
    out.mean_undiscounted_return = g.mean_undiscounted_return;
    out.mean_discounted_entreg_return = g.mean_discounted_entreg_return;
    if (config_.exact_value && t % config_.log_interval == 0) {
      const TabularMdp mdp = cmdp_.mdp(goal);
      const Vector v = exact_policy_evaluation(mdp, SoftmaxPolicy(theta), config_.alpha);
      out.exact_value = v.dot(cmdp_.init_dist);
    }
    return out;
  }

 private:
  const ContextualMdp& cmdp_;
  const Curriculum& curriculum_;
  const TrainConfig& config_;
  const TrainHooks& hooks_;
  StateSampler rho_;
  AdamState adam_;
};

/// Trains on the layout's curriculum from theta = 0 and returns one metrics
/// row per log interval.
inline TrainResult train_fourroom(const GridLayout& layout, const TrainConfig& config,
                                  const TrainHooks& hooks = {}) {
  config.validate();
  const ContextualMdp cmdp = build_contextual(layout, config.variant, InitMode::training, config.gamma);
  const Curriculum curriculum =
      make_curriculum(layout, config.effective_beta(), config.switch_threshold);
  FourRoomTrainer trainer(cmdp, curriculum, config, hooks);

  TrainResult result;
  const auto clock_start = std::chrono::steady_clock::now();
  auto observer = [&](const DriverEvent& e) {
    result.kappa_per_step.push_back(e.state->kappa);
    if (e.step % config.log_interval != 0) return;
    MetricsRow row;
    row.gradient_step = e.step;
    row.context_index = e.state->k;
    row.kappa = e.state->kappa;
    row.success_rate = e.outcome->success_rate;
    row.mean_undiscounted_return = e.outcome->mean_undiscounted_return;
    row.mean_discounted_entreg_return = e.outcome->mean_discounted_entreg_return;
    row.exact_value = e.outcome->exact_value;
    if (config.record_wall_time) {
      row.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    }
    result.rows.push_back(row);
  };
  const Table theta0 = Table::Zero(cmdp.transition->n_states(), cmdp.transition->n_actions());
  DriverResult driven = rollin_driver(curriculum, trainer, theta0,
                                      {config.steps, config.stop_on_completion}, observer);
  result.theta = std::move(driven.theta);
  result.steps_run = driven.steps_run;
  result.final_k = driven.state.k;
  result.final_kappa = driven.state.kappa;
  result.finished = driven.state.finished;
  result.snapshot_checksums = driven.state.chain.checksums();
  result.snapshots_intact = driven.state.chain.intact();
  return result;
}

}  // namespace rollin::fourroom
