#pragma once

// Curriculum driver: trains one context at a time on a shared parameter
// table, switching to the next context when the switch rule fires and
// mixing the previous policies' visitation into the initial-state law.

#include "rollin/exact.hpp"
#include "rollin/rng.hpp"
#include "rollin/sampling.hpp"
#include "rollin/spg.hpp"
#include "rollin/tabular.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rollin {

/// MDP family sharing one transition kernel; only the reward depends on the
/// context. Context ids index `rewards`.
struct ContextualMdp {
  std::shared_ptr<const TransitionModel> transition;
  std::vector<Table> rewards;
  double discount = 0.99;
  Vector init_dist;

  int n_contexts() const { return static_cast<int>(rewards.size()); }

  TabularMdp mdp(int context) const {
    return TabularMdp{transition, rewards.at(static_cast<std::size_t>(context)), discount,
                      init_dist};
  }
};

enum class SwitchRuleKind { success_rate, value_gap };

/// success_rate: switch when the batch success rate is strictly above the
/// threshold. value_gap: switch when V*(rho) - V^pi(rho) <= threshold.
struct SwitchRule {
  SwitchRuleKind kind = SwitchRuleKind::success_rate;
  double threshold = 0.5;
};

struct Curriculum {
  std::vector<int> contexts;  // omega_0 .. omega_K as context ids
  double beta = 0.75;
  SwitchRule switch_rule{};

  int final_index() const { return static_cast<int>(contexts.size()) - 1; }

  void validate() const {
    if (contexts.empty()) throw std::invalid_argument("curriculum has no contexts");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
  }
};

/// Strict threshold test on the measured batch success rate.
inline bool should_switch(double success_rate, double threshold = 0.5) {
  return success_rate > threshold;
}

struct CurriculumState {
  int k = 0;
  int K = 0;
  double kappa = 0.0;
  SnapshotChain chain;
  std::vector<long> steps_per_context;
  bool finished = false;  // switch rule fired on the final context

  explicit CurriculumState(int final_index)
      : K(final_index), steps_per_context(static_cast<std::size_t>(final_index) + 1, 0) {}
};

/// Freezes theta onto the snapshot chain and moves to context k+1. The
/// training table itself carries over unchanged (warm start).
inline void advance_context(CurriculumState& state, const Table& theta) {
  if (state.k >= state.K) throw std::logic_error("curriculum already at its final context");
  state.chain.push(SoftmaxPolicy(theta));
  ++state.k;
  state.kappa = static_cast<double>(state.k) / static_cast<double>(state.K);
}

struct StepOutcome {
  double success_rate = 0.0;
  std::optional<double> value_gap;
  double mean_undiscounted_return = 0.0;
  double mean_discounted_entreg_return = 0.0;
  std::optional<double> exact_value;
};

/// Per-step record handed to the driver's observer after any switch.
struct DriverEvent {
  long step = 0;  // 1-based gradient step
  const CurriculumState* state = nullptr;
  const StepOutcome* outcome = nullptr;
  const Table* theta = nullptr;
};

struct DriverResult {
  Table theta;
  CurriculumState state;
  long steps_run = 0;
};

struct DriverOptions {
  long step_budget = 0;
  bool stop_on_completion = false;
};

/// Curriculum loop. `trainer(state, theta, step)` performs one gradient step
/// for context state.k (mutating theta) and reports the measurements the
/// switch rule needs. `observer` sees every step after switching.
template <class Trainer>
DriverResult rollin_driver(const Curriculum& curriculum, Trainer&& trainer, Table theta0,
                           const DriverOptions& options,
                           const std::function<void(const DriverEvent&)>& observer = {}) {
  curriculum.validate();
  DriverResult result{std::move(theta0), CurriculumState(curriculum.final_index()), 0};
  auto& state = result.state;
  for (long t = 1; t <= options.step_budget; ++t) {
    const StepOutcome outcome = trainer(std::as_const(state), result.theta, t);
    ++state.steps_per_context[static_cast<std::size_t>(state.k)];
    bool fire = false;
    if (curriculum.switch_rule.kind == SwitchRuleKind::success_rate) {
      fire = should_switch(outcome.success_rate, curriculum.switch_rule.threshold);
    } else {
      if (!outcome.value_gap) throw std::logic_error("value-gap switch rule needs a value gap");
      fire = *outcome.value_gap <= curriculum.switch_rule.threshold;
    }
    if (fire) {
      if (state.k < state.K) {
        advance_context(state, result.theta);
      } else {
        state.finished = true;
        // A single-context curriculum has no k / K; completion counts as full progress.
        if (state.K == 0) state.kappa = 1.0;
      }
    }
    result.steps_run = t;
    if (observer) observer({t, &state, &outcome, &result.theta});
    if (state.finished && options.stop_on_completion) break;
  }
  return result;
}

/// Exact-model trainer: one random-horizon stochastic gradient step per call,
/// with initial states drawn from the exact curriculum mixture mu_k and the
/// step size / batch given by a two-phase schedule restarted per context.
/// Reports the exact value gap V*(rho) - V^pi(rho) on the current context.
class ExactSpgTrainer {
 public:
  ExactSpgTrainer(const ContextualMdp& cmdp, const Curriculum& curriculum, double alpha,
                  ScheduleConfig schedule, RngStream rng, unsigned threads = 1)
      : cmdp_(cmdp),
        curriculum_(curriculum),
        alpha_(alpha),
        schedule_(schedule),
        rng_(std::move(rng)),
        threads_(threads),
        rho_(cmdp.init_dist) {
    schedule_.validate();
  }

  StepOutcome operator()(const CurriculumState& state, Table& theta, long t) {
    const int context = curriculum_.contexts.at(static_cast<std::size_t>(state.k));
    const TabularMdp mdp = cmdp_.mdp(context);
    refresh(state, mdp);
    const int local_t = static_cast<int>(state.steps_per_context[static_cast<std::size_t>(state.k)]) + 1;
    const GradEstimate g = alg4_gradient(mdp, SoftmaxPolicy(theta), alpha_,
                                         schedule_.batch_at(local_t), rng_.derive(t), threads_,
                                         mus_.back());
    sgd_step(theta, g.gradient, schedule_.step_size_at(local_t));
    const Vector v = exact_policy_evaluation(mdp, SoftmaxPolicy(theta), alpha_);
    StepOutcome out;
    out.exact_value = expected_value(v, rho_);
    out.value_gap = optimal_values_.back() - *out.exact_value;
    return out;
  }

  /// Exact mixture law for the current context.
  const StateDistribution& current_mu() const { return mus_.back(); }

 private:
  void refresh(const CurriculumState& state, const TabularMdp& mdp) {
    if (cached_k_ == state.k) return;
    const auto policies = state.chain.policies();
    mus_ = mixture_initial_distributions(mdp, policies, curriculum_.beta, rho_);
    const SoftSolution sol = soft_value_iteration(mdp, alpha_, 1e-10);
    optimal_values_.push_back(expected_value(sol.v_star, rho_));
    cached_k_ = state.k;
  }

  const ContextualMdp& cmdp_;
  const Curriculum& curriculum_;
  double alpha_;
  ScheduleConfig schedule_;
  RngStream rng_;
  unsigned threads_;
  StateDistribution rho_;
  int cached_k_ = -1;
  std::vector<StateDistribution> mus_;
  std::vector<double> optimal_values_;
};

/// {"contexts": [...], "beta", "switch_threshold"}; contexts are written by
/// `describe` (context id by default).
inline nlohmann::json curriculum_to_json(
    const Curriculum& curriculum,
    const std::function<nlohmann::json(int)>& describe = [](int id) { return nlohmann::json(id); }) {
  nlohmann::json contexts = nlohmann::json::array();
  for (int id : curriculum.contexts) contexts.push_back(describe(id));
  return {{"contexts", std::move(contexts)},
          {"beta", curriculum.beta},
          {"switch_threshold", curriculum.switch_rule.threshold}};
}

inline Curriculum curriculum_from_json(
    const nlohmann::json& doc,
    const std::function<int(const nlohmann::json&)>& parse = [](const nlohmann::json& j) {
      return j.get<int>();
    }) {
  Curriculum c;
  for (const auto& item : doc.at("contexts")) c.contexts.push_back(parse(item));
  c.beta = doc.at("beta").get<double>();
  c.switch_rule.threshold = doc.at("switch_threshold").get<double>();
  c.validate();
  return c;
}

}  // namespace rollin
