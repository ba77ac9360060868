#pragma once

// Core domain types for finite MDPs and softmax policies.
//
// States and actions are flat integer indices. Any geometry (grids, rooms)
// lives in the environment builders, never here.

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rollin {

using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Tolerance used for every "sums to one" invariant on stored distributions.
inline constexpr double kSimplexTolerance = 1e-12;

namespace detail {

inline std::string format_real(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

// FNV-1a over the raw bytes of a double range.
inline std::uint64_t fnv1a(std::span<const double> values,
                           std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      hash ^= b;
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

}  // namespace detail

/// One non-zero entry of a transition row, with the running cumulative
/// probability used for inverse-CDF sampling.
struct Outcome {
  int next = 0;
  double prob = 0.0;
  double cdf = 0.0;
};

/// Transition kernel P(s'|s,a) stored densely (S x A x S, row-major) together
/// with the sparse non-zero outcomes of every (s,a) row.
class TransitionModel {
 public:
  TransitionModel(int n_states, int n_actions, std::vector<double> dense)
      : n_states_(n_states), n_actions_(n_actions), dense_(std::move(dense)) {
    if (n_states <= 0 || n_actions <= 0) {
      throw std::invalid_argument("transition model needs positive state and action counts");
    }
    const auto expected = static_cast<std::size_t>(n_states) * n_actions * n_states;
    if (dense_.size() != expected) {
      throw std::invalid_argument("transition table has " + std::to_string(dense_.size()) +
                                  " entries, expected " + std::to_string(expected));
    }
    build_outcomes();
  }

  /// Deterministic kernel: next[s * A + a] is the successor of (s, a).
  static TransitionModel deterministic(int n_states, int n_actions, std::span<const int> next) {
    std::vector<double> dense(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    if (next.size() != static_cast<std::size_t>(n_states) * n_actions) {
      throw std::invalid_argument("deterministic successor list has the wrong length");
    }
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (next[i] < 0 || next[i] >= n_states) {
        throw std::invalid_argument("successor state out of range");
      }
      dense[i * n_states + next[i]] = 1.0;
    }
    return TransitionModel(n_states, n_actions, std::move(dense));
  }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  double prob(int s, int a, int next) const { return dense_[index(s, a) * n_states_ + next]; }

  std::span<const double> row(int s, int a) const {
    return {dense_.data() + index(s, a) * n_states_, static_cast<std::size_t>(n_states_)};
  }

  std::span<const Outcome> outcomes(int s, int a) const {
    const auto i = index(s, a);
    return {outcomes_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  const std::vector<double>& dense() const { return dense_; }

  /// Content checksum; equal kernels have equal checksums.
  std::uint64_t checksum() const { return detail::fnv1a(dense_); }

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * n_actions_ + static_cast<std::size_t>(a);
  }

  void build_outcomes() {
    const std::size_t rows = static_cast<std::size_t>(n_states_) * n_actions_;
    offsets_.assign(rows + 1, 0);
    outcomes_.clear();
    for (std::size_t i = 0; i < rows; ++i) {
      offsets_[i] = outcomes_.size();
      double cumulative = 0.0;
      for (int next = 0; next < n_states_; ++next) {
        const double p = dense_[i * n_states_ + next];
        if (p > 0.0) {
          cumulative += p;
          outcomes_.push_back({next, p, cumulative});
        }
      }
    }
    offsets_[rows] = outcomes_.size();
  }

  int n_states_;
  int n_actions_;
  std::vector<double> dense_;
  std::vector<Outcome> outcomes_;
  std::vector<std::size_t> offsets_;
};

/// Finite discounted MDP. The transition kernel is shared so that a family of
/// MDPs differing only in reward can reuse one kernel.
struct TabularMdp {
  std::shared_ptr<const TransitionModel> transition;
  Table reward;  // S x A, entries in [0, 1]
  double discount = 0.9;
  Vector init_dist;  // rho

  int n_states() const { return transition->n_states(); }
  int n_actions() const { return transition->n_actions(); }
};

/// Same MDP with the reward table replaced.
inline TabularMdp with_reward(const TabularMdp& mdp, Table reward) {
  TabularMdp out = mdp;
  out.reward = std::move(reward);
  return out;
}

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }

  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) {
      out += v;
      out += '\n';
    }
    return out;
  }
};

/// Lists every violated invariant of the MDP (row sums, reward range,
/// discount range, initial distribution).
inline ValidationReport validate_mdp(const TabularMdp& mdp) {
  ValidationReport report;
  if (!mdp.transition) {
    report.violations.emplace_back("missing transition table");
    return report;
  }
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double sum = 0.0;
      for (int next = 0; next < S; ++next) {
        const double p = mdp.transition->prob(s, a, next);
        if (!std::isfinite(p) || p < 0.0) {
          report.violations.push_back("negative or non-finite transition probability " +
                                      detail::format_real(p) + " at (" + std::to_string(s) + "," +
                                      std::to_string(a) + "," + std::to_string(next) + ")");
        }
        sum += p;
      }
      if (!(std::abs(sum - 1.0) <= kSimplexTolerance)) {
        report.violations.push_back("row sum " + detail::format_real(sum) + " at (" +
                                    std::to_string(s) + "," + std::to_string(a) + ")");
      }
    }
  }
  if (mdp.reward.rows() != S || mdp.reward.cols() != A) {
    report.violations.push_back("reward table shape " + std::to_string(mdp.reward.rows()) + "x" +
                                std::to_string(mdp.reward.cols()) + " does not match " +
                                std::to_string(S) + "x" + std::to_string(A));
  } else {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double r = mdp.reward(s, a);
        if (!(r >= 0.0 && r <= 1.0)) {
          report.violations.push_back("reward " + detail::format_real(r) + " out of [0,1] at (" +
                                      std::to_string(s) + "," + std::to_string(a) + ")");
        }
      }
    }
  }
  if (!(mdp.discount >= 0.0 && mdp.discount < 1.0)) {
    report.violations.push_back("discount " + detail::format_real(mdp.discount) +
                                " outside [0,1)");
  }
  if (mdp.init_dist.size() != S) {
    report.violations.push_back("initial distribution has length " +
                                std::to_string(mdp.init_dist.size()) + ", expected " +
                                std::to_string(S));
  } else {
    for (int s = 0; s < S; ++s) {
      if (!(mdp.init_dist(s) >= 0.0)) {
        report.violations.push_back("initial probability " + detail::format_real(mdp.init_dist(s)) +
                                    " negative at state " + std::to_string(s));
      }
    }
    const double sum = mdp.init_dist.sum();
    if (!(std::abs(sum - 1.0) <= kSimplexTolerance)) {
      report.violations.push_back("initial distribution sums to " + detail::format_real(sum));
    }
  }
  return report;
}

inline void require_valid(const TabularMdp& mdp) {
  auto report = validate_mdp(mdp);
  if (!report.ok()) {
    throw std::invalid_argument("invalid MDP:\n" + report.to_string());
  }
}

inline bool has_full_support(const Vector& dist) { return (dist.array() > 0.0).all(); }

/// Softmax policy parameters theta (S x A). The induced policy is
/// pi(a|s) = exp(theta(s,a)) / sum_b exp(theta(s,b)).
class SoftmaxPolicy {
 public:
  explicit SoftmaxPolicy(Table theta) : theta_(std::move(theta)) {
    if (theta_.size() == 0) {
      throw std::invalid_argument("policy parameter table is empty");
    }
    if (!theta_.allFinite()) {
      throw std::invalid_argument("policy parameters must be finite");
    }
  }

  static SoftmaxPolicy uniform(int n_states, int n_actions) {
    return SoftmaxPolicy(Table::Zero(n_states, n_actions));
  }

  int n_states() const { return static_cast<int>(theta_.rows()); }
  int n_actions() const { return static_cast<int>(theta_.cols()); }
  const Table& theta() const { return theta_; }

 private:
  Table theta_;
};

/// pi(.|s), computed with max subtraction.
inline Vector policy_probs(const SoftmaxPolicy& policy, int s) {
  const auto row = policy.theta().row(s);
  const double m = row.maxCoeff();
  Vector p = (row.array() - m).exp().transpose();
  p /= p.sum();
  return p;
}

/// log pi(a|s) via log-sum-exp, without forming probabilities.
inline double policy_log_prob(const SoftmaxPolicy& policy, int s, int a) {
  const auto row = policy.theta().row(s);
  const double m = row.maxCoeff();
  const double lse = m + std::log((row.array() - m).exp().sum());
  return row(a) - lse;
}

/// Log-probabilities of every (s, a).
inline Table log_prob_table(const Table& theta) {
  Table out(theta.rows(), theta.cols());
  for (Eigen::Index s = 0; s < theta.rows(); ++s) {
    const double m = theta.row(s).maxCoeff();
    const double lse = m + std::log((theta.row(s).array() - m).exp().sum());
    out.row(s) = theta.row(s).array() - lse;
  }
  return out;
}

inline Table log_prob_table(const SoftmaxPolicy& policy) { return log_prob_table(policy.theta()); }

inline Table prob_table(const SoftmaxPolicy& policy) {
  return log_prob_table(policy).array().exp().matrix();
}

/// Probability vector over states.
class StateDistribution {
 public:
  explicit StateDistribution(Vector probs, double tolerance = kSimplexTolerance)
      : probs_(std::move(probs)) {
    if (probs_.size() == 0) {
      throw std::invalid_argument("state distribution is empty");
    }
    if (!probs_.allFinite() || (probs_.array() < 0.0).any()) {
      throw std::invalid_argument("state distribution has negative or non-finite entries");
    }
    if (std::abs(probs_.sum() - 1.0) > tolerance) {
      throw std::invalid_argument("state distribution sums to " +
                                  detail::format_real(probs_.sum()));
    }
  }

  static StateDistribution point_mass(int n_states, int s) {
    Vector p = Vector::Zero(n_states);
    p(s) = 1.0;
    return StateDistribution(std::move(p));
  }

  static StateDistribution uniform(int n_states) {
    return StateDistribution(Vector::Constant(n_states, 1.0 / n_states));
  }

  int size() const { return static_cast<int>(probs_.size()); }
  double operator()(int s) const { return probs_(s); }
  const Vector& probs() const { return probs_; }

 private:
  Vector probs_;
};

/// One sampled episode: states has one more entry than actions/rewards.
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;

  std::size_t length() const { return actions.size(); }

  bool consistent(int n_states, int n_actions) const {
    if (states.size() != actions.size() + 1 || rewards.size() != actions.size()) return false;
    auto in = [](int v, int n) { return v >= 0 && v < n; };
    return std::all_of(states.begin(), states.end(), [&](int s) { return in(s, n_states); }) &&
           std::all_of(actions.begin(), actions.end(), [&](int a) { return in(a, n_actions); });
  }
};

// JSON layout: {"n_states", "n_actions", "discount", "transition", "reward", "init_dist"}.
inline nlohmann::json mdp_to_json(const TabularMdp& mdp) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  nlohmann::json transition = nlohmann::json::array();
  for (int s = 0; s < S; ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    for (int a = 0; a < A; ++a) {
      auto row = mdp.transition->row(s, a);
      per_action.push_back(std::vector<double>(row.begin(), row.end()));
    }
    transition.push_back(std::move(per_action));
  }
  nlohmann::json reward = nlohmann::json::array();
  for (int s = 0; s < S; ++s) {
    std::vector<double> row(A);
    for (int a = 0; a < A; ++a) row[a] = mdp.reward(s, a);
    reward.push_back(std::move(row));
  }
  return {{"n_states", S},
          {"n_actions", A},
          {"discount", mdp.discount},
          {"transition", std::move(transition)},
          {"reward", std::move(reward)},
          {"init_dist", std::vector<double>(mdp.init_dist.data(),
                                            mdp.init_dist.data() + mdp.init_dist.size())}};
}

/// Parses the document shape; does not validate invariants (use validate_mdp).
inline TabularMdp mdp_from_json(const nlohmann::json& doc) {
  const int S = doc.at("n_states").get<int>();
  const int A = doc.at("n_actions").get<int>();
  if (S <= 0 || A <= 0) throw std::invalid_argument("n_states and n_actions must be positive");
  const auto& transition = doc.at("transition");
  if (!transition.is_array() || static_cast<int>(transition.size()) != S) {
    throw std::invalid_argument("transition must have n_states entries");
  }
  std::vector<double> dense;
  dense.reserve(static_cast<std::size_t>(S) * A * S);
  for (const auto& per_action : transition) {
    if (!per_action.is_array() || static_cast<int>(per_action.size()) != A) {
      throw std::invalid_argument("transition[s] must have n_actions rows");
    }
    for (const auto& row : per_action) {
      if (!row.is_array() || static_cast<int>(row.size()) != S) {
        throw std::invalid_argument("transition[s][a] must have n_states entries");
      }
      for (const auto& p : row) dense.push_back(p.get<double>());
    }
  }
  const auto& reward = doc.at("reward");
  if (!reward.is_array() || static_cast<int>(reward.size()) != S) {
    throw std::invalid_argument("reward must have n_states rows");
  }
  Table r(S, A);
  for (int s = 0; s < S; ++s) {
    if (!reward[s].is_array() || static_cast<int>(reward[s].size()) != A) {
      throw std::invalid_argument("reward[s] must have n_actions entries");
    }
    for (int a = 0; a < A; ++a) r(s, a) = reward[s][a].get<double>();
  }
  const auto init = doc.at("init_dist").get<std::vector<double>>();
  if (static_cast<int>(init.size()) != S) {
    throw std::invalid_argument("init_dist must have n_states entries");
  }
  TabularMdp mdp;
  mdp.transition = std::make_shared<const TransitionModel>(S, A, std::move(dense));
  mdp.reward = std::move(r);
  mdp.discount = doc.at("discount").get<double>();
  mdp.init_dist = Eigen::Map<const Vector>(init.data(), S);
  return mdp;
}

}  // namespace rollin
