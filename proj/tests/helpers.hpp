#pragma once

// Test-side oracles. These deliberately avoid the library's solvers: values
// come from plain fixed-point iteration, truncated power series or brute
// force, so agreement with the library is evidence rather than tautology.

#include "rollin/tabular.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <vector>

namespace oracle {

using rollin::Table;
using rollin::TabularMdp;
using rollin::Vector;

// transition[s][a][s'].
inline TabularMdp make_mdp(const std::vector<std::vector<std::vector<double>>>& transition,
                           const std::vector<std::vector<double>>& reward, double gamma,
                           const std::vector<double>& rho) {
  const int S = static_cast<int>(transition.size());
  const int A = static_cast<int>(transition[0].size());
  std::vector<double> dense;
  for (const auto& per_action : transition)
    for (const auto& row : per_action) dense.insert(dense.end(), row.begin(), row.end());
  TabularMdp mdp;
  mdp.transition = std::make_shared<const rollin::TransitionModel>(S, A, std::move(dense));
  mdp.reward.resize(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) mdp.reward(s, a) = reward[s][a];
  mdp.discount = gamma;
  mdp.init_dist = Eigen::Map<const Vector>(rho.data(), S);
  return mdp;
}

inline TabularMdp random_mdp(std::mt19937_64& gen, int S, int A, double gamma) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<std::vector<double>>> p(S, std::vector<std::vector<double>>(A, std::vector<double>(S)));
  std::vector<std::vector<double>> r(S, std::vector<double>(A));
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double total = 0;
      for (int n = 0; n < S; ++n) total += p[s][a][n] = u(gen) + 0.01;
      for (int n = 0; n < S; ++n) p[s][a][n] /= total;
      r[s][a] = u(gen);
    }
  std::vector<double> rho(S);
  double total = 0;
  for (int s = 0; s < S; ++s) total += rho[s] = u(gen) + 0.1;
  for (auto& x : rho) x /= total;
  return make_mdp(p, r, gamma, rho);
}

inline Table random_table(std::mt19937_64& gen, int rows, int cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Table t(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t(i, j) = u(gen);
  return t;
}

inline Table softmax_rows(const Table& theta) {
  Table p(theta.rows(), theta.cols());
  for (int s = 0; s < theta.rows(); ++s) {
    double m = theta.row(s).maxCoeff(), z = 0;
    for (int a = 0; a < theta.cols(); ++a) z += std::exp(theta(s, a) - m);
    for (int a = 0; a < theta.cols(); ++a) p(s, a) = std::exp(theta(s, a) - m) / z;
  }
  return p;
}

inline double P(const TabularMdp& m, int s, int a, int n) { return m.transition->prob(s, a, n); }

// Soft policy value by repeated Bellman evaluation sweeps.
inline Vector evaluate(const TabularMdp& m, const Table& pi, double alpha, int sweeps = 20000) {
  const int S = m.n_states(), A = m.n_actions();
  Vector v = Vector::Zero(S);
  for (int it = 0; it < sweeps; ++it) {
    Vector next = Vector::Zero(S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double ev = 0;
        for (int n = 0; n < S; ++n) ev += P(m, s, a, n) * v(n);
        const double ent = pi(s, a) > 0 ? -alpha * std::log(pi(s, a)) : 0.0;
        next(s) += pi(s, a) * (m.reward(s, a) + ent + m.discount * ev);
      }
    const double diff = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (diff < 1e-15) break;
  }
  return v;
}

inline Table q_of(const TabularMdp& m, const Vector& v) {
  Table q(m.n_states(), m.n_actions());
  for (int s = 0; s < m.n_states(); ++s)
    for (int a = 0; a < m.n_actions(); ++a) {
      double ev = 0;
      for (int n = 0; n < m.n_states(); ++n) ev += P(m, s, a, n) * v(n);
      q(s, a) = m.reward(s, a) + m.discount * ev;
    }
  return q;
}

// Soft policy iteration: pi <- softmax(Q^pi / alpha) until stable.
inline Vector soft_optimal_values(const TabularMdp& m, double alpha) {
  Table pi = Table::Constant(m.n_states(), m.n_actions(), 1.0 / m.n_actions());
  Vector v;
  for (int it = 0; it < 200; ++it) {
    v = evaluate(m, pi, alpha);
    pi = softmax_rows(q_of(m, v) / alpha);
  }
  return v;
}

// d = (1 - gamma) sum_t gamma^t mu P_pi^t, truncated once the tail is negligible.
inline Vector visitation_series(const TabularMdp& m, const Table& pi, const Vector& mu) {
  const int S = m.n_states(), A = m.n_actions();
  Vector d = Vector::Zero(S), cur = mu;
  double w = 1.0 - m.discount;
  for (int t = 0; t < 100000 && w > 1e-18; ++t) {
    d += w * cur;
    Vector next = Vector::Zero(S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int n = 0; n < S; ++n) next(n) += cur(s) * pi(s, a) * P(m, s, a, n);
    cur = next;
    w *= m.discount;
  }
  return d;
}

inline double value_at(const TabularMdp& m, const Table& theta, double alpha, const Vector& mu) {
  return evaluate(m, softmax_rows(theta), alpha).dot(mu);
}

}  // namespace oracle
