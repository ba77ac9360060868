#pragma once

#include "rollin/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rollin {

struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n); 0 for n < 2
};

/// Sample mean and standard error (sample standard deviation over sqrt(n)).
inline MeanAndError mean_and_error(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  MeanAndError out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return out;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline double total_variation(const Vector& p, const Vector& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

/// Empirical law of integer samples on [0, n).
inline Vector empirical_law(const std::vector<int>& samples, int n) {
  Vector counts = Vector::Zero(n);
  for (int s : samples) counts(s) += 1.0;
  return counts / static_cast<double>(samples.size());
}

/// Elementwise running sums of a table-valued random variable, giving
/// coordinatewise means and standard errors.
class TableMoments {
 public:
  TableMoments(Eigen::Index rows, Eigen::Index cols)
      : sum_(Table::Zero(rows, cols)), sum_sq_(Table::Zero(rows, cols)) {}

  void add_row_sample(Eigen::Index row, const Vector& values) {
    sum_.row(row) += values.transpose();
    sum_sq_.row(row) += values.cwiseAbs2().transpose();
  }

  void count(std::size_t n) { n_ += n; }

  void merge(const TableMoments& other) {
    sum_ += other.sum_;
    sum_sq_ += other.sum_sq_;
    n_ += other.n_;
  }

  std::size_t n() const { return n_; }
  Table mean() const { return sum_ / static_cast<double>(n_); }

  Table std_error() const {
    const double n = static_cast<double>(n_);
    Table m = mean();
    Table var = (sum_sq_ / n - m.cwiseAbs2()) * (n / (n - 1.0));
    return (var.cwiseMax(0.0) / n).cwiseSqrt();
  }

 private:
  Table sum_;
  Table sum_sq_;
  std::size_t n_ = 0;
};

}  // namespace rollin
