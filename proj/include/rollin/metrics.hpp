#pragma once

// Training metrics rows and their CSV form.
//
// Header: gradient_step,context_index,kappa,success_rate,
//         mean_undiscounted_return,mean_discounted_entreg_return,
//         exact_value,wall_time_s
// Optional columns are left empty when not computed. Reals are written with
// 17 significant digits so files round-trip exactly.

#include "rollin/stats.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rollin {

struct MetricsRow {
  long gradient_step = 0;
  int context_index = 0;
  double kappa = 0.0;
  double success_rate = 0.0;
  double mean_undiscounted_return = 0.0;
  double mean_discounted_entreg_return = 0.0;
  std::optional<double> exact_value;
  std::optional<double> wall_time_s;
};

inline constexpr const char* kMetricsHeader =
    "gradient_step,context_index,kappa,success_rate,mean_undiscounted_return,"
    "mean_discounted_entreg_return,exact_value,wall_time_s";

inline std::string format_csv_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_csv_line(const MetricsRow& row) {
  std::string out = std::to_string(row.gradient_step) + "," + std::to_string(row.context_index) +
                    "," + format_csv_real(row.kappa) + "," + format_csv_real(row.success_rate) + "," +
                    format_csv_real(row.mean_undiscounted_return) + "," +
                    format_csv_real(row.mean_discounted_entreg_return) + ",";
  if (row.exact_value) out += format_csv_real(*row.exact_value);
  out += ",";
  if (row.wall_time_s) out += format_csv_real(*row.wall_time_s);
  return out;
}

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& row : rows) out << to_csv_line(row) << '\n';
}

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_metrics_csv(out, rows);
}

inline std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("metrics CSV has an unexpected header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 8) throw std::runtime_error("metrics CSV row has " + std::to_string(cells.size()) + " fields");
    MetricsRow row;
    row.gradient_step = std::stol(cells[0]);
    row.context_index = std::stoi(cells[1]);
    row.kappa = std::stod(cells[2]);
    row.success_rate = std::stod(cells[3]);
    row.mean_undiscounted_return = std::stod(cells[4]);
    row.mean_discounted_entreg_return = std::stod(cells[5]);
    if (!cells[6].empty()) row.exact_value = std::stod(cells[6]);
    if (!cells[7].empty()) row.wall_time_s = std::stod(cells[7]);
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_metrics_csv(in);
}

/// Final-step statistics over seeds (mean, standard error over seeds,
/// median for kappa).
struct RunSummary {
  std::size_t n_runs = 0;
  MeanAndError kappa;
  double kappa_median = 0.0;
  MeanAndError undiscounted_return;
  MeanAndError entreg_return;
};

inline RunSummary summarize_final(const std::vector<MetricsRow>& final_rows) {
  if (final_rows.empty()) throw std::invalid_argument("no runs to summarize");
  std::vector<double> kappa, ret, ent;
  for (const auto& r : final_rows) {
    kappa.push_back(r.kappa);
    ret.push_back(r.mean_undiscounted_return);
    ent.push_back(r.mean_discounted_entreg_return);
  }
  return {final_rows.size(), mean_and_error(kappa), median(kappa), mean_and_error(ret),
          mean_and_error(ent)};
}

inline constexpr const char* kSummaryStatsHeader =
    "n_seeds,kappa_mean,kappa_se,kappa_median,undiscounted_return_mean,undiscounted_return_se,"
    "entreg_return_mean,entreg_return_se";

inline std::string summary_stats_csv(const RunSummary& s) {
  return std::to_string(s.n_runs) + "," + format_csv_real(s.kappa.mean) + "," +
         format_csv_real(s.kappa.std_error) + "," + format_csv_real(s.kappa_median) + "," +
         format_csv_real(s.undiscounted_return.mean) + "," +
         format_csv_real(s.undiscounted_return.std_error) + "," + format_csv_real(s.entreg_return.mean) +
         "," + format_csv_real(s.entreg_return.std_error);
}

}  // namespace rollin
