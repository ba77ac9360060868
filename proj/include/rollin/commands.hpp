#pragma once

// Command implementations behind the `rollin` executable. Argument parsing
// lives in tools/rollin_cli.cpp; everything here takes plain config records
// so tests can drive the commands directly.

#include "rollin/exact.hpp"
#include "rollin/fourroom.hpp"
#include "rollin/metrics.hpp"
#include "rollin/parallel.hpp"
#include "rollin/train.hpp"
#include "rollin/verify.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rollin::cli {

namespace fs = std::filesystem;

struct SolveConfig {
  std::string mdp_path;
  double alpha = 0.1;
  double tol = 1e-10;
  int max_iter = 1'000'000;
  std::string out = "out";
};

struct TrainRunConfig {
  fourroom::TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::string layout_path;  // empty: bundled layout
  std::string out = "out";
};

struct SweepConfig {
  TrainRunConfig run;
  std::vector<double> betas{0.0, 0.1, 0.2, 0.3, 0.5, 0.75, 0.9};
};

struct VerifyConfig {
  std::string suite = "all";
  verify::SuiteOptions options;
  std::string out = "out";
};

/// "N..M" (inclusive) or a single integer.
inline std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  std::size_t used = 0;
  if (dots == std::string::npos) {
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("bad seed " + text);
    return {v};
  }
  const auto lo = std::stoull(text.substr(0, dots), &used);
  if (used != dots) throw std::invalid_argument("bad seed range " + text);
  const std::string tail = text.substr(dots + 2);
  const auto hi = std::stoull(tail, &used);
  if (used != tail.size() || hi < lo) throw std::invalid_argument("bad seed range " + text);
  std::vector<std::uint64_t> out;
  for (auto s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline fourroom::GridLayout resolve_layout(const std::string& path) {
  if (path.empty()) return fourroom::load_layout(fourroom::default_layout_path());
  return fourroom::load_layout(path);
}

// ---------------------------------------------------------------------------
// solve

inline TabularMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open MDP file " + path);
  TabularMdp mdp = mdp_from_json(nlohmann::json::parse(in));
  const ValidationReport report = validate_mdp(mdp);
  if (!report.ok()) throw std::invalid_argument("invalid MDP " + path + ":\n" + report.to_string());
  return mdp;
}

inline int cmd_solve(const SolveConfig& cfg, std::ostream& log) {
  const TabularMdp mdp = load_mdp(cfg.mdp_path);
  const SoftSolution sol = soft_value_iteration(mdp, cfg.alpha, cfg.tol, cfg.max_iter);
  const fs::path path = fs::path(cfg.out) / "solution.json";
  write_text(path, solution_to_json(sol).dump(2) + "\n");
  log << "solved " << mdp.n_states() << " states x " << mdp.n_actions() << " actions in "
      << sol.iterations << " iterations (residual " << sol.residual << "); wrote " << path.string()
      << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / sweep

inline std::string seed_file(std::uint64_t seed) { return "seed_" + std::to_string(seed) + ".csv"; }

inline constexpr const char* kSummaryLabelHeader = "method,reward,alpha,beta,";

// beta = 0 runs are labelled baseline whichever method was requested.
inline std::string summary_label(const fourroom::TrainConfig& c) {
  const auto method = c.effective_beta() == 0.0 ? fourroom::Method::baseline : fourroom::Method::rollin;
  return fourroom::to_string(method) + "," + fourroom::to_string(c.variant) + "," +
         format_csv_real(c.alpha) + "," + format_csv_real(c.effective_beta()) + ",";
}

/// Runs every seed (seeds in parallel when there are several), writes one CSV
/// per seed into `dir` and returns the final row of each run. Runs with zero
/// steps contribute no final row.
inline std::vector<MetricsRow> run_seeds(const fourroom::GridLayout& layout,
                                         const fourroom::TrainConfig& base,
                                         const std::vector<std::uint64_t>& seeds, const fs::path& dir,
                                         std::ostream& log) {
  fs::create_directories(dir);
  std::vector<std::vector<MetricsRow>> rows(seeds.size());
  const bool parallel_seeds = seeds.size() > 1;
  parallel_for(seeds.size(), parallel_seeds ? base.threads : 1, [&](std::size_t i) {
    fourroom::TrainConfig cfg = base;
    cfg.seed = seeds[i];
    if (parallel_seeds) cfg.threads = 1;
    rows[i] = fourroom::train_fourroom(layout, cfg).rows;
    write_metrics_csv((dir / seed_file(seeds[i])).string(), rows[i]);
  });
  std::vector<MetricsRow> finals;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (rows[i].empty()) continue;
    finals.push_back(rows[i].back());
    log << "  seed " << seeds[i] << ": final kappa " << rows[i].back().kappa << "\n";
  }
  return finals;
}

inline std::string summary_csv(const std::vector<std::pair<fourroom::TrainConfig, std::vector<MetricsRow>>>& groups) {
  std::string out = std::string(kSummaryLabelHeader) + kSummaryStatsHeader + "\n";
  for (const auto& [cfg, finals] : groups) {
    if (finals.empty()) continue;
    out += summary_label(cfg) + summary_stats_csv(summarize_final(finals)) + "\n";
  }
  return out;
}

inline int cmd_train(const TrainRunConfig& cfg, std::ostream& log) {
  cfg.train.validate();
  const fourroom::GridLayout layout = resolve_layout(cfg.layout_path);
  const fs::path dir(cfg.out);
  log << "train " << fourroom::to_string(cfg.train.method) << " (" << fourroom::to_string(cfg.train.variant)
      << ", alpha " << cfg.train.alpha << ", beta " << cfg.train.effective_beta() << ") over "
      << cfg.seeds.size() << " seed(s)\n";
  const auto finals = run_seeds(layout, cfg.train, cfg.seeds, dir, log);
  write_text(dir / "summary.csv", summary_csv({{cfg.train, finals}}));
  return 0;
}

inline int cmd_sweep(const SweepConfig& cfg, std::ostream& log) {
  cfg.run.train.validate();
  const fourroom::GridLayout layout = resolve_layout(cfg.run.layout_path);
  const fs::path dir(cfg.run.out);
  std::vector<std::pair<fourroom::TrainConfig, std::vector<MetricsRow>>> groups;
  for (double beta : cfg.betas) {
    // beta = 0 is the baseline; the rest of the grid rolls in.
    fourroom::TrainConfig train = cfg.run.train;
    train.method = fourroom::Method::rollin;
    train.beta = beta;
    train.validate();
    log << "beta " << beta << ":\n";
    groups.emplace_back(train, run_seeds(layout, train, cfg.run.seeds,
                                         dir / ("beta_" + ::rollin::detail::format_real(beta)), log));
  }
  write_text(dir / "summary.csv", summary_csv(groups));
  return 0;
}

// ---------------------------------------------------------------------------
// verify

inline std::string report_table(const std::vector<verify::CheckReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(26) << "check" << std::right << std::setw(8) << "passed"
     << std::setw(8) << "total" << std::setw(16) << "worst margin" << "\n";
  for (const auto& [name, t] : verify::tally(reports)) {
    char margin[32];
    std::snprintf(margin, sizeof margin, "%.3e", t.worst_margin);
    os << std::left << std::setw(26) << name << std::right << std::setw(8) << t.passed
       << std::setw(8) << t.total << std::setw(16) << margin << "\n";
  }
  return os.str();
}

inline int cmd_verify(const VerifyConfig& cfg, std::ostream& log) {
  const auto reports = verify::run_suite(cfg.suite, cfg.options);
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : reports) doc.push_back(verify::to_json(r));
  write_text(fs::path(cfg.out) / "verify_reports.json", doc.dump(1) + "\n");
  log << report_table(reports);
  const bool ok = verify::all_pass(reports);
  log << (ok ? "all checks passed" : "SOME CHECKS FAILED") << "\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// curriculum-export

inline int cmd_curriculum_export(const std::string& layout_path, double beta, double threshold,
                                 const std::string& out, std::ostream& log) {
  const fourroom::GridLayout layout = resolve_layout(layout_path);
  const Curriculum curriculum = fourroom::make_curriculum(layout, beta, threshold);
  const std::string text = fourroom::curriculum_json(layout, curriculum).dump(2) + "\n";
  if (out.empty() || out == "-") {
    log << text;
  } else {
    write_text(fs::path(out) / "curriculum.json", text);
    log << "wrote " << (fs::path(out) / "curriculum.json").string() << "\n";
  }
  return 0;
}

}  // namespace rollin::cli
