#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "screenopt/domain.hpp"
#include "screenopt/solver.hpp"

namespace screenopt {

enum class ProblemKind { Classical1D, Classical2D, Extended };

struct DensityConfig {
  std::string kind = "uniform";  // uniform | exponential | fig1 | csv
  double rate = 1.0;
  double a = 0.5;
  std::filesystem::path path;
  bool joint = false;  // csv only: last column pair is the aversion axis
};

struct CertificateConfig {
  bool enabled = false;
  double a = 0.5;
  double kappa = 1.0;
  /// Step of the finite-difference slope (1D) or of the lift gain (2D).
  double epsilon = 1e-3;
  std::vector<double> e;
  double s_lo = -0.25, s_hi = 0.0;
  int n_alpha = 5;
  /// "closed-form" or "solved": which classical field the 1D certificate perturbs.
  std::string vbar = "closed-form";
};

struct OutputsConfig {
  bool field = true;
  bool contracts = true;
  bool segmentation = true;
};

/// Parsed and validated run configuration (schema version 1).
struct RunConfig {
  int version = 1;
  ProblemKind problem = ProblemKind::Classical1D;
  TypeDomain domain;
  double kappa = 1.0;
  std::vector<int> n;
  int n_alpha = 0;
  DensityConfig density;
  CostSpec cost;
  SolverConfig solver;
  OutputsConfig outputs;
  CertificateConfig certificate;
  std::filesystem::path out_dir = "out";
};

/// Throws Error (code Config, InvalidResolution, Io, ...) on an invalid configuration.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Density the solve runs on (joint on the extended grid for extended problems).
Density build_density(const RunConfig& cfg);

struct RunOutcome {
  int exit_code = 0;
  SolveReport report;
};

/// Solves, diagnoses and writes all artifacts into cfg.out_dir.
/// Exit code 0 on success, 2 when the solver did not converge.
RunOutcome run(const RunConfig& cfg, std::ostream& log);

struct ComparisonReport {
  double objective_a = 0.0, objective_b = 0.0;
  double objective_delta = 0.0;  // b - a
  double max_q_a = 0.0, max_q_b = 0.0;
  double linf_v = 0.0, linf_p = 0.0, linf_q = 0.0;
  std::size_t compared_nodes = 0;
};

/// Compares two run directories. Mixed classical/extended pairs are compared on
/// the alpha = 0 layer. Throws GridMismatch on incompatible grids.
ComparisonReport compare(const std::filesystem::path& a, const std::filesystem::path& b);
std::string comparison_json(const ComparisonReport& r);

}  // namespace screenopt
