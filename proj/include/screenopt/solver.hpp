#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "screenopt/cone.hpp"
#include "screenopt/objective.hpp"

namespace screenopt {

struct SolverConfig {
  int max_iters = 200;
  /// Relative primal residual and complementarity target of the interior-point iteration.
  double tolerance = 1e-11;
  /// Relative dual residual target; also the full-pairing feasibility required of the output.
  double feasibility_tol = 1e-8;
  /// Fraction of the distance to the boundary taken per step.
  double step_fraction = 0.995;
  Pairing pairing = Pairing::Full;
  /// Neighbour count for k-nearest pairing.
  int k = 8;
  /// Maximum constraint-generation rounds after a k-nearest solve.
  int max_cut_rounds = 20;
  /// Recorded in reports; the solver itself is deterministic.
  std::uint64_t seed = 0;

  void validate() const;
};

struct SolveReport {
  double objective = 0.0;
  int iterations = 0;
  double max_violation = 0.0;
  bool q_cap_bound = false;
  double seconds = 0.0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int cut_rounds = 0;
};

struct SolveResult {
  SurplusField field;
  SolveReport report;
};

/// Maximizes the program over the discrete cone with a primal-dual
/// interior-point method, then restores exact full-pairing feasibility and
/// selects the least surplus and least aversion slopes among optimal fields.
SolveResult solve(const QuadraticProgram& qp, const SolverConfig& cfg = {});

struct OracleResult {
  double objective = 0.0;
  std::vector<double> x;
  std::size_t candidates = 0;
};

/// Exact optimum of a tiny program by enumerating linearly independent active
/// sets and solving each equality-constrained KKT system. Refuses instances
/// with more than 6 nodes or more than 22 constraint rows.
OracleResult brute_force_oracle(const QuadraticProgram& qp);

struct HazardReport {
  /// u(theta_min) = theta_min - 1/f(theta_min) >= 0, i.e. theta_min f(theta_min) >= 1.
  bool lower_endpoint_ok = false;
  /// 2 + (1-F) f'/f^2 >= 0 at every node.
  bool hazard_ok = false;
  double lower_endpoint_value = 0.0;
  double min_hazard = 0.0;
  bool certified() const { return lower_endpoint_ok && hazard_ok; }
};

struct ClosedForm1D {
  SurplusField field;
  HazardReport hazard;
};

/// Classical 1D solution v(theta_min) = 0, v'(theta) = theta - (1-F)/f, with
/// v obtained by cumulative trapezoid integration of v'.
ClosedForm1D closed_form_1d(const Density& f);

}  // namespace screenopt
