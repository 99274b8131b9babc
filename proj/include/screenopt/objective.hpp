#pragma once

#include <vector>

#include "screenopt/cone.hpp"
#include "screenopt/domain.hpp"

namespace screenopt {

/// Concave quadratic objective over node-major unknowns `[v_i, p_i..., q_i]`:
///
///   J(x) = sum_k linear[k] * x[k] - 0.5 * sum_k curvature[k] * x[k]^2,
///
/// maximized over the cone described by `constraints`. Trapezoid weights are
/// folded into the coefficients at assembly time.
struct QuadraticProgram {
  Grid grid;
  std::vector<double> linear;
  std::vector<double> curvature;  // >= 0; nonzero only on p unknowns
  ConstraintSet constraints;

  std::size_t unknowns() const { return linear.size(); }
  double evaluate(const std::vector<double>& x) const;
  double evaluate(const SurplusField& field) const;
  /// Analytic gradient dJ/dx in the unknown layout.
  std::vector<double> gradient(const SurplusField& field) const;
};

/// Discrete J_D: sum_i f_i w_i (theta_i.p_i - v_i - 0.5|p_i|^2).
QuadraticProgram assemble_classical(const Density& f, const CostSpec& cost = {},
                                    ConstraintSet constraints = {});

/// Discrete J_R: sum_i h_i w_i (theta_i.p_i + alpha_i q_i - v_i - 0.5|p_i|^2 - lambda q_i).
QuadraticProgram assemble_extended(const Density& h, const CostSpec& cost = {},
                                   ConstraintSet constraints = {});

/// Dispatches on the density's grid.
QuadraticProgram assemble(const Density& density, const CostSpec& cost = {},
                          ConstraintSet constraints = {});

inline double objective_value(const QuadraticProgram& qp, const SurplusField& field) {
  return qp.evaluate(field);
}

}  // namespace screenopt
