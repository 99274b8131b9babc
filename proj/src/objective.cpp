#include "screenopt/objective.hpp"

#include "screenopt/error.hpp"

namespace screenopt {

namespace {

QuadraticProgram assemble_impl(const Density& density, const CostSpec& cost, ConstraintSet constraints) {
  cost.validate();
  const Grid& g = density.grid();
  if (constraints.grid().size() == 0) constraints = assemble_constraints(g);
  if (!(constraints.grid() == g))
    throw Error(ErrorCode::GridMismatch, "constraint set and density use different grids");

  QuadraticProgram qp;
  qp.grid = g;
  const std::size_t stride = 1 + g.dim();
  qp.linear.assign(g.size() * stride, 0.0);
  qp.curvature.assign(g.size() * stride, 0.0);
  const std::size_t d = g.theta_dim();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = density.mass(i);
    const std::size_t base = i * stride;
    qp.linear[base] = -w;
    for (std::size_t k = 0; k < d; ++k) {
      qp.linear[base + 1 + k] = w * g.coord(i, k);
      qp.curvature[base + 1 + k] = w;
    }
    // The cost does not depend on q, which therefore enters linearly.
    if (g.extended()) qp.linear[base + 1 + d] = w * (g.alpha(i) - cost.lambda);
  }
  qp.constraints = std::move(constraints);
  return qp;
}

}  // namespace

double QuadraticProgram::evaluate(const std::vector<double>& x) const {
  if (x.size() != linear.size()) throw Error(ErrorCode::GridMismatch, "unknown vector has wrong size");
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * (linear[k] - 0.5 * curvature[k] * x[k]);
  return s;
}

double QuadraticProgram::evaluate(const SurplusField& field) const {
  if (!(field.grid() == grid)) throw Error(ErrorCode::GridMismatch, "field lives on another grid");
  return evaluate(field.data());
}

std::vector<double> QuadraticProgram::gradient(const SurplusField& field) const {
  if (!(field.grid() == grid)) throw Error(ErrorCode::GridMismatch, "field lives on another grid");
  const auto& x = field.data();
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) g[k] = linear[k] - curvature[k] * x[k];
  return g;
}

QuadraticProgram assemble_classical(const Density& f, const CostSpec& cost, ConstraintSet constraints) {
  if (f.grid().extended())
    throw Error(ErrorCode::Dimension, "classical objective needs a density on the type domain");
  return assemble_impl(f, cost, std::move(constraints));
}

QuadraticProgram assemble_extended(const Density& h, const CostSpec& cost, ConstraintSet constraints) {
  if (!h.grid().extended())
    throw Error(ErrorCode::Dimension, "extended objective needs a density on types x aversions");
  return assemble_impl(h, cost, std::move(constraints));
}

QuadraticProgram assemble(const Density& density, const CostSpec& cost, ConstraintSet constraints) {
  return density.grid().extended() ? assemble_extended(density, cost, std::move(constraints))
                                   : assemble_classical(density, cost, std::move(constraints));
}

}  // namespace screenopt
