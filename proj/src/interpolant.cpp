#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "screenopt/error.hpp"
#include "screenopt/parallel.hpp"
#include "screenopt/perturbation.hpp"

namespace screenopt {

namespace {

double quadratic_form(const double* h, const double* x, std::size_t d) {
  double q = 0.0;
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t m = 0; m < d; ++m) q += x[k] * h[k * d + m] * x[m];
  return q;
}

}  // namespace

std::vector<double> slope_hessian(const SurplusField& field) {
  const Grid& g = field.grid();
  if (g.extended()) throw Error(ErrorCode::Dimension, "slope Hessian needs a field on the type domain");
  const std::size_t d = g.dim();
  const std::size_t n = g.size();
  std::vector<double> hess(n * d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<int> idx = g.multi_index(i);
    double* h = hess.data() + i * d * d;
    for (std::size_t m = 0; m < d; ++m) {
      std::vector<int> lo = idx, hi = idx;
      if (idx[m] > 0) --lo[m];
      if (idx[m] + 1 < g.count(m)) ++hi[m];
      const std::size_t il = g.flat_index(lo), ih = g.flat_index(hi);
      const double dx = g.coord(ih, m) - g.coord(il, m);
      for (std::size_t k = 0; k < d; ++k) h[k * d + m] = (field.p(ih, k) - field.p(il, k)) / dx;
    }
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t m = k + 1; m < d; ++m) h[k * d + m] = h[m * d + k] = 0.5 * (h[k * d + m] + h[m * d + k]);
  }
  return hess;
}

ConvexInterpolant::ConvexInterpolant(const SurplusField& field, double reach)
    : field_(field), d_(field.grid().dim()) {
  const Grid& g = field.grid();
  if (g.extended()) throw Error(ErrorCode::Dimension, "interpolant needs a field on the type domain");
  const std::size_t n = g.size();
  hess_ = slope_hessian(field);

  // Clip to the positive semidefinite cone.
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Map<Eigen::MatrixXd> h(hess_.data() + i * d_ * d_, static_cast<Eigen::Index>(d_),
                                  static_cast<Eigen::Index>(d_));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    h = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  }

  c_.assign(n, 1.0);
  rho_.assign(n, std::numeric_limits<double>::infinity());
  parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<double> delta(d_);
    for (std::size_t i = b; i < e; ++i) {
      const double* h = hess_.data() + i * d_ * d_;
      // Keep the piece's slopes nonnegative within `reach` of its node.
      double c = 1.0;
      for (std::size_t m = 0; m < d_; ++m) {
        double row = 0.0;
        for (std::size_t k = 0; k < d_; ++k) row += std::abs(h[m * d_ + k]);
        if (row * reach > 0.0) c = std::min(c, std::max(0.0, field.p(i, m)) / (row * reach));
      }
      c_[i] = std::max(0.0, c);
      if (c_[i] == 0.0) continue;

      // Largest Huber radius keeping the piece below the data at every node.
      double rho = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::size_t k = 0; k < d_; ++k) delta[k] = g.coord(j, k) - g.coord(i, k);
        const double t = std::sqrt(std::max(0.0, quadratic_form(h, delta.data(), d_)));
        if (!(t > 0.0)) continue;
        const double gap = std::max(0.0, field.v(j) - field.tangent(i, j)) / c_[i];
        if (0.5 * t * t <= gap + 1e-12 * std::max(1.0, std::abs(field.v(j)))) continue;
        rho = std::min(rho, t - std::sqrt(std::max(0.0, t * t - 2.0 * gap)));
      }
      rho_[i] = std::max(0.0, rho * (1.0 - 1e-9));
    }
  });
}

double ConvexInterpolant::piece(std::size_t i, std::span<const double> z, std::span<double> grad) const {
  const Grid& g = field_.grid();
  const double* h = hess_.data() + i * d_ * d_;
  double delta[8], hd[8];
  double t = field_.v(i);
  for (std::size_t k = 0; k < d_; ++k) {
    delta[k] = z[k] - g.coord(i, k);
    t += field_.p(i, k) * delta[k];
  }
  double quad = 0.0;
  for (std::size_t k = 0; k < d_; ++k) {
    hd[k] = 0.0;
    for (std::size_t m = 0; m < d_; ++m) hd[k] += h[k * d_ + m] * delta[m];
    quad += delta[k] * hd[k];
  }
  const double r = std::sqrt(std::max(0.0, quad));
  const double rho = rho_[i];
  double scale = 1.0;
  if (r <= rho) {
    t += 0.5 * c_[i] * quad;
  } else {
    t += c_[i] * (rho * r - 0.5 * rho * rho);
    scale = rho / r;
  }
  if (!grad.empty())
    for (std::size_t k = 0; k < d_; ++k) grad[k] = field_.p(i, k) + c_[i] * scale * hd[k];
  return t;
}

double ConvexInterpolant::evaluate(std::span<const double> z, std::span<double> grad) const {
  const Grid& g = field_.grid();
  double best = 0.0;
  std::size_t arg = g.size();  // the zero piece
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = piece(i, z, {});
    if (t > best) {
      best = t;
      arg = i;
    }
  }
  if (arg < g.size()) {
    piece(arg, z, grad);
  } else {
    for (std::size_t k = 0; k < d_; ++k) grad[k] = 0.0;
  }
  return best;
}

SurplusField lift(const SurplusField& vbar, const Grid& extended, const PerturbationSpec& spec) {
  const Grid& tg = vbar.grid();
  if (tg.extended()) throw Error(ErrorCode::Dimension, "lift expects a field on the type domain");
  if (!extended.extended() || !(extended.theta_grid() == tg))
    throw Error(ErrorCode::GridMismatch, "extended grid does not extend the field's grid");
  spec.validate(tg.dim());
  const ConstraintSet full_theta = assemble_constraints(tg);
  const FeasibilityReport in = check_feasibility(vbar, full_theta, 1e-8);
  if (!in.feasible) throw Error(ErrorCode::Infeasible, "lift needs a feasible surplus field");

  const std::size_t d = tg.dim();
  const std::vector<double> e = spec.direction(d);
  double spacing = 0.0;
  for (std::size_t k = 0; k < d; ++k) spacing = std::max(spacing, tg.spacing(k));
  const double max_shift = std::abs(spec.epsilon) * kink(0.0, spec.a);
  const ConvexInterpolant interp(vbar, spacing + max_shift);

  SurplusField out(extended);
  const std::size_t na = static_cast<std::size_t>(extended.count(extended.dim() - 1));
  parallel_chunks(extended.size(), [&](std::size_t, std::size_t b, std::size_t en) {
    std::vector<double> z(d), grad(d);
    for (std::size_t i = b; i < en; ++i) {
      const std::size_t t = i / na;
      const double alpha = extended.alpha(i);
      const double shift = spec.epsilon * kink(alpha, spec.a);
      if (shift == 0.0) {
        out.v(i) = vbar.v(t);
        for (std::size_t k = 0; k < d; ++k) grad[k] = vbar.p(t, k);
      } else {
        for (std::size_t k = 0; k < d; ++k) z[k] = tg.coord(t, k) + shift * e[k];
        out.v(i) = interp.evaluate(z, grad);
      }
      double slope = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        out.p(i, k) = grad[k];
        slope += e[k] * grad[k];
      }
      out.q(i) = spec.epsilon * kink_slope(alpha, spec.a) * slope;
    }
  });

  const ConstraintSet full = assemble_constraints(extended);
  if (!check_feasibility(out, full, 1e-8).feasible) out = repair(out, full);
  return out;
}

}  // namespace screenopt
