// Primal-dual interior-point method (Mehrotra predictor-corrector) for
//
//   minimize   0.5 x'Qx - c'x
//   subject to G x >= 0      (pairwise incentive rows)
//              x >= 0
//              q <= q_max    (extended mode only)
//
// Q is diagonal. Each row of G touches v_j and the block [v_i, g_i] of one
// node, so the normal matrix Q + G'DG + barrier terms is assembled densely in
// O(rows * stride^2) and factored with a dense Cholesky.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "screenopt/error.hpp"
#include "screenopt/solver.hpp"

namespace screenopt {

void SolverConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be positive");
  if (!(tolerance > 0.0) || !(feasibility_tol > 0.0))
    throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  if (!(step_fraction > 0.0 && step_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "step_fraction must lie in (0,1)");
}

namespace {

using Vec = Eigen::VectorXd;

struct PairList {
  std::vector<std::uint32_t> from, to;
  std::size_t size() const { return from.size(); }
};

PairList materialize(const ConstraintSet& cs) {
  PairList pl;
  pl.from.reserve(cs.incentive_count());
  pl.to.reserve(cs.incentive_count());
  cs.for_each_pair([&](std::size_t i, std::size_t j) {
    pl.from.push_back(static_cast<std::uint32_t>(i));
    pl.to.push_back(static_cast<std::uint32_t>(j));
  });
  return pl;
}

struct IpmOutcome {
  std::vector<double> x;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

class InteriorPoint {
 public:
  InteriorPoint(const QuadraticProgram& qp, const PairList& pairs, std::optional<double> q_max,
                const SolverConfig& cfg)
      : qp_(qp), pairs_(pairs), cfg_(cfg), grid_(qp.grid) {
    n_ = qp.unknowns();
    m_ = pairs.size();
    dim_ = grid_.dim();
    stride_ = 1 + dim_;
    coords_.resize(grid_.size() * dim_);
    for (std::size_t i = 0; i < grid_.size(); ++i)
      for (std::size_t k = 0; k < dim_; ++k) coords_[i * dim_ + k] = grid_.coord(i, k);
    if (q_max && grid_.extended()) {
      q_max_ = *q_max;
      for (std::size_t i = 0; i < grid_.size(); ++i) capped_.push_back(i * stride_ + stride_ - 1);
    }
    c_ = Eigen::Map<const Vec>(qp.linear.data(), static_cast<Eigen::Index>(n_));
    qdiag_ = Eigen::Map<const Vec>(qp.curvature.data(), static_cast<Eigen::Index>(n_));
  }

  IpmOutcome run() {
    const auto ni = static_cast<Eigen::Index>(n_);
    const auto mi = static_cast<Eigen::Index>(m_);
    const auto nu = static_cast<Eigen::Index>(capped_.size());

    Vec x = Vec::Ones(ni);
    for (std::size_t t = 0; t < capped_.size(); ++t)
      x[static_cast<Eigen::Index>(capped_[t])] = std::min(1.0, 0.5 * q_max_);
    Vec s = Vec::Ones(mi), y = Vec::Ones(mi), zl = Vec::Ones(ni), zu = Vec::Ones(nu);
    {
      Vec gx = apply_g(x);
      for (Eigen::Index r = 0; r < mi; ++r) s[r] = std::max(1.0, gx[r]);
    }

    const double cnorm = 1.0 + c_.cwiseAbs().maxCoeff();
    const double count = static_cast<double>(m_ + n_ + capped_.size());
    IpmOutcome out;

    // Returned iterate: the one with the smallest scaled residual seen so far.
    std::vector<double> best(x.data(), x.data() + ni);
    IpmOutcome best_stats;
    double best_merit = std::numeric_limits<double>::infinity();

    Eigen::MatrixXd normal(ni, ni);
    for (int iter = 0; iter <= cfg_.max_iters; ++iter) {
      const Vec u = upper_slack(x);
      const Vec gx = apply_g(x);
      const Vec rp = gx - s;
      Vec rd = qdiag_.cwiseProduct(x) - c_ - apply_gt(y) - zl;
      for (Eigen::Index t = 0; t < nu; ++t) rd[static_cast<Eigen::Index>(capped_[t])] += zu[t];

      const double comp = s.dot(y) + x.dot(zl) + (nu ? u.dot(zu) : 0.0);
      const double mu = comp / count;
      const double obj = c_.dot(x) - 0.5 * x.dot(qdiag_.cwiseProduct(x));
      out.primal_residual = (mi ? rp.cwiseAbs().maxCoeff() : 0.0) / (1.0 + x.cwiseAbs().maxCoeff());
      // Dual residual relative to the magnitude of the terms that produce it.
      const double dscale_abs =
          std::max({cnorm, apply_gt_abs(y).maxCoeff() + zl.maxCoeff() + (nu ? zu.maxCoeff() : 0.0),
                    qdiag_.cwiseProduct(x).cwiseAbs().maxCoeff()});
      out.dual_residual = rd.cwiseAbs().maxCoeff() / (1.0 + dscale_abs);
      out.gap = comp / (1.0 + std::abs(obj));
      out.iterations = iter;
      if (!std::isfinite(out.primal_residual + out.dual_residual + out.gap)) break;
      const double merit = std::max({out.primal_residual / cfg_.tolerance,
                                     out.dual_residual / cfg_.feasibility_tol, out.gap / cfg_.tolerance});
      if (merit < best_merit) {
        best_merit = merit;
        best.assign(x.data(), x.data() + ni);
        best_stats = out;
      }
      if (merit <= 1.0) break;
      if (iter == cfg_.max_iters) break;

      // Normal matrix Q + G'DG + X^-1 Zl + E'U^-1 Zu E.
      const Vec dscale = y.cwiseQuotient(s);
      assemble_normal(normal, dscale);
      for (Eigen::Index k = 0; k < ni; ++k) normal(k, k) += qdiag_[k] + zl[k] / x[k];
      for (Eigen::Index t = 0; t < nu; ++t) {
        const auto k = static_cast<Eigen::Index>(capped_[t]);
        normal(k, k) += zu[t] / u[t];
      }
      Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt;
      factor(normal, llt);

      auto direction = [&](const Vec& rsy, const Vec& rxz, const Vec& ruz, Vec& dx, Vec& ds, Vec& dy,
                           Vec& dzl, Vec& dzu) {
        Vec rhs = -rd - apply_gt((rsy + y.cwiseProduct(rp)).cwiseQuotient(s)) - rxz.cwiseQuotient(x);
        for (Eigen::Index t = 0; t < nu; ++t) rhs[static_cast<Eigen::Index>(capped_[t])] += ruz[t] / u[t];
        dx = llt.solve(rhs);
        ds = apply_g(dx) + rp;
        dy = (-rsy - y.cwiseProduct(ds)).cwiseQuotient(s);
        dzl = (-rxz - zl.cwiseProduct(dx)).cwiseQuotient(x);
        dzu.resize(nu);
        for (Eigen::Index t = 0; t < nu; ++t) {
          const double du = -dx[static_cast<Eigen::Index>(capped_[t])];
          dzu[t] = (-ruz[t] - zu[t] * du) / u[t];
        }
      };
      auto du_of = [&](const Vec& dx) {
        Vec du(nu);
        for (Eigen::Index t = 0; t < nu; ++t) du[t] = -dx[static_cast<Eigen::Index>(capped_[t])];
        return du;
      };

      // Predictor.
      Vec dx, ds, dy, dzl, dzu;
      direction(s.cwiseProduct(y), x.cwiseProduct(zl), u.cwiseProduct(zu), dx, ds, dy, dzl, dzu);
      Vec du = du_of(dx);
      double step = std::min({max_step(x, dx), max_step(s, ds), max_step(u, du), max_step(y, dy),
                              max_step(zl, dzl), max_step(zu, dzu)});
      const double mu_aff = ((s + step * ds).dot(y + step * dy) + (x + step * dx).dot(zl + step * dzl) +
                             (nu ? (u + step * du).dot(zu + step * dzu) : 0.0)) /
                            count;
      const double sigma = std::pow(mu_aff / mu, 3.0);

      // Corrector.
      Vec rsy = s.cwiseProduct(y) + ds.cwiseProduct(dy);
      rsy.array() -= sigma * mu;
      Vec rxz = x.cwiseProduct(zl) + dx.cwiseProduct(dzl);
      rxz.array() -= sigma * mu;
      Vec ruz = u.cwiseProduct(zu) + du.cwiseProduct(dzu);
      ruz.array() -= sigma * mu;
      direction(rsy, rxz, ruz, dx, ds, dy, dzl, dzu);
      du = du_of(dx);
      step = std::min({max_step(x, dx), max_step(s, ds), max_step(u, du), max_step(y, dy),
                       max_step(zl, dzl), max_step(zu, dzu)});
      step = std::min(1.0, cfg_.step_fraction * step);

      x += step * dx;
      s += step * ds;
      y += step * dy;
      zl += step * dzl;
      zu += step * dzu;
    }
    best_stats.iterations = out.iterations;
    best_stats.converged = best_merit <= 1.0;
    best_stats.x = std::move(best);
    return best_stats;
  }

 private:
  Vec upper_slack(const Vec& x) const {
    Vec u(static_cast<Eigen::Index>(capped_.size()));
    for (std::size_t t = 0; t < capped_.size(); ++t)
      u[static_cast<Eigen::Index>(t)] = q_max_ - x[static_cast<Eigen::Index>(capped_[t])];
    return u;
  }

  // Row r: x[v_j] - x[v_i] - sum_k x[g_ik] (coord_jk - coord_ik).
  Vec apply_g(const Vec& x) const {
    Vec out(static_cast<Eigen::Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t i = pairs_.from[r], j = pairs_.to[r];
      const double* ci = &coords_[i * dim_];
      const double* cj = &coords_[j * dim_];
      const double* xi = x.data() + i * stride_;
      double val = x[static_cast<Eigen::Index>(j * stride_)] - xi[0];
      for (std::size_t k = 0; k < dim_; ++k) val -= xi[1 + k] * (cj[k] - ci[k]);
      out[static_cast<Eigen::Index>(r)] = val;
    }
    return out;
  }

  Vec apply_gt(const Vec& y) const {
    Vec out = Vec::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t i = pairs_.from[r], j = pairs_.to[r];
      const double yr = y[static_cast<Eigen::Index>(r)];
      const double* ci = &coords_[i * dim_];
      const double* cj = &coords_[j * dim_];
      double* oi = out.data() + i * stride_;
      out[static_cast<Eigen::Index>(j * stride_)] += yr;
      oi[0] -= yr;
      for (std::size_t k = 0; k < dim_; ++k) oi[1 + k] -= yr * (cj[k] - ci[k]);
    }
    return out;
  }

  Vec apply_gt_abs(const Vec& y) const {
    Vec out = Vec::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t i = pairs_.from[r], j = pairs_.to[r];
      const double yr = std::abs(y[static_cast<Eigen::Index>(r)]);
      const double* ci = &coords_[i * dim_];
      const double* cj = &coords_[j * dim_];
      double* oi = out.data() + i * stride_;
      out[static_cast<Eigen::Index>(j * stride_)] += yr;
      oi[0] += yr;
      for (std::size_t k = 0; k < dim_; ++k) oi[1 + k] += yr * std::abs(cj[k] - ci[k]);
    }
    return out;
  }

  void assemble_normal(Eigen::MatrixXd& mat, const Vec& dscale) const {
    mat.setZero();
    double urow[8];
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t i = pairs_.from[r], j = pairs_.to[r];
      const double d = dscale[static_cast<Eigen::Index>(r)];
      const double* ci = &coords_[i * dim_];
      const double* cj = &coords_[j * dim_];
      urow[0] = -1.0;
      for (std::size_t k = 0; k < dim_; ++k) urow[1 + k] = -(cj[k] - ci[k]);
      const auto bi = static_cast<Eigen::Index>(i * stride_);
      const auto vj = static_cast<Eigen::Index>(j * stride_);
      for (std::size_t a = 0; a < stride_; ++a)
        for (std::size_t b = 0; b <= a; ++b)
          mat(bi + static_cast<Eigen::Index>(a), bi + static_cast<Eigen::Index>(b)) += d * urow[a] * urow[b];
      mat(vj, vj) += d;
      for (std::size_t a = 0; a < stride_; ++a) {
        const auto col = bi + static_cast<Eigen::Index>(a);
        if (vj > col) mat(vj, col) += d * urow[a];
        else mat(col, vj) += d * urow[a];
      }
    }
  }

  static void factor(Eigen::MatrixXd& mat, Eigen::LLT<Eigen::MatrixXd, Eigen::Lower>& llt) {
    const double scale = std::max(1.0, mat.diagonal().cwiseAbs().maxCoeff());
    double reg = 1e-14 * scale;
    llt.compute(mat);
    while (llt.info() != Eigen::Success) {
      mat.diagonal().array() += reg;
      llt.compute(mat);
      reg *= 100.0;
      if (reg > scale) throw Error(ErrorCode::InvalidArgument, "normal matrix could not be factored");
    }
  }

  static double max_step(const Vec& z, const Vec& dz) {
    double step = 1.0;
    for (Eigen::Index k = 0; k < z.size(); ++k)
      if (dz[k] < 0.0) step = std::min(step, -z[k] / dz[k]);
    return step;
  }

  const QuadraticProgram& qp_;
  const PairList& pairs_;
  const SolverConfig& cfg_;
  const Grid& grid_;
  std::size_t n_ = 0, m_ = 0, dim_ = 0, stride_ = 0;
  std::vector<double> coords_;
  std::vector<std::size_t> capped_;
  double q_max_ = 0.0;
  Vec c_, qdiag_;
};

SurplusField to_field(const Grid& grid, const std::vector<double>& x) {
  SurplusField f(grid);
  f.data() = x;
  return f;
}

}  // namespace

SolveResult solve(const QuadraticProgram& qp, const SolverConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Grid& grid = qp.grid;
  const std::optional<double> q_max = qp.constraints.q_max();
  const ConstraintSet full = assemble_constraints(grid, Pairing::Full, 0, q_max);

  ConstraintSet working = qp.constraints;
  if (cfg.pairing == Pairing::KNearest && working.pairing() == Pairing::Full)
    working = assemble_constraints(grid, Pairing::KNearest, cfg.k, q_max);

  SolveReport report;
  // Identically zero objective: every feasible field is optimal; the minimal one is zero.
  const auto is_zero = [](const std::vector<double>& c) {
    return std::all_of(c.begin(), c.end(), [](double x) { return x == 0.0; });
  };
  if (is_zero(qp.linear) && is_zero(qp.curvature)) {
    SurplusField zero(grid);
    report.converged = true;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return SolveResult{std::move(zero), report};
  }

  IpmOutcome outcome;
  for (int round = 0;; ++round) {
    const PairList pairs = materialize(working);
    outcome = InteriorPoint(qp, pairs, q_max, cfg).run();
    report.iterations += outcome.iterations;
    report.cut_rounds = round;
    if (working.pairing() == Pairing::Full || round >= cfg.max_cut_rounds) break;

    // Constraint generation: add every full-pairing row the iterate violates.
    const SurplusField trial = to_field(grid, outcome.x);
    auto extended = working.pairs();
    const std::size_t before = extended.size();
    const std::size_t n = grid.size();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> missing;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && trial.tangent(i, j) - trial.v(j) > 0.1 * cfg.feasibility_tol)
          missing.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    extended.insert(extended.end(), missing.begin(), missing.end());
    std::sort(extended.begin(), extended.end());
    extended.erase(std::unique(extended.begin(), extended.end()), extended.end());
    if (extended.size() == before) break;
    working = ConstraintSet(grid, Pairing::Explicit, std::move(extended), q_max);
  }

  SurplusField field = to_field(grid, outcome.x);
  field = repair(field, full);
  field = minimize_surplus(field);
  for (int round = 0; grid.extended() && round < 50; ++round) {
    const SurplusField before = field;
    field = minimize_aversion_slopes(field);
    field = minimize_surplus(field);
    double change = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) change = std::max(change, before.q(i) - field.q(i));
    if (change <= 1e-14) break;
  }

  const FeasibilityReport feas = check_feasibility(field, full, cfg.feasibility_tol);
  report.objective = qp.evaluate(field);
  report.max_violation = feas.max_violation;
  report.converged = outcome.converged;
  report.primal_residual = outcome.primal_residual;
  report.dual_residual = outcome.dual_residual;
  report.gap = outcome.gap;
  if (q_max) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (field.q(i) >= *q_max * (1.0 - 1e-6)) report.q_cap_bound = true;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return SolveResult{std::move(field), report};
}

}  // namespace screenopt
