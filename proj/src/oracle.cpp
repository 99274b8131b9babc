#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "screenopt/error.hpp"
#include "screenopt/solver.hpp"

namespace screenopt {

namespace {

constexpr std::size_t kMaxNodes = 6;
constexpr std::size_t kMaxRows = 22;

struct Rows {
  Eigen::MatrixXd a;  // rows a_r with a_r.x >= b_r
  Eigen::VectorXd b;
};

// In 1D, the adjacent incentive rows imply all others (a convex piecewise
// linear interpolant exists), so they replace the full pairing.
std::vector<std::pair<std::size_t, std::size_t>> oracle_pairs(const ConstraintSet& cs) {
  const Grid& g = cs.grid();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (cs.pairing() == Pairing::Full && g.dim() == 1) {
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      pairs.emplace_back(i, i + 1);
      pairs.emplace_back(i + 1, i);
    }
  } else {
    cs.for_each_pair([&](std::size_t i, std::size_t j) { pairs.emplace_back(i, j); });
  }
  return pairs;
}

Rows build_rows(const QuadraticProgram& qp) {
  const Grid& g = qp.grid;
  const std::size_t n = qp.unknowns();
  const std::size_t stride = 1 + g.dim();
  const auto pairs = oracle_pairs(qp.constraints);
  const auto q_max = qp.constraints.q_max();
  const std::size_t rows = pairs.size() + n + (q_max ? g.size() : 0);
  if (rows > kMaxRows) throw Error(ErrorCode::TooLarge, "oracle refuses more than 22 constraint rows");

  Rows r{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n)),
         Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows))};
  Eigen::Index row = 0;
  for (const auto& [i, j] : pairs) {
    r.a(row, static_cast<Eigen::Index>(j * stride)) += 1.0;
    r.a(row, static_cast<Eigen::Index>(i * stride)) -= 1.0;
    for (std::size_t k = 0; k < g.dim(); ++k)
      r.a(row, static_cast<Eigen::Index>(i * stride + 1 + k)) -= g.coord(j, k) - g.coord(i, k);
    ++row;
  }
  for (std::size_t k = 0; k < n; ++k) r.a(row++, static_cast<Eigen::Index>(k)) = 1.0;
  if (q_max) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      r.a(row, static_cast<Eigen::Index>(i * stride + stride - 1)) = -1.0;
      r.b[row++] = -*q_max;
    }
  }
  return r;
}

class Enumerator {
 public:
  Enumerator(const QuadraticProgram& qp, Rows rows) : rows_(std::move(rows)) {
    n_ = static_cast<Eigen::Index>(qp.unknowns());
    c_ = Eigen::Map<const Eigen::VectorXd>(qp.linear.data(), n_);
    q_ = Eigen::Map<const Eigen::VectorXd>(qp.curvature.data(), n_);
    scale_ = 1.0 + rows_.b.cwiseAbs().maxCoeff() + c_.cwiseAbs().maxCoeff();
  }

  OracleResult run() {
    best_.objective = -std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> active;
    Eigen::MatrixXd basis(n_, 0);
    dfs(0, active, basis);
    if (best_.candidates == 0) throw Error(ErrorCode::Infeasible, "oracle found no feasible vertex");
    return best_;
  }

 private:
  void evaluate(const std::vector<Eigen::Index>& active) {
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n_ + k, n_ + k);
    Eigen::VectorXd rhs(n_ + k);
    kkt.topLeftCorner(n_, n_).diagonal() = q_;
    rhs.head(n_) = c_;
    for (Eigen::Index t = 0; t < k; ++t) {
      kkt.block(0, n_ + t, n_, 1) = -rows_.a.row(active[static_cast<std::size_t>(t)]).transpose();
      kkt.block(n_ + t, 0, 1, n_) = rows_.a.row(active[static_cast<std::size_t>(t)]);
      rhs[n_ + t] = rows_.b[active[static_cast<std::size_t>(t)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n_);
    const double slack = (rows_.a * x - rows_.b).minCoeff();
    if (slack < -1e-10 * scale_) return;
    ++best_.candidates;
    const double obj = c_.dot(x) - 0.5 * x.dot(q_.cwiseProduct(x));
    if (obj > best_.objective) {
      best_.objective = obj;
      best_.x.assign(x.data(), x.data() + n_);
    }
  }

  // Visits every linearly independent subset of rows exactly once.
  void dfs(Eigen::Index start, std::vector<Eigen::Index>& active, Eigen::MatrixXd& basis) {
    evaluate(active);
    if (static_cast<Eigen::Index>(active.size()) == n_) return;
    for (Eigen::Index r = start; r < rows_.a.rows(); ++r) {
      Eigen::VectorXd w = rows_.a.row(r).transpose();
      if (basis.cols() > 0) w -= basis * (basis.transpose() * w);
      const double norm = w.norm();
      if (norm < 1e-9 * rows_.a.row(r).norm()) continue;
      Eigen::MatrixXd next(n_, basis.cols() + 1);
      next << basis, w / norm;
      active.push_back(r);
      dfs(r + 1, active, next);
      active.pop_back();
    }
  }

  Rows rows_;
  Eigen::Index n_ = 0;
  Eigen::VectorXd c_, q_;
  double scale_ = 1.0;
  OracleResult best_;
};

}  // namespace

OracleResult brute_force_oracle(const QuadraticProgram& qp) {
  if (qp.grid.size() > kMaxNodes) throw Error(ErrorCode::TooLarge, "oracle refuses more than 6 nodes");
  return Enumerator(qp, build_rows(qp)).run();
}

}  // namespace screenopt
