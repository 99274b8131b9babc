#include "screenopt/cone.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "screenopt/error.hpp"
#include "screenopt/parallel.hpp"

namespace screenopt {

SurplusField::SurplusField(Grid grid)
    : grid_(std::move(grid)), stride_(1 + grid_.dim()), data_(grid_.size() * stride_, 0.0) {}

double SurplusField::tangent(std::size_t i, std::size_t j) const {
  const auto xi = grid_.node(i);
  const auto xj = grid_.node(j);
  const double* gi = data_.data() + i * stride_ + 1;
  double t = data_[i * stride_];
  for (std::size_t k = 0; k + 1 < stride_; ++k) t += gi[k] * (xj[k] - xi[k]);
  return t;
}

ConstraintSet::ConstraintSet(Grid grid, Pairing pairing,
                             std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs,
                             std::optional<double> q_max)
    : grid_(std::move(grid)), pairing_(pairing), pairs_(std::move(pairs)), q_max_(q_max) {
  for (const auto& [i, j] : pairs_)
    if (i >= grid_.size() || j >= grid_.size() || i == j)
      throw Error(ErrorCode::InvalidArgument, "constraint pair references an invalid node");
}

std::size_t ConstraintSet::incentive_count() const {
  const std::size_t n = grid_.size();
  return pairing_ == Pairing::Full ? n * (n - 1) : pairs_.size();
}

std::size_t ConstraintSet::sign_count() const {
  const std::size_t n = grid_.size();
  return n * (1 + grid_.dim()) + (q_max_ ? n : 0);
}

double default_q_max(const Grid& grid) {
  return 10.0 * std::max(grid.kappa(), grid.theta_domain().diameter());
}

ConstraintSet assemble_constraints(const Grid& grid, Pairing pairing, int k, std::optional<double> q_max) {
  if (grid.extended() && !q_max) q_max = default_q_max(grid);
  if (!grid.extended()) q_max.reset();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  if (pairing == Pairing::KNearest) {
    if (k < static_cast<int>(2 * grid.dim()))
      throw Error(ErrorCode::InvalidArgument, "k-nearest pairing needs k >= 2*dim");
    const std::size_t n = grid.size();
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);
    std::vector<std::pair<double, std::uint32_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = grid.node(i);
      for (std::size_t j = 0; j < n; ++j) {
        const auto xj = grid.node(j);
        double d2 = 0.0;
        for (std::size_t a = 0; a < grid.dim(); ++a) d2 += (xj[a] - xi[a]) * (xj[a] - xi[a]);
        dist[j] = {j == i ? std::numeric_limits<double>::infinity() : d2, static_cast<std::uint32_t>(j)};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
      for (std::size_t m = 0; m < kk; ++m) {
        pairs.emplace_back(static_cast<std::uint32_t>(i), dist[m].second);
        pairs.emplace_back(dist[m].second, static_cast<std::uint32_t>(i));
      }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  } else if (pairing == Pairing::Explicit) {
    throw Error(ErrorCode::InvalidArgument, "explicit pairings are built with the ConstraintSet constructor");
  }
  return ConstraintSet(grid, pairing, std::move(pairs), q_max);
}

namespace {

void keep_worst(std::vector<Violation>& worst, const Violation& v) {
  constexpr std::size_t kKeep = 10;
  auto worse = [](const Violation& a, const Violation& b) {
    if (a.amount != b.amount) return a.amount > b.amount;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  };
  if (worst.size() == kKeep && !worse(v, worst.back())) return;
  worst.insert(std::upper_bound(worst.begin(), worst.end(), v, worse), v);
  if (worst.size() > kKeep) worst.pop_back();
}

struct ScanResult {
  double max_violation = 0.0;
  std::vector<Violation> worst;
};

void record(ScanResult& r, std::int64_t i, std::int64_t j, double amount) {
  if (amount <= 0.0) return;
  r.max_violation = std::max(r.max_violation, amount);
  keep_worst(r.worst, Violation{i, j, amount});
}

}  // namespace

FeasibilityReport check_feasibility(const SurplusField& field, const ConstraintSet& cs, double tol) {
  if (!(field.grid() == cs.grid()))
    throw Error(ErrorCode::GridMismatch, "field and constraint set live on different grids");
  const std::size_t n = field.size();
  const std::size_t dim = field.grid().dim();

  std::vector<ScanResult> chunks(std::max(1u, worker_count()));
  // Sign and cap constraints.
  ScanResult signs;
  for (std::size_t i = 0; i < n; ++i) {
    double amount = std::max(0.0, -field.v(i));
    for (std::size_t k = 0; k < dim; ++k) amount = std::max(amount, -field.grad(i, k));
    if (cs.q_max()) amount = std::max(amount, field.q(i) - *cs.q_max());
    record(signs, static_cast<std::int64_t>(i), -1, amount);
  }

  if (cs.pairing() == Pairing::Full) {
    chunks.resize(n == 0 ? 1 : std::min<std::size_t>(chunks.size(), n));
    parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
      ScanResult& r = chunks[c];
      for (std::size_t i = b; i < e; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j)
            record(r, static_cast<std::int64_t>(i), static_cast<std::int64_t>(j),
                   field.tangent(i, j) - field.v(j));
    });
  } else {
    const auto& pairs = cs.pairs();
    chunks.resize(pairs.empty() ? 1 : std::min<std::size_t>(chunks.size(), pairs.size()));
    parallel_chunks(pairs.size(), [&](std::size_t c, std::size_t b, std::size_t e) {
      ScanResult& r = chunks[c];
      for (std::size_t m = b; m < e; ++m) {
        const auto [i, j] = pairs[m];
        record(r, i, j, field.tangent(i, j) - field.v(j));
      }
    });
  }

  FeasibilityReport rep;
  rep.checked = cs.incentive_count() + cs.sign_count();
  rep.max_violation = signs.max_violation;
  for (const auto& v : signs.worst) keep_worst(rep.worst, v);
  for (const auto& c : chunks) {
    rep.max_violation = std::max(rep.max_violation, c.max_violation);
    for (const auto& v : c.worst) keep_worst(rep.worst, v);
  }
  rep.feasible = rep.max_violation <= tol;
  return rep;
}

SurplusField repair(const SurplusField& field, const ConstraintSet& cs) {
  if (!(field.grid() == cs.grid()))
    throw Error(ErrorCode::GridMismatch, "field and constraint set live on different grids");
  const std::size_t n = field.size();
  const std::size_t dim = field.grid().dim();

  SurplusField clipped = field;
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) clipped.grad(i, k) = std::max(0.0, clipped.grad(i, k));
    if (cs.q_max()) clipped.q(i) = std::min(clipped.q(i), *cs.q_max());
    scale = std::max(scale, std::abs(clipped.v(i)));
  }
  const double tie = 1e-13 * scale;

  SurplusField out = clipped;
  parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      double best = 0.0;
      std::int64_t arg = -1;  // -1: the zero piece
      for (std::size_t i = 0; i < n; ++i) {
        const double t = clipped.tangent(i, j);
        if (t > best) {
          best = t;
          arg = static_cast<std::int64_t>(i);
        }
      }
      out.v(j) = best;
      if (clipped.v(j) >= best - tie && clipped.v(j) >= 0.0) continue;  // own piece active
      for (std::size_t k = 0; k < dim; ++k)
        out.grad(j, k) = arg < 0 ? 0.0 : clipped.grad(static_cast<std::size_t>(arg), k);
    }
  });
  return out;
}

SurplusField minimize_surplus(const SurplusField& field) {
  const std::size_t n = field.size();
  SurplusField out = field;
  for (std::size_t i = 0; i < n; ++i) out.v(i) = 0.0;
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(field.v(i)));
  const std::size_t max_passes = n + 2;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    double change = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double best = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (i != j) best = std::max(best, out.tangent(i, j));
      if (best > out.v(j)) {
        change = std::max(change, best - out.v(j));
        out.v(j) = best;
      }
    }
    if (change <= 1e-15 * scale) break;
  }
  return out;
}

SurplusField minimize_aversion_slopes(const SurplusField& field) {
  if (!field.extended()) return field;
  const Grid& g = field.grid();
  const std::size_t n = field.size();
  const std::size_t d = g.theta_dim();
  SurplusField out = field;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = g.node(i);
    double need = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double da = g.alpha(i) - g.alpha(j);
      if (!(da > 0.0)) continue;
      const auto xj = g.node(j);
      double t = field.v(i) - field.v(j);
      for (std::size_t k = 0; k < d; ++k) t += field.p(i, k) * (xj[k] - xi[k]);
      need = std::max(need, t / da);
    }
    out.q(i) = std::min(field.q(i), need);
  }
  return out;
}

void write_feasibility_csv(std::ostream& out, const FeasibilityReport& report) {
  out << "pair_i,pair_j,violation\n" << std::setprecision(17);
  for (const auto& v : report.worst) out << v.i << ',' << v.j << ',' << v.amount << '\n';
}

}  // namespace screenopt
