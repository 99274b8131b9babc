#include "screenopt/domain.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "screenopt/error.hpp"

namespace screenopt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidResolution: return "invalid-resolution";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Alignment: return "alignment";
    case ErrorCode::Dimension: return "dimension";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::InvalidRectangle: return "invalid-rectangle";
    case ErrorCode::TooLarge: return "too-large";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

double TypeDomain::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) v *= hi[k] - lo[k];
  return v;
}

double TypeDomain::diameter() const {
  double s = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) s += (hi[k] - lo[k]) * (hi[k] - lo[k]);
  return std::sqrt(s);
}

void TypeDomain::validate() const {
  if (lo.empty() || lo.size() != hi.size())
    throw Error(ErrorCode::InvalidArgument, "domain bounds must be nonempty and of equal length");
  for (std::size_t k = 0; k < dim(); ++k)
    if (!(lo[k] < hi[k]))
      throw Error(ErrorCode::InvalidArgument, "domain requires lo < hi on every axis");
}

void AversionDomain::validate() const {
  if (!(kappa > 0.0)) throw Error(ErrorCode::InvalidArgument, "kappa must be positive");
}

void CostSpec::validate() const {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
}

// ---------------------------------------------------------------------------
// Grid

Grid Grid::build(const TypeDomain& domain, std::span<const int> n_per_axis) {
  domain.validate();
  if (n_per_axis.size() != domain.dim())
    throw Error(ErrorCode::Dimension, "one resolution per axis is required");
  Grid g;
  g.lo_ = domain.lo;
  g.hi_ = domain.hi;
  g.n_.assign(n_per_axis.begin(), n_per_axis.end());
  g.finalize();
  return g;
}

Grid Grid::build(const TypeDomain& domain, const AversionDomain& aversion,
                 std::span<const int> n_theta, int n_alpha) {
  domain.validate();
  aversion.validate();
  if (n_theta.size() != domain.dim())
    throw Error(ErrorCode::Dimension, "one resolution per theta axis is required");
  Grid g;
  g.lo_ = domain.lo;
  g.hi_ = domain.hi;
  g.lo_.push_back(-aversion.kappa);
  g.hi_.push_back(0.0);
  g.n_.assign(n_theta.begin(), n_theta.end());
  g.n_.push_back(n_alpha);
  g.extended_ = true;
  g.finalize();
  return g;
}

void Grid::finalize() {
  for (int n : n_)
    if (n < 2) throw Error(ErrorCode::InvalidResolution, "each axis needs at least 2 nodes");
  const std::size_t d = dim();
  h_.resize(d);
  size_ = 1;
  for (std::size_t k = 0; k < d; ++k) {
    h_[k] = (hi_[k] - lo_[k]) / (n_[k] - 1);
    size_ *= static_cast<std::size_t>(n_[k]);
  }
  coords_.resize(size_ * d);
  quad_.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const auto idx = multi_index(i);
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      // Endpoints are assigned exactly so the lattice includes both bounds.
      double x;
      if (idx[k] == 0) x = lo_[k];
      else if (idx[k] == n_[k] - 1) x = hi_[k];
      else x = lo_[k] + idx[k] * h_[k];
      coords_[i * d + k] = x;
      const bool end = idx[k] == 0 || idx[k] == n_[k] - 1;
      w *= end ? 0.5 * h_[k] : h_[k];
    }
    quad_[i] = w;
  }
}

std::vector<int> Grid::multi_index(std::size_t i) const {
  std::vector<int> idx(dim());
  for (std::size_t k = dim(); k-- > 0;) {
    idx[k] = static_cast<int>(i % static_cast<std::size_t>(n_[k]));
    i /= static_cast<std::size_t>(n_[k]);
  }
  return idx;
}

std::size_t Grid::flat_index(std::span<const int> idx) const {
  std::size_t i = 0;
  for (std::size_t k = 0; k < dim(); ++k) i = i * static_cast<std::size_t>(n_[k]) + idx[k];
  return i;
}

Grid Grid::theta_grid() const {
  if (!extended_) return *this;
  return Grid::build(theta_domain(), std::span<const int>(n_.data(), n_.size() - 1));
}

TypeDomain Grid::theta_domain() const {
  const std::size_t d = theta_dim();
  return TypeDomain{std::vector<double>(lo_.begin(), lo_.begin() + d),
                    std::vector<double>(hi_.begin(), hi_.begin() + d)};
}

bool Grid::operator==(const Grid& other) const {
  return extended_ == other.extended_ && n_ == other.n_ && lo_ == other.lo_ && hi_ == other.hi_;
}

// ---------------------------------------------------------------------------
// Density

Density::Density(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw Error(ErrorCode::GridMismatch, "density needs one value per node");
  for (double v : values_)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::InvalidArgument, "density values must be finite and nonnegative");
}

double Density::total_mass() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += mass(i);
  return s;
}

void Density::normalize() {
  const double m = total_mass();
  if (!(m > 0.0)) throw Error(ErrorCode::InvalidArgument, "density has zero mass");
  for (double& v : values_) v /= m;
}

bool Density::is_normalized(double tol) const { return std::abs(total_mass() - 1.0) <= tol; }

Density density_from_cells(
    const Grid& grid,
    const std::function<double(std::span<const double>, std::span<const double>)>& cell_value,
    bool normalize) {
  const std::size_t d = grid.dim();
  std::vector<double> acc(grid.size(), 0.0);
  std::vector<int> cells(d);
  std::size_t ncells = 1;
  for (std::size_t k = 0; k < d; ++k) {
    cells[k] = grid.count(k) - 1;
    ncells *= static_cast<std::size_t>(cells[k]);
  }
  std::vector<int> cidx(d), corner(d);
  std::vector<double> lo(d), hi(d);
  const std::size_t ncorners = std::size_t{1} << d;
  for (std::size_t c = 0; c < ncells; ++c) {
    std::size_t rest = c;
    for (std::size_t k = d; k-- > 0;) {
      cidx[k] = static_cast<int>(rest % static_cast<std::size_t>(cells[k]));
      rest /= static_cast<std::size_t>(cells[k]);
    }
    corner.assign(cidx.begin(), cidx.end());
    const std::size_t base = grid.flat_index(corner);
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = grid.coord(base, k);
      corner[k] = cidx[k] + 1;
      hi[k] = grid.coord(grid.flat_index(corner), k);
      corner[k] = cidx[k];
    }
    const double val = cell_value(lo, hi);
    for (std::size_t m = 0; m < ncorners; ++m) {
      for (std::size_t k = 0; k < d; ++k) corner[k] = cidx[k] + static_cast<int>((m >> k) & 1u);
      acc[grid.flat_index(corner)] += val;
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.multi_index(i);
    double adjacent = 1.0;
    for (std::size_t k = 0; k < d; ++k)
      if (idx[k] != 0 && idx[k] != grid.count(k) - 1) adjacent *= 2.0;
    acc[i] /= adjacent;
  }
  Density out(grid, std::move(acc));
  if (normalize) out.normalize();
  return out;
}

Density uniform_density(const Grid& grid) {
  double volume = 1.0;
  for (std::size_t k = 0; k < grid.dim(); ++k) volume *= grid.hi(k) - grid.lo(k);
  return Density(grid, std::vector<double>(grid.size(), 1.0 / volume));
}

Density exponential_density(const Grid& grid, double rate) {
  if (!(rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "exponential rate must be >= 0");
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < grid.theta_dim(); ++k) s += grid.coord(i, k) - grid.lo(k);
    vals[i] = std::exp(-rate * s);
  }
  Density out(grid, std::move(vals));
  out.normalize();
  return out;
}

Fig1Density fig1_joint_density(double a, const Grid& grid) {
  if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::InvalidArgument, "fig1 requires a in (0,1)");
  if (!grid.extended() || grid.theta_dim() != 1)
    throw Error(ErrorCode::Dimension, "fig1 density lives on a 1D type axis times the aversion axis");
  if (grid.lo(0) != 1.0 || grid.hi(0) != 2.0 || grid.kappa() != 1.0)
    throw Error(ErrorCode::InvalidArgument, "fig1 density requires the grid [1,2]x[-1,0]");

  const double hth = grid.spacing(0);
  const double mid_steps = 0.5 / hth;
  if (std::abs(mid_steps - std::round(mid_steps)) > 1e-9)
    throw Error(ErrorCode::Alignment, "no grid line at theta = 3/2");

  const double hal = grid.spacing(1);
  const double k = std::round(a / hal);
  const double snapped = k * hal;
  if (std::abs(snapped - a) > 0.5 * hal + 1e-12 || !(snapped > 0.0 && snapped < 1.0))
    throw Error(ErrorCode::Alignment, "kink a cannot be snapped to an interior aversion node");

  const double inv_r1 = 1.0 / snapped;
  const double inv_r2 = 1.0 / (1.0 - snapped);
  auto cell = [&](std::span<const double> lo, std::span<const double> hi) {
    const double tc = 0.5 * (lo[0] + hi[0]);
    const double ac = 0.5 * (lo[1] + hi[1]);
    if (tc < 1.5 && ac > -snapped) return inv_r1;
    if (tc > 1.5 && ac < -snapped) return inv_r2;
    return 0.0;
  };
  return Fig1Density{density_from_cells(grid, cell, false), snapped};
}

Density marginalize(const Density& joint) {
  const Grid& g = joint.grid();
  if (!g.extended()) return joint;
  const Grid tg = g.theta_grid();
  const std::size_t na = static_cast<std::size_t>(g.count(g.dim() - 1));
  const double ha = g.spacing(g.dim() - 1);
  std::vector<double> vals(tg.size(), 0.0);
  for (std::size_t t = 0; t < tg.size(); ++t) {
    double s = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      const double w = (a == 0 || a == na - 1) ? 0.5 * ha : ha;
      s += w * joint.value(t * na + a);
    }
    vals[t] = s;
  }
  Density out(tg, std::move(vals));
  out.normalize();
  return out;
}

std::vector<double> aversion_marginal(const Density& joint) {
  const Grid& g = joint.grid();
  if (!g.extended()) throw Error(ErrorCode::Dimension, "aversion marginal needs an extended grid");
  const Grid tg = g.theta_grid();
  const std::size_t na = static_cast<std::size_t>(g.count(g.dim() - 1));
  std::vector<double> out(na, 0.0);
  for (std::size_t t = 0; t < tg.size(); ++t)
    for (std::size_t a = 0; a < na; ++a) out[a] += tg.quadrature(t) * joint.value(t * na + a);
  return out;
}

// ---------------------------------------------------------------------------
// Cdf

Cdf::Cdf(const Density& f) {
  const Grid& g = f.grid();
  if (g.dim() != 1) throw Error(ErrorCode::Dimension, "cdf requires a 1D density");
  const std::size_t n = g.size();
  nodes_.resize(n);
  values_.resize(n);
  const double h = g.spacing(0);
  values_[0] = 0.0;
  nodes_[0] = g.coord(0, 0);
  for (std::size_t i = 1; i < n; ++i) {
    nodes_[i] = g.coord(i, 0);
    values_[i] = values_[i - 1] + 0.5 * h * (f.value(i - 1) + f.value(i));
  }
}

double Cdf::operator()(double theta) const {
  if (theta <= nodes_.front()) return values_.front();
  if (theta >= nodes_.back()) return values_.back();
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), theta);
  const std::size_t j = static_cast<std::size_t>(it - nodes_.begin());
  const double t = (theta - nodes_[j - 1]) / (nodes_[j] - nodes_[j - 1]);
  return values_[j - 1] + t * (values_[j] - values_[j - 1]);
}

// ---------------------------------------------------------------------------
// CSV

void write_density_csv(std::ostream& out, const Density& density) {
  const Grid& g = density.grid();
  for (std::size_t k = 0; k < g.dim(); ++k) out << "axis" << k << ',';
  out << "value\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t k = 0; k < g.dim(); ++k) out << g.coord(i, k) << ',';
    out << density.value(i) << '\n';
  }
}

Density read_density_csv(std::istream& in, bool last_axis_is_aversion) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty density CSV");
  const std::size_t ncols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (ncols < 2) throw Error(ErrorCode::Io, "density CSV needs at least one axis column");
  const std::size_t d = ncols - 1;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != ncols) throw Error(ErrorCode::Io, "ragged density CSV row");
    rows.push_back(std::move(row));
  }
  std::vector<std::vector<double>> axes(d);
  for (std::size_t k = 0; k < d; ++k) {
    for (const auto& r : rows) axes[k].push_back(r[k]);
    std::sort(axes[k].begin(), axes[k].end());
    axes[k].erase(std::unique(axes[k].begin(), axes[k].end()), axes[k].end());
  }
  std::vector<int> n(d);
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) {
    n[k] = static_cast<int>(axes[k].size());
    total *= axes[k].size();
  }
  if (total != rows.size()) throw Error(ErrorCode::Io, "density CSV is not a full lattice");

  Grid grid;
  if (last_axis_is_aversion) {
    if (d < 2) throw Error(ErrorCode::Dimension, "extended density CSV needs a theta axis");
    if (axes.back().back() != 0.0) throw Error(ErrorCode::Io, "aversion axis must end at 0");
    TypeDomain dom;
    for (std::size_t k = 0; k + 1 < d; ++k) {
      dom.lo.push_back(axes[k].front());
      dom.hi.push_back(axes[k].back());
    }
    grid = Grid::build(dom, AversionDomain{-axes.back().front()},
                       std::span<const int>(n.data(), d - 1), n.back());
  } else {
    TypeDomain dom;
    for (std::size_t k = 0; k < d; ++k) {
      dom.lo.push_back(axes[k].front());
      dom.hi.push_back(axes[k].back());
    }
    grid = Grid::build(dom, n);
  }
  std::vector<double> vals(grid.size(), 0.0);
  std::vector<int> idx(d);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < d; ++k) {
      const auto it = std::lower_bound(axes[k].begin(), axes[k].end(), r[k]);
      idx[k] = static_cast<int>(it - axes[k].begin());
    }
    vals[grid.flat_index(idx)] = r[d];
  }
  return Density(std::move(grid), std::move(vals));
}

}  // namespace screenopt
