#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace screenopt {

/// Rectangular type domain, one [lo, hi] interval per axis.
struct TypeDomain {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  double volume() const;
  double diameter() const;
  void validate() const;
};

/// Aversion interval A = [-kappa, 0].
struct AversionDomain {
  double kappa = 1.0;

  void validate() const;
};

/// Quadratic production cost 0.5*|x|^2 + lambda*y.
struct CostSpec {
  double lambda = 0.0;

  void validate() const;
};

/// Regular node lattice over a TypeDomain, optionally extended by the aversion axis.
///
/// Nodes are enumerated lexicographically with the last axis running fastest.
/// In extended mode the aversion axis is the last one, so a node index splits
/// as `theta_index * n_alpha + alpha_index`.
class Grid {
 public:
  Grid() = default;

  static Grid build(const TypeDomain& domain, std::span<const int> n_per_axis);
  static Grid build(const TypeDomain& domain, const AversionDomain& aversion,
                    std::span<const int> n_theta, int n_alpha);

  std::size_t size() const { return size_; }
  /// Total number of axes (theta axes plus the aversion axis when extended).
  std::size_t dim() const { return lo_.size(); }
  std::size_t theta_dim() const { return extended_ ? dim() - 1 : dim(); }
  bool extended() const { return extended_; }

  double lo(std::size_t axis) const { return lo_[axis]; }
  double hi(std::size_t axis) const { return hi_[axis]; }
  int count(std::size_t axis) const { return n_[axis]; }
  double spacing(std::size_t axis) const { return h_[axis]; }
  const std::vector<int>& counts() const { return n_; }

  std::span<const double> node(std::size_t i) const {
    return {coords_.data() + i * dim(), dim()};
  }
  double coord(std::size_t i, std::size_t axis) const { return coords_[i * dim() + axis]; }
  /// Aversion coordinate of node i (0 for classical grids).
  double alpha(std::size_t i) const { return extended_ ? coord(i, dim() - 1) : 0.0; }
  double kappa() const { return extended_ ? -lo_.back() : 0.0; }

  std::vector<int> multi_index(std::size_t i) const;
  std::size_t flat_index(std::span<const int> idx) const;

  /// Tensor-product trapezoid weight of node i.
  double quadrature(std::size_t i) const { return quad_[i]; }
  const std::vector<double>& quadrature() const { return quad_; }

  /// The grid over theta axes only (identity for classical grids).
  Grid theta_grid() const;
  TypeDomain theta_domain() const;
  std::size_t theta_index(std::size_t i) const {
    return extended_ ? i / static_cast<std::size_t>(n_.back()) : i;
  }
  std::size_t alpha_index(std::size_t i) const {
    return extended_ ? i % static_cast<std::size_t>(n_.back()) : 0;
  }

  bool operator==(const Grid& other) const;

 private:
  void finalize();

  std::vector<double> lo_, hi_, h_;
  std::vector<int> n_;
  bool extended_ = false;
  std::size_t size_ = 0;
  std::vector<double> coords_;
  std::vector<double> quad_;
};

/// Nonnegative node values of a probability density together with its grid.
class Density {
 public:
  Density() = default;
  Density(Grid grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double value(std::size_t i) const { return values_[i]; }
  /// Quadrature-weighted mass of node i (density value times trapezoid weight).
  double mass(std::size_t i) const { return values_[i] * grid_.quadrature(i); }
  double total_mass() const;

  /// Rescale so the trapezoid integral is exactly one.
  void normalize();
  bool is_normalized(double tol = 1e-10) const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Node values obtained by averaging a piecewise-constant cell function onto the
/// nodes. `cell_value` receives the cell's lower and upper corners. The trapezoid
/// integral of the result equals the exact integral of the cell function.
Density density_from_cells(
    const Grid& grid,
    const std::function<double(std::span<const double>, std::span<const double>)>& cell_value,
    bool normalize = true);

Density uniform_density(const Grid& grid);

/// f proportional to exp(-rate * sum_k (theta_k - lo_k)), normalized on the grid.
/// On extended grids the aversion axis is uniform.
Density exponential_density(const Grid& grid, double rate);

struct Fig1Density {
  Density density;
  /// Kink location after snapping to the aversion lattice.
  double a = 0.0;
};

/// Joint density (1/a) on [1,3/2]x[-a,0] and 1/(1-a) on [3/2,2]x[-1,-a].
/// Requires the grid [1,2]x[-1,0] with a node at theta = 3/2; a is snapped to
/// the nearest aversion node.
Fig1Density fig1_joint_density(double a, const Grid& grid);

/// Integrate out the aversion axis with the trapezoid rule.
Density marginalize(const Density& joint);

/// Aversion-axis marginal g(alpha) of a joint density, as node values on the alpha axis.
std::vector<double> aversion_marginal(const Density& joint);

/// Tabulated primitive F of a 1D density.
class Cdf {
 public:
  explicit Cdf(const Density& f);

  double operator()(double theta) const;
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> values_;
};

inline Cdf cdf(const Density& f) { return Cdf(f); }

void write_density_csv(std::ostream& out, const Density& density);
/// Reads `axis0,...,axisK,value` rows. The lattice is reconstructed from the
/// distinct coordinates per axis; when `last_axis_is_aversion` the final axis
/// must end at 0 and becomes the aversion axis.
Density read_density_csv(std::istream& in, bool last_axis_is_aversion = false);

}  // namespace screenopt
