#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "screenopt/cone.hpp"
#include "screenopt/domain.hpp"

namespace screenopt::testing {

inline Grid line_grid(int n, double lo = 1.0, double hi = 2.0) {
  const int counts[1] = {n};
  return Grid::build(TypeDomain{{lo}, {hi}}, counts);
}

inline Grid square_grid(int n, double lo = 1.0, double hi = 2.0) {
  const int counts[2] = {n, n};
  return Grid::build(TypeDomain{{lo, lo}, {hi, hi}}, counts);
}

inline Grid joint_grid(int nt, int na, double kappa = 1.0, std::size_t dim = 1) {
  std::vector<int> counts(dim, nt);
  return Grid::build(TypeDomain{std::vector<double>(dim, 1.0), std::vector<double>(dim, 2.0)},
                     AversionDomain{kappa}, counts, na);
}

/// Nodal data of max(0, max_k (c_k + a_k.x)) with nonnegative slopes a_k: a
/// feasible field under full pairing.
inline SurplusField random_feasible_field(const Grid& g, std::mt19937_64& rng, int pieces = 6) {
  std::uniform_real_distribution<double> slope(0.0, 3.0), shift(-4.0, 1.0);
  const std::size_t d = g.dim();
  std::vector<std::vector<double>> a(static_cast<std::size_t>(pieces), std::vector<double>(d));
  std::vector<double> c(static_cast<std::size_t>(pieces));
  for (int k = 0; k < pieces; ++k) {
    for (std::size_t m = 0; m < d; ++m) a[k][m] = slope(rng);
    c[k] = shift(rng);
  }
  SurplusField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double best = 0.0;
    int arg = -1;
    for (int k = 0; k < pieces; ++k) {
      double t = c[k];
      for (std::size_t m = 0; m < d; ++m) t += a[k][m] * g.coord(i, m);
      if (t > best) {
        best = t;
        arg = k;
      }
    }
    f.v(i) = best;
    for (std::size_t m = 0; m < d; ++m) f.grad(i, m) = arg < 0 ? 0.0 : a[arg][m];
  }
  return f;
}

/// Arbitrary (generally infeasible) field with entries in [-1, 2].
inline SurplusField random_field(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  SurplusField f(g);
  for (double& x : f.data()) x = u(rng);
  return f;
}

}  // namespace screenopt::testing
