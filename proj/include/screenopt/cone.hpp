#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "screenopt/domain.hpp"

namespace screenopt {

/// Node values of a surplus function together with one subgradient per node.
///
/// The subgradient of node i has one component per grid axis: the theta
/// components are the good quality x = p, and in extended mode the last
/// component is the aversion derivative q (the undesirable quality y).
/// Storage is node-major, `[v_i, p_i..., q_i]`, which is also the unknown
/// layout used by the quadratic program.
class SurplusField {
 public:
  SurplusField() = default;
  explicit SurplusField(Grid grid);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  std::size_t stride() const { return stride_; }
  bool extended() const { return grid_.extended(); }

  double& v(std::size_t i) { return data_[i * stride_]; }
  double v(std::size_t i) const { return data_[i * stride_]; }
  double& grad(std::size_t i, std::size_t axis) { return data_[i * stride_ + 1 + axis]; }
  double grad(std::size_t i, std::size_t axis) const { return data_[i * stride_ + 1 + axis]; }
  std::span<const double> grad(std::size_t i) const {
    return {data_.data() + i * stride_ + 1, stride_ - 1};
  }
  double& p(std::size_t i, std::size_t k) { return grad(i, k); }
  double p(std::size_t i, std::size_t k) const { return grad(i, k); }
  /// Aversion derivative; only meaningful in extended mode.
  double& q(std::size_t i) { return data_[i * stride_ + stride_ - 1]; }
  double q(std::size_t i) const { return extended() ? data_[i * stride_ + stride_ - 1] : 0.0; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Value of the supporting affine piece of node i evaluated at node j.
  double tangent(std::size_t i, std::size_t j) const;

 private:
  Grid grid_;
  std::size_t stride_ = 0;
  std::vector<double> data_;
};

enum class Pairing { Full, KNearest, Explicit };

/// Discrete cone: for ordered node pairs (i, j),
///   v_j >= v_i + p_i.(theta_j - theta_i) [+ q_i (alpha_j - alpha_i)],
/// plus v, p, q >= 0 and the optional cap q <= q_max.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  ConstraintSet(Grid grid, Pairing pairing, std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs,
                std::optional<double> q_max);

  const Grid& grid() const { return grid_; }
  Pairing pairing() const { return pairing_; }
  std::optional<double> q_max() const { return q_max_; }
  /// Number of incentive (pairwise) inequalities.
  std::size_t incentive_count() const;
  /// Number of sign constraints (one per unknown) plus the cap rows.
  std::size_t sign_count() const;
  /// Explicit pair list; empty for full pairing, which is enumerated on the fly.
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs() const { return pairs_; }

  template <class Fn>
  void for_each_pair(Fn&& fn) const {
    if (pairing_ == Pairing::Full) {
      const std::size_t n = grid_.size();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) fn(i, j);
    } else {
      for (const auto& [i, j] : pairs_) fn(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }

 private:
  Grid grid_;
  Pairing pairing_ = Pairing::Full;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
  std::optional<double> q_max_;
};

/// Default aversion-slope cap: 10 * max(kappa, diam(Omega)).
double default_q_max(const Grid& grid);

/// Builds the pairwise cone. For k-nearest pairing every node is paired (in
/// both directions) with its k nearest neighbours; k must be at least 2*dim.
/// In extended mode q_max defaults to default_q_max(grid).
ConstraintSet assemble_constraints(const Grid& grid, Pairing pairing = Pairing::Full, int k = 0,
                                   std::optional<double> q_max = std::nullopt);

struct Violation {
  /// Node indices; j == -1 marks a sign or cap constraint on node i.
  std::int64_t i = 0;
  std::int64_t j = 0;
  double amount = 0.0;
};

struct FeasibilityReport {
  double max_violation = 0.0;
  bool feasible = true;
  std::size_t checked = 0;
  /// At most 10 worst violations, largest first.
  std::vector<Violation> worst;
};

FeasibilityReport check_feasibility(const SurplusField& field, const ConstraintSet& cs, double tol);

/// Replaces the field by the nodal values and active subgradients of the convex
/// function max(0, max_i tangent_i). Feasible under full pairing; returns
/// feasible inputs unchanged.
SurplusField repair(const SurplusField& field, const ConstraintSet& cs);

/// Least surplus compatible with the field's subgradients (longest-path
/// fixed point from zero). Requires subgradients of a convex function, e.g.
/// the output of repair.
SurplusField minimize_surplus(const SurplusField& field);

/// Lowers each aversion slope q_i to the smallest value its own incentive
/// inequalities allow. Never lowers the objective and keeps feasibility.
SurplusField minimize_aversion_slopes(const SurplusField& field);

void write_feasibility_csv(std::ostream& out, const FeasibilityReport& report);

}  // namespace screenopt
