#pragma once

#include <optional>
#include <span>
#include <vector>

#include "screenopt/cone.hpp"
#include "screenopt/domain.hpp"
#include "screenopt/objective.hpp"

namespace screenopt {

/// Rectangle with one pair of sides orthogonal to the unit direction e.
/// The side at center + half_length*e is the "plus" side, the one at
/// center - half_length*e the "minus" side.
struct Rectangle {
  std::vector<double> center;
  double half_length = 0.0;  // along e
  double half_width = 0.0;   // along e-perp
};

struct PerturbationSpec {
  /// Kink location of l(alpha) = (alpha + a)_+.
  double a = 0.5;
  double kappa = 1.0;
  double epsilon = 0.0;
  /// Unit direction with positive components; 1D uses e = (1).
  std::vector<double> e;
  /// Aversion support [s_lo, s_hi] of the 2D certificate density.
  double s_lo = -0.25;
  double s_hi = 0.0;
  std::optional<Rectangle> K;

  void validate(std::size_t theta_dim) const;
  std::vector<double> direction(std::size_t theta_dim) const;
};

/// l(alpha) = (alpha + a)_+.
double kink(double alpha, double a);
/// l'(alpha); `at_kink` is the value used at alpha == -a.
double kink_slope(double alpha, double a, double at_kink = 1.0);

/// Convex extension of nodal data to all of R^d:
///   V(z) = max(0, max_i T_i(z)),  T_i(z) = v_i + p_i.D + c_i phi_i(|D|_{H_i}),  D = z - theta_i,
/// where H_i is a clipped central-difference Hessian of the stored slopes,
/// phi_i is the Huber function with radius rho_i (quadratic inside, linear
/// outside), c_i in [0,1] keeps slopes nonnegative within the reach, and rho_i
/// is the largest radius keeping T_i below the data at every node.
/// Reproduces convex quadratic data exactly.
class ConvexInterpolant {
 public:
  explicit ConvexInterpolant(const SurplusField& field, double reach = 0.0);

  /// Value and gradient at z (gradient written to `grad`).
  double evaluate(std::span<const double> z, std::span<double> grad) const;
  /// Hessian estimate at node i (row-major d x d).
  std::span<const double> hessian(std::size_t i) const { return {hess_.data() + i * d_ * d_, d_ * d_}; }
  double factor(std::size_t i) const { return c_[i]; }
  double radius(std::size_t i) const { return rho_[i]; }

 private:
  double piece(std::size_t i, std::span<const double> z, std::span<double> grad) const;

  SurplusField field_;
  std::size_t d_ = 0;
  std::vector<double> hess_;
  std::vector<double> c_;
  std::vector<double> rho_;
};

/// Central-difference estimate of the Hessian of a classical field from its
/// stored slopes, symmetrized; one-sided at the boundary. Row-major per node.
std::vector<double> slope_hessian(const SurplusField& field);

/// w_eps(theta, alpha) = V(theta + eps * l(alpha) * e) on the extended grid,
/// with V the convex interpolant of vbar. The theta part of `extended` must be
/// vbar's grid. Throws Infeasible when vbar fails the full-pairing check.
SurplusField lift(const SurplusField& vbar, const Grid& extended, const PerturbationSpec& spec);

struct FirstVariation1D {
  double value = 0.0;
  /// Same quadrature with l'(-a) = 0 at nodes sitting on the kink.
  double value_kink_zero = 0.0;
};

/// Trapezoid quadrature against h of
///   [(v''(theta - v') - v') l(alpha) + alpha v' l'(alpha)].
FirstVariation1D first_variation_1d(const SurplusField& vbar, const Density& h, const PerturbationSpec& spec);

/// (J_R(lift(vbar, eps)) - J_D(vbar)) / eps, with J_D on the theta marginal of h.
double finite_difference_slope(const SurplusField& vbar, const Density& h, const PerturbationSpec& spec,
                               double eps, const CostSpec& cost = {});

struct ProfitabilitySet {
  std::vector<double> expression;  // v''(theta - v') - v' per node
  std::vector<bool> mask;          // expression > 1e-12
  double mass = 0.0;               // f-mass of the mask
};

ProfitabilitySet profitability_set_1d(const SurplusField& vbar, const Density& f);

struct KField {
  std::vector<double> k;             // 0.5|p|^2 - theta.p + v
  std::vector<double> k_plus_2v;
};

KField k_field(const SurplusField& vbar);

struct RectangleSearch {
  /// Threshold below which v counts as zero.
  double zero_tol = 1e-8;
  /// k + 2v must be below -margin along the plus side; <= 0 selects 1e-6 * max(1, |J_D|).
  double margin = 0.0;
  /// Objective scale used for the default margin.
  double objective_scale = 1.0;
  /// Aversion support used to rank candidates by lower bound.
  double a = 0.5, s_lo = -0.25, s_hi = 0.0;
};

/// Deterministic sweep along e from the frontier nodes of {v <= zero_tol};
/// returns the candidate with the largest first-variation lower bound.
std::optional<Rectangle> find_profitable_rectangle(const SurplusField& vbar, const std::vector<double>& e,
                                                   const RectangleSearch& opts = {});

struct FirstVariation2D {
  double exact = 0.0;
  double lower_bound = 0.0;
  double integral_l = 0.0;       // int_S l
  double integral_m = 0.0;       // int_S (l - alpha l')
  double plus_k = 0.0, plus_v = 0.0, minus_k = 0.0, minus_v = 0.0;
};

/// Line integrals of k and v over the sides of K orthogonal to e, combined as
///   exact       = -I_l (k+ - k-) - I_m (v+ - v-)
///   lower_bound = -I_l int_{plus side} (k + 2v).
/// Throws InvalidRectangle when v or |p| exceeds 1e-8 on the minus side or K leaves the domain.
FirstVariation2D first_variation_2d(const SurplusField& vbar, const PerturbationSpec& spec);

struct CertificateDensity {
  Density density;
  /// gamma in h = gamma I_K I_S on the support; 1 unless f is too small to absorb |S|.
  double weight = 1.0;
};

/// Joint density gamma I_K(theta) I_S(alpha) on S, completed on [-kappa, lowest node
/// below -a] so that its trapezoid theta-marginal equals f exactly. Node values
/// of I_K and I_S are cell-averaged coverages.
CertificateDensity certificate_density(const Grid& extended, const Density& f, const Rectangle& K,
                            const std::vector<double>& e, double a, double s_lo, double s_hi);

/// J_R(w - eps(alpha + kappa)) - J_R(w); equals eps*kappa for normalized h and lambda = 0.
/// Throws Infeasible when eps exceeds min q.
double shift_identity_check(const SurplusField& w, const Density& h, double eps, const CostSpec& cost = {});

}  // namespace screenopt
