#include "screenopt/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "screenopt/error.hpp"

namespace screenopt {

namespace {

constexpr double kKinkTol = 1e-12;

// Bilinear interpolation of nodal values on a 2D classical grid; clamps to the domain.
double bilinear(const Grid& g, const std::vector<double>& values, double x, double y) {
  const double pos[2] = {x, y};
  int base[2];
  double frac[2];
  for (std::size_t k = 0; k < 2; ++k) {
    const double s = std::clamp((pos[k] - g.lo(k)) / g.spacing(k), 0.0, static_cast<double>(g.count(k) - 1));
    int b = static_cast<int>(std::floor(s));
    b = std::min(b, g.count(k) - 2);
    base[k] = b;
    frac[k] = s - b;
  }
  double out = 0.0;
  for (int dx = 0; dx < 2; ++dx)
    for (int dy = 0; dy < 2; ++dy) {
      const int idx[2] = {base[0] + dx, base[1] + dy};
      const double w = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]);
      if (w != 0.0) out += w * values[g.flat_index(idx)];
    }
  return out;
}

struct Side {
  double x0, y0, x1, y1;
};

Side side_of(const Rectangle& K, const std::vector<double>& e, double sign) {
  const double cx = K.center[0] + sign * K.half_length * e[0];
  const double cy = K.center[1] + sign * K.half_length * e[1];
  const double px = -e[1], py = e[0];
  return {cx - K.half_width * px, cy - K.half_width * py, cx + K.half_width * px, cy + K.half_width * py};
}

std::size_t side_samples(const Grid& g, const Rectangle& K) {
  const double h = std::min(g.spacing(0), g.spacing(1));
  return std::max<std::size_t>(33, static_cast<std::size_t>(std::ceil(16.0 * 2.0 * K.half_width / h)) + 1);
}

// Trapezoid rule along a segment for a callable of the point.
template <class Fn>
double line_integral(const Side& s, std::size_t samples, Fn&& fn) {
  const double len = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
  double acc = 0.0;
  for (std::size_t m = 0; m < samples; ++m) {
    const double t = static_cast<double>(m) / static_cast<double>(samples - 1);
    const double w = (m == 0 || m + 1 == samples) ? 0.5 : 1.0;
    acc += w * fn(s.x0 + t * (s.x1 - s.x0), s.y0 + t * (s.y1 - s.y0));
  }
  return acc * len / static_cast<double>(samples - 1);
}

template <class Fn>
bool all_along(const Side& s, std::size_t samples, Fn&& pred) {
  for (std::size_t m = 0; m < samples; ++m) {
    const double t = static_cast<double>(m) / static_cast<double>(samples - 1);
    if (!pred(s.x0 + t * (s.x1 - s.x0), s.y0 + t * (s.y1 - s.y0))) return false;
  }
  return true;
}

bool inside_domain(const Grid& g, const Rectangle& K, const std::vector<double>& e) {
  for (double sl : {-1.0, 1.0}) {
    const Side s = side_of(K, e, sl);
    for (const auto& [x, y] : {std::pair{s.x0, s.y0}, std::pair{s.x1, s.y1}})
      if (x < g.lo(0) - 1e-12 || x > g.hi(0) + 1e-12 || y < g.lo(1) - 1e-12 || y > g.hi(1) + 1e-12) return false;
  }
  return true;
}

struct FieldTables {
  std::vector<double> v, p0, p1, k, k2v;
};

FieldTables tables(const SurplusField& f) {
  FieldTables t;
  const KField kf = k_field(f);
  t.k = kf.k;
  t.k2v = kf.k_plus_2v;
  for (std::size_t i = 0; i < f.size(); ++i) {
    t.v.push_back(f.v(i));
    t.p0.push_back(f.p(i, 0));
    t.p1.push_back(f.p(i, 1));
  }
  return t;
}

bool minus_side_flat(const Grid& g, const FieldTables& t, const Side& s, std::size_t samples, double tol) {
  return all_along(s, samples, [&](double x, double y) {
    const double v = bilinear(g, t.v, x, y);
    const double p = std::hypot(bilinear(g, t.p0, x, y), bilinear(g, t.p1, x, y));
    return std::abs(v) <= tol && p <= tol;
  });
}

double integral_l(double a, double lo, double hi) {
  auto prim = [a](double x) { return 0.5 * std::pow(std::max(0.0, x + a), 2); };
  return prim(hi) - prim(lo);
}

double integral_m(double a, double lo, double hi) { return a * std::max(0.0, hi - std::max(lo, -a)); }

void require_2d(const SurplusField& f) {
  if (f.extended() || f.grid().dim() != 2) throw Error(ErrorCode::Dimension, "operation needs a 2D type field");
}

}  // namespace

void PerturbationSpec::validate(std::size_t theta_dim) const {
  if (!(a >= 0.0) || !(kappa > 0.0) || a >= kappa)
    throw Error(ErrorCode::InvalidArgument, "kink location must satisfy 0 <= a < kappa");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw Error(ErrorCode::InvalidArgument, "epsilon must be finite and nonnegative");
  if (!e.empty()) {
    if (e.size() != theta_dim) throw Error(ErrorCode::Dimension, "direction has the wrong dimension");
    double norm = 0.0;
    for (double c : e) {
      if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "direction components must be positive");
      norm += c * c;
    }
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "direction must be a unit vector");
  }
  if (!(s_lo < s_hi) || s_hi > 0.0) throw Error(ErrorCode::InvalidArgument, "aversion support must be [s_lo, s_hi] with s_hi <= 0");
}

std::vector<double> PerturbationSpec::direction(std::size_t theta_dim) const {
  if (!e.empty()) return e;
  return std::vector<double>(theta_dim, 1.0 / std::sqrt(static_cast<double>(theta_dim)));
}

double kink(double alpha, double a) {
  const double s = alpha + a;
  return s > kKinkTol ? s : 0.0;
}

double kink_slope(double alpha, double a, double at_kink) {
  const double s = alpha + a;
  if (std::abs(s) <= kKinkTol) return a > 0.0 ? at_kink : 0.0;
  return s > 0.0 ? 1.0 : 0.0;
}

FirstVariation1D first_variation_1d(const SurplusField& vbar, const Density& h, const PerturbationSpec& spec) {
  const Grid& tg = vbar.grid();
  if (tg.extended() || tg.dim() != 1) throw Error(ErrorCode::Dimension, "first variation needs a 1D type field");
  const Grid& g = h.grid();
  if (!g.extended() || !(g.theta_grid() == tg)) throw Error(ErrorCode::GridMismatch, "density does not extend the field's grid");
  spec.validate(1);
  const std::vector<double> hess = slope_hessian(vbar);
  const std::size_t na = static_cast<std::size_t>(g.count(1));

  FirstVariation1D out;
  if (spec.a == 0.0) return out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t t = i / na;
    const double theta = tg.coord(t, 0);
    const double slope = vbar.p(t, 0);
    const double alpha = g.alpha(i);
    const double base = (hess[t] * (theta - slope) - slope) * kink(alpha, spec.a);
    out.value += h.mass(i) * (base + alpha * slope * kink_slope(alpha, spec.a, 1.0));
    out.value_kink_zero += h.mass(i) * (base + alpha * slope * kink_slope(alpha, spec.a, 0.0));
  }
  return out;
}

double finite_difference_slope(const SurplusField& vbar, const Density& h, const PerturbationSpec& spec, double eps,
                               const CostSpec& cost) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  PerturbationSpec s = spec;
  s.epsilon = eps;
  const SurplusField w = lift(vbar, h.grid(), s);
  const double jr = assemble_extended(h, cost).evaluate(w);
  const double jd = assemble_classical(marginalize(h), cost).evaluate(vbar);
  return (jr - jd) / eps;
}

ProfitabilitySet profitability_set_1d(const SurplusField& vbar, const Density& f) {
  const Grid& g = vbar.grid();
  if (g.extended() || g.dim() != 1) throw Error(ErrorCode::Dimension, "profitability set needs a 1D type field");
  if (!(f.grid() == g)) throw Error(ErrorCode::GridMismatch, "density and field live on different grids");
  const std::vector<double> hess = slope_hessian(vbar);
  ProfitabilitySet out;
  out.expression.resize(g.size());
  out.mask.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double slope = vbar.p(i, 0);
    out.expression[i] = hess[i] * (g.coord(i, 0) - slope) - slope;
    out.mask[i] = out.expression[i] > 1e-12;
    if (out.mask[i]) out.mass += f.mass(i);
  }
  return out;
}

KField k_field(const SurplusField& vbar) {
  const Grid& g = vbar.grid();
  if (g.extended()) throw Error(ErrorCode::Dimension, "k field needs a field on the type domain");
  KField out;
  out.k.resize(g.size());
  out.k_plus_2v.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double k = vbar.v(i);
    for (std::size_t a = 0; a < g.dim(); ++a) k += vbar.p(i, a) * (0.5 * vbar.p(i, a) - g.coord(i, a));
    out.k[i] = k;
    out.k_plus_2v[i] = k + 2.0 * vbar.v(i);
  }
  return out;
}

std::optional<Rectangle> find_profitable_rectangle(const SurplusField& vbar, const std::vector<double>& e,
                                                   const RectangleSearch& opts) {
  require_2d(vbar);
  PerturbationSpec check;
  check.e = e;
  check.validate(2);
  const Grid& g = vbar.grid();
  const double margin = opts.margin > 0.0 ? opts.margin : 1e-6 * std::max(1.0, std::abs(opts.objective_scale));
  const FieldTables t = tables(vbar);
  const double il = integral_l(opts.a, opts.s_lo, opts.s_hi);
  const double h = std::min(g.spacing(0), g.spacing(1));

  auto zero = [&](std::size_t i) { return vbar.v(i) <= opts.zero_tol; };
  std::optional<Rectangle> best;
  double best_lb = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!zero(i)) continue;
    const std::vector<int> idx = g.multi_index(i);
    if (idx[0] == 0 || idx[1] == 0 || idx[0] + 1 >= g.count(0) || idx[1] + 1 >= g.count(1)) continue;
    const int next[2] = {idx[0] + 1, idx[1] + 1};
    if (zero(g.flat_index(next))) continue;  // not on the frontier along e

    const double bx = g.coord(i, 0), by = g.coord(i, 1);
    for (double dminus : {0.5 * h, h, 2.0 * h})
      for (double dplus : {0.5 * h, h, 1.5 * h, 2.0 * h, 3.0 * h, 4.0 * h})
        for (double width : {h, 2.0 * h, 3.0 * h, 4.0 * h}) {
          Rectangle K;
          K.center = {bx + 0.5 * (dplus - dminus) * e[0], by + 0.5 * (dplus - dminus) * e[1]};
          K.half_length = 0.5 * (dplus + dminus);
          K.half_width = width;
          if (!inside_domain(g, K, e)) continue;
          const std::size_t samples = side_samples(g, K);
          if (!minus_side_flat(g, t, side_of(K, e, -1.0), samples, 1e-8)) continue;
          const Side plus = side_of(K, e, 1.0);
          if (!all_along(plus, samples, [&](double x, double y) { return bilinear(g, t.k2v, x, y) < -margin; }))
            continue;
          const double lb = -il * line_integral(plus, samples, [&](double x, double y) { return bilinear(g, t.k2v, x, y); });
          if (lb > best_lb) {
            best_lb = lb;
            best = K;
          }
        }
  }
  return best;
}

FirstVariation2D first_variation_2d(const SurplusField& vbar, const PerturbationSpec& spec) {
  require_2d(vbar);
  spec.validate(2);
  if (!spec.K) throw Error(ErrorCode::InvalidRectangle, "no rectangle supplied");
  if (spec.s_lo < -0.5 * spec.a - 1e-12)
    throw Error(ErrorCode::InvalidArgument, "aversion support must lie in [-a/2, 0]");
  const Grid& g = vbar.grid();
  const Rectangle& K = *spec.K;
  const std::vector<double> e = spec.direction(2);
  if (K.center.size() != 2 || !(K.half_length > 0.0) || !(K.half_width > 0.0))
    throw Error(ErrorCode::InvalidRectangle, "rectangle needs a 2D center and positive extents");
  if (!inside_domain(g, K, e)) throw Error(ErrorCode::InvalidRectangle, "rectangle leaves the type domain");

  const FieldTables t = tables(vbar);
  const std::size_t samples = side_samples(g, K);
  const Side minus = side_of(K, e, -1.0), plus = side_of(K, e, 1.0);
  if (!minus_side_flat(g, t, minus, samples, 1e-8))
    throw Error(ErrorCode::InvalidRectangle, "v and its gradient must vanish on the minus side");

  FirstVariation2D out;
  auto k_at = [&](double x, double y) { return bilinear(g, t.k, x, y); };
  auto v_at = [&](double x, double y) { return bilinear(g, t.v, x, y); };
  out.plus_k = line_integral(plus, samples, k_at);
  out.plus_v = line_integral(plus, samples, v_at);
  out.minus_k = line_integral(minus, samples, k_at);
  out.minus_v = line_integral(minus, samples, v_at);
  out.integral_l = integral_l(spec.a, spec.s_lo, spec.s_hi);
  out.integral_m = integral_m(spec.a, spec.s_lo, spec.s_hi);
  out.exact = -out.integral_l * (out.plus_k - out.minus_k) - out.integral_m * (out.plus_v - out.minus_v);
  out.lower_bound = -out.integral_l * (out.plus_k + 2.0 * out.plus_v);
  return out;
}

CertificateDensity certificate_density(const Grid& extended, const Density& f, const Rectangle& K, const std::vector<double>& e,
                            double a, double s_lo, double s_hi) {
  if (!extended.extended() || extended.theta_dim() != 2)
    throw Error(ErrorCode::Dimension, "certificate density needs a 2D type grid extended by aversion");
  const Grid tg = extended.theta_grid();
  if (!(f.grid() == tg)) throw Error(ErrorCode::GridMismatch, "marginal lives on another grid");

  // Cell coverage of K by subsampling, averaged to nodes.
  constexpr int kSub = 16;
  const Density cover = density_from_cells(
      tg,
      [&](std::span<const double> lo, std::span<const double> hi) {
        int inside = 0;
        for (int i = 0; i < kSub; ++i)
          for (int j = 0; j < kSub; ++j) {
            const double x = lo[0] + (i + 0.5) * (hi[0] - lo[0]) / kSub - K.center[0];
            const double y = lo[1] + (j + 0.5) * (hi[1] - lo[1]) / kSub - K.center[1];
            const double along = x * e[0] + y * e[1];
            const double across = -x * e[1] + y * e[0];
            if (std::abs(along) <= K.half_length && std::abs(across) <= K.half_width) ++inside;
          }
        return static_cast<double>(inside) / (kSub * kSub);
      },
      false);

  // Interval coverage of S on the aversion axis, averaged to nodes.
  const std::size_t na = static_cast<std::size_t>(extended.count(2));
  const double ha = extended.spacing(2);
  const double alo = extended.lo(2);
  std::vector<double> cell(na - 1), is(na, 0.0), mass_w(na);
  for (std::size_t c = 0; c + 1 < na; ++c) {
    const double lo = alo + c * ha, hi = lo + ha;
    cell[c] = std::max(0.0, std::min(hi, s_hi) - std::max(lo, s_lo)) / ha;
  }
  for (std::size_t n = 0; n < na; ++n) {
    if (n == 0) is[n] = cell[0];
    else if (n + 1 == na) is[n] = cell[na - 2];
    else is[n] = 0.5 * (cell[n - 1] + cell[n]);
    mass_w[n] = (n == 0 || n + 1 == na) ? 0.5 * ha : ha;
  }

  std::vector<bool> completion(na, false);
  double ms = 0.0, mc = 0.0;
  for (std::size_t n = 0; n < na; ++n) {
    const double alpha = alo + n * ha;
    completion[n] = alpha < -a - kKinkTol;
    if (completion[n] && is[n] > 0.0)
      throw Error(ErrorCode::InvalidArgument, "aversion support overlaps the completion layers");
    if (completion[n]) mc += mass_w[n];
    ms += mass_w[n] * is[n];
  }
  if (!(mc > 0.0)) throw Error(ErrorCode::InvalidArgument, "no aversion node below -a for the completion");

  double gamma = 1.0;
  for (std::size_t t = 0; t < tg.size(); ++t)
    if (cover.value(t) > 0.0) gamma = std::min(gamma, f.value(t) / (cover.value(t) * ms));
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "marginal vanishes inside the rectangle");

  std::vector<double> values(extended.size(), 0.0);
  for (std::size_t t = 0; t < tg.size(); ++t) {
    const double rest = std::max(0.0, f.value(t) - gamma * cover.value(t) * ms);
    for (std::size_t n = 0; n < na; ++n)
      values[t * na + n] = completion[n] ? rest / mc : gamma * cover.value(t) * is[n];
  }
  return CertificateDensity{Density(extended, std::move(values)), gamma};
}

double shift_identity_check(const SurplusField& w, const Density& h, double eps, const CostSpec& cost) {
  if (!w.extended()) throw Error(ErrorCode::Dimension, "shift identity needs an extended field");
  if (!(h.grid() == w.grid())) throw Error(ErrorCode::GridMismatch, "density and field live on different grids");
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "shift must be nonnegative");
  double min_q = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i) min_q = std::min(min_q, w.q(i));
  if (eps > min_q) throw Error(ErrorCode::Infeasible, "shift exceeds the smallest aversion slope");

  const Grid& g = w.grid();
  const double kappa = g.kappa();
  SurplusField shifted = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    shifted.v(i) -= eps * (g.alpha(i) + kappa);
    shifted.q(i) -= eps;
  }
  const QuadraticProgram qp = assemble_extended(h, cost);
  return qp.evaluate(shifted) - qp.evaluate(w);
}

}  // namespace screenopt
