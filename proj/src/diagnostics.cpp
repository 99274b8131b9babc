#include "screenopt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "screenopt/error.hpp"

namespace screenopt {

namespace {

double max_surplus(const SurplusField& field) {
  double m = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) m = std::max(m, field.v(i));
  return m;
}

double default_participation_tol(const SurplusField& field) { return 1e-7 * std::max(1.0, max_surplus(field)); }

// Area fractions by counting cells whose corners all share a label.
void fill_fractions(SegmentationMap& map) {
  const Grid& g = map.grid;
  const std::size_t d = g.dim();
  std::vector<int> cells(d);
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) {
    cells[k] = g.count(k) - 1;
    total *= static_cast<std::size_t>(cells[k]);
  }
  std::size_t counts[3] = {0, 0, 0};
  std::vector<int> base(d), corner(d);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    for (std::size_t k = d; k-- > 0;) {
      base[k] = static_cast<int>(rem % static_cast<std::size_t>(cells[k]));
      rem /= static_cast<std::size_t>(cells[k]);
    }
    const Region first = map.labels[g.flat_index(base)];
    bool same = true;
    for (std::size_t mask = 1; mask < (std::size_t{1} << d) && same; ++mask) {
      for (std::size_t k = 0; k < d; ++k) corner[k] = base[k] + static_cast<int>((mask >> k) & 1u);
      same = map.labels[g.flat_index(corner)] == first;
    }
    if (same) ++counts[static_cast<int>(first)];
  }
  const double denom = static_cast<double>(total);
  map.excluded_fraction = static_cast<double>(counts[0]) / denom;
  map.bunched_fraction = static_cast<double>(counts[1]) / denom;
  map.screened_fraction = static_cast<double>(counts[2]) / denom;
}

}  // namespace

ContractMenu extract_contracts(const SurplusField& field, double participation_tol) {
  const Grid& g = field.grid();
  const ConstraintSet full = assemble_constraints(g);
  if (!check_feasibility(field, full, 1e-8).feasible)
    throw Error(ErrorCode::Infeasible, "contracts need a feasible surplus field");

  const std::size_t d = g.theta_dim();
  ContractMenu menu;
  menu.grid = g;
  menu.participation_tol = participation_tol > 0.0 ? participation_tol : default_participation_tol(field);
  menu.x.assign(g.size() * d, 0.0);
  menu.y.assign(g.size(), 0.0);
  menu.t.assign(g.size(), 0.0);
  menu.participates.assign(g.size(), false);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(field.v(i) > menu.participation_tol)) continue;
    menu.participates[i] = true;
    double t = g.alpha(i) * field.q(i) - field.v(i);
    for (std::size_t k = 0; k < d; ++k) {
      menu.x[i * d + k] = field.p(i, k);
      t += g.coord(i, k) * field.p(i, k);
    }
    menu.y[i] = field.q(i);
    menu.t[i] = t;
  }
  return menu;
}

std::vector<double> envelope(const ContractMenu& menu) {
  const Grid& g = menu.grid;
  const std::size_t d = g.theta_dim();
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!menu.participates[i]) continue;
      double u = g.alpha(j) * menu.y[i] - menu.t[i];
      for (std::size_t k = 0; k < d; ++k) u += g.coord(j, k) * menu.x[i * d + k];
      best = std::max(best, u);
    }
    out[j] = best;
  }
  return out;
}

const char* to_string(Region r) {
  switch (r) {
    case Region::Excluded: return "excluded";
    case Region::Bunched: return "bunched";
    case Region::Screened: return "screened";
  }
  return "unknown";
}

std::size_t SegmentationMap::count(Region r) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), r));
}

SegmentationMap exclusion_region(const SurplusField& field, double tol) {
  SegmentationMap map;
  map.grid = field.grid();
  map.labels.resize(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) map.labels[i] = field.v(i) <= tol ? Region::Excluded : Region::Screened;
  fill_fractions(map);
  return map;
}

SegmentationMap bunching_map(const SurplusField& field, const BunchingOptions& opts) {
  const Grid& g = field.grid();
  if (g.extended() || g.dim() != 2) throw Error(ErrorCode::Dimension, "bunching map needs a 2D type field");
  std::vector<double> e = opts.e.empty() ? std::vector<double>{1.0, 1.0} : opts.e;
  if (e.size() != 2) throw Error(ErrorCode::Dimension, "bunching direction must be 2D");
  const double radius = opts.radius > 0.0 ? opts.radius : 0.05 * std::min(g.spacing(0), g.spacing(1));

  // Lattice step closest to the direction orthogonal to e.
  const double ox = -e[1] / g.spacing(0), oy = e[0] / g.spacing(1);
  const double scale = std::max(std::abs(ox), std::abs(oy));
  const int sx = static_cast<int>(std::lround(ox / scale)), sy = static_cast<int>(std::lround(oy / scale));

  SegmentationMap map;
  map.grid = g;
  map.labels.assign(g.size(), Region::Screened);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (field.v(i) <= opts.tol) {
      map.labels[i] = Region::Excluded;
      continue;
    }
    const std::vector<int> idx = g.multi_index(i);
    for (int sign : {-1, 1}) {
      const int n[2] = {idx[0] + sign * sx, idx[1] + sign * sy};
      if (n[0] < 0 || n[1] < 0 || n[0] >= g.count(0) || n[1] >= g.count(1)) continue;
      const std::size_t j = g.flat_index(n);
      if (std::hypot(field.p(i, 0) - field.p(j, 0), field.p(i, 1) - field.p(j, 1)) <= radius) {
        map.labels[i] = Region::Bunched;
        break;
      }
    }
  }
  fill_fractions(map);
  return map;
}

IndependenceReport independence_check(const Density& h, const SurplusField& extended_field,
                                      double extended_objective, double classical_objective, double tol) {
  const Grid& g = h.grid();
  if (!g.extended()) throw Error(ErrorCode::Dimension, "independence check needs a joint density");
  if (!(extended_field.grid() == g)) throw Error(ErrorCode::GridMismatch, "field and density live on different grids");
  const Density f = marginalize(h);
  const std::vector<double> gm = aversion_marginal(h);

  IndependenceReport r;
  for (std::size_t i = 0; i < g.size(); ++i)
    r.distance = std::max(r.distance, std::abs(h.value(i) - f.value(g.theta_index(i)) * gm[g.alpha_index(i)]));
  r.product = r.distance <= 1e-10;
  for (std::size_t i = 0; i < g.size(); ++i) r.max_q = std::max(r.max_q, std::abs(extended_field.q(i)));
  r.objective_gap = std::abs(extended_objective - classical_objective);
  if (r.product) r.passed = r.max_q <= tol && r.objective_gap <= tol * std::max(1.0, std::abs(classical_objective));
  return r;
}

MinYReport min_y_property(const SurplusField& field, double tol, double participation_tol) {
  const double ptol = participation_tol > 0.0 ? participation_tol : default_participation_tol(field);
  MinYReport r;
  r.min_q = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!(field.v(i) > ptol)) continue;
    ++r.participants;
    r.min_q = std::min(r.min_q, field.q(i));
  }
  if (r.participants == 0) r.min_q = 0.0;
  r.passed = r.min_q <= tol;
  return r;
}

void write_contracts_csv(std::ostream& out, const ContractMenu& menu) {
  const Grid& g = menu.grid;
  const std::size_t d = g.theta_dim();
  for (std::size_t k = 0; k < d; ++k) out << "theta" << k << ',';
  out << "alpha,";
  for (std::size_t k = 0; k < d; ++k) out << 'x' << k << ',';
  out << "y,t,participates\n" << std::setprecision(17);
  for (std::size_t i = 0; i < menu.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) out << g.coord(i, k) << ',';
    out << g.alpha(i) << ',';
    for (std::size_t k = 0; k < d; ++k) out << menu.x[i * d + k] << ',';
    out << menu.y[i] << ',' << menu.t[i] << ',' << (menu.participates[i] ? 1 : 0) << '\n';
  }
}

void write_segmentation_csv(std::ostream& out, const SegmentationMap& map) {
  const Grid& g = map.grid;
  for (std::size_t k = 0; k < g.theta_dim(); ++k) out << "theta" << k << ',';
  if (g.extended()) out << "alpha,";
  out << "label\n" << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t k = 0; k < g.dim(); ++k) out << g.coord(i, k) << ',';
    out << to_string(map.labels[i]) << '\n';
  }
}

}  // namespace screenopt
