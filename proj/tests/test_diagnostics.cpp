#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "screenopt/diagnostics.hpp"
#include "screenopt/error.hpp"
#include "screenopt/perturbation.hpp"
#include "screenopt/solver.hpp"
#include "support.hpp"

using namespace screenopt;
using namespace screenopt::testing;

TEST_CASE("contracts of the uniform closed form: x = 2(theta-1), t = theta^2 - 1") {
  const ClosedForm1D cf = closed_form_1d(uniform_density(line_grid(11)));
  const ContractMenu m = extract_contracts(cf.field);
  CHECK_FALSE(m.participates[0]);
  CHECK(m.t[0] == 0.0);
  CHECK(m.x[0] == 0.0);
  for (std::size_t i = 1; i < 11; ++i) {
    const double theta = 1.0 + 0.1 * static_cast<double>(i);
    CHECK(m.participates[i]);
    CHECK(m.x[i] == doctest::Approx(2.0 * (theta - 1.0)));
    CHECK(m.t[i] == doctest::Approx(theta * theta - 1.0));
    CHECK(m.t[i] >= 0.0);
  }
  CHECK(m.t[10] == doctest::Approx(3.0));
}

TEST_CASE("zero field excludes everyone") {
  const ContractMenu m = extract_contracts(SurplusField(square_grid(4)));
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK_FALSE(m.participates[i]);
    CHECK(m.t[i] == 0.0);
  }
}

TEST_CASE("a positive aversion slope is flagged as a lottery") {
  const Grid g = joint_grid(3, 3);
  SurplusField w(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    w.v(i) = 0.5 * (g.alpha(i) + 1.0) + (g.coord(i, 0) - 1.0) + 0.1;
    w.p(i, 0) = 1.0;
    w.q(i) = 0.5;
  }
  const ContractMenu m = extract_contracts(w);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(m.y[i] == 0.5);
    CHECK(m.lottery(i));
  }
}

TEST_CASE("contracts need a feasible field") {
  SurplusField bad(line_grid(3));
  bad.p(0, 0) = 4.0;
  CHECK_THROWS_AS(extract_contracts(bad), Error);
}

TEST_CASE("envelope of the menu reproduces the surplus") {
  std::mt19937_64 rng(13);
  for (const Grid& g : {line_grid(15), square_grid(6), joint_grid(5, 4)}) {
    const SurplusField f = random_feasible_field(g, rng);
    const std::vector<double> env = envelope(extract_contracts(f, 1e-12));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(env[i] == doctest::Approx(f.v(i)).epsilon(1e-8).scale(1.0));
  }
  const SolveResult r = solve(assemble_classical(uniform_density(square_grid(7))));
  const std::vector<double> env = envelope(extract_contracts(r.field));
  for (std::size_t i = 0; i < r.field.size(); ++i) CHECK(std::abs(env[i] - r.field.v(i)) <= 1e-8);
}

TEST_CASE("exclusion region area fractions") {
  CHECK(exclusion_region(SurplusField(square_grid(5))).excluded_fraction == 1.0);
  const SegmentationMap m = exclusion_region(closed_form_1d(uniform_density(line_grid(21))).field);
  CHECK(m.count(Region::Excluded) == 1);
  CHECK(m.labels[0] == Region::Excluded);
  CHECK(m.excluded_fraction == 0.0);
  CHECK(m.screened_fraction == doctest::Approx(0.95));
}

TEST_CASE("exclusion area does not grow as the tolerance shrinks") {
  std::mt19937_64 rng(2);
  const SurplusField f = random_feasible_field(square_grid(9), rng);
  double previous = 2.0;
  for (double tol : {1.0, 0.3, 0.1, 1e-3, 1e-7}) {
    const SegmentationMap m = exclusion_region(f, tol);
    CHECK(m.excluded_fraction <= previous);
    CHECK(m.count(Region::Excluded) + m.count(Region::Screened) == f.size());
    previous = m.excluded_fraction;
  }
}

TEST_CASE("functions of theta1 + theta2 are bunched wherever positive") {
  const Grid g = square_grid(9);
  SurplusField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double s = std::max(0.0, g.coord(i, 0) + g.coord(i, 1) - 2.5);
    f.v(i) = s * s;
    f.p(i, 0) = f.p(i, 1) = 2.0 * s;
  }
  const SegmentationMap m = bunching_map(f);
  const std::size_t corner = g.size() - 1;  // its level line meets the square in one point
  CHECK(m.labels[corner] == Region::Screened);
  for (std::size_t i = 0; i < corner; ++i)
    CHECK(m.labels[i] == (f.v(i) > 1e-7 ? Region::Bunched : Region::Excluded));
}

TEST_CASE("strictly convex quadratics have no bunching") {
  const Grid g = square_grid(9);
  SurplusField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    f.v(i) = 0.5 * (g.coord(i, 0) * g.coord(i, 0) + g.coord(i, 1) * g.coord(i, 1));
    f.p(i, 0) = g.coord(i, 0);
    f.p(i, 1) = g.coord(i, 1);
  }
  const SegmentationMap m = bunching_map(f);
  CHECK(m.count(Region::Bunched) == 0);
  CHECK(m.screened_fraction == 1.0);
  CHECK_THROWS_AS(bunching_map(SurplusField(line_grid(4))), Error);
}

TEST_CASE("solved exponential instance shows excluded, bunched, screened bands along the diagonal") {
  const Grid g = square_grid(21);
  const SolveResult r = solve(assemble_classical(exponential_density(g, 1.0)));
  const SegmentationMap m = bunching_map(r.field);
  CHECK(m.count(Region::Excluded) > 0);
  CHECK(m.count(Region::Bunched) > 0);
  CHECK(m.count(Region::Screened) > 0);
  int stage = 0;
  for (int k = 0; k < 21; ++k) {
    const int idx[2] = {k, k};
    const int s = static_cast<int>(m.labels[g.flat_index(idx)]);
    CHECK(s >= stage);
    stage = s;
  }
  CHECK(stage == static_cast<int>(Region::Screened));
}

TEST_CASE("independence check on product and non-product densities") {
  const Grid ext = joint_grid(11, 6);
  const Density h = uniform_density(ext);
  const SolveResult re = solve(assemble_extended(h));
  const SolveResult rc = solve(assemble_classical(marginalize(h)));
  const IndependenceReport ok = independence_check(h, re.field, re.report.objective, rc.report.objective);
  CHECK(ok.product);
  CHECK(ok.passed);

  const Grid fig = joint_grid(11, 11);
  const Density h1 = fig1_joint_density(0.5, fig).density;
  const IndependenceReport non = independence_check(h1, SurplusField(fig), 1.0, 0.0);
  CHECK_FALSE(non.product);
  CHECK(non.passed);
}

TEST_CASE("a density on the alpha = 0 layer gives the classical optimum") {
  const Grid ext = joint_grid(6, 3);
  std::vector<double> vals(ext.size(), 0.0);
  for (std::size_t i = 0; i < ext.size(); ++i)
    if (ext.alpha_index(i) == 2) vals[i] = 1.0;
  Density h(ext, vals);
  h.normalize();
  const SolveResult re = solve(assemble_extended(h));
  const SolveResult rc = solve(assemble_classical(marginalize(h)));
  CHECK(re.report.objective == doctest::Approx(rc.report.objective).epsilon(1e-7));
}

TEST_CASE("minimal participating aversion slope") {
  const Grid g = joint_grid(4, 4);
  SurplusField w(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    w.v(i) = g.coord(i, 0);
    w.p(i, 0) = 1.0;
  }
  CHECK(min_y_property(w).passed);

  for (std::size_t i = 0; i < g.size(); ++i) {
    w.v(i) += 0.5 * (g.alpha(i) + 1.0);
    w.q(i) = 0.5;
  }
  const MinYReport r = min_y_property(w);
  CHECK_FALSE(r.passed);
  CHECK(r.min_q == 0.5);
  CHECK(shift_identity_check(w, uniform_density(g), 0.5) == doctest::Approx(0.5));
}

TEST_CASE("solved fig1 extended instance has a participant with q = 0") {
  const Density h = fig1_joint_density(0.5, joint_grid(11, 11)).density;
  const SolveResult r = solve(assemble_extended(h));
  CHECK(min_y_property(r.field).min_q <= 1e-6);
}

TEST_CASE("contract and segmentation CSV headers") {
  const SurplusField f = closed_form_1d(uniform_density(line_grid(3))).field;
  std::ostringstream c, s;
  write_contracts_csv(c, extract_contracts(f));
  write_segmentation_csv(s, exclusion_region(f));
  CHECK(c.str().rfind("theta0,alpha,x0,y,t,participates\n1,0,0,0,0,0\n", 0) == 0);
  CHECK(s.str().rfind("theta0,label\n1,excluded\n1.5,screened\n", 0) == 0);
}
