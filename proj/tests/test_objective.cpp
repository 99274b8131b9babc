#include <doctest.h>

#include <cmath>
#include <random>

#include "screenopt/objective.hpp"
#include "screenopt/perturbation.hpp"
#include "screenopt/solver.hpp"
#include "support.hpp"

using namespace screenopt;
using namespace screenopt::testing;

TEST_CASE("zero field has zero objective") {
  CHECK(assemble_classical(uniform_density(line_grid(11))).evaluate(SurplusField(line_grid(11))) == 0.0);
  CHECK(assemble_extended(uniform_density(joint_grid(5, 4))).evaluate(SurplusField(joint_grid(5, 4))) == 0.0);
}

TEST_CASE("affine field theta - 1 has objective one half") {
  const Grid g = line_grid(7);
  SurplusField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    f.v(i) = g.coord(i, 0) - 1.0;
    f.p(i, 0) = 1.0;
  }
  CHECK(assemble_classical(uniform_density(g)).evaluate(f) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("closed-form uniform objective approaches 2/3") {
  double previous = 1.0;
  for (int n : {51, 101, 201, 401}) {
    const Density f = uniform_density(line_grid(n));
    const double err = std::abs(assemble_classical(f).evaluate(closed_form_1d(f).field) - 2.0 / 3.0);
    CHECK(err < previous);
    previous = err;
  }
  CHECK(previous <= 1e-3);
}

TEST_CASE("extended objective on the alpha = 0 layer equals the classical one") {
  const Grid g = joint_grid(11, 5);
  std::vector<double> vals(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.alpha_index(i) == 4) vals[i] = 1.0 + g.coord(i, 0);
  Density h(g, vals);
  h.normalize();
  const Density f = marginalize(h);

  std::mt19937_64 rng(2);
  const SurplusField v = random_feasible_field(g.theta_grid(), rng);
  SurplusField w(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t t = g.theta_index(i);
    w.v(i) = v.v(t);
    w.p(i, 0) = v.p(t, 0);
  }
  CHECK(assemble_extended(h).evaluate(w) == doctest::Approx(assemble_classical(f).evaluate(v)).epsilon(1e-13));
}

TEST_CASE("with q = 0 a product density reproduces the classical value") {
  const Grid g = joint_grid(9, 5);
  const Density h = exponential_density(g, 1.3);
  std::mt19937_64 rng(4);
  const SurplusField v = random_feasible_field(g.theta_grid(), rng);
  SurplusField w(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    w.v(i) = v.v(g.theta_index(i));
    w.p(i, 0) = v.p(g.theta_index(i), 0);
  }
  CHECK(assemble_extended(h).evaluate(w) == doctest::Approx(assemble_classical(marginalize(h)).evaluate(v)));
}

TEST_CASE("shifting by eps (alpha + kappa) gains exactly eps kappa") {
  std::mt19937_64 rng(9);
  const Grid g = joint_grid(5, 5, 2.0);
  const Density h = uniform_density(g);
  SurplusField w = random_feasible_field(g, rng);
  for (std::size_t i = 0; i < g.size(); ++i) {
    w.v(i) += 0.5 * (g.alpha(i) + 2.0);
    w.q(i) += 0.5;
  }
  REQUIRE(check_feasibility(w, assemble_constraints(g), 1e-12).feasible);
  CHECK(shift_identity_check(w, h, 0.25) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("lambda charges the aversion slope linearly") {
  const Grid g = joint_grid(5, 3);
  const Density h = uniform_density(g);
  SurplusField w(g);
  for (std::size_t i = 0; i < g.size(); ++i) w.q(i) = 1.0;
  const double j0 = assemble_extended(h).evaluate(w);
  const double j1 = assemble_extended(h, CostSpec{0.3}).evaluate(w);
  CHECK(j0 - j1 == doctest::Approx(0.3));
}

TEST_CASE("gradient has -f w in v and vanishes in p at p = theta") {
  const Grid g = line_grid(5);
  const Density f = exponential_density(g, 1.0);
  const QuadraticProgram qp = assemble_classical(f);
  SurplusField x(g);
  for (std::size_t i = 0; i < g.size(); ++i) x.p(i, 0) = g.coord(i, 0);
  const std::vector<double> grad = qp.gradient(x);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(grad[i * 2] == doctest::Approx(-f.mass(i)));
    CHECK(grad[i * 2 + 1] == doctest::Approx(0.0));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(17);
  for (const Grid& g : {square_grid(4), joint_grid(4, 4)}) {
    const QuadraticProgram qp = assemble(exponential_density(g, 0.7), CostSpec{0.2});
    const SurplusField x = random_field(g, rng);
    const std::vector<double> grad = qp.gradient(x);
    for (std::size_t k = 0; k < x.data().size(); ++k) {
      std::vector<double> up = x.data(), dn = x.data();
      const double h = 1e-5;
      up[k] += h;
      dn[k] -= h;
      const double fd = (qp.evaluate(up) - qp.evaluate(dn)) / (2.0 * h);
      CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
    }
  }
}

TEST_CASE("objective is concave along segments of feasible fields") {
  std::mt19937_64 rng(21);
  const Grid g = square_grid(4);
  const QuadraticProgram qp = assemble_classical(uniform_density(g));
  for (int t = 0; t < 50; ++t) {
    const SurplusField u = random_feasible_field(g, rng), v = random_feasible_field(g, rng);
    const double s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::vector<double> mix(u.data().size());
    for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = s * u.data()[k] + (1.0 - s) * v.data()[k];
    CHECK(qp.evaluate(mix) >= s * qp.evaluate(u) + (1.0 - s) * qp.evaluate(v) - 1e-12);
  }
}

TEST_CASE("assembly rejects a density from another space") {
  CHECK_THROWS(assemble_classical(uniform_density(joint_grid(3, 3))));
  CHECK_THROWS(assemble_extended(uniform_density(line_grid(3))));
  CHECK_THROWS(assemble_classical(uniform_density(line_grid(3)), {}, assemble_constraints(line_grid(4))));
}
