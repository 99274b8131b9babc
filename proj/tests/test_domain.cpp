#include <doctest.h>

#include <cmath>
#include <sstream>

#include "screenopt/domain.hpp"
#include "screenopt/error.hpp"

using namespace screenopt;

namespace {

Grid line(double lo, double hi, int n) {
  const int counts[1] = {n};
  return Grid::build(TypeDomain{{lo}, {hi}}, counts);
}

Grid joint(int nt, int na, double kappa = 1.0) {
  const int counts[1] = {nt};
  return Grid::build(TypeDomain{{1.0}, {2.0}}, AversionDomain{kappa}, counts, na);
}

// Node index of (theta, alpha) on a joint grid; the coordinates must be nodes.
std::size_t at(const Grid& g, double theta, double alpha) {
  const int idx[2] = {static_cast<int>(std::lround((theta - g.lo(0)) / g.spacing(0))),
                      static_cast<int>(std::lround((alpha - g.lo(1)) / g.spacing(1)))};
  return g.flat_index(idx);
}

}  // namespace

TEST_CASE("grid nodes include both endpoints") {
  const Grid g = line(1.0, 2.0, 3);
  REQUIRE(g.size() == 3);
  CHECK(g.coord(0, 0) == 1.0);
  CHECK(g.coord(1, 0) == 1.5);
  CHECK(g.coord(2, 0) == 2.0);
  CHECK(g.spacing(0) == 0.5);
}

TEST_CASE("2x2 grid has the four corners, last axis fastest") {
  const int n[2] = {2, 2};
  const Grid g = Grid::build(TypeDomain{{1.0, 1.0}, {2.0, 2.0}}, n);
  REQUIRE(g.size() == 4);
  CHECK(g.coord(1, 0) == 1.0);
  CHECK(g.coord(1, 1) == 2.0);
  CHECK(g.coord(2, 0) == 2.0);
  CHECK(g.coord(2, 1) == 1.0);
}

TEST_CASE("a single node per axis is rejected") {
  try {
    line(1.0, 2.0, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidResolution);
    CHECK(std::string(e.what()).find("invalid-resolution") != std::string::npos);
  }
}

TEST_CASE("extended grid splits indices as theta * n_alpha + alpha") {
  const Grid g = joint(5, 3, 2.0);
  CHECK(g.extended());
  CHECK(g.kappa() == 2.0);
  CHECK(g.alpha(0) == -2.0);
  CHECK(g.alpha(2) == 0.0);
  CHECK(g.theta_index(7) == 2);
  CHECK(g.alpha_index(7) == 1);
  CHECK(g.theta_grid() == line(1.0, 2.0, 5));
}

TEST_CASE("uniform density values are the inverse volume") {
  const Density unit = uniform_density(line(1.0, 2.0, 3));
  for (double v : unit.values()) CHECK(v == doctest::Approx(1.0));
  const Density wide = uniform_density(line(0.0, 2.0, 3));
  for (double v : wide.values()) CHECK(v == doctest::Approx(0.5));
  const Density h = uniform_density(joint(4, 5));
  for (double v : h.values()) CHECK(v == doctest::Approx(1.0));
  CHECK(h.is_normalized());
}

TEST_CASE("fig1 density takes 1/a and 1/(1-a) on its blocks") {
  const Grid g = joint(21, 41);
  const Fig1Density half = fig1_joint_density(0.5, g);
  CHECK(half.a == 0.5);
  CHECK(half.density.value(at(g, 1.2, -0.2)) == doctest::Approx(2.0));
  CHECK(half.density.value(at(g, 1.8, -0.8)) == doctest::Approx(2.0));
  CHECK(half.density.value(at(g, 1.8, -0.2)) == 0.0);

  const Fig1Density quarter = fig1_joint_density(0.25, g);
  CHECK(quarter.density.value(at(g, 1.2, -0.1)) == doctest::Approx(4.0));
  CHECK(quarter.density.value(at(g, 1.8, -0.6)) == doctest::Approx(4.0 / 3.0));
  CHECK(quarter.density.is_normalized());
}

TEST_CASE("fig1 density rejects grids without a line at theta = 3/2") {
  CHECK_THROWS_AS(fig1_joint_density(0.5, joint(20, 41)), Error);
}

TEST_CASE("fig1 snaps a to the nearest aversion node") {
  const Fig1Density d = fig1_joint_density(0.49, joint(21, 11));
  CHECK(d.a == doctest::Approx(0.5));
}

TEST_CASE("marginal of the fig1 density is uniform for several a") {
  for (double a : {0.1, 0.25, 0.5, 0.75}) {
    const Density f = marginalize(fig1_joint_density(a, joint(21, 41)).density);
    CHECK(f.is_normalized());
    for (double v : f.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("marginal of a product density is its type factor") {
  const Grid g = joint(11, 6);
  const Density h = exponential_density(g, 2.0);
  const Density f = marginalize(h);
  const Density f0 = exponential_density(g.theta_grid(), 2.0);
  for (std::size_t i = 0; i < f.values().size(); ++i) CHECK(f.value(i) == doctest::Approx(f0.value(i)));
}

TEST_CASE("marginal of a density on the alpha = 0 layer is its profile") {
  const Grid g = joint(11, 5);
  std::vector<double> vals(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.alpha_index(i) == 4) vals[i] = g.coord(i, 0);
  Density h(g, vals);
  h.normalize();
  const Density f = marginalize(h);
  const double scale = f.value(0) / 1.0;
  for (std::size_t t = 0; t < f.values().size(); ++t) CHECK(f.value(t) == doctest::Approx(scale * (1.0 + 0.1 * t)));
  CHECK(f.is_normalized());
}

TEST_CASE("cdf of the uniform density is theta - 1") {
  const Cdf F(uniform_density(line(1.0, 2.0, 11)));
  CHECK(F(1.0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(F(2.0) == doctest::Approx(1.0).epsilon(1e-10));
  for (double t : {1.13, 1.5, 1.77}) CHECK(F(t) == doctest::Approx(t - 1.0));
}

TEST_CASE("cdf is nondecreasing and spans [0,1]") {
  const Cdf F(exponential_density(line(0.0, 3.0, 31), 1.5));
  CHECK(F.values().front() == 0.0);
  CHECK(F.values().back() == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t i = 1; i < F.values().size(); ++i) CHECK(F.values()[i] >= F.values()[i - 1]);
}

TEST_CASE("cdf refuses joint densities") { CHECK_THROWS_AS(Cdf(uniform_density(joint(3, 3))), Error); }

TEST_CASE("density CSV round trip") {
  const Density h = fig1_joint_density(0.5, joint(5, 5)).density;
  std::stringstream s;
  write_density_csv(s, h);
  CHECK(s.str().rfind("axis0,axis1,value\n", 0) == 0);
  const Density back = read_density_csv(s, true);
  CHECK(back.grid() == h.grid());
  for (std::size_t i = 0; i < h.values().size(); ++i) CHECK(back.value(i) == h.value(i));
}

TEST_CASE("domains validate their bounds") {
  CHECK_THROWS_AS((TypeDomain{{2.0}, {1.0}}.validate()), Error);
  CHECK_THROWS_AS(AversionDomain{0.0}.validate(), Error);
  CHECK_THROWS_AS(CostSpec{-1.0}.validate(), Error);
}
