#include <doctest.h>

#include "balayage/error.hpp"
#include "balayage/proof_trace.hpp"

#include <cmath>
#include <numbers>

using namespace balayage;
using std::numbers::pi;

TEST_CASE("cap fractions match the cap formulas") {
  // Circular segment of height 1/2 and spherical cap pi t^2 (3 - t) / 3 with t = 1/2.
  CHECK(cap_fraction(2) == doctest::Approx((pi / 3 - std::sqrt(3.0) / 4) / pi).epsilon(1e-13));
  CHECK(cap_fraction(3) == doctest::Approx((pi * 0.25 * 2.5 / 3) / (4 * pi / 3)).epsilon(1e-13));
  CHECK(cap_fraction(2) == doctest::Approx(0.19550).epsilon(1e-4));
  CHECK(cap_fraction(3) == doctest::Approx(0.15625).epsilon(1e-12));
}

TEST_CASE("dilated volumes") {
  const double d = 0.1;
  CHECK(dilated_volume(DomainSpec::ball(3, Vec::Zero(), 1.0), d) == doctest::Approx(4 * pi / 3 * std::pow(1.1, 3)));
  CHECK(dilated_volume(DomainSpec::annulus(2, Vec::Zero(), 1.0, 2.0), d) == doctest::Approx(pi * (2.1 * 2.1 - 0.9 * 0.9)));
  // Ellipse with semi-axes (1/2, 1): area + perimeter d + pi d^2.
  const auto e = DomainSpec::ellipsoid(2, Vec::Zero(), Vec(2, 1, 1));
  CHECK(dilated_volume(e, d) == doctest::Approx(pi / 2 + surface_area(e) * d + pi * d * d).epsilon(1e-12));
  // The lattice path on a round ellipsoid reproduces the ball formula.
  const auto round = DomainSpec::ellipsoid(3, Vec::Zero(), Vec::Constant(1.0));
  CHECK(dilated_volume(round, d) == doctest::Approx(4 * pi / 3 * std::pow(1.1, 3)).epsilon(2e-3));
  // Two unit disks at distance 1: lens-shaped overlap, exact union area dilated by d.
  const auto u = DomainSpec::union_of_balls(2, {{Vec(-0.5, 0, 0), 1.0}, {Vec(0.5, 0, 0), 1.0}});
  const double R = 1.0 + d, c = 0.5;
  const double lens = 2 * R * R * std::acos(c / R) - 2 * c * std::sqrt(R * R - c * c);
  CHECK(dilated_volume(u, d) == doctest::Approx(2 * pi * R * R - lens).epsilon(2e-3));
  CHECK_THROWS_AS(dilated_volume(e, -1.0), Error);
}

TEST_CASE("balls short-circuit to r_D") {
  const auto t = proof_trace_upper_bound(DomainSpec::ball(2, Vec(0.3, -0.2, 0), 1.0));
  CHECK(t.short_circuited);
  CHECK(t.bound == doctest::Approx(t.r_D));
  CHECK(t.r_D > 1.0);
  CHECK(t.r_D <= 1.0 + t.delta + 1e-12);
  CHECK(t.volume_D - t.volume_omega < t.b_N * t.volume_omega);
}

TEST_CASE("ellipse trace brackets lambda1") {
  const auto spec = DomainSpec::ellipsoid(2, Vec::Zero(), Vec(2, 1, 1));
  const auto t = proof_trace_upper_bound(spec);
  CHECK_FALSE(t.short_circuited);
  CHECK(t.volume_D - t.volume_omega < t.b_N * t.volume_omega);
  CHECK(t.r_D <= t.r_omega + 0.05);
  CHECK(t.dual_gap <= 1e-9);
  CHECK(t.omega_in_S);
  CHECK(t.bound <= t.r_D + 5e-3);
  CHECK(t.bound >= 2.0 / 3.0 - 2e-2);
  CHECK(t.max_slope <= t.r_D + 1e-9);
  CHECK(t.complementarity_residual <= 1e-8);
  CHECK(t.container_clearance >= 4);
  // C - w_eps is the Green potential of mu: the Poisson solve agrees.
  CHECK(t.potential_mismatch <= 1e-6);
  // O contains R: sup of w_eps over R stays below the level C.
  CHECK(t.sup_region < t.level_C);
}

TEST_CASE("proof trace preconditions") {
  const auto spec = DomainSpec::ellipsoid(2, Vec::Zero(), Vec(2, 1, 1));
  ProofTraceOptions o;
  o.n_transport = 6000;
  CHECK_THROWS_AS(proof_trace_upper_bound(spec, o), Error);
  o = {};
  o.resolution = 8;
  CHECK_THROWS_AS(proof_trace_upper_bound(spec, o), Error);
  o = {};
  o.refinement = 2;
  CHECK_THROWS_AS(proof_trace_upper_bound(spec, o), Error);
  o = {};
  o.dilation_cells = 1.0;
  o.refinement = 1;
  CHECK_THROWS_AS(proof_trace_upper_bound(spec, o), Error);  // epsilon below 2h
}
