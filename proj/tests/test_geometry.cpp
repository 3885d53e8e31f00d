#include <doctest.h>

#include "balayage/error.hpp"
#include "balayage/geometry.hpp"
#include "balayage/grid_domain.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace balayage;
constexpr double pi = std::numbers::pi;

namespace {

// Gauss-Kummer series for the perimeter of an ellipse with semi-axes a, b.
double ellipse_perimeter_series(double a, double b) {
  const double hh = std::pow((a - b) / (a + b), 2);
  double sum = 1.0, coef = 1.0, hp = 1.0;
  for (int n = 1; n < 60; ++n) {
    coef *= (0.5 - (n - 1)) / n;  // binom(1/2, n)
    hp *= hh;
    sum += coef * coef * hp;
  }
  return pi * (a + b) * sum;
}

// Brute-force distance to an ellipse boundary by dense parameter sampling
// followed by golden-section refinement around the best sample.
double ellipse_distance_brute(double ax, double ay, const Vec& p) {
  auto dist = [&](double t) { return std::hypot(ax * std::cos(t) - p.x(), ay * std::sin(t) - p.y()); };
  double best_t = 0.0, best = dist(0.0);
  const int n = 20000;
  for (int k = 1; k < n; ++k) {
    const double t = 2.0 * pi * k / n;
    if (dist(t) < best) {
      best = dist(t);
      best_t = t;
    }
  }
  double lo = best_t - 2.0 * pi / n, hi = best_t + 2.0 * pi / n;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    if (dist(c) < dist(d)) {
      hi = d;
    } else {
      lo = c;
    }
  }
  return dist(0.5 * (lo + hi));
}

const DomainSpec unit_disk = DomainSpec::ball(2, Vec::Zero(), 1.0);
const DomainSpec ellipse = DomainSpec::ellipsoid(2, Vec::Zero(), Vec(2.0, 1.0, 1.0));  // 4x^2 + y^2 < 1
const DomainSpec annulus3 = DomainSpec::annulus(3, Vec::Zero(), 1.0, 2.0);

}  // namespace

TEST_CASE("rasterized unit disk area") {
  const auto grid = rasterize(unit_disk, 64);
  const double area = static_cast<double>(grid->inside_count()) * grid->h() * grid->h();
  CHECK(std::abs(area - pi) / pi < 0.02);
  CHECK(grid->face_clearance_cells() >= 2);
}

TEST_CASE("annulus rasterizes to one connected shell with one cavity") {
  const auto grid = rasterize(annulus3, 32);
  int inside_components = 0;
  label_components(grid->shape(), grid->inside_mask(), &inside_components);
  CHECK(inside_components == 1);
  std::vector<std::uint8_t> outside(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) outside[i] = grid->inside(i) ? 0 : 1;
  int outside_components = 0;
  label_components(grid->shape(), outside, &outside_components);
  CHECK(outside_components == 2);  // unbounded exterior plus the cavity
}

TEST_CASE("ellipse boundary samples lie on the analytic boundary") {
  for (const auto& s : boundary_samples(ellipse, 257)) {
    const double q = 4.0 * s.point.x() * s.point.x() + s.point.y() * s.point.y();
    CHECK(std::abs(q - 1.0) < 1e-12);
  }
}

TEST_CASE("closed-form volumes") {
  CHECK(volume(DomainSpec::ball(3, Vec::Zero(), 1.0)) == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-15));
  CHECK(volume(ellipse) == doctest::Approx(pi / 2.0).epsilon(1e-15));
  CHECK(volume(annulus3) == doctest::Approx(28.0 * pi / 3.0).epsilon(1e-15));
}

TEST_CASE("surface areas") {
  CHECK(surface_area(unit_disk) == doctest::Approx(2.0 * pi).epsilon(1e-15));
  CHECK(surface_area(annulus3) == doctest::Approx(20.0 * pi).epsilon(1e-15));

  const double series = ellipse_perimeter_series(0.5, 1.0);
  CHECK(std::abs(series - 4.84422) < 1e-5);
  CHECK(std::abs(surface_area(ellipse) - series) / series < 1e-8);

  // Oblate spheroid semi-axes (1, 1, 1/2), i.e. coefficients (1, 1, 2).
  const auto oblate = DomainSpec::ellipsoid(3, Vec::Zero(), Vec(1.0, 1.0, 2.0));
  const double e = std::sqrt(1.0 - 0.25);
  const double closed = 2.0 * pi * (1.0 + (1.0 - e * e) / e * std::atanh(e));
  CHECK(std::abs(surface_area(oblate) - closed) / closed < 1e-8);

  // Prolate spheroid semi-axes (1/2, 1/2, 1).
  const auto prolate = DomainSpec::ellipsoid(3, Vec::Zero(), Vec(2.0, 2.0, 1.0));
  const double ep = std::sqrt(1.0 - 0.25);
  const double closed_p = 2.0 * pi * 0.25 * (1.0 + 1.0 / (0.5 * ep) * std::asin(ep));
  CHECK(std::abs(surface_area(prolate) - closed_p) / closed_p < 1e-8);

  const auto two = DomainSpec::union_of_balls(2, {{Vec(-0.5, 0, 0), 1.0}, {Vec(0.5, 0, 0), 1.0}});
  CHECK_THROWS_AS(surface_area(two), Error);
}

TEST_CASE("equivalent radius") {
  CHECK(equivalent_radius(pi, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(equivalent_radius(pi / 2.0, 2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(equivalent_radius(28.0 * pi / 3.0, 3) == doctest::Approx(std::cbrt(7.0)).epsilon(1e-14));
  CHECK_THROWS_AS(equivalent_radius(0.0, 2), Error);
  for (int n : {2, 3})
    for (double r : {0.5, 1.0, 2.0})
      CHECK(std::abs(equivalent_radius(volume(DomainSpec::ball(n, Vec::Zero(), r)), n) - r) < 1e-12);
}

TEST_CASE("boundary sample orientation") {
  const auto four = boundary_samples(unit_disk, 4);
  REQUIRE(four.size() == 4);
  const double expected[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(four[static_cast<std::size_t>(k)].point.x() - expected[k][0]) < 1e-15);
    CHECK(std::abs(four[static_cast<std::size_t>(k)].point.y() - expected[k][1]) < 1e-15);
    CHECK((four[static_cast<std::size_t>(k)].normal - four[static_cast<std::size_t>(k)].point).norm() < 1e-15);
  }

  const auto ring = boundary_samples(DomainSpec::annulus(2, Vec::Zero(), 1.0, 2.0), 64);
  for (const auto& s : ring)
    if (s.component == 1) CHECK(s.normal.dot(s.point) < 0.0);

  const auto tip = boundary_samples(ellipse, 4).front();
  CHECK(std::abs(tip.point.x() - 0.5) < 1e-15);
  CHECK((tip.normal - Vec(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("normals point across the boundary") {
  const std::vector<DomainSpec> suite = {
      unit_disk, ellipse, annulus3, DomainSpec::ellipsoid(3, Vec(0.1, 0, 0), Vec(1.0, 1.0, 2.0)),
      DomainSpec::annulus(2, Vec(0.2, -0.1, 0), 1.0, 2.0)};
  for (const auto& spec : suite) {
    const double t = 0.5 * spec.extent() / 64.0;
    for (const auto& s : boundary_samples(spec, spec.dim() == 2 ? 128 : 400)) {
      CHECK(std::abs(s.normal.norm() - 1.0) < 1e-12);
      CHECK_FALSE(spec.contains(s.point + t * s.normal));
      CHECK(spec.contains(s.point - t * s.normal));
    }
  }
}

TEST_CASE("grid volume converges under refinement") {
  const std::vector<DomainSpec> suite = {unit_disk, ellipse, DomainSpec::annulus(2, Vec::Zero(), 1.0, 2.0),
                                         DomainSpec::ball(3, Vec::Zero(), 1.0), annulus3,
                                         DomainSpec::ellipsoid(3, Vec::Zero(), Vec(1.0, 1.0, 2.0))};
  // Mean relative error over the band [r, 1.5 r), which averages out lattice aliasing.
  auto band_error = [](const DomainSpec& spec, int r) {
    const double exact = volume(spec);
    double acc = 0.0;
    int m = 0;
    for (int q = r; q < r + r / 2; q += r / 8, ++m) acc += std::abs(volume(*rasterize(spec, q)) - exact) / exact;
    return acc / m;
  };
  // Aliasing makes single doublings uneven; over two doublings the error must drop at least fourfold.
  for (const auto& spec : suite) {
    const double coarse = band_error(spec, 16);
    double prev = coarse;
    for (int r : {32, 64}) {
      const double err = band_error(spec, r);
      CHECK(err < prev);
      CHECK(err <= 2.0 * spec.extent() / r);
      prev = err;
    }
    CHECK(prev <= 0.25 * coarse);
  }
}

TEST_CASE("indicator and signed distance agree") {
  const auto grid = rasterize(ellipse, 48);
  for (std::size_t i = 0; i < grid->size(); ++i) CHECK((grid->level(i) < 0.0) == grid->inside(i));
}

TEST_CASE("ellipsoid distance matches a brute-force foot-point search") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const Vec semi(0.5, 1.0, 0.0);
  for (int k = 0; k < 60; ++k) {
    const Vec p(u(rng), u(rng), 0.0);
    const double d = ellipsoid_distance(2, semi, p);
    CHECK(std::abs(d - ellipse_distance_brute(0.5, 1.0, p)) < 1e-10);
  }
  // Degenerate inside points on the minor axis.
  CHECK(std::abs(ellipsoid_distance(2, semi, Vec(0.0, 0.1, 0)) - ellipse_distance_brute(0.5, 1.0, Vec(0.0, 0.1, 0))) < 1e-10);
  CHECK(std::abs(ellipsoid_distance(2, semi, Vec(0.0, 0.0, 0)) - 0.5) < 1e-12);

  // 3D: foot point lies on the surface and the offset is normal to it.
  const Vec semi3(1.0, 0.8, 0.5);
  std::uniform_real_distribution<double> v(-1.6, 1.6);
  for (int k = 0; k < 60; ++k) {
    const Vec p(v(rng), v(rng), v(rng));
    Vec foot;
    const double d = ellipsoid_distance(3, semi3, p, &foot);
    const double q = std::pow(foot.x() / semi3.x(), 2) + std::pow(foot.y() / semi3.y(), 2) + std::pow(foot.z() / semi3.z(), 2);
    CHECK(std::abs(q - 1.0) < 1e-10);
    CHECK(std::abs((p - foot).norm() - d) < 1e-12);
    const Vec nrm(foot.x() / (semi3.x() * semi3.x()), foot.y() / (semi3.y() * semi3.y()), foot.z() / (semi3.z() * semi3.z()));
    if (d > 1e-6) CHECK((p - foot).normalized().cross(nrm.normalized()).norm() < 1e-8);
  }
}

TEST_CASE("rasterize preconditions") {
  CHECK_THROWS_AS(rasterize(unit_disk, 15), Error);
  // Gap 0.1 at h = 4/32 = 0.125 is thinner than 4h.
  CHECK_THROWS_AS(rasterize(DomainSpec::annulus(2, Vec::Zero(), 1.9, 2.0), 32), Error);
  const auto apart = DomainSpec::union_of_balls(2, {{Vec(-2, 0, 0), 0.5}, {Vec(2, 0, 0), 0.5}});
  CHECK_THROWS_AS(rasterize(apart, 64), Error);
  const auto tangent = DomainSpec::union_of_balls(2, {{Vec(-1, 0, 0), 1.0}, {Vec(1.0, 0, 0), 1.0}});
  CHECK_THROWS_AS(rasterize(tangent, 64), Error);
  const auto overlap = DomainSpec::union_of_balls(2, {{Vec(-0.6, 0, 0), 1.0}, {Vec(0.6, 0, 0), 1.0}});
  CHECK(rasterize(overlap, 64)->inside_count() > 0);
}

TEST_CASE("domain JSON") {
  const auto j = nlohmann::json::parse(R"({"kind": "ellipsoid", "dim": 3, "center": [0, 0, 0], "radii": [1, 1, 0.5]})");
  const auto spec = domain_from_json(j);
  CHECK(spec.axis_coefficients().z() == doctest::Approx(2.0));
  CHECK(domain_from_json(to_json(spec)).semi_axes().isApprox(spec.semi_axes()));
  const auto ring = domain_from_json(nlohmann::json::parse(R"({"kind": "annulus", "dim": 2, "r": 1, "R": 2})"));
  CHECK(ring.outer_radius() == 2.0);
  CHECK_THROWS_AS(domain_from_json(nlohmann::json::parse(R"({"kind": "ball", "dim": 2, "r": 1, "radius": 2})")), Error);
  CHECK_THROWS_AS(domain_from_json(nlohmann::json::parse(R"({"kind": "ball", "dim": 4, "r": 1})")), Error);
  CHECK_THROWS_AS(domain_from_json(nlohmann::json::parse(R"({"kind": "annulus", "dim": 2, "r": 2, "R": 1})")), Error);
  const auto u = domain_from_json(nlohmann::json::parse(
      R"({"kind": "union_of_balls", "dim": 2, "components": [{"center": [0, 0], "r": 1}, {"center": [1, 0], "r": 0.5}]})"));
  CHECK(u.components().size() == 2);
}
