#include <doctest.h>

#include "balayage/error.hpp"
#include "balayage/fields.hpp"
#include "balayage/poisson.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace balayage;

namespace {

double max_error_vs_paraboloid(const GridDomainPtr& grid, int n) {
  const auto w = solve_dirichlet_poisson(grid, MeasureDensity::uniform(grid, n));
  double err = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (!grid->inside(i)) continue;
    const double r2 = grid->shape().center(i).squaredNorm();
    err = std::max(err, std::abs(w[i] - 0.5 * (1.0 - r2)));
  }
  return err;
}

std::size_t nearest_cell(const GridDomain& g, const Vec& x) { return g.shape().locate(x); }

}  // namespace

TEST_CASE("Poisson closed forms") {
  const auto disk = rasterize(DomainSpec::ball(2, Vec::Zero(), 1.0), 64);
  PoissonReport rep;
  const auto w = solve_dirichlet_poisson(disk, MeasureDensity::uniform(disk, 2.0), {}, &rep);
  CHECK(rep.relative_residual <= 1e-10);
  // (1 - r^2)/2 at the four cells around the origin
  const double h = disk->h();
  const double r2 = 0.5 * h * h;
  CHECK(std::abs(w[nearest_cell(*disk, Vec(0.1 * h, 0.1 * h, 0))] - 0.5 * (1.0 - r2)) < 1e-3);

  const auto zero = solve_dirichlet_poisson(disk, MeasureDensity::zeros(disk));
  for (double v : zero.values) CHECK(v == 0.0);

  const auto ball = rasterize(DomainSpec::ball(3, Vec::Zero(), 1.0), 32);
  const auto w3 = solve_dirichlet_poisson(ball, MeasureDensity::uniform(ball, 3.0));
  const double h3 = ball->h();
  CHECK(std::abs(w3[nearest_cell(*ball, Vec(0.1 * h3, 0.1 * h3, 0.1 * h3))] - (1.0 - 0.75 * h3 * h3) / 2.0) < 2e-3);
  for (std::size_t i = 0; i < ball->size(); ++i)
    if (!ball->inside(i)) CHECK(w3[i] == 0.0);
}

TEST_CASE("Poisson converges at second order on the disk") {
  const auto spec = DomainSpec::ball(2, Vec::Zero(), 1.0);
  const double e1 = max_error_vs_paraboloid(rasterize(spec, 32), 2);
  const double e2 = max_error_vs_paraboloid(rasterize(spec, 64), 2);
  const double e3 = max_error_vs_paraboloid(rasterize(spec, 128), 2);
  MESSAGE("errors " << e1 << " " << e2 << " " << e3);
  CHECK(std::log2(e1 / e2) >= 1.8);
  CHECK(std::log2(e2 / e3) >= 1.8);
}

TEST_CASE("Poisson maximum principle and linearity") {
  const auto grid = rasterize(DomainSpec::ellipsoid(2, Vec::Zero(), Vec(2.0, 1.0, 1.0)), 48);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(grid->size(), 0.0), b(grid->size(), 0.0), c(grid->size(), 0.0);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (!grid->inside(i)) continue;
    a[i] = u(rng);
    b[i] = u(rng) * u(rng);
    c[i] = 2.0 * a[i] - 3.0 * b[i];
  }
  const auto wa = solve_dirichlet_poisson(grid, MeasureDensity(grid, a));
  const auto wb = solve_dirichlet_poisson(grid, MeasureDensity(grid, b));
  const auto wc = solve_dirichlet_poisson(grid, c);
  double scale = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    CHECK(wa[i] >= 0.0);
    scale = std::max(scale, std::abs(wc[i]));
  }
  for (std::size_t i = 0; i < grid->size(); ++i) CHECK(std::abs(wc[i] - (2.0 * wa[i] - 3.0 * wb[i])) <= 1e-8 * scale);

  // An atom yields a nonnegative potential peaked at its host cell.
  const auto wd = solve_dirichlet_poisson(grid, MeasureDensity(grid, std::vector<double>(grid->size(), 0.0),
                                                               {{Vec(0.0, 0.1, 0.0), 0.5}}));
  CHECK(wd.min_inside() >= 0.0);
  CHECK(wd[nearest_cell(*grid, Vec(0.0, 0.1, 0.0))] == doctest::Approx(wd.max_inside()));
}

TEST_CASE("Poisson errors") {
  const auto disk = rasterize(DomainSpec::ball(2, Vec::Zero(), 1.0), 64);
  const MeasureDensity near_edge(disk, std::vector<double>(disk->size(), 0.0), {{Vec(0.99, 0.0, 0.0), 1.0}});
  CHECK_THROWS_AS(solve_dirichlet_poisson(disk, near_edge), Error);
  try {
    solve_dirichlet_poisson(disk, MeasureDensity::uniform(disk, 2.0), {1e-10, 2});
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::non_convergence);
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("gradient") {
  const auto grid = rasterize(DomainSpec::ball(2, Vec(0.1, 0.0, 0.0), 1.0), 40);
  std::vector<double> q(grid->size()), c(grid->size(), 3.5);
  for (std::size_t i = 0; i < grid->size(); ++i) q[i] = 0.5 * grid->shape().center(i).squaredNorm();
  const auto g = gradient(ScalarField(grid, q));
  const auto gc = gradient(ScalarField(grid, c));
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (!grid->inside(i)) continue;
    CHECK((g.values[i] - grid->shape().center(i)).norm() < 1e-10);
    CHECK(gc.values[i].norm() < 1e-12);
  }

  const auto spec = DomainSpec::ball(2, Vec::Zero(), 1.0);
  for (int res : {32, 64}) {
    const auto disk = rasterize(spec, res);
    const auto w = solve_dirichlet_poisson(disk, MeasureDensity::uniform(disk, 2.0));
    double worst = 0.0;
    for (const auto& s : boundary_samples(spec, 64)) worst = std::max(worst, std::abs(gradient_at(w, s.point).norm() - 1.0));
    MESSAGE("res " << res << " boundary gradient error " << worst);
    CHECK(worst <= 2.0 * disk->h());
  }

  // Quadratic fits are exact, also at the narrow tips of a flattened ellipsoid
  // where the nearest inside cells span few lattice planes.
  const auto flat = DomainSpec::ellipsoid(3, Vec::Zero(), Vec(1.0, 1.0, 2.0));
  const auto lattice = rasterize(flat, 32);
  std::vector<double> p(lattice->size());
  const auto quad = [](const Vec& x) { return 0.3 * x.x() * x.x() - 0.2 * x.x() * x.y() + 0.7 * x.z() * x.z() + x.y(); };
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = quad(lattice->shape().center(i));
  const ScalarField pf(lattice, p);
  for (const auto& s : boundary_samples(flat, 400)) {
    const Vec& x = s.point;
    const Vec exact(0.6 * x.x() - 0.2 * x.y(), -0.2 * x.x() + 1.0, 1.4 * x.z());
    CHECK((gradient_at(pf, x) - exact).norm() < 1e-9);
    CHECK(std::abs(value_at(pf, x) - quad(x)) < 1e-9);
  }
}

TEST_CASE("mollify") {
  const auto grid = rasterize(DomainSpec::ball(2, Vec::Zero(), 1.0), 64);
  const double h = grid->h();
  CHECK_THROWS_AS(mollify(MeasureDensity::uniform(grid, 1.0), 1.5 * h), Error);

  const auto flat = mollify(ScalarField(grid, std::vector<double>(grid->size(), 2.5)), 3.0 * h);
  for (double v : flat.values) CHECK(std::abs(v - 2.5) < 1e-12);

  const double eps = 4.0 * h;
  const MeasureDensity atom(grid, std::vector<double>(grid->size(), 0.0), {{Vec(0.013, -0.021, 0.0), 1.0}});
  const auto smeared = mollify(atom, eps);
  CHECK(std::abs(smeared.total_mass() - 1.0) < 1e-12);
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (smeared.density[i] > 0.0) CHECK((grid->shape().center(i) - Vec(0.013, -0.021, 0.0)).norm() <= eps + h);

  std::vector<double> bumpy(grid->size(), 0.0);
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (grid->inside(i) && grid->shape().center(i).norm() < 0.5) bumpy[i] = 1.0 + grid->shape().center(i).x();
  const MeasureDensity in(grid, bumpy);
  CHECK(std::abs(mollify(in, eps).total_mass() - in.total_mass()) < 1e-12 * in.total_mass());

  // ||x||^2 is convex: the mollification dominates it and stays subharmonic.
  std::vector<double> sq(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) sq[i] = grid->shape().center(i).squaredNorm();
  const auto msq = mollify(ScalarField(grid, sq), eps);
  const auto& s = grid->shape();
  const std::size_t origin = s.locate(Vec(0.1 * h, 0.1 * h, 0));
  CHECK(msq[origin] >= sq[origin]);
  const int guard = static_cast<int>(std::ceil(eps / h)) + 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = s.coords(i);
    if (c[0] <= guard || c[1] <= guard || c[0] >= s.cells[0] - 1 - guard || c[1] >= s.cells[1] - 1 - guard) continue;
    const double lap = msq[i - static_cast<std::size_t>(s.stride(0))] + msq[i + static_cast<std::size_t>(s.stride(0))] +
                       msq[i - 1] + msq[i + 1] - 4.0 * msq[i];
    CHECK(lap >= -1e-12);
  }
}

TEST_CASE("GFD1 round trip") {
  const auto grid = rasterize(DomainSpec::ball(3, Vec(0.5, 0.0, -0.25), 1.0), 16);
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.1 * static_cast<double>(i));
  std::stringstream buf;
  write_gfd(buf, grid->shape(), v);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "GFD1");
  CHECK(bytes.size() == 4 + 4 + 3 * 4 + 3 * 8 + 8 + 8 * v.size());
  CHECK(static_cast<unsigned char>(bytes[4]) == 3);  // little-endian dim
  const auto back = read_gfd(buf);
  CHECK(back.shape.dim == 3);
  CHECK(back.shape.cells == grid->shape().cells);
  CHECK(back.shape.h == grid->h());
  CHECK((back.shape.origin - grid->shape().origin).norm() == 0.0);
  CHECK(back.values == v);
}
