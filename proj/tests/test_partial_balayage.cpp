#include <doctest.h>

#include "balayage/error.hpp"
#include "balayage/partial_balayage.hpp"

#include <cmath>
#include <numbers>

using namespace balayage;
constexpr double pi = std::numbers::pi;

namespace {

// Radial two-point problem for the deficiency around an atom of mass alpha
// swept onto density nu in 2D: with q = r w'(r), q' = nu r and q(0+) = -alpha / (2 pi).
// The free boundary is where the flux q returns to zero; integrated by RK4 and
// located by bisection on the last step.
double radial_free_boundary(double alpha, double nu) {
  auto rhs = [nu](double r) { return nu * r; };
  const double dr = 1e-4;
  double r = 1e-8, q = -alpha / (2.0 * pi);
  while (true) {
    const double k1 = rhs(r), k2 = rhs(r + 0.5 * dr), k3 = k2, k4 = rhs(r + dr);
    const double qn = q + dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (qn >= 0.0) {
      double lo = 0.0, hi = dr;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double qm = q + 0.5 * nu * ((r + mid) * (r + mid) - r * r);
        (qm >= 0.0 ? hi : lo) = mid;
      }
      return r + 0.5 * (lo + hi);
    }
    q = qn;
    r += dr;
  }
}

GridDomainPtr big_disk() { return rasterize(DomainSpec::ball(2, Vec::Zero(), 4.0), 64); }

std::vector<std::uint8_t> mask_of(const GridDomain& g, const DomainSpec& spec) {
  std::vector<std::uint8_t> m(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = g.inside(i) && spec.contains(g.shape().center(i)) ? 1 : 0;
  return m;
}

std::vector<double> indicator_density(const GridDomain& g, const std::vector<std::uint8_t>& mask, double value) {
  std::vector<double> d(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = mask[i] ? value : 0.0;
  return d;
}

}  // namespace

TEST_CASE("balayage of nu onto itself is inactive") {
  const auto O = big_disk();
  const auto nu = MeasureDensity::uniform(O, 2.0);
  const auto res = partial_balayage(O, nu, nu);
  for (std::size_t i = 0; i < O->size(); ++i) {
    CHECK(res.deficiency[i] == 0.0);
    CHECK(res.eta.density[i] == doctest::Approx(nu.density[i]));
  }
  const auto s = saturated_set(res);
  CHECK(s.cells == 0);
  CHECK(s.components == 0);
}

TEST_CASE("radial sweep of a point mass") {
  const double rho = radial_free_boundary(2.0 * pi, 2.0);
  CHECK(std::abs(rho - 1.0) < 1e-6);

  const auto O = big_disk();
  const double h = O->h();
  const Vec x0 = O->shape().center(O->shape().locate(Vec::Zero()));
  const MeasureDensity mu(O, std::vector<double>(O->size(), 0.0), {{x0, 2.0 * pi}});
  const auto res = partial_balayage(O, mu, MeasureDensity::uniform(O, 2.0));
  CHECK(res.complementarity_residual <= 1e-8);
  CHECK(res.saturated_components == 1);
  CHECK(res.saturated_mask[O->shape().locate(x0)] == 1);

  double outer = 0.0, inner = 1e9;
  for (std::size_t i = 0; i < O->size(); ++i) {
    if (!O->inside(i)) continue;
    const double r = (O->shape().center(i) - x0).norm();
    if (res.saturated_mask[i]) {
      outer = std::max(outer, r);
      CHECK(res.eta.density[i] == doctest::Approx(2.0).epsilon(1e-6));
    } else {
      inner = std::min(inner, r);
    }
  }
  MESSAGE("saturated radius in [" << inner << ", " << outer << "], h = " << h);
  CHECK(std::abs(outer - rho) <= 2.0 * h);
  CHECK(std::abs(inner - rho) <= 2.0 * h);
  CHECK(std::abs(res.mass.eta_mass - 2.0 * pi) <= 1e-6 * 2.0 * pi);
}

TEST_CASE("structure, ordering and mass bookkeeping") {
  const auto O = big_disk();
  const double h = O->h();
  const auto nu = MeasureDensity::uniform(O, 2.0);
  const Vec x0(0.5, -0.3, 0.0);
  const double kappa = pi;
  const auto bump = mollify(MeasureDensity(O, std::vector<double>(O->size(), 0.0), {{x0, 0.5 * kappa}}), 4.0 * h);
  // nu restricted to the unit disk plus a bump; the excess spreads into the free region of O.
  const auto disk = mask_of(*O, DomainSpec::ball(2, Vec::Zero(), 1.0));
  std::vector<double> mu(O->size(), 0.0);
  for (std::size_t i = 0; i < O->size(); ++i) mu[i] = (disk[i] ? nu.density[i] : 0.0) + bump.density[i];
  const auto res = partial_balayage(O, MeasureDensity(O, mu), nu);

  CHECK(res.complementarity_residual <= 1e-8);
  CHECK(std::abs(res.mass.eta_mass - res.mass.mu_mass) <= 1e-6 * res.mass.mu_mass);
  CHECK(std::abs(res.mass.leakage) <= 1e-6 * res.mass.mu_mass);
  const auto sc = check_structure(res);
  CHECK(sc.cap_excess <= 1e-6);
  CHECK(sc.min_deficiency >= -1e-8);
  CHECK(sc.saturated_deviation <= 1e-6);
  CHECK(sc.unsaturated_deviation <= 1e-6);
  for (std::size_t i = 0; i < O->size(); ++i)
    if (!O->inside(i)) CHECK(res.deficiency[i] == 0.0);
}

TEST_CASE("an excess on a connected region saturates all of it") {
  const auto O = big_disk();
  const auto omega = mask_of(*O, DomainSpec::ball(2, Vec(-0.4, 0.2, 0), 1.0));
  std::vector<double> mu = indicator_density(*O, omega, 3.0);
  const auto res = partial_balayage(O, mu, MeasureDensity::uniform(O, 2.0).density);
  for (std::size_t i = 0; i < O->size(); ++i)
    if (omega[i]) CHECK(res.saturated_mask[i] == 1);
  CHECK(res.saturated_components == 1);
}

TEST_CASE("monotonicity in mu") {
  const auto O = big_disk();
  const double h = O->h();
  const auto omega = mask_of(*O, DomainSpec::ball(2, Vec::Zero(), 1.0));
  const std::vector<double> nu = MeasureDensity::uniform(O, 2.0).density;
  std::vector<double> mu = indicator_density(*O, omega, 2.5);
  const auto bump = mollify(MeasureDensity(O, std::vector<double>(O->size(), 0.0), {{Vec(0.7, 0.0, 0.0), 1.0}}), 4.0 * h);
  std::vector<double> mu1 = mu;
  for (std::size_t i = 0; i < O->size(); ++i) mu1[i] += bump.density[i];

  const auto a = partial_balayage(O, mu, nu);
  const auto b = partial_balayage(O, mu1, nu);
  const auto halo = dilate(O->shape(), b.saturated_mask, 1);
  for (std::size_t i = 0; i < O->size(); ++i) {
    CHECK(b.eta.density[i] >= a.eta.density[i] - 1e-6);
    if (a.saturated_mask[i]) CHECK(halo[i] == 1);
  }
}

TEST_CASE("input rejection") {
  const auto O = big_disk();
  const double h = O->h();
  const auto nu = MeasureDensity::uniform(O, 2.0);
  const MeasureDensity shallow(O, std::vector<double>(O->size(), 0.0), {{Vec(4.0 - 2.0 * h, 0.0, 0.0), 1.0}});
  try {
    partial_balayage(O, shallow, nu);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
  }
  const MeasureDensity atomic_nu(O, nu.density, {{Vec::Zero(), 1.0}});
  CHECK_THROWS_AS(partial_balayage(O, nu, atomic_nu), Error);

  const MeasureDensity heavy(O, std::vector<double>(O->size(), 0.0), {{Vec::Zero(), 1e3}});
  BalayageOptions few;
  few.max_sweeps = 20;
  try {
    partial_balayage(O, heavy, nu, few);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::non_convergence);
  }
}

TEST_CASE("support control") {
  const auto O = big_disk();
  const auto omega = mask_of(*O, DomainSpec::ball(2, Vec::Zero(), 1.0));
  const auto omega0 = mask_of(*O, DomainSpec::ball(2, Vec::Zero(), 1.5));

  const auto none = support_control_test(O, omega, MeasureDensity::zeros(O), omega0);
  CHECK(none.pass);
  CHECK(none.b == 1.0);

  const MeasureDensity tau(O, std::vector<double>(O->size(), 0.0), {{Vec::Zero(), 1.0}});
  const auto ctl = support_control_test(O, omega, tau, omega0);
  CHECK(ctl.pass);
  CHECK(ctl.b > 0.0);

  // b tau must fit into N m(Omega0 \ Omega) = 2 * pi * 1.25 ~ 7.85.
  CHECK_FALSE(support_within(O, omega, tau, omega0, 100.0));
}
