#include "balayage/partial_balayage.hpp"

#include "balayage/error.hpp"
#include "balayage/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace balayage {

BalayageResult partial_balayage(const GridDomainPtr& container, const MeasureDensity& mu, const MeasureDensity& nu,
                                BalayageOptions options) {
  if (!nu.atoms.empty()) throw invalid_input("nu must be a bounded density without atoms");
  if (mu.density.size() != container->size() || nu.density.size() != container->size())
    throw invalid_input("mu and nu must be carried on the container lattice");
  const double h = container->h();
  for (const auto& atom : mu.atoms) {
    const auto idx = container->shape().locate(atom.location);
    if (!container->inside(idx) || container->level(idx) > -options.atom_clearance_cells * h + 0.5 * h) {
      std::ostringstream msg;
      msg << "atom at (" << atom.location.x() << ", " << atom.location.y() << ", " << atom.location.z()
          << ") is closer than " << options.atom_clearance_cells << "h to the container boundary";
      throw invalid_input(msg.str());
    }
  }
  return partial_balayage(container, mu.deposited(), nu.density, options);
}

BalayageResult partial_balayage(const GridDomainPtr& container, const std::vector<double>& mu_density,
                                const std::vector<double>& nu_density, BalayageOptions options) {
  const DirichletLaplacian A(container);
  const std::size_t n = A.unknowns();
  const GridShape& s = container->shape();
  const std::vector<double> mu = A.gather(mu_density);
  const std::vector<double> nu = A.gather(nu_density);
  std::vector<double> f(n);
  for (std::size_t u = 0; u < n; ++u) f[u] = mu[u] - nu[u];

  // Red-black split: cells of one color only couple to the other color.
  std::vector<std::size_t> colors[2];
  for (std::size_t u = 0; u < n; ++u) {
    const auto c = s.coords(A.cell(u));
    colors[(c[0] + c[1] + c[2]) % 2].push_back(u);
  }
  const int arms = 2 * s.dim;
  const double off = A.off_diagonal();
  std::vector<double> w(n, 0.0);

  auto residual = [&]() {
    std::vector<double> aw;
    A.apply(w, aw);
    double worst = 0.0;
    for (std::size_t u = 0; u < n; ++u) worst = std::max(worst, std::abs(std::min(w[u], aw[u] - f[u])));
    return worst;
  };

  BalayageResult result;
  double res = residual();
  int sweeps = 0;
  while (res > options.tolerance) {
    if (sweeps >= options.max_sweeps) {
      std::ostringstream msg;
      msg << "projected SOR did not converge in " << sweeps << " sweeps (complementarity residual " << res << ")";
      throw non_convergence(msg.str());
    }
    for (int pass = 0; pass < options.check_every; ++pass) {
      for (const auto& color : colors) {
        for (std::size_t u : color) {
          const auto& nb = A.neighbors(u);
          double acc = f[u];
          for (int k = 0; k < arms; ++k) {
            const auto j = nb[static_cast<std::size_t>(k)];
            if (j >= 0) acc -= off * w[static_cast<std::size_t>(j)];
          }
          const double gs = acc / A.diagonal(u);
          w[u] = std::max(0.0, w[u] + options.omega * (gs - w[u]));
        }
      }
      ++sweeps;
    }
    res = residual();
  }
  result.sweeps = sweeps;
  result.complementarity_residual = res;

  std::vector<double> aw;
  A.apply(w, aw);
  std::vector<double> eta(n);
  for (std::size_t u = 0; u < n; ++u) eta[u] = mu[u] - aw[u];

  const double cell = s.cell_measure();
  std::vector<double> eta_lattice = A.scatter(eta);
  double mu_mass = 0.0, eta_mass = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    mu_mass += mu[u] * cell;
    eta_mass += eta[u] * cell;
  }
  // eta can dip below zero only at solver-tolerance level; the density type demands >= 0.
  for (double& v : eta_lattice) v = std::max(v, 0.0);
  result.eta = MeasureDensity(container, std::move(eta_lattice));
  result.deficiency = ScalarField(container, A.scatter(w));
  result.mass = {mu_mass, eta_mass, mu_mass - eta_mass};
  result.mu_density = A.scatter(mu);
  result.nu_density = A.scatter(nu);
  const double wmax = *std::max_element(w.begin(), w.end());
  result.threshold = options.relative_threshold * std::max(wmax, 0.0);
  const auto sat = saturated_set(result, result.threshold);
  result.saturated_mask = sat.mask;
  result.saturated_components = sat.components;
  return result;
}

SaturatedSet saturated_set(const BalayageResult& result, double threshold) {
  const auto& w = result.deficiency.values;
  if (threshold < 0.0) {
    double wmax = 0.0;
    for (double v : w) wmax = std::max(wmax, v);
    threshold = 1e-7 * wmax;
  }
  SaturatedSet out;
  out.mask.assign(w.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (result.deficiency.carrier->inside(i) && w[i] > threshold) {
      out.mask[i] = 1;
      ++out.cells;
    }
  }
  label_components(result.deficiency.carrier->shape(), out.mask, &out.components);
  return out;
}

std::vector<std::uint8_t> dilate(const GridShape& shape, const std::vector<std::uint8_t>& mask, int cells) {
  std::vector<std::uint8_t> cur = mask;
  for (int step = 0; step < cells; ++step) {
    std::vector<std::uint8_t> next = cur;
    for (std::size_t idx = 0; idx < shape.size(); ++idx) {
      if (!cur[idx]) continue;
      for (int a = 0; a < shape.dim; ++a)
        for (int dir : {-1, 1})
          if (shape.has_neighbor(idx, a, dir))
            next[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + dir * shape.stride(a))] = 1;
    }
    cur.swap(next);
  }
  return cur;
}

StructureCheck check_structure(const BalayageResult& result, int halo) {
  const GridDomain& dom = *result.deficiency.carrier;
  const auto near_s = dilate(dom.shape(), result.saturated_mask, halo);
  StructureCheck c;
  c.min_deficiency = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.inside(i)) continue;
    const double eta = result.eta.density[i];
    c.cap_excess = std::max(c.cap_excess, eta - result.nu_density[i]);
    c.min_deficiency = std::min(c.min_deficiency, result.deficiency.values[i]);
    if (result.saturated_mask[i]) {
      c.saturated_deviation = std::max(c.saturated_deviation, std::abs(eta - result.nu_density[i]));
    } else if (!near_s[i]) {
      c.unsaturated_deviation = std::max(c.unsaturated_deviation, std::abs(eta - result.mu_density[i]));
    }
  }
  return c;
}

bool support_within(const GridDomainPtr& container, const std::vector<std::uint8_t>& omega,
                    const MeasureDensity& tau, const std::vector<std::uint8_t>& omega0, double b,
                    BalayageOptions options) {
  const int n = container->dim();
  const std::vector<double> tau_density = tau.deposited();
  std::vector<double> mu(container->size(), 0.0), nu(container->size(), 0.0);
  for (std::size_t i = 0; i < container->size(); ++i) {
    if (!container->inside(i)) continue;
    nu[i] = n;
    mu[i] = (omega[i] ? static_cast<double>(n) : 0.0) + b * tau_density[i];
  }
  const auto result = partial_balayage(container, mu, nu, options);
  for (std::size_t i = 0; i < container->size(); ++i) {
    if (!container->inside(i)) continue;
    if (result.eta.density[i] > 1e-6 * n && !omega0[i]) return false;
  }
  return true;
}

SupportControl support_control_test(const GridDomainPtr& container, const std::vector<std::uint8_t>& omega,
                                    const MeasureDensity& tau, const std::vector<std::uint8_t>& omega0,
                                    BalayageOptions options, int max_halvings, int refinements) {
  SupportControl out;
  auto test = [&](double b) {
    const bool ok = support_within(container, omega, tau, omega0, b, options);
    out.tested_b.push_back(b);
    out.tested_pass.push_back(ok ? 1 : 0);
    ++out.tested;
    return ok;
  };
  double fail_b = -1.0;
  double b = 1.0;
  for (int k = 0; k <= max_halvings; ++k, b *= 0.5) {
    if (test(b)) {
      out.pass = true;
      out.b = b;
      break;
    }
    fail_b = b;
  }
  if (!out.pass) return out;
  if (fail_b > 0.0) {
    double lo = out.b, hi = fail_b;
    for (int r = 0; r < refinements; ++r) {
      const double mid = 0.5 * (lo + hi);
      if (test(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.b = lo;
  }
  return out;
}

}  // namespace balayage
