#include "balayage/poisson.hpp"

#include "balayage/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace balayage {

DirichletLaplacian::DirichletLaplacian(GridDomainPtr domain, double min_fraction) : domain_(std::move(domain)) {
  const GridDomain& dom = *domain_;
  const GridShape& s = dom.shape();
  const double h2 = s.h * s.h;
  off_ = -1.0 / h2;
  std::vector<std::ptrdiff_t> compact(s.size(), -1);
  for (std::size_t idx = 0; idx < s.size(); ++idx) {
    if (!dom.inside(idx)) continue;
    compact[idx] = static_cast<std::ptrdiff_t>(cells_.size());
    cells_.push_back(idx);
  }
  diag_.assign(cells_.size(), 0.0);
  nbr_.assign(cells_.size(), {-1, -1, -1, -1, -1, -1});
  for (std::size_t u = 0; u < cells_.size(); ++u) {
    const std::size_t idx = cells_[u];
    double d = 0.0;
    for (int a = 0; a < s.dim; ++a) {
      for (int side = 0; side < 2; ++side) {
        const int dir = side == 0 ? -1 : 1;
        if (!s.has_neighbor(idx, a, dir)) throw invalid_input("inside cell touches the lattice boundary");
        const auto nb = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + dir * s.stride(a));
        if (dom.inside(nb)) {
          nbr_[u][static_cast<std::size_t>(2 * a + side)] = compact[nb];
          d += 1.0 / h2;
        } else {
          const double li = dom.level(idx), lo = dom.level(nb);
          double theta = li / (li - lo);
          theta = std::clamp(theta, min_fraction, 1.0);
          d += 1.0 / (theta * h2);
        }
      }
    }
    diag_[u] = d;
  }
}

void DirichletLaplacian::apply(const std::vector<double>& x, std::vector<double>& y) const {
  y.resize(cells_.size());
  const int arms = 2 * domain_->dim();
  for (std::size_t u = 0; u < cells_.size(); ++u) {
    double acc = diag_[u] * x[u];
    const auto& nb = nbr_[u];
    for (int k = 0; k < arms; ++k)
      if (nb[static_cast<std::size_t>(k)] >= 0) acc += off_ * x[static_cast<std::size_t>(nb[static_cast<std::size_t>(k)])];
    y[u] = acc;
  }
}

std::vector<double> DirichletLaplacian::gather(const std::vector<double>& lattice) const {
  std::vector<double> c(cells_.size());
  for (std::size_t u = 0; u < cells_.size(); ++u) c[u] = lattice[cells_[u]];
  return c;
}

std::vector<double> DirichletLaplacian::scatter(const std::vector<double>& compact) const {
  std::vector<double> l(domain_->size(), 0.0);
  for (std::size_t u = 0; u < cells_.size(); ++u) l[cells_[u]] = compact[u];
  return l;
}

std::vector<double> DirichletLaplacian::apply_lattice(const std::vector<double>& field) const {
  std::vector<double> y;
  apply(gather(field), y);
  return scatter(y);
}

ScalarField solve_dirichlet_poisson(const GridDomainPtr& domain, const MeasureDensity& rhs, PoissonOptions options,
                                    PoissonReport* report) {
  if (rhs.carrier.get() != domain.get() && rhs.carrier->size() != domain->size())
    throw invalid_input("right-hand side is not carried on the solve domain");
  const double two_h = 2.0 * domain->h();
  for (const auto& atom : rhs.atoms) {
    const auto idx = domain->shape().locate(atom.location);
    if (!domain->inside(idx) || domain->level(idx) > -two_h + 0.5 * domain->h())
      throw invalid_input("atoms must be at least 2h from the boundary");
  }
  return solve_dirichlet_poisson(domain, rhs.deposited(), options, report);
}

ScalarField solve_dirichlet_poisson(const GridDomainPtr& domain, const std::vector<double>& rhs_density,
                                    PoissonOptions options, PoissonReport* report) {
  const DirichletLaplacian A(domain);
  const std::size_t n = A.unknowns();
  const std::vector<double> b = A.gather(rhs_density);
  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  std::vector<double> x(n, 0.0);
  PoissonReport rep;
  if (bnorm == 0.0) {
    if (report) *report = rep;
    return ScalarField(domain, A.scatter(x));
  }
  const int cap = options.max_iterations > 0 ? options.max_iterations : 50 * domain->shape().max_cells();
  std::vector<double> r = b, z(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / A.diagonal(i);
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
  double rnorm = bnorm;
  int it = 0;
  while (rnorm > options.relative_tolerance * bnorm) {
    if (it >= cap) {
      std::ostringstream msg;
      msg << "conjugate gradients did not converge in " << cap << " iterations (relative residual " << rnorm / bnorm
          << ")";
      throw non_convergence(msg.str());
    }
    A.apply(p, q);
    double pq = 0.0;
    for (std::size_t i = 0; i < n; ++i) pq += p[i] * q[i];
    const double alpha = rz / pq;
    rnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rnorm += r[i] * r[i];
    }
    rnorm = std::sqrt(rnorm);
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / A.diagonal(i);
    double rz_next = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz_next += r[i] * z[i];
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    ++it;
  }
  // Report the true residual rather than the recursively updated one.
  std::vector<double> ax;
  A.apply(x, ax);
  double true_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) true_res += (b[i] - ax[i]) * (b[i] - ax[i]);
  rep.iterations = it;
  rep.relative_residual = std::sqrt(true_res) / bnorm;
  if (report) *report = rep;
  return ScalarField(domain, A.scatter(x));
}

}  // namespace balayage
