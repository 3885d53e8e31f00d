#pragma once

#include "balayage/fields.hpp"

#include <array>
#include <vector>

namespace balayage {

/// The operator -Delta_h on the inside cells of a domain with zero Dirichlet
/// data. Arms that cross the boundary use a ghost value that places the zero
/// at the linearly interpolated level-set crossing, so the boundary sits at
/// its sub-cell location. The matrix stays symmetric and an M-matrix.
class DirichletLaplacian {
 public:
  explicit DirichletLaplacian(GridDomainPtr domain, double min_fraction = 1e-6);

  const GridDomain& domain() const { return *domain_; }
  std::size_t unknowns() const { return cells_.size(); }
  /// Lattice index of unknown u.
  std::size_t cell(std::size_t u) const { return cells_[u]; }
  double diagonal(std::size_t u) const { return diag_[u]; }
  /// Neighbor unknowns (axis-major, minus then plus); -1 where the arm crosses the boundary.
  const std::array<std::ptrdiff_t, 6>& neighbors(std::size_t u) const { return nbr_[u]; }
  double off_diagonal() const { return off_; }

  /// y = A x on compact vectors.
  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  /// A applied to a lattice field; exterior cells of the result are zero.
  std::vector<double> apply_lattice(const std::vector<double>& field) const;

  std::vector<double> gather(const std::vector<double>& lattice) const;
  std::vector<double> scatter(const std::vector<double>& compact) const;

 private:
  GridDomainPtr domain_;
  std::vector<std::size_t> cells_;
  std::vector<double> diag_;
  std::vector<std::array<std::ptrdiff_t, 6>> nbr_;
  double off_ = 0.0;  // -1/h^2, shared by every interior arm
};

struct PoissonOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 0;  // 0 selects 50 * (cells per axis)
};

struct PoissonReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solve -Delta_h w = rhs on O with w = 0 outside, by conjugate gradients with
/// a diagonal preconditioner. Atoms are deposited on their host cells.
/// Throws non_convergence when the iteration cap is reached.
ScalarField solve_dirichlet_poisson(const GridDomainPtr& domain, const MeasureDensity& rhs, PoissonOptions options = {},
                                    PoissonReport* report = nullptr);

/// Same, for an arbitrary (possibly signed) right-hand side density.
ScalarField solve_dirichlet_poisson(const GridDomainPtr& domain, const std::vector<double>& rhs_density,
                                    PoissonOptions options = {}, PoissonReport* report = nullptr);

}  // namespace balayage
