#pragma once

#include "balayage/fields.hpp"

#include <cstdint>
#include <vector>

namespace balayage {

struct MassReport {
  double mu_mass = 0.0;   // mu(O)
  double eta_mass = 0.0;  // eta(O)
  double leakage = 0.0;   // mu(O) - eta(O), mass swept through the container boundary
};

/// Partial balayage eta of mu onto nu in O, with the deficiency potential
/// w = G_O mu - G_O eta and the saturated set S = {w > threshold}.
struct BalayageResult {
  MeasureDensity eta;
  ScalarField deficiency;
  std::vector<std::uint8_t> saturated_mask;
  int saturated_components = 0;
  double threshold = 0.0;
  MassReport mass;
  double complementarity_residual = 0.0;
  int sweeps = 0;
  std::vector<double> mu_density;  // mu with atoms deposited, for structure checks
  std::vector<double> nu_density;
};

struct BalayageOptions {
  double omega = 1.7;
  double tolerance = 1e-8;  // max-norm complementarity residual
  int max_sweeps = 400000;
  int check_every = 20;
  double relative_threshold = 1e-7;
  /// Minimum atom depth below the container boundary, in cells.
  double atom_clearance_cells = 4.0;
};

/// Solves the complementarity problem
///   w >= 0,  -Delta_h w - (mu - nu) >= 0,  w (-Delta_h w - (mu - nu)) = 0,
/// with w = 0 outside O, by red-black projected SOR, then sets
/// eta = mu + Delta_h w. nu must be a bounded density without atoms.
BalayageResult partial_balayage(const GridDomainPtr& container, const MeasureDensity& mu, const MeasureDensity& nu,
                                BalayageOptions options = {});

/// Same, for deposited densities; mu may carry very large host-cell values.
BalayageResult partial_balayage(const GridDomainPtr& container, const std::vector<double>& mu_density,
                                const std::vector<double>& nu_density, BalayageOptions options = {});

struct SaturatedSet {
  std::vector<std::uint8_t> mask;
  int components = 0;
  std::size_t cells = 0;
};

/// Cells with w > threshold; a negative threshold selects 1e-7 * max(w).
SaturatedSet saturated_set(const BalayageResult& result, double threshold = -1.0);

/// Cellwise deviations from eta = nu|_S + mu|_{O \ S}. Unsaturated cells
/// within `halo` cells of S are excluded (the discrete free boundary).
struct StructureCheck {
  double saturated_deviation = 0.0;    // max |eta - nu| on S
  double unsaturated_deviation = 0.0;  // max |eta - mu| on O \ S away from the halo
  double cap_excess = 0.0;             // max (eta - nu), should be <= tol
  double min_deficiency = 0.0;         // min w, should be >= -tol
};
StructureCheck check_structure(const BalayageResult& result, int halo = 1);

/// Dilate a mask by `cells` face-steps.
std::vector<std::uint8_t> dilate(const GridShape& shape, const std::vector<std::uint8_t>& mask, int cells);

/// Outcome of sweeping N m|_Omega + b tau in O and checking the support against Omega0.
struct SupportControl {
  double b = 0.0;
  bool pass = false;
  int tested = 0;
  std::vector<double> tested_b;
  std::vector<std::uint8_t> tested_pass;
};

/// True if supp B(N m|_Omega + b tau) lies in Omega0 (masks on the container lattice).
bool support_within(const GridDomainPtr& container, const std::vector<std::uint8_t>& omega,
                    const MeasureDensity& tau, const std::vector<std::uint8_t>& omega0, double b,
                    BalayageOptions options = {});

/// Halves b from 1 until the support stays inside Omega0, then bisects
/// between the last failure and the first success. Reports the largest
/// passing b that was tested.
SupportControl support_control_test(const GridDomainPtr& container, const std::vector<std::uint8_t>& omega,
                                    const MeasureDensity& tau, const std::vector<std::uint8_t>& omega0,
                                    BalayageOptions options = {}, int max_halvings = 30, int refinements = 6);

}  // namespace balayage
