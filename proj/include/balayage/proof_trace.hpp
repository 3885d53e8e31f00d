#pragma once

#include "balayage/partial_balayage.hpp"
#include "balayage/transport.hpp"

#include <cstdint>

namespace balayage {

/// m({y in B(0,1) : y_N >= 1/2}) / m(B(0,1)), by quadrature of the cap sections.
double cap_fraction(int dim);

/// m({x : dist(x, Omega) < delta}) for delta >= 0 (signed-distance dilation).
double dilated_volume(const DomainSpec& spec, double delta);

struct ProofTraceOptions {
  int resolution = 96;             // cells across the domain's largest extent
  int n_transport = 2000;
  std::uint64_t seed = 0;
  int refinement = 3;              // odd lattice refinement for the mollified extension
  double dilation_cells = 2.1;     // preferred dilation margin of D, in cells
  double cap_safety = 0.9;         // m(D \ Omega) < cap_safety b_N m(Omega)
  double region_fraction = 0.95;   // R = {dist < region_fraction delta}
  int container_clearance = 4;     // cells between O and the box faces
  BalayageOptions balayage;
};

struct ProofTrace {
  bool short_circuited = false;  // Omega is a ball: Delta v = N, bound = r_D
  double h = 0.0;
  double b_N = 0.0;
  double delta = 0.0;          // D = {dist(x, Omega) < delta}
  double delta_cap = 0.0;      // largest margin allowed by the cap constraint
  double delta_region = 0.0;   // R = {dist(x, Omega) < delta_region}
  double epsilon = 0.0;        // mollification radius, dist(Omega, complement of R) / 2
  double volume_omega = 0.0;
  double volume_D = 0.0;
  double r_omega = 0.0;
  double r_D = 0.0;
  int n = 0;
  double transport_cost = 0.0;
  double dual_gap = 0.0;
  double level_C = 0.0;             // O = {w_eps < C}
  double sup_region = 0.0;          // sup of w_eps over R
  double potential_mismatch = 0.0;  // max |G_O mu - (C - w_eps)| on O
  double max_slope = 0.0;           // largest neighbor difference quotient of w_eps on O (<= r_D)
  std::size_t container_cells = 0;
  int container_clearance = 0;
  double mu_mass = 0.0;
  double eta_mass = 0.0;
  double complementarity_residual = 0.0;
  std::size_t saturated_cells = 0;
  std::size_t omega_cells = 0;
  std::size_t omega_outside_S = 0;
  bool omega_in_S = false;
  double bound = 0.0;               // max |grad G_O eta| over boundary samples of Omega
  bool bound_within_r_D = false;    // bound <= r_D + 5e-3

  // Artifacts on the container lattice (empty when short-circuited).
  GridDomainPtr container;
  std::vector<double> w_eps;
  std::vector<double> g_mu;
  std::vector<double> g_eta;
  std::vector<double> eta;
  std::vector<std::uint8_t> saturated;
};

/// Numerical version of the upper-bound construction: Brenier transport of
/// a dilation D of Omega onto B(0, r_D), convex extension from a region R
/// between Omega and D, mollification, container O as a sublevel set,
/// partial balayage of (Delta w_eps) m onto N m|_O, and the gradient of the
/// swept potential on the boundary of Omega.
ProofTrace proof_trace_upper_bound(const DomainSpec& omega, const ProofTraceOptions& options = {});

nlohmann::json to_json(const ProofTrace& t);

}  // namespace balayage
