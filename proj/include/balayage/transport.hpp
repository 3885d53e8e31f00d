#pragma once

#include "balayage/fields.hpp"
#include "balayage/geometry.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace balayage {

/// Uniformly weighted point sample, weight 1/n each.
struct PointCloud {
  int dim = 2;
  std::vector<Vec> points;

  std::size_t size() const { return points.size(); }
  double weight() const { return 1.0 / static_cast<double>(points.size()); }
  Vec centroid() const;
};

/// Halton points (bases 2, 3, 5) with index offset `seed`, rejected into the
/// spec. A positive margin samples the dilation {signed_distance < margin}.
PointCloud sample_uniform(const DomainSpec& spec, int n, std::uint64_t seed, double margin = 0.0);

/// Halton points mapped into B(center, r) by radial inversion.
PointCloud sample_ball(int dim, const Vec& center, double r, int n, std::uint64_t seed);

struct BrenierTransport {
  PointCloud source;
  PointCloud target;
  std::vector<int> assignment;   // source i -> target assignment[i]
  std::vector<double> prices;    // dual prices p_j on targets
  std::vector<double> potential; // v_i at source points, min v = 0
  double total_cost = 0.0;       // sum_i |x_i - y_pi(i)|^2 / n

  const Vec& slope(std::size_t i) const { return target.points[static_cast<std::size_t>(assignment[i])]; }
};

/// Exact minimum-cost bijection for the squared Euclidean cost (shortest
/// augmenting path, Jonker-Volgenant). The potential is the max-affine
/// function v(x) = max_j (<y_j, x> - psi_j) with psi_j = (|y_j|^2 - p_j) / 2.
BrenierTransport solve_assignment(const PointCloud& source, const PointCloud& target);

/// Largest violation of |x_i - y_pi(i)|^2 - p_pi(i) <= |x_i - y_j|^2 - p_j over all i, j.
double dual_feasibility_gap(const BrenierTransport& t);

struct BrenierDiagnostics {
  double max_target_norm = 0.0;
  bool range_ok = false;
  int fitted = 0;                  // interior points with a full-rank local fit
  int skipped = 0;                 // rank-deficient neighbor geometry
  double trace_fraction = 0.0;     // fraction of fitted points with trace H >= N - 0.2
  double min_trace = 0.0;
  double median_trace = 0.0;
  double median_det = 0.0;
  std::vector<double> det_edges;   // histogram bin edges for det H
  std::vector<int> det_histogram;
  int cycles_tested = 0;
  int monotonicity_violations = 0;
  std::vector<Eigen::MatrixXd> hessians;  // per fitted point, in fit order
  std::vector<int> fitted_index;
};

struct DiagnosticsOptions {
  /// Only points at least `interior_margin` inside this spec are fitted.
  std::optional<DomainSpec> interior;
  double interior_margin = 0.0;
  int cycles = 10000;
  std::uint64_t seed = 1;
};

/// Range check, local weighted fits of the gradient data y_pi(j) ~ g + H (x_j - x_i)
/// with symmetric H over the k = 2N + 6 nearest neighbors, and random 3-cycle
/// monotonicity checks.
BrenierDiagnostics brenier_diagnostics(const BrenierTransport& t, double r_D, const DiagnosticsOptions& options = {});

/// Max-affine extension w(q) = max_i (v_i + <y_pi(i), q - x_i>).
std::vector<double> extend_convex(const BrenierTransport& t, const std::vector<Vec>& queries);
/// The extension at every cell center of the carrier lattice.
ScalarField extend_convex(const BrenierTransport& t, const GridDomainPtr& carrier);

}  // namespace balayage
