#include "balayage/proof_trace.hpp"

#include "balayage/error.hpp"
#include "balayage/parallel.hpp"
#include "balayage/poisson.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace balayage {

double cap_fraction(int dim) {
  using boost::math::quadrature::gauss_kronrod;
  if (dim != 2 && dim != 3) throw invalid_input("cap fraction needs N = 2 or 3");
  // Sections of the unit ball at height t: chords 2 sqrt(1 - t^2) (integrated in
  // t = cos s to remove the endpoint singularity) or disks of area pi (1 - t^2).
  const double cap =
      dim == 2 ? gauss_kronrod<double, 31>::integrate([](double s) { return 2.0 * std::sin(s) * std::sin(s); }, 0.0,
                                                      std::numbers::pi / 3.0, 10, 1e-15)
               : gauss_kronrod<double, 31>::integrate([](double t) { return std::numbers::pi * (1.0 - t * t); }, 0.5, 1.0,
                                                      10, 1e-15);
  return cap / unit_ball_volume(dim);
}

namespace {

// Volumes of signed-distance dilations {sd < delta}: closed forms where the
// dilation stays in the family (balls, annuli, planar convex sets by Steiner),
// otherwise sub-cell cell counting of the signed distance on a fine lattice.
class DilationVolume {
 public:
  explicit DilationVolume(const DomainSpec& spec) : spec_(spec) {
    const bool closed = spec.kind() == DomainKind::ball || spec.kind() == DomainKind::annulus ||
                        (spec.kind() == DomainKind::ellipsoid && spec.dim() == 2);
    if (closed) return;
    const int res = spec.dim() == 2 ? 800 : 96;
    const double reach = 0.25 * spec.extent();
    shape_ = shape_for(spec, res, 0);
    const int pad = static_cast<int>(std::ceil(reach / shape_.h));
    for (int a = 0; a < spec.dim(); ++a) {
      shape_.cells[static_cast<std::size_t>(a)] += 2 * pad;
      shape_.origin[a] -= pad * shape_.h;
    }
    sd_.resize(shape_.size());
    parallel_for(sd_.size(), [&](std::size_t i) { sd_[i] = spec.signed_distance(shape_.center(i)); });
    std::sort(sd_.begin(), sd_.end());
    limit_ = reach - shape_.h;
  }

  double operator()(double delta) const {
    const int N = spec_.dim();
    const double kappa = unit_ball_volume(N);
    switch (spec_.kind()) {
      case DomainKind::ball:
        return kappa * std::pow(spec_.radius() + delta, N);
      case DomainKind::annulus:
        return kappa * (std::pow(spec_.outer_radius() + delta, N) - std::pow(std::max(spec_.inner_radius() - delta, 0.0), N));
      default:
        break;
    }
    if (spec_.kind() == DomainKind::ellipsoid && N == 2)
      return volume(spec_) + surface_area(spec_) * delta + std::numbers::pi * delta * delta;
    if (delta > limit_) throw invalid_input("dilation margin exceeds the volume lattice");
    // Cells below delta - h/2 count fully; the band up to delta + h/2 partially.
    const auto full = std::lower_bound(sd_.begin(), sd_.end(), delta - 0.5 * shape_.h);
    const auto band = std::upper_bound(full, sd_.end(), delta + 0.5 * shape_.h);
    double total = static_cast<double>(full - sd_.begin());
    for (auto it = full; it != band; ++it) total += std::clamp(0.5 - (*it - delta) / shape_.h, 0.0, 1.0);
    return total * shape_.cell_measure();
  }

 private:
  DomainSpec spec_;
  GridShape shape_;
  std::vector<double> sd_;
  double limit_ = 0.0;
};

GridShape box_shape(const AxisBox& box, int dim, double h) {
  GridShape s;
  s.dim = dim;
  s.h = h;
  for (int a = 0; a < 3; ++a) {
    if (a >= dim) {
      s.cells[static_cast<std::size_t>(a)] = 1;
      s.origin[a] = -0.5 * h;
      continue;
    }
    const int n = static_cast<int>(std::ceil((box.hi[a] - box.lo[a]) / h));
    s.cells[static_cast<std::size_t>(a)] = n;
    s.origin[a] = 0.5 * (box.lo[a] + box.hi[a]) - 0.5 * n * h;
  }
  return s;
}

// w(x) = max_i (<y_i, x> + b_i) at every cell center of `shape`.
std::vector<double> max_affine(const Eigen::MatrixX3d& slopes, const Eigen::VectorXd& offsets, const GridShape& shape) {
  std::vector<double> out(shape.size());
  constexpr std::size_t block = 512;
  const std::size_t blocks = (shape.size() + block - 1) / block;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t lo = b * block, hi = std::min(shape.size(), lo + block);
    Eigen::Matrix3Xd X(3, static_cast<Eigen::Index>(hi - lo));
    for (std::size_t i = lo; i < hi; ++i) X.col(static_cast<Eigen::Index>(i - lo)) = shape.center(i);
    const Eigen::MatrixXd vals = (slopes * X).colwise() + offsets;
    const Eigen::RowVectorXd best = vals.colwise().maxCoeff();
    for (std::size_t i = lo; i < hi; ++i) out[i] = best(static_cast<Eigen::Index>(i - lo));
  });
  return out;
}

}  // namespace

double dilated_volume(const DomainSpec& spec, double delta) {
  if (delta < 0.0) throw invalid_input("dilation margin must be nonnegative");
  return DilationVolume(spec)(delta);
}

ProofTrace proof_trace_upper_bound(const DomainSpec& omega, const ProofTraceOptions& options) {
  if (options.resolution < 16) throw invalid_input("proof trace resolution must be at least 16");
  if (options.n_transport < 50 || options.n_transport > 5000) throw invalid_input("proof trace needs 50 <= n <= 5000");
  if (options.refinement < 1 || options.refinement % 2 == 0) throw invalid_input("lattice refinement must be odd");
  if (!(options.cap_safety > 0.0 && options.cap_safety < 1.0)) throw invalid_input("cap safety must lie in (0, 1)");
  if (!(options.region_fraction > 0.0 && options.region_fraction < 1.0))
    throw invalid_input("region fraction must lie in (0, 1)");

  const int N = omega.dim();
  ProofTrace T;
  T.h = omega.extent() / options.resolution;
  T.b_N = cap_fraction(N);
  T.volume_omega = volume(omega);
  T.r_omega = equivalent_radius(T.volume_omega, N);
  T.n = options.n_transport;

  // (1) D = {dist < delta} with m(D \ Omega) < b_N m(Omega).
  const DilationVolume vol(omega);
  const double allowance = options.cap_safety * T.b_N * T.volume_omega;
  double lo = 0.0, hi = T.h;
  while (vol(hi) - T.volume_omega < allowance) {
    if (hi > omega.extent()) throw invalid_input("cap constraint does not bound the dilation");
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (vol(mid) - T.volume_omega < allowance ? lo : hi) = mid;
  }
  T.delta_cap = lo;
  T.delta = std::min(options.dilation_cells * T.h, T.delta_cap);
  T.delta_region = options.region_fraction * T.delta;
  T.epsilon = 0.5 * T.delta_region;
  T.volume_D = vol(T.delta);
  T.r_D = equivalent_radius(T.volume_D, N);

  if (omega.kind() == DomainKind::ball) {
    // D is a concentric ball, the Brenier map is a translation and Delta v = N.
    T.short_circuited = true;
    T.omega_in_S = true;
    T.bound = T.r_D;
    T.bound_within_r_D = true;
    return T;
  }

  const double h_fine = T.h / options.refinement;
  if (T.epsilon < 2.0 * h_fine) {
    std::ostringstream msg;
    msg << "resolution too coarse for the mollification: epsilon = " << T.epsilon << " < 2 h_fine = " << 2.0 * h_fine;
    throw invalid_input(msg.str());
  }

  // (2) Brenier transport D -> B(0, r_D).
  const auto source = sample_uniform(omega, T.n, options.seed, T.delta);
  const auto target = sample_ball(N, Vec::Zero(), T.r_D, T.n, options.seed);
  const auto transport = solve_assignment(source, target);
  T.transport_cost = transport.total_cost;
  T.dual_gap = dual_feasibility_gap(transport);

  // (3) Supporting planes of v at the source points inside R.
  std::vector<std::size_t> in_region;
  for (std::size_t i = 0; i < source.size(); ++i)
    if (omega.signed_distance(source.points[i]) < T.delta_region) in_region.push_back(i);
  if (in_region.empty()) throw invalid_input("no transport samples inside the region R");
  Eigen::MatrixX3d slopes(static_cast<Eigen::Index>(in_region.size()), 3);
  Eigen::VectorXd offsets(static_cast<Eigen::Index>(in_region.size()));
  for (std::size_t k = 0; k < in_region.size(); ++k) {
    const std::size_t i = in_region[k];
    slopes.row(static_cast<Eigen::Index>(k)) = transport.slope(i).transpose();
    offsets(static_cast<Eigen::Index>(k)) = transport.potential[i] - transport.slope(i).dot(source.points[i]);
  }

  // (4)-(5) Mollified extension and the container O = {w_eps < C}, enlarging
  // the box until O clears its faces.
  const AxisBox base = omega.bounding_box();
  double pad = T.delta + 0.25 * omega.extent() + (options.container_clearance + 2) * T.h;
  GridShape coarse;
  std::vector<double> w_eps;
  std::shared_ptr<GridDomain> container;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 8) throw non_convergence("container O does not fit the enlarged box");
    AxisBox box = base;
    for (int a = 0; a < N; ++a) {
      box.lo[a] -= pad;
      box.hi[a] += pad;
    }
    coarse = box_shape(box, N, T.h);
    GridShape fine = coarse;
    fine.h = h_fine;
    for (int a = 0; a < N; ++a) fine.cells[static_cast<std::size_t>(a)] *= options.refinement;
    if (N == 2) fine.origin.z() = -0.5 * h_fine;

    auto fine_domain = std::make_shared<GridDomain>(
        GridDomain::from_level_set(fine, std::vector<double>(fine.size(), -1.0)));
    const ScalarField w(fine_domain, max_affine(slopes, offsets, fine));
    const ScalarField smooth = mollify(w, T.epsilon);

    const int off = (options.refinement - 1) / 2;
    w_eps.assign(coarse.size(), 0.0);
    for (std::size_t idx = 0; idx < coarse.size(); ++idx) {
      const auto c = coarse.coords(idx);
      const int fi = options.refinement * c[0] + off, fj = options.refinement * c[1] + off;
      const int fk = N == 3 ? options.refinement * c[2] + off : 0;
      w_eps[idx] = smooth.values[fine.index(fi, fj, fk)];
    }

    T.sup_region = -std::numeric_limits<double>::infinity();
    const double reach = T.delta_region + 0.5 * std::sqrt(static_cast<double>(N)) * T.h;
    for (std::size_t idx = 0; idx < coarse.size(); ++idx)
      if (omega.signed_distance(coarse.center(idx)) < reach) T.sup_region = std::max(T.sup_region, w_eps[idx]);
    T.level_C = T.sup_region + T.h * T.r_D;

    std::vector<double> level(coarse.size());
    for (std::size_t idx = 0; idx < coarse.size(); ++idx) level[idx] = w_eps[idx] - T.level_C;
    container = std::make_shared<GridDomain>(GridDomain::from_level_set(coarse, std::move(level)));
    T.container_clearance = container->face_clearance_cells();
    if (T.container_clearance >= options.container_clearance) break;
    pad *= 1.5;
  }
  int components = 0;
  label_components(coarse, container->inside_mask(), &components);
  if (components != 1) throw invalid_input("container O is not connected");
  T.container = container;
  T.container_cells = container->inside_count();

  // (6) mu = (Delta_h w_eps) m on O, and its Green potential.
  std::vector<double> mu(coarse.size(), 0.0);
  const double h2 = T.h * T.h;
  for (std::size_t idx = 0; idx < coarse.size(); ++idx) {
    if (!container->inside(idx)) continue;
    double lap = 0.0;
    for (int a = 0; a < N; ++a) {
      const auto s = static_cast<std::size_t>(coarse.stride(a));
      lap += (w_eps[idx - s] - 2.0 * w_eps[idx] + w_eps[idx + s]) / h2;
      T.max_slope = std::max(T.max_slope, std::abs(w_eps[idx + s] - w_eps[idx]) / T.h);
    }
    mu[idx] = lap;
  }
  const GridDomainPtr O = container;
  const auto g_mu = solve_dirichlet_poisson(O, mu);
  for (std::size_t idx = 0; idx < coarse.size(); ++idx)
    if (container->inside(idx))
      T.potential_mismatch = std::max(T.potential_mismatch, std::abs(g_mu.values[idx] - (T.level_C - w_eps[idx])));

  // (7) Partial balayage onto nu = N m|_O.
  std::vector<double> nu(coarse.size(), 0.0);
  for (std::size_t idx = 0; idx < coarse.size(); ++idx)
    if (container->inside(idx)) nu[idx] = N;
  const auto bal = partial_balayage(O, mu, nu, options.balayage);
  T.mu_mass = bal.mass.mu_mass;
  T.eta_mass = bal.mass.eta_mass;
  T.complementarity_residual = bal.complementarity_residual;
  T.saturated_cells = static_cast<std::size_t>(std::count(bal.saturated_mask.begin(), bal.saturated_mask.end(), 1));

  std::vector<double> g_eta(coarse.size(), 0.0);
  for (std::size_t idx = 0; idx < coarse.size(); ++idx) g_eta[idx] = g_mu.values[idx] - bal.deficiency.values[idx];

  // (8) Omega inside S, and the gradient of G_O eta on the boundary of Omega.
  for (std::size_t idx = 0; idx < coarse.size(); ++idx) {
    if (!omega.contains(coarse.center(idx))) continue;
    ++T.omega_cells;
    if (!bal.saturated_mask[idx]) ++T.omega_outside_S;
  }
  T.omega_in_S = T.omega_outside_S == 0;
  const ScalarField swept(O, g_eta);
  const auto samples = boundary_samples(omega, N == 2 ? 512 : 2000);
  std::vector<double> norms(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { norms[i] = gradient_at(swept, samples[i].point).norm(); });
  T.bound = *std::max_element(norms.begin(), norms.end());
  T.bound_within_r_D = T.bound <= T.r_D + 5e-3;

  T.w_eps = std::move(w_eps);
  T.g_mu = g_mu.values;
  T.g_eta = std::move(g_eta);
  T.eta = bal.eta.density;
  T.saturated = bal.saturated_mask;
  return T;
}

nlohmann::json to_json(const ProofTrace& t) {
  return {{"short_circuited", t.short_circuited},
          {"h", t.h},
          {"b_N", t.b_N},
          {"delta", t.delta},
          {"delta_cap", t.delta_cap},
          {"delta_region", t.delta_region},
          {"epsilon", t.epsilon},
          {"volume_omega", t.volume_omega},
          {"volume_D", t.volume_D},
          {"r_omega", t.r_omega},
          {"r_D", t.r_D},
          {"n", t.n},
          {"transport_cost", t.transport_cost},
          {"dual_gap", t.dual_gap},
          {"level_C", t.level_C},
          {"sup_region", t.sup_region},
          {"potential_mismatch", t.potential_mismatch},
          {"max_slope", t.max_slope},
          {"container_cells", t.container_cells},
          {"container_clearance", t.container_clearance},
          {"mu_mass", t.mu_mass},
          {"eta_mass", t.eta_mass},
          {"complementarity_residual", t.complementarity_residual},
          {"saturated_cells", t.saturated_cells},
          {"omega_cells", t.omega_cells},
          {"omega_outside_S", t.omega_outside_S},
          {"omega_in_S", t.omega_in_S},
          {"bound", t.bound},
          {"bound_within_r_D", t.bound_within_r_D}};
}

}  // namespace balayage
