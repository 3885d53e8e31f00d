#include "balayage/minimizer_conditions.hpp"

#include "balayage/error.hpp"
#include "balayage/parallel.hpp"
#include "balayage/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace balayage {

namespace {

int boundary_default(const DomainSpec& spec, const MinimizerCheckOptions& o) {
  return o.boundary_count > 0 ? o.boundary_count : (spec.dim() == 2 ? 512 : 2000);
}

int interior_default(const DomainSpec& spec, const MinimizerCheckOptions& o) {
  return o.interior_samples > 0 ? o.interior_samples : (spec.dim() == 2 ? 2000 : 4000);
}

// Fraction of a lattice in B(0, radius) within 2 x (mean image nearest-neighbor
// spacing) of some image point.
double coverage(int dim, const std::vector<Vec>& images, double radius) {
  const std::size_t n = images.size();
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) nn[i] = std::min(nn[i], (images[i] - images[j]).squaredNorm());
  });
  double spacing = 0.0;
  for (double d : nn) spacing += std::sqrt(d);
  spacing /= static_cast<double>(n);
  const double reach = 2.0 * spacing;

  const int G = dim == 2 ? 20 : 10;
  const double step = radius / G;
  std::vector<Vec> grid;
  for (int i = -G; i <= G; ++i)
    for (int j = -G; j <= G; ++j)
      for (int k = (dim == 3 ? -G : 0); k <= (dim == 3 ? G : 0); ++k) {
        const Vec q(i * step, j * step, k * step);
        if (q.norm() <= radius) grid.push_back(q);
      }
  std::vector<std::uint8_t> hit(grid.size(), 0);
  parallel_for(grid.size(), [&](std::size_t g) {
    for (const auto& y : images)
      if ((y - grid[g]).norm() <= reach) {
        hit[g] = 1;
        return;
      }
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(grid.size());
}

template <class Grad>
MinimizerConditions assess(const DomainSpec& spec, Grad&& grad, double laplacian_residual, double lambda1,
                           const MinimizerCheckOptions& options) {
  if (!(lambda1 > 0.0)) throw invalid_input("lambda1 must be positive");
  MinimizerConditions c;
  c.lambda1 = lambda1;
  c.laplacian_residual = laplacian_residual;
  if (laplacian_residual > options.laplacian_tolerance) {
    std::ostringstream msg;
    msg << "not a candidate minimizer: |Delta u - N| reaches " << laplacian_residual;
    throw invalid_input(msg.str());
  }
  const auto samples = boundary_samples(spec, boundary_default(spec, options));
  c.boundary_count = static_cast<int>(samples.size());
  std::vector<double> norms(samples.size()), normal(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Vec g = grad(samples[i].point);
    norms[i] = g.norm();
    normal[i] = g.dot(samples[i].normal);
  });
  double sum = 0.0, sq = 0.0;
  for (double v : norms) sum += v;
  c.norm_mean = sum / static_cast<double>(norms.size());
  for (double v : norms) sq += (v - c.norm_mean) * (v - c.norm_mean);
  c.relative_deviation = std::sqrt(sq / static_cast<double>(norms.size())) / c.norm_mean;
  c.norm_min = *std::min_element(norms.begin(), norms.end());
  c.norm_max = *std::max_element(norms.begin(), norms.end());
  c.constant_norm = c.relative_deviation <= options.constant_tolerance;
  c.min_normal_derivative = *std::min_element(normal.begin(), normal.end());
  c.outward = c.min_normal_derivative >= 0.0;
  c.exceeds_lambda1 = c.norm_max > lambda1 * (1.0 + options.value_tolerance);
  c.sufficient = c.constant_norm && c.outward;

  const auto cloud = sample_uniform(spec, interior_default(spec, options), options.seed);
  c.interior_count = static_cast<int>(cloud.size());
  std::vector<Vec> images(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) { images[i] = grad(cloud.points[i]); });
  c.coverage = coverage(spec.dim(), images, lambda1 * (1.0 - options.coverage_shrink));
  return c;
}

}  // namespace

MinimizerConditions check_minimizer_conditions(const DomainSpec& spec, const AnalyticField& u, double lambda1,
                                               const MinimizerCheckOptions& options) {
  if (u.dim != spec.dim()) throw invalid_input("field and domain dimensions differ");
  // Divergence of the gradient closure by a fourth-order central stencil.
  const int N = spec.dim();
  const double hs = 1e-3 * spec.extent();
  const auto cloud = sample_uniform(spec, 400, options.seed);
  double residual = 0.0;
  for (const auto& x : cloud.points) {
    double lap = 0.0;
    for (int a = 0; a < N; ++a) {
      Vec e = Vec::Zero();
      e[a] = hs;
      lap += (8.0 * (u.gradient(x + e)[a] - u.gradient(x - e)[a]) - (u.gradient(x + 2 * e)[a] - u.gradient(x - 2 * e)[a])) /
             (12.0 * hs);
    }
    residual = std::max(residual, std::abs(lap - N));
  }
  return assess(spec, u.gradient, residual, lambda1, options);
}

MinimizerConditions check_minimizer_conditions(const DomainSpec& spec, const ScalarField& u, double lambda1,
                                               const MinimizerCheckOptions& options) {
  const GridDomain& grid = *u.carrier;
  const GridShape& s = grid.shape();
  const int N = s.dim;
  double residual = 0.0;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    if (!grid.inside(idx)) continue;
    double lap = 0.0;
    bool full = true;
    for (int a = 0; a < N && full; ++a) {
      if (!s.has_neighbor(idx, a, -1) || !s.has_neighbor(idx, a, 1)) {
        full = false;
        break;
      }
      const auto lo = idx - static_cast<std::size_t>(s.stride(a)), hi = idx + static_cast<std::size_t>(s.stride(a));
      full = grid.inside(lo) && grid.inside(hi);
      lap += (u.values[lo] - 2.0 * u.values[idx] + u.values[hi]) / (s.h * s.h);
    }
    if (full) residual = std::max(residual, std::abs(lap - N));
  }
  return assess(spec, [&](const Vec& x) { return gradient_at(u, x); }, residual, lambda1, options);
}

nlohmann::json to_json(const MinimizerConditions& c) {
  return {{"laplacian_residual", c.laplacian_residual},
          {"boundary_norm_mean", c.norm_mean},
          {"boundary_norm_min", c.norm_min},
          {"boundary_norm_max", c.norm_max},
          {"relative_deviation", c.relative_deviation},
          {"constant_norm", c.constant_norm},
          {"min_normal_derivative", c.min_normal_derivative},
          {"outward", c.outward},
          {"coverage", c.coverage},
          {"lambda1", c.lambda1},
          {"exceeds_lambda1", c.exceeds_lambda1},
          {"sufficient", c.sufficient},
          {"boundary_count", c.boundary_count},
          {"interior_count", c.interior_count}};
}

}  // namespace balayage
