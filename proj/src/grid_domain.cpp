#include "balayage/grid_domain.hpp"

#include "balayage/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace balayage {

std::size_t GridShape::locate(const Vec& x) const {
  std::array<int, 3> c{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    const int v = static_cast<int>(std::floor((x[a] - origin[a]) / h));
    c[static_cast<std::size_t>(a)] = std::clamp(v, 0, cells[static_cast<std::size_t>(a)] - 1);
  }
  return index(c[0], c[1], c[2]);
}

GridDomain::GridDomain(GridShape shape, std::vector<double> level, std::vector<std::uint8_t> inside,
                       std::vector<BoundarySample> boundary)
    : shape_(shape), level_(std::move(level)), inside_(std::move(inside)), boundary_(std::move(boundary)) {
  if (level_.size() != shape_.size() || inside_.size() != shape_.size())
    throw invalid_input("GridDomain arrays do not match the lattice size");
  for (std::size_t i = 0; i < level_.size(); ++i) {
    const bool neg = level_[i] < 0.0;
    if (neg != (inside_[i] != 0)) throw invalid_input("GridDomain indicator and level disagree in sign");
  }
}

GridDomain GridDomain::from_level_set(const GridShape& shape, std::vector<double> level) {
  std::vector<std::uint8_t> inside(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) inside[i] = level[i] < 0.0 ? 1 : 0;
  return GridDomain(shape, std::move(level), std::move(inside), {});
}

std::size_t GridDomain::inside_count() const {
  return static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), std::uint8_t{1}));
}

int GridDomain::face_clearance_cells() const {
  int best = std::numeric_limits<int>::max();
  for (std::size_t idx = 0; idx < size(); ++idx) {
    if (!inside_[idx]) continue;
    const auto c = shape_.coords(idx);
    for (int a = 0; a < shape_.dim; ++a) {
      const int lo = c[static_cast<std::size_t>(a)];
      const int hi = shape_.cells[static_cast<std::size_t>(a)] - 1 - lo;
      best = std::min({best, lo, hi});
    }
  }
  return best;
}

GridShape shape_for(const DomainSpec& spec, int resolution, int padding) {
  const AxisBox box = spec.bounding_box();
  GridShape shape;
  shape.dim = spec.dim();
  shape.h = spec.extent() / resolution;
  for (int a = 0; a < 3; ++a) {
    if (a >= spec.dim()) {
      shape.cells[static_cast<std::size_t>(a)] = 1;
      shape.origin[a] = -0.5 * shape.h;
      continue;
    }
    const double size = box.hi[a] - box.lo[a];
    const int n = static_cast<int>(std::ceil(size / shape.h - 1e-9)) + 2 * padding;
    shape.cells[static_cast<std::size_t>(a)] = n;
    shape.origin[a] = 0.5 * (box.lo[a] + box.hi[a]) - 0.5 * n * shape.h;
  }
  if (spec.dim() == 2) shape.origin.z() = -0.5 * shape.h;
  return shape;
}

std::vector<int> label_components(const GridShape& shape, const std::vector<std::uint8_t>& mask, int* count) {
  std::vector<int> label(shape.size(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < shape.size(); ++seed) {
    if (!mask[seed] || label[seed] >= 0) continue;
    label[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      for (int a = 0; a < shape.dim; ++a)
        for (int dir : {-1, 1}) {
          if (!shape.has_neighbor(idx, a, dir)) continue;
          const auto nb = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + dir * shape.stride(a));
          if (mask[nb] && label[nb] < 0) {
            label[nb] = next;
            stack.push_back(nb);
          }
        }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

GridDomainPtr rasterize(const DomainSpec& spec, int resolution, RasterOptions options) {
  if (resolution < 16) throw invalid_input("rasterize needs resolution >= 16, got " + std::to_string(resolution));
  if (options.padding < 4) throw invalid_input("rasterize needs at least 4 padding cells");
  const GridShape shape = shape_for(spec, resolution, options.padding);
  const double h = shape.h;

  if (spec.kind() == DomainKind::annulus && spec.outer_radius() - spec.inner_radius() < 4.0 * h) {
    std::ostringstream msg;
    msg << "annulus gap " << spec.outer_radius() - spec.inner_radius() << " is thinner than 4h = " << 4.0 * h
        << " at resolution " << resolution;
    throw invalid_input(msg.str());
  }
  if (spec.kind() == DomainKind::union_of_balls) {
    const auto& comps = spec.components();
    for (std::size_t i = 0; i < comps.size(); ++i)
      for (std::size_t j = i + 1; j < comps.size(); ++j) {
        const double d = (comps[i].center - comps[j].center).norm();
        const double external = std::abs(d - (comps[i].radius + comps[j].radius));
        const double internal = std::abs(d - std::abs(comps[i].radius - comps[j].radius));
        if (external < 2.0 * h || internal < 2.0 * h) {
          std::ostringstream msg;
          msg << "union spheres " << i << " and " << j << " are within 2h of tangency";
          throw invalid_input(msg.str());
        }
      }
  }

  std::vector<double> level(shape.size());
  std::vector<std::uint8_t> inside(shape.size());
  for (std::size_t idx = 0; idx < shape.size(); ++idx) {
    const Vec x = shape.center(idx);
    level[idx] = spec.signed_distance(x);
    inside[idx] = spec.contains(x) ? 1 : 0;
  }
  int components = 0;
  label_components(shape, inside, &components);
  if (components == 0) throw invalid_input("rasterization produced no inside cells");
  if (components != 1) {
    throw invalid_input("domain rasterizes to " + std::to_string(components) +
                        " connected components; a connected domain is required");
  }
  int count = options.boundary_count;
  if (count <= 0) count = spec.dim() == 2 ? std::max(64, 4 * resolution) : std::max(256, resolution * resolution);
  auto domain = std::make_shared<GridDomain>(shape, std::move(level), std::move(inside), boundary_samples(spec, count));
  if (domain->face_clearance_cells() < 2) throw invalid_input("inside cells are not 2h-separated from the box faces");
  return domain;
}

double volume(const GridDomain& domain) {
  const double h = domain.h();
  double v = 0.0;
  for (std::size_t idx = 0; idx < domain.size(); ++idx) v += std::clamp(0.5 - domain.level(idx) / h, 0.0, 1.0);
  return v * domain.shape().cell_measure();
}

}  // namespace balayage
