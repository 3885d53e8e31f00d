#pragma once

#include "balayage/geometry.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace balayage {

/// Uniform cell-centered lattice. Cell (i, j, k) has center
/// origin + (i + 1/2, j + 1/2, k + 1/2) h and flat index (i * ny + j) * nz + k,
/// i.e. row-major with the last axis fastest. Planar grids have nz = 1.
struct GridShape {
  int dim = 2;
  std::array<int, 3> cells{1, 1, 1};
  Vec origin = Vec::Zero();  // lower corner of the box
  double h = 1.0;

  std::size_t size() const {
    return static_cast<std::size_t>(cells[0]) * static_cast<std::size_t>(cells[1]) * static_cast<std::size_t>(cells[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(cells[1]) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(cells[2]) +
           static_cast<std::size_t>(k);
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const auto nz = static_cast<std::size_t>(cells[2]);
    const auto ny = static_cast<std::size_t>(cells[1]);
    return {static_cast<int>(idx / (ny * nz)), static_cast<int>((idx / nz) % ny), static_cast<int>(idx % nz)};
  }
  /// Flat-index offset of one step along `axis`.
  std::ptrdiff_t stride(int axis) const {
    if (axis == 0) return static_cast<std::ptrdiff_t>(cells[1]) * cells[2];
    if (axis == 1) return cells[2];
    return 1;
  }
  Vec center(std::size_t idx) const {
    const auto c = coords(idx);
    Vec x = origin + h * Vec(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
    if (dim == 2) x.z() = 0.0;
    return x;
  }
  double cell_measure() const { return dim == 2 ? h * h : h * h * h; }
  int max_cells() const { return std::max({cells[0], cells[1], dim == 3 ? cells[2] : 0}); }
  /// Host cell of a point (clamped to the box).
  std::size_t locate(const Vec& x) const;
  /// True if the neighbor of `idx` one step along `axis` in direction `dir` exists.
  bool has_neighbor(std::size_t idx, int axis, int dir) const {
    const auto c = coords(idx);
    const int v = c[static_cast<std::size_t>(axis)] + dir;
    return v >= 0 && v < cells[static_cast<std::size_t>(axis)];
  }
};

/// Rasterized domain: inside indicator and a level function per cell
/// (negative inside; a signed distance for analytic specs), plus boundary
/// samples with outward unit normals when the boundary is analytic.
class GridDomain {
 public:
  GridDomain(GridShape shape, std::vector<double> level, std::vector<std::uint8_t> inside,
             std::vector<BoundarySample> boundary);

  /// Domain {level < 0} on an existing lattice, e.g. a sublevel set of a field.
  static GridDomain from_level_set(const GridShape& shape, std::vector<double> level);

  const GridShape& shape() const { return shape_; }
  int dim() const { return shape_.dim; }
  double h() const { return shape_.h; }
  std::size_t size() const { return shape_.size(); }
  bool inside(std::size_t idx) const { return inside_[idx] != 0; }
  const std::vector<std::uint8_t>& inside_mask() const { return inside_; }
  double level(std::size_t idx) const { return level_[idx]; }
  const std::vector<double>& levels() const { return level_; }
  const std::vector<BoundarySample>& boundary() const { return boundary_; }
  std::size_t inside_count() const;

  /// Minimum distance, in cells, from an inside cell to the box faces.
  int face_clearance_cells() const;

 private:
  GridShape shape_;
  std::vector<double> level_;
  std::vector<std::uint8_t> inside_;
  std::vector<BoundarySample> boundary_;
};

using GridDomainPtr = std::shared_ptr<const GridDomain>;

/// Cells across the spec's largest extent; the box gets `padding` extra cells per side.
struct RasterOptions {
  int padding = 5;
  int boundary_count = 0;  // 0 selects a resolution-dependent default
};

GridShape shape_for(const DomainSpec& spec, int resolution, int padding = 5);

/// Rasterize an analytic spec. Rejects resolution < 16, annulus gaps
/// thinner than 4h, disconnected unions and near-tangent union spheres.
GridDomainPtr rasterize(const DomainSpec& spec, int resolution, RasterOptions options = {});

/// Cell-counting volume with the sub-cell correction clamp(1/2 - d/h, 0, 1).
double volume(const GridDomain& domain);

/// Face-connected component labels of a cell mask (-1 for cells outside the mask).
std::vector<int> label_components(const GridShape& shape, const std::vector<std::uint8_t>& mask, int* count);

}  // namespace balayage
