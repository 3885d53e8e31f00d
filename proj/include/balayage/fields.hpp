#pragma once

#include "balayage/grid_domain.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace balayage {

/// One value per lattice cell. Values may be meaningful outside the carrier's
/// inside set (e.g. a convex function defined on the whole box); potentials
/// vanish there.
struct ScalarField {
  GridDomainPtr carrier;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(GridDomainPtr c, std::vector<double> v);
  static ScalarField zeros(GridDomainPtr c);

  double operator[](std::size_t idx) const { return values[idx]; }
  double max_inside() const;
  double min_inside() const;
};

struct VectorField {
  GridDomainPtr carrier;
  std::vector<Vec> values;
};

struct PointAtom {
  Vec location;
  double mass = 0.0;
};

/// Nonnegative density (mass per unit volume) on the carrier's inside cells,
/// plus optional point atoms strictly inside the carrier.
struct MeasureDensity {
  GridDomainPtr carrier;
  std::vector<double> density;
  std::vector<PointAtom> atoms;

  MeasureDensity() = default;
  MeasureDensity(GridDomainPtr c, std::vector<double> d, std::vector<PointAtom> a = {});
  static MeasureDensity zeros(GridDomainPtr c);
  /// Constant density on the inside cells.
  static MeasureDensity uniform(GridDomainPtr c, double value);

  double total_mass() const;
  /// Density with each atom deposited on its host cell as mass / h^N.
  std::vector<double> deposited() const;
};

/// Central differences at interior cells, second-order one-sided differences
/// next to the boundary; exterior cells get zero.
VectorField gradient(const ScalarField& field);

/// Gradient at an arbitrary point (typically a boundary sample) from a
/// weighted least-squares quadratic fit over nearby inside cells.
Vec gradient_at(const ScalarField& field, const Vec& point);

/// Value at an arbitrary point from the same local quadratic fit.
double value_at(const ScalarField& field, const Vec& point);

/// Discrete bump kernel phi_eps(r) ~ exp(-1 / (1 - (r/eps)^2)).
double bump(double r, double epsilon);

/// Convolution with the unit-mass bump kernel. Atoms are smeared around their
/// exact location; mass landing outside the carrier is dropped. Requires
/// epsilon >= 2h.
MeasureDensity mollify(const MeasureDensity& input, double epsilon);
/// Field convolution over the whole lattice, renormalized at the box faces.
ScalarField mollify(const ScalarField& input, double epsilon);

/// GFD1 field dump: little-endian "GFD1", u32 dim, u32 counts[dim],
/// f64 origin[dim], f64 spacing, then f64 values in row-major order.
void write_gfd(std::ostream& out, const GridShape& shape, const std::vector<double>& values);
void write_gfd(const std::string& path, const GridShape& shape, const std::vector<double>& values);
struct GfdData {
  GridShape shape;
  std::vector<double> values;
};
GfdData read_gfd(std::istream& in);
GfdData read_gfd(const std::string& path);

}  // namespace balayage
