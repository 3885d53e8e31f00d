#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace balayage {

/// Points and vectors always carry three components; planar problems keep z = 0.
using Vec = Eigen::Vector3d;

/// Volume of the unit ball in R^N (N = 2, 3).
double unit_ball_volume(int dim);

struct Ball {
  Vec center = Vec::Zero();
  double radius = 1.0;
};

enum class DomainKind { ball, ellipsoid, annulus, union_of_balls };

std::string to_string(DomainKind kind);

struct AxisBox {
  Vec lo = Vec::Zero();
  Vec hi = Vec::Zero();
};

struct BoundarySample {
  Vec point;
  Vec normal;  // outward unit normal
  int component = 0;
};

/// Analytic description of a bounded domain.
///
/// Ellipsoids follow the convention sum_i a_i^2 (x_i - c_i)^2 < 1, so the
/// semi-axes are 1/a_i. `axis_coefficients` stores the a_i.
class DomainSpec {
 public:
  static DomainSpec ball(int dim, const Vec& center, double radius);
  static DomainSpec ellipsoid(int dim, const Vec& center, const Vec& axis_coefficients);
  static DomainSpec ellipsoid_from_semi_axes(int dim, const Vec& center, const Vec& semi_axes);
  static DomainSpec annulus(int dim, const Vec& center, double inner_radius, double outer_radius);
  static DomainSpec union_of_balls(int dim, std::vector<Ball> components);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  const Vec& axis_coefficients() const { return axis_coefficients_; }
  Vec semi_axes() const;
  double inner_radius() const { return inner_radius_; }
  double outer_radius() const { return outer_radius_; }
  const std::vector<Ball>& components() const { return components_; }

  /// Exact analytic membership test.
  bool contains(const Vec& x) const;
  /// Signed distance to the boundary, negative inside. The sign always agrees
  /// with `contains`. For unions the value is exact outside and a lower bound
  /// on the depth inside.
  double signed_distance(const Vec& x) const;
  /// Outward unit normal of the boundary at (or nearest to) x.
  Vec outward_normal(const Vec& x) const;

  AxisBox bounding_box() const;
  /// Largest edge of the bounding box over the active axes.
  double extent() const;
  /// Centroid of the domain (exact for the supported kinds).
  Vec centroid() const;
  /// Centers of bounded complementary components (annulus cavity).
  std::vector<Vec> cavity_centers() const;

 private:
  DomainKind kind_ = DomainKind::ball;
  int dim_ = 2;
  Vec center_ = Vec::Zero();
  double radius_ = 1.0;
  Vec axis_coefficients_ = Vec::Ones();
  double inner_radius_ = 0.0;
  double outer_radius_ = 0.0;
  std::vector<Ball> components_;
};

/// Distance from `y` to the ellipsoid with the given semi-axes, centered at the
/// origin. Returns the foot point through `foot`. Works for any dim in {2, 3}.
double ellipsoid_distance(int dim, const Vec& semi_axes, const Vec& y, Vec* foot = nullptr);

/// Exact volume for primitive specs; unions are integrated numerically.
double volume(const DomainSpec& spec);

/// Total boundary measure (perimeter in 2D). Unions are unsupported.
double surface_area(const DomainSpec& spec);

/// Radius of the ball with the given volume.
double equivalent_radius(double volume, int dim);

/// Quasi-uniform boundary samples, `count` per boundary component.
/// 2D: uniform in the parameter angle. 3D: Fibonacci sphere mapped through
/// the parameterization. Union samples covered by another ball are dropped.
std::vector<BoundarySample> boundary_samples(const DomainSpec& spec, int count);

nlohmann::json to_json(const DomainSpec& spec);
/// Strict parse: unknown keys and missing fields raise invalid_input.
DomainSpec domain_from_json(const nlohmann::json& j);

}  // namespace balayage
