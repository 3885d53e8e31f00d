#include "balayage/geometry.hpp"

#include "balayage/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace balayage {

namespace {

constexpr double pi = std::numbers::pi;

void check_dim(int dim) {
  if (dim != 2 && dim != 3) throw invalid_input("dimension must be 2 or 3, got " + std::to_string(dim));
}

Vec planar(Vec v, int dim) {
  if (dim == 2) v.z() = 0.0;
  return v;
}

double norm_dim(const Vec& v, int dim) { return dim == 2 ? v.head<2>().norm() : v.norm(); }

// Root of sum_i (e_i y_i / (t + e_i^2))^2 = 1 on t > -e_min^2, all y_i > 0.
double ellipsoid_root(const std::vector<double>& e, const std::vector<double>& y) {
  double emin2 = e[0] * e[0];
  double ymax = 0.0;
  double emax = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    emin2 = std::min(emin2, e[i] * e[i]);
    emax = std::max(emax, e[i]);
    ymax = std::max(ymax, y[i]);
  }
  auto g = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double r = e[i] * y[i] / (t + e[i] * e[i]);
      s += r * r;
    }
    return s - 1.0;
  };
  double lo = -emin2;
  double hi = emax * std::sqrt(static_cast<double>(e.size())) * ymax + 1e-300;
  while (g(hi) > 0.0) hi *= 2.0;
  // Bisection to machine precision, then one Newton polish.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Distance in the positive orthant; axes sorted so that e is descending.
double orthant_distance(std::vector<double> e, std::vector<double> y, std::vector<double>& x) {
  const std::size_t n = e.size();
  x.assign(n, 0.0);
  if (n == 1) {
    x[0] = e[0];
    return std::abs(y[0] - e[0]);
  }
  const std::size_t last = n - 1;
  if (y[last] > 0.0) {
    // Drop zero components except the last one; they have zero foot coordinate.
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i)
      if (y[i] > 0.0) active.push_back(i);
    std::vector<double> ea, ya;
    for (auto i : active) {
      ea.push_back(e[i]);
      ya.push_back(y[i]);
    }
    const double t = ellipsoid_root(ea, ya);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = (y[i] > 0.0) ? e[i] * e[i] * y[i] / (t + e[i] * e[i]) : 0.0;
      d2 += (x[i] - y[i]) * (x[i] - y[i]);
    }
    return std::sqrt(d2);
  }
  // y[last] == 0: the foot point may leave the hyperplane x_last = 0.
  double sum = 0.0;
  bool inside_case = true;
  std::vector<double> xde(last);
  for (std::size_t i = 0; i < last; ++i) {
    const double denom = e[i] * e[i] - e[last] * e[last];
    const double numer = e[i] * y[i];
    if (denom <= 0.0 || numer >= denom) {
      inside_case = false;
      break;
    }
    xde[i] = numer / denom;
    sum += xde[i] * xde[i];
  }
  if (inside_case && sum < 1.0) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < last; ++i) {
      x[i] = e[i] * xde[i];
      d2 += (x[i] - y[i]) * (x[i] - y[i]);
    }
    x[last] = e[last] * std::sqrt(1.0 - sum);
    d2 += x[last] * x[last];
    return std::sqrt(d2);
  }
  std::vector<double> e2(e.begin(), e.begin() + static_cast<long>(last));
  std::vector<double> y2(y.begin(), y.begin() + static_cast<long>(last));
  std::vector<double> x2;
  const double d = orthant_distance(e2, y2, x2);
  for (std::size_t i = 0; i < last; ++i) x[i] = x2[i];
  x[last] = 0.0;
  return d;
}

}  // namespace

double unit_ball_volume(int dim) {
  check_dim(dim);
  return dim == 2 ? pi : 4.0 * pi / 3.0;
}

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::ball: return "ball";
    case DomainKind::ellipsoid: return "ellipsoid";
    case DomainKind::annulus: return "annulus";
    case DomainKind::union_of_balls: return "union_of_balls";
  }
  return "unknown";
}

DomainSpec DomainSpec::ball(int dim, const Vec& center, double radius) {
  check_dim(dim);
  if (!(radius > 0.0)) throw invalid_input("ball radius must be positive");
  DomainSpec s;
  s.kind_ = DomainKind::ball;
  s.dim_ = dim;
  s.center_ = planar(center, dim);
  s.radius_ = radius;
  return s;
}

DomainSpec DomainSpec::ellipsoid(int dim, const Vec& center, const Vec& axis_coefficients) {
  check_dim(dim);
  for (int i = 0; i < dim; ++i)
    if (!(axis_coefficients[i] > 0.0)) throw invalid_input("ellipsoid coefficients must be positive");
  DomainSpec s;
  s.kind_ = DomainKind::ellipsoid;
  s.dim_ = dim;
  s.center_ = planar(center, dim);
  s.axis_coefficients_ = axis_coefficients;
  if (dim == 2) s.axis_coefficients_.z() = 1.0;
  return s;
}

DomainSpec DomainSpec::ellipsoid_from_semi_axes(int dim, const Vec& center, const Vec& semi_axes) {
  check_dim(dim);
  Vec a = Vec::Ones();
  for (int i = 0; i < dim; ++i) {
    if (!(semi_axes[i] > 0.0)) throw invalid_input("ellipsoid semi-axes must be positive");
    a[i] = 1.0 / semi_axes[i];
  }
  return ellipsoid(dim, center, a);
}

DomainSpec DomainSpec::annulus(int dim, const Vec& center, double inner_radius, double outer_radius) {
  check_dim(dim);
  if (!(inner_radius > 0.0)) throw invalid_input("annulus inner radius must be positive");
  if (!(outer_radius > inner_radius)) throw invalid_input("annulus requires R > r");
  DomainSpec s;
  s.kind_ = DomainKind::annulus;
  s.dim_ = dim;
  s.center_ = planar(center, dim);
  s.inner_radius_ = inner_radius;
  s.outer_radius_ = outer_radius;
  return s;
}

DomainSpec DomainSpec::union_of_balls(int dim, std::vector<Ball> components) {
  check_dim(dim);
  if (components.empty()) throw invalid_input("union_of_balls needs at least one component");
  for (auto& b : components) {
    if (!(b.radius > 0.0)) throw invalid_input("union component radius must be positive");
    b.center = planar(b.center, dim);
  }
  DomainSpec s;
  s.kind_ = DomainKind::union_of_balls;
  s.dim_ = dim;
  s.components_ = std::move(components);
  return s;
}

Vec DomainSpec::semi_axes() const {
  Vec e = Vec::Zero();
  for (int i = 0; i < dim_; ++i) e[i] = 1.0 / axis_coefficients_[i];
  return e;
}

bool DomainSpec::contains(const Vec& x) const {
  switch (kind_) {
    case DomainKind::ball: return norm_dim(x - center_, dim_) < radius_;
    case DomainKind::ellipsoid: {
      double q = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const double t = axis_coefficients_[i] * (x[i] - center_[i]);
        q += t * t;
      }
      return q < 1.0;
    }
    case DomainKind::annulus: {
      const double r = norm_dim(x - center_, dim_);
      return r > inner_radius_ && r < outer_radius_;
    }
    case DomainKind::union_of_balls:
      return std::any_of(components_.begin(), components_.end(),
                         [&](const Ball& b) { return norm_dim(x - b.center, dim_) < b.radius; });
  }
  return false;
}

double DomainSpec::signed_distance(const Vec& x) const {
  double d = 0.0;
  switch (kind_) {
    case DomainKind::ball: d = norm_dim(x - center_, dim_) - radius_; break;
    case DomainKind::ellipsoid: d = ellipsoid_distance(dim_, semi_axes(), planar(x - center_, dim_)); break;
    case DomainKind::annulus: {
      const double r = norm_dim(x - center_, dim_);
      d = std::max(r - outer_radius_, inner_radius_ - r);
      break;
    }
    case DomainKind::union_of_balls: {
      d = std::numeric_limits<double>::infinity();
      for (const auto& b : components_) d = std::min(d, norm_dim(x - b.center, dim_) - b.radius);
      break;
    }
  }
  const double mag = std::abs(d);
  return contains(x) ? -mag : mag;
}

Vec DomainSpec::outward_normal(const Vec& x) const {
  Vec n = Vec::Zero();
  switch (kind_) {
    case DomainKind::ball: n = x - center_; break;
    case DomainKind::ellipsoid:
      for (int i = 0; i < dim_; ++i)
        n[i] = axis_coefficients_[i] * axis_coefficients_[i] * (x[i] - center_[i]);
      break;
    case DomainKind::annulus: {
      const Vec r = planar(x - center_, dim_);
      const double rn = r.norm();
      n = (std::abs(rn - outer_radius_) <= std::abs(rn - inner_radius_)) ? r : Vec(-r);
      break;
    }
    case DomainKind::union_of_balls: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : components_) {
        const double g = std::abs(norm_dim(x - b.center, dim_) - b.radius);
        if (g < best) {
          best = g;
          n = x - b.center;
        }
      }
      break;
    }
  }
  n = planar(n, dim_);
  const double len = n.norm();
  if (len == 0.0) throw invalid_input("outward normal undefined at the center");
  return n / len;
}

AxisBox DomainSpec::bounding_box() const {
  AxisBox box;
  Vec half = Vec::Zero();
  switch (kind_) {
    case DomainKind::ball: half.setConstant(radius_); break;
    case DomainKind::ellipsoid: half = semi_axes(); break;
    case DomainKind::annulus: half.setConstant(outer_radius_); break;
    case DomainKind::union_of_balls: {
      box.lo.setConstant(std::numeric_limits<double>::infinity());
      box.hi.setConstant(-std::numeric_limits<double>::infinity());
      for (const auto& b : components_) {
        box.lo = box.lo.cwiseMin(b.center - Vec::Constant(b.radius));
        box.hi = box.hi.cwiseMax(b.center + Vec::Constant(b.radius));
      }
      if (dim_ == 2) box.lo.z() = box.hi.z() = 0.0;
      return box;
    }
  }
  half = planar(half, dim_);
  box.lo = center_ - half;
  box.hi = center_ + half;
  return box;
}

double DomainSpec::extent() const {
  const AxisBox b = bounding_box();
  double e = 0.0;
  for (int i = 0; i < dim_; ++i) e = std::max(e, b.hi[i] - b.lo[i]);
  return e;
}

Vec DomainSpec::centroid() const {
  if (kind_ != DomainKind::union_of_balls) return center_;
  // Volume-weighted centroid by inclusion over a fine lattice.
  const AxisBox b = bounding_box();
  const int n = dim_ == 2 ? 400 : 100;
  const double h = extent() / n;
  Vec sum = Vec::Zero();
  double count = 0.0;
  const int nz = dim_ == 2 ? 1 : static_cast<int>(std::ceil((b.hi.z() - b.lo.z()) / h));
  const int nx = static_cast<int>(std::ceil((b.hi.x() - b.lo.x()) / h));
  const int ny = static_cast<int>(std::ceil((b.hi.y() - b.lo.y()) / h));
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        Vec x(b.lo.x() + (i + 0.5) * h, b.lo.y() + (j + 0.5) * h, dim_ == 2 ? 0.0 : b.lo.z() + (k + 0.5) * h);
        if (contains(x)) {
          sum += x;
          count += 1.0;
        }
      }
  return sum / count;
}

std::vector<Vec> DomainSpec::cavity_centers() const {
  if (kind_ == DomainKind::annulus) return {center_};
  return {};
}

double ellipsoid_distance(int dim, const Vec& semi_axes, const Vec& y, Vec* foot) {
  // Reflect into the positive orthant and sort axes in descending order.
  std::vector<int> order(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return semi_axes[a] > semi_axes[b]; });
  std::vector<double> e, ya;
  for (int i : order) {
    e.push_back(semi_axes[i]);
    ya.push_back(std::abs(y[i]));
  }
  std::vector<double> x;
  const double d = orthant_distance(e, ya, x);
  if (foot) {
    foot->setZero();
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int i = order[k];
      (*foot)[i] = std::copysign(x[k], y[i]);
    }
  }
  return d;
}

double volume(const DomainSpec& spec) {
  const int n = spec.dim();
  const double kappa = unit_ball_volume(n);
  switch (spec.kind()) {
    case DomainKind::ball: return kappa * std::pow(spec.radius(), n);
    case DomainKind::ellipsoid: {
      double v = kappa;
      for (int i = 0; i < n; ++i) v /= spec.axis_coefficients()[i];
      return v;
    }
    case DomainKind::annulus:
      return kappa * (std::pow(spec.outer_radius(), n) - std::pow(spec.inner_radius(), n));
    case DomainKind::union_of_balls: {
      // Midpoint lattice with signed-distance sub-cell correction.
      const AxisBox b = spec.bounding_box();
      const int res = n == 2 ? 2000 : 240;
      const double h = spec.extent() / res;
      const int nx = static_cast<int>(std::ceil((b.hi.x() - b.lo.x()) / h)) + 2;
      const int ny = static_cast<int>(std::ceil((b.hi.y() - b.lo.y()) / h)) + 2;
      const int nz = n == 2 ? 1 : static_cast<int>(std::ceil((b.hi.z() - b.lo.z()) / h)) + 2;
      double v = 0.0;
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
          for (int k = 0; k < nz; ++k) {
            Vec x(b.lo.x() + (i - 0.5) * h, b.lo.y() + (j - 0.5) * h, n == 2 ? 0.0 : b.lo.z() + (k - 0.5) * h);
            v += std::clamp(0.5 - spec.signed_distance(x) / h, 0.0, 1.0);
          }
      return v * std::pow(h, n);
    }
  }
  return 0.0;
}

double surface_area(const DomainSpec& spec) {
  using boost::math::quadrature::gauss_kronrod;
  const int n = spec.dim();
  switch (spec.kind()) {
    case DomainKind::ball: return n * unit_ball_volume(n) * std::pow(spec.radius(), n - 1);
    case DomainKind::annulus:
      return n * unit_ball_volume(n) * (std::pow(spec.outer_radius(), n - 1) + std::pow(spec.inner_radius(), n - 1));
    case DomainKind::ellipsoid: {
      const Vec e = spec.semi_axes();
      if (n == 2) {
        auto f = [&](double t) { return std::hypot(e.x() * std::sin(t), e.y() * std::cos(t)); };
        return 4.0 * gauss_kronrod<double, 61>::integrate(f, 0.0, pi / 2, 20, 1e-14);
      }
      // Octant of the (theta, phi) parameterization, times 8.
      auto inner = [&](double theta) {
        const double st = std::sin(theta), ct = std::cos(theta);
        auto g = [&](double phi) {
          const double cp = std::cos(phi), sp = std::sin(phi);
          const double a = e.y() * e.z() * st * cp;
          const double b = e.x() * e.z() * st * sp;
          const double c = e.x() * e.y() * ct;
          return st * std::sqrt(a * a + b * b + c * c);
        };
        return gauss_kronrod<double, 61>::integrate(g, 0.0, pi / 2, 20, 1e-14);
      };
      return 8.0 * gauss_kronrod<double, 61>::integrate(inner, 0.0, pi / 2, 20, 1e-14);
    }
    case DomainKind::union_of_balls:
      throw unsupported("surface_area is defined for ball, ellipsoid and annulus only");
  }
  return 0.0;
}

double equivalent_radius(double vol, int dim) {
  check_dim(dim);
  if (!(vol > 0.0)) throw invalid_input("equivalent_radius needs a positive volume");
  return std::pow(vol / unit_ball_volume(dim), 1.0 / dim);
}

namespace {

// Unit directions: uniform angles in 2D, Fibonacci sphere in 3D.
std::vector<Vec> unit_directions(int dim, int count) {
  std::vector<Vec> dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * pi * k / count;
      dirs.emplace_back(std::cos(t), std::sin(t), 0.0);
    }
  } else {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / count;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      dirs.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
    }
  }
  return dirs;
}

}  // namespace

std::vector<BoundarySample> boundary_samples(const DomainSpec& spec, int count) {
  if (count < 1) throw invalid_input("boundary_samples needs count >= 1");
  const int n = spec.dim();
  const auto dirs = unit_directions(n, count);
  std::vector<BoundarySample> out;
  switch (spec.kind()) {
    case DomainKind::ball:
      for (const auto& s : dirs) out.push_back({spec.center() + spec.radius() * s, s, 0});
      break;
    case DomainKind::ellipsoid: {
      const Vec a = spec.axis_coefficients();
      for (const auto& s : dirs) {
        Vec p = Vec::Zero(), nrm = Vec::Zero();
        for (int i = 0; i < n; ++i) {
          p[i] = s[i] / a[i];
          nrm[i] = a[i] * s[i];
        }
        out.push_back({spec.center() + p, nrm.normalized(), 0});
      }
      break;
    }
    case DomainKind::annulus:
      for (const auto& s : dirs) out.push_back({spec.center() + spec.outer_radius() * s, s, 0});
      for (const auto& s : dirs) out.push_back({spec.center() + spec.inner_radius() * s, -s, 1});
      break;
    case DomainKind::union_of_balls: {
      const auto& comps = spec.components();
      for (std::size_t c = 0; c < comps.size(); ++c) {
        for (const auto& s : dirs) {
          const Vec p = comps[c].center + comps[c].radius * s;
          bool covered = false;
          for (std::size_t o = 0; o < comps.size(); ++o) {
            if (o == c) continue;
            if ((p - comps[o].center).norm() < comps[o].radius) covered = true;
          }
          if (!covered) out.push_back({p, s, static_cast<int>(c)});
        }
      }
      break;
    }
  }
  return out;
}

namespace {

Vec vec_from_json(const nlohmann::json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw invalid_input(std::string(what) + " must be an array of " + std::to_string(dim) + " numbers");
  Vec v = Vec::Zero();
  for (int i = 0; i < dim; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw invalid_input(std::string(what) + " entries must be numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

nlohmann::json vec_to_json(const Vec& v, int dim) {
  auto arr = nlohmann::json::array();
  for (int i = 0; i < dim; ++i) arr.push_back(v[i]);
  return arr;
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw invalid_input("unknown key '" + it.key() + "' in " + where);
}

double number_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw invalid_input(std::string("missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

}  // namespace

nlohmann::json to_json(const DomainSpec& spec) {
  nlohmann::json j;
  const int n = spec.dim();
  j["kind"] = to_string(spec.kind());
  j["dim"] = n;
  switch (spec.kind()) {
    case DomainKind::ball:
      j["center"] = vec_to_json(spec.center(), n);
      j["r"] = spec.radius();
      break;
    case DomainKind::ellipsoid:
      j["center"] = vec_to_json(spec.center(), n);
      j["radii"] = vec_to_json(spec.semi_axes(), n);
      break;
    case DomainKind::annulus:
      j["center"] = vec_to_json(spec.center(), n);
      j["r"] = spec.inner_radius();
      j["R"] = spec.outer_radius();
      break;
    case DomainKind::union_of_balls: {
      auto comps = nlohmann::json::array();
      for (const auto& b : spec.components()) comps.push_back({{"center", vec_to_json(b.center, n)}, {"r", b.radius}});
      j["components"] = comps;
      break;
    }
  }
  return j;
}

DomainSpec domain_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw invalid_input("domain must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw invalid_input("domain needs a string 'kind'");
  if (!j.contains("dim") || !j.at("dim").is_number_integer()) throw invalid_input("domain needs an integer 'dim'");
  const std::string kind = j.at("kind").get<std::string>();
  const int dim = j.at("dim").get<int>();
  check_dim(dim);
  auto center = [&]() { return j.contains("center") ? vec_from_json(j.at("center"), dim, "center") : Vec(Vec::Zero()); };
  if (kind == "ball") {
    reject_unknown(j, {"kind", "dim", "center", "r", "radii"}, "ball domain");
    double r = 0.0;
    if (j.contains("r")) {
      r = number_field(j, "r");
    } else if (j.contains("radii")) {
      const auto& rr = j.at("radii");
      if (!rr.is_array() || rr.size() != 1 || !rr[0].is_number()) throw invalid_input("ball 'radii' must be [r]");
      r = rr[0].get<double>();
    } else {
      throw invalid_input("ball domain needs 'r'");
    }
    return DomainSpec::ball(dim, center(), r);
  }
  if (kind == "ellipsoid") {
    reject_unknown(j, {"kind", "dim", "center", "radii"}, "ellipsoid domain");
    if (!j.contains("radii")) throw invalid_input("ellipsoid domain needs 'radii' (semi-axes)");
    return DomainSpec::ellipsoid_from_semi_axes(dim, center(), vec_from_json(j.at("radii"), dim, "radii"));
  }
  if (kind == "annulus") {
    reject_unknown(j, {"kind", "dim", "center", "r", "R"}, "annulus domain");
    return DomainSpec::annulus(dim, center(), number_field(j, "r"), number_field(j, "R"));
  }
  if (kind == "union_of_balls") {
    reject_unknown(j, {"kind", "dim", "components"}, "union_of_balls domain");
    if (!j.contains("components") || !j.at("components").is_array())
      throw invalid_input("union_of_balls needs a 'components' array");
    std::vector<Ball> balls;
    for (const auto& c : j.at("components")) {
      if (!c.is_object()) throw invalid_input("union component must be an object");
      reject_unknown(c, {"center", "r"}, "union component");
      Ball b;
      b.center = c.contains("center") ? vec_from_json(c.at("center"), dim, "center") : Vec(Vec::Zero());
      b.radius = number_field(c, "r");
      balls.push_back(b);
    }
    return DomainSpec::union_of_balls(dim, std::move(balls));
  }
  throw invalid_input("unknown domain kind '" + kind + "'");
}

}  // namespace balayage
