#include "balayage/oracles.hpp"

#include "balayage/error.hpp"

#include <cmath>
#include <numbers>

namespace balayage {

std::optional<double> oracle_lambda1(const DomainSpec& spec) {
  const int N = spec.dim();
  switch (spec.kind()) {
    case DomainKind::ball:
      return spec.radius();
    case DomainKind::ellipsoid:
      return N / spec.axis_coefficients().head(N).sum();
    case DomainKind::annulus: {
      const double R = spec.outer_radius(), r = spec.inner_radius();
      if (N == 2) return R - r;
      return (std::pow(R, N) - std::pow(r, N)) / (std::pow(R, N - 1) + std::pow(r, N - 1));
    }
    case DomainKind::union_of_balls:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<AnalyticField> oracle_minimizer(const DomainSpec& spec) {
  const int N = spec.dim();
  const Vec c = spec.center();
  auto centered = [c, N](const Vec& x) {
    Vec y = x - c;
    if (N == 2) y.z() = 0.0;
    return y;
  };
  AnalyticField f;
  f.dim = N;
  switch (spec.kind()) {
    case DomainKind::ball:
      f.description = "|x - c|^2 / 2";
      f.value = [=](const Vec& x) { return 0.5 * centered(x).squaredNorm(); };
      f.gradient = [=](const Vec& x) { return centered(x); };
      return f;
    case DomainKind::ellipsoid: {
      Vec a = spec.axis_coefficients();
      if (N == 2) a.z() = 0.0;
      const double k = N / a.sum();
      f.description = "(N / (2 sum a)) sum a_i (x_i - c_i)^2";
      f.value = [=](const Vec& x) {
        const Vec y = centered(x);
        return 0.5 * k * a.dot(y.cwiseProduct(y));
      };
      f.gradient = [=](const Vec& x) { return Vec(k * a.cwiseProduct(centered(x))); };
      return f;
    }
    case DomainKind::annulus: {
      const double R = spec.outer_radius(), r = spec.inner_radius();
      if (N == 2) {
        const double k = R * r;
        f.description = "|x - c|^2 / 2 + R r log(1 / |x - c|)";
        f.value = [=](const Vec& x) {
          const double s = centered(x).norm();
          return 0.5 * s * s - k * std::log(s);
        };
        f.gradient = [=](const Vec& x) {
          const Vec y = centered(x);
          return Vec(y * (1.0 - k / y.squaredNorm()));
        };
      } else {
        const double k = (R + r) / ((N - 2) * (std::pow(R, 1 - N) + std::pow(r, 1 - N)));
        f.description = "|x - c|^2 / 2 + ((R + r) / ((N - 2)(R^(1-N) + r^(1-N)))) |x - c|^(2-N)";
        f.value = [=](const Vec& x) {
          const double s = centered(x).norm();
          return 0.5 * s * s + k * std::pow(s, 2 - N);
        };
        f.gradient = [=](const Vec& x) {
          const Vec y = centered(x);
          const double s = y.norm();
          return Vec(y * (1.0 - k * (N - 2) * std::pow(s, -N)));
        };
      }
      return f;
    }
    case DomainKind::union_of_balls:
      return std::nullopt;
  }
  return std::nullopt;
}

AnalyticField counterexample_field(int dim) {
  if (dim != 3) throw invalid_input("the counterexample needs N >= 3; only N = 3 is supported");
  const double k = dim / (2.0 * (dim - 2));
  AnalyticField f;
  f.dim = dim;
  f.description = "(N / (2 (N - 2))) (x_1^2 + x_2^2 - x_3^2)";
  f.value = [k](const Vec& x) { return k * (x.x() * x.x() + x.y() * x.y() - x.z() * x.z()); };
  f.gradient = [k](const Vec& x) { return Vec(2 * k * x.x(), 2 * k * x.y(), -2 * k * x.z()); };
  return f;
}

Bounds bounds(const DomainSpec& spec) {
  Bounds b;
  const double V = volume(spec);
  b.upper = equivalent_radius(V, spec.dim());
  if (spec.kind() != DomainKind::union_of_balls) b.lower = spec.dim() * V / surface_area(spec);
  return b;
}

std::pair<double, double> planar_analytic_content_bounds(const DomainSpec& spec) {
  if (spec.dim() != 2) throw invalid_input("analytic content bounds are planar only");
  const double A = volume(spec);
  return {2.0 * A / surface_area(spec), std::sqrt(A / std::numbers::pi)};
}

OracleRecord oracle(const DomainSpec& spec) {
  OracleRecord rec{spec, oracle_lambda1(spec), "", std::nullopt, 0.0, oracle_minimizer(spec)};
  if (rec.lambda1)
    rec.lambda1_source = spec.kind() == DomainKind::annulus && spec.dim() == 2 ? "derived" : "closed_form";
  const auto b = bounds(spec);
  rec.lower_bound = b.lower;
  rec.upper_bound = b.upper;
  return rec;
}

nlohmann::json to_json(const OracleRecord& record) {
  nlohmann::json j;
  j["spec"] = to_json(record.spec);
  j["lambda1"] = record.lambda1 ? nlohmann::json(*record.lambda1) : nlohmann::json(nullptr);
  if (record.lambda1) j["lambda1_source"] = record.lambda1_source;
  j["lower_bound"] = record.lower_bound ? nlohmann::json(*record.lower_bound) : nlohmann::json(nullptr);
  j["upper_bound"] = record.upper_bound;
  j["minimizer"] = record.minimizer ? nlohmann::json(record.minimizer->description) : nlohmann::json(nullptr);
  return j;
}

}  // namespace balayage
