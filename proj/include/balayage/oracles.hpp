#pragma once

#include "balayage/geometry.hpp"

#include <functional>
#include <optional>
#include <string>

namespace balayage {

/// A closed-form function u with its gradient, Delta u = N identically.
struct AnalyticField {
  std::string description;
  int dim = 2;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

struct OracleRecord {
  DomainSpec spec;
  std::optional<double> lambda1;
  std::string lambda1_source;  // "closed_form", or "derived" for the planar annulus analog
  std::optional<double> lower_bound;  // N V / P; absent when P is unsupported
  double upper_bound = 0.0;           // r_Omega
  std::optional<AnalyticField> minimizer;
};

/// Ball r; ellipsoid sum a_i^2 x_i^2 < 1 gives N / sum a_i; annulus
/// (R^N - r^N) / (R^(N-1) + r^(N-1)) for N >= 3 and R - r for N = 2.
std::optional<double> oracle_lambda1(const DomainSpec& spec);

/// Minimizer u with Delta u = N for balls, ellipsoids and annuli.
std::optional<AnalyticField> oracle_minimizer(const DomainSpec& spec);

/// u = (N / (2 (N - 2))) (sum_{i<N} x_i^2 - x_N^2) on the unit ball, N = 3:
/// constant boundary gradient norm N / (N - 2) = 3 without being a minimizer.
AnalyticField counterexample_field(int dim = 3);

struct Bounds {
  std::optional<double> lower;
  double upper = 0.0;
};

/// (N V / P, r_Omega).
Bounds bounds(const DomainSpec& spec);

/// (2A / P, sqrt(A / pi)) for planar domains.
std::pair<double, double> planar_analytic_content_bounds(const DomainSpec& spec);

OracleRecord oracle(const DomainSpec& spec);

nlohmann::json to_json(const OracleRecord& record);

}  // namespace balayage
