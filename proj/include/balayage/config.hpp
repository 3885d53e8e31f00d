#pragma once

#include "balayage/fields.hpp"
#include "balayage/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace balayage {

struct Tolerances {
  double complementarity = 1e-8;  // partial balayage max-norm residual
  double optimizer = 1e-10;       // relative stage-to-stage improvement of the minimax solver
  double verification = 1e-3;     // slack of the suite inequalities
};

struct DensityPatch {
  DomainSpec domain;
  double density = 0.0;
};

/// mu = sum of atoms and constant-density patches, swept onto nu = nu_density m|_O.
struct BalayageConfig {
  std::optional<double> nu_density;  // default N
  std::vector<PointAtom> atoms;
  std::vector<DensityPatch> patches;
};

struct RunConfig {
  std::optional<DomainSpec> domain;
  int resolution = 96;
  int degree = 8;
  int boundary_samples = 0;  // per component; 0 lets the solver choose
  int transport_n = 2000;
  std::uint64_t seed = 0;
  std::string output = "out";
  Tolerances tolerances;
  BalayageConfig balayage;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise invalid_input.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// The effective configuration with every default filled in.
nlohmann::json to_json(const RunConfig& config);

/// Rejects annulus gaps thinner than 4h at the configured resolution.
void check_resolvable(const DomainSpec& spec, int resolution);

}  // namespace balayage
