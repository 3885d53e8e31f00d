#pragma once

#include "balayage/fields.hpp"
#include "balayage/oracles.hpp"

#include <cstdint>

namespace balayage {

struct MinimizerCheckOptions {
  int boundary_count = 0;     // per component; 0 picks 512 (2D) or 2000 (3D)
  int interior_samples = 0;   // 0 picks 2000 (2D) or 4000 (3D)
  double coverage_shrink = 0.05;  // covers B(0, lambda1 (1 - delta))
  double laplacian_tolerance = 1e-6;
  double constant_tolerance = 1e-3;  // relative deviation accepted as "constant"
  double value_tolerance = 1e-3;     // relative slack when comparing with lambda1
  std::uint64_t seed = 0;
};

/// Necessary (constant boundary gradient norm) and sufficient (outward
/// normal derivative) minimizer conditions, plus surjectivity of grad u onto
/// a slightly shrunk ball of radius lambda1.
struct MinimizerConditions {
  double laplacian_residual = 0.0;   // max |Delta u - N| on interior samples
  double norm_mean = 0.0;            // mean of |grad u| on the boundary
  double norm_min = 0.0;
  double norm_max = 0.0;
  double relative_deviation = 0.0;   // std / mean of |grad u| on the boundary
  bool constant_norm = false;
  double min_normal_derivative = 0.0;
  bool outward = false;              // min grad u . n >= 0
  double coverage = 0.0;
  double lambda1 = 0.0;
  bool exceeds_lambda1 = false;      // boundary norm above lambda1 beyond tolerance
  bool sufficient = false;           // constant norm and outward: u is a minimizer
  int boundary_count = 0;
  int interior_count = 0;
};

/// Rejects u (invalid_input) when the Laplacian residual exceeds tolerance.
MinimizerConditions check_minimizer_conditions(const DomainSpec& spec, const AnalyticField& u, double lambda1,
                                               const MinimizerCheckOptions& options = {});

/// Grid variant: gradients come from local fits of the field; the Laplacian
/// residual uses the star stencil on cells whose neighbors are all inside.
MinimizerConditions check_minimizer_conditions(const DomainSpec& spec, const ScalarField& u, double lambda1,
                                               const MinimizerCheckOptions& options = {});

nlohmann::json to_json(const MinimizerConditions& c);

}  // namespace balayage
