#pragma once

#include "balayage/harmonic_basis.hpp"

#include <vector>

namespace balayage {

/// F(c) = max_i |x_i - sum_j c_j grad h_j(x_i)| and its p-norm surrogates,
/// in coordinates where every basis column has unit RMS gradient norm over
/// the sample points.
class SupObjective {
 public:
  SupObjective(const HarmonicBasis& basis, const std::vector<Vec>& points);

  std::size_t size() const { return static_cast<std::size_t>(A_.cols()); }
  std::size_t samples() const { return points_.size(); }
  /// Normalized coordinates to basis coefficients.
  Eigen::VectorXd native(const Eigen::VectorXd& y) const { return y.cwiseQuotient(scale_); }
  const Eigen::VectorXd& scales() const { return scale_; }

  std::vector<double> residuals(const Eigen::VectorXd& y) const;
  double max_residual(const Eigen::VectorXd& y) const;
  /// (sum_i |r_i|^p)^(1/p), evaluated with max scaling; optional gradient.
  /// Also returns the true max residual through `true_max`.
  double smooth(const Eigen::VectorXd& y, double p, Eigen::VectorXd* grad = nullptr, double* true_max = nullptr) const;

 private:
  int dim_;
  std::vector<Vec> points_;
  Eigen::MatrixXd A_;  // (dim * samples) x size, normalized columns
  Eigen::VectorXd target_;
  Eigen::VectorXd scale_;
};

struct StageRecord {
  double p = 0.0;
  double surrogate = 0.0;
  double true_max = 0.0;  // best true max seen up to the end of this stage
  int iterations = 0;
};

struct Lambda1Options {
  int degree = 8;
  int pole_degree = -1;
  int boundary_count = 0;  // per component; 0 picks at least 8 samples per basis function
  std::vector<double> p_stages{2, 4, 8, 16, 32, 64, 128};
  int max_iterations = 2000;  // per stage
  double stage_tolerance = 1e-10;
  int interior_samples = 400;
  /// Basis coefficients to start from (empty: h = 0, the ball minimizer).
  Eigen::VectorXd warm_start;
};

struct Lambda1Result {
  double value = 0.0;        // max residual over the optimization samples
  double certificate = 0.0;  // max residual over those samples and a 4x denser set
  double interior_max = 0.0; // max residual over interior samples (post hoc)
  int degree = 0;
  Eigen::VectorXd coefficients;  // basis coefficients of h
  std::vector<Vec> samples;
  std::vector<double> residuals;
  std::vector<StageRecord> stages;
};

/// Minimizes F over the span of the basis by the p-norm homotopy with
/// L-BFGS steps and Armijo backtracking, warm-starting each stage. The
/// reported value is the true max at the best iterate. `dense` (optional)
/// feeds the certificate.
Lambda1Result minimize_sup(const HarmonicBasis& basis, const std::vector<Vec>& samples, const Lambda1Options& options = {},
                           const std::vector<Vec>& dense = {});

/// Basis, boundary samples, certificate and interior check for a spec.
Lambda1Result estimate_lambda1(const DomainSpec& spec, const Lambda1Options& options = {});

/// Carries coefficients between bases of the same spec by function label;
/// functions absent from `from` get zero.
Eigen::VectorXd embed_coefficients(const HarmonicBasis& from, const Eigen::VectorXd& c, const HarmonicBasis& to);

/// Sample count per boundary component used by estimate_lambda1.
int default_boundary_count(const DomainSpec& spec, const HarmonicBasis& basis);

}  // namespace balayage
