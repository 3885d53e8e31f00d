#pragma once

#include "balayage/geometry.hpp"

#include <string>
#include <vector>

namespace balayage {

/// Harmonic functions with analytic gradients, centered at the domain
/// centroid and scaled by the domain extent.
///
/// 2D: Re/Im of ((z - c)/L)^k for k = 1..d; per pole p, log|x - p| and
/// Re/Im of ((z - p)/L)^-k for k = 1..d_pole.
/// 3D: regular solid harmonics of degree 1..d (2l + 1 real functions each);
/// per pole, |x - p|^-1 and the Kelvin-inverted harmonics of degree 1..d_pole.
class HarmonicBasis {
 public:
  HarmonicBasis(const DomainSpec& spec, int degree, int pole_degree = -1);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int pole_degree() const { return pole_degree_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t interior_size() const { return interior_size_; }
  const std::vector<Vec>& poles() const { return poles_; }
  const Vec& center() const { return center_; }
  double scale() const { return scale_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Values and gradients of every function at x (grads is 3 x size()).
  void evaluate(const Vec& x, Eigen::VectorXd* values, Eigen::Matrix3Xd* grads) const;
  Eigen::Matrix3Xd gradients(const Vec& x) const;

  /// h(x) = sum_j c_j h_j(x) and its gradient.
  double value(const Eigen::VectorXd& c, const Vec& x) const;
  Vec gradient(const Eigen::VectorXd& c, const Vec& x) const;

 private:
  int dim_ = 2;
  int degree_ = 0;
  int pole_degree_ = 0;
  std::size_t interior_size_ = 0;
  Vec center_ = Vec::Zero();
  double scale_ = 1.0;
  std::vector<Vec> poles_;
  std::vector<std::string> labels_;
};

/// Number of functions for a pole-free basis: 2d in 2D, d^2 + 2d in 3D.
std::size_t interior_basis_size(int dim, int degree);

}  // namespace balayage
