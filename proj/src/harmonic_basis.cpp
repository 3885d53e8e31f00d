#include "balayage/harmonic_basis.hpp"

#include "balayage/error.hpp"

#include <array>
#include <cmath>
#include <complex>

namespace balayage {

namespace {

using cd = std::complex<double>;

// Complex value with its three partial derivatives.
struct Dual {
  cd v{0.0, 0.0};
  std::array<cd, 3> d{};
};

Dual operator*(const Dual& a, const Dual& b) {
  Dual r;
  r.v = a.v * b.v;
  for (int k = 0; k < 3; ++k) r.d[static_cast<std::size_t>(k)] = a.d[static_cast<std::size_t>(k)] * b.v + a.v * b.d[static_cast<std::size_t>(k)];
  return r;
}
Dual operator*(const Dual& a, double s) {
  Dual r = a;
  r.v *= s;
  for (auto& x : r.d) x *= s;
  return r;
}
Dual operator-(const Dual& a, const Dual& b) {
  Dual r = a;
  r.v -= b.v;
  for (int k = 0; k < 3; ++k) r.d[static_cast<std::size_t>(k)] -= b.d[static_cast<std::size_t>(k)];
  return r;
}

// Regular solid harmonics R_l^m, 0 <= m <= l <= d, at xi, by the standard recurrences.
std::vector<std::vector<Dual>> solid_harmonics(const Vec& xi, int d) {
  Dual X, Y, Z, XY;
  X.v = xi.x();
  X.d[0] = 1.0;
  Y.v = xi.y();
  Y.d[1] = 1.0;
  Z.v = xi.z();
  Z.d[2] = 1.0;
  XY.v = cd(xi.x(), xi.y());
  XY.d[0] = 1.0;
  XY.d[1] = cd(0.0, 1.0);
  const Dual r2 = [&] {
    Dual s;
    s.v = xi.squaredNorm();
    for (int k = 0; k < 3; ++k) s.d[static_cast<std::size_t>(k)] = 2.0 * xi[k];
    return s;
  }();
  std::vector<std::vector<Dual>> R(static_cast<std::size_t>(d + 1));
  for (int l = 0; l <= d; ++l) R[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(l + 1));
  auto at = [&](int l, int m) -> Dual& { return R[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)]; };
  at(0, 0).v = 1.0;
  for (int m = 1; m <= d; ++m) at(m, m) = XY * at(m - 1, m - 1) * (-1.0 / (2.0 * m));
  for (int m = 0; m < d; ++m) at(m + 1, m) = Z * at(m, m);
  for (int m = 0; m <= d; ++m)
    for (int l = m + 2; l <= d; ++l)
      at(l, m) = (Z * at(l - 1, m) * (2.0 * l - 1.0) - r2 * at(l - 2, m)) * (1.0 / ((l - m) * (l + m)));
  return R;
}

}  // namespace

std::size_t interior_basis_size(int dim, int degree) {
  return dim == 2 ? static_cast<std::size_t>(2 * degree) : static_cast<std::size_t>(degree * degree + 2 * degree);
}

HarmonicBasis::HarmonicBasis(const DomainSpec& spec, int degree, int pole_degree)
    : dim_(spec.dim()), degree_(degree), center_(spec.centroid()), scale_(0.5 * spec.extent()) {
  if (degree < 2) throw invalid_input("harmonic basis degree must be at least 2");
  if (degree > 24) throw invalid_input("harmonic basis degree above 24 is too ill-conditioned");
  pole_degree_ = pole_degree < 0 ? std::min(degree, 6) : std::min(pole_degree, 24);
  poles_ = spec.cavity_centers();
  for (const auto& p : poles_)
    if (spec.contains(p)) throw invalid_input("basis pole lies inside the domain");

  for (int l = 1; l <= degree_; ++l) {
    if (dim_ == 2) {
      labels_.push_back("Re z^" + std::to_string(l));
      labels_.push_back("Im z^" + std::to_string(l));
    } else {
      labels_.push_back("R" + std::to_string(l) + ",0");
      for (int m = 1; m <= l; ++m) {
        labels_.push_back("Re R" + std::to_string(l) + "," + std::to_string(m));
        labels_.push_back("Im R" + std::to_string(l) + "," + std::to_string(m));
      }
    }
  }
  interior_size_ = labels_.size();
  for (std::size_t q = 0; q < poles_.size(); ++q) {
    const std::string tag = "pole" + std::to_string(q) + " ";
    labels_.push_back(tag + (dim_ == 2 ? "log r" : "1/r"));
    for (int l = 1; l <= pole_degree_; ++l) {
      if (dim_ == 2) {
        labels_.push_back(tag + "Re z^-" + std::to_string(l));
        labels_.push_back(tag + "Im z^-" + std::to_string(l));
      } else {
        labels_.push_back(tag + "I" + std::to_string(l) + ",0");
        for (int m = 1; m <= l; ++m) {
          labels_.push_back(tag + "Re I" + std::to_string(l) + "," + std::to_string(m));
          labels_.push_back(tag + "Im I" + std::to_string(l) + "," + std::to_string(m));
        }
      }
    }
  }
}

void HarmonicBasis::evaluate(const Vec& x, Eigen::VectorXd* values, Eigen::Matrix3Xd* grads) const {
  const auto M = static_cast<Eigen::Index>(size());
  Eigen::VectorXd val(M);
  Eigen::Matrix3Xd g = Eigen::Matrix3Xd::Zero(3, M);
  Eigen::Index col = 0;
  const double L = scale_;
  auto push = [&](double v, const Vec& grad_xi) {
    val(col) = v;
    g.col(col) = grad_xi / L;
    ++col;
  };

  if (dim_ == 2) {
    const cd zeta((x.x() - center_.x()) / L, (x.y() - center_.y()) / L);
    cd power = 1.0;  // zeta^(k-1)
    for (int k = 1; k <= degree_; ++k) {
      const cd deriv = static_cast<double>(k) * power;
      power *= zeta;
      push(power.real(), Vec(deriv.real(), -deriv.imag(), 0.0));
      push(power.imag(), Vec(deriv.imag(), deriv.real(), 0.0));
    }
    for (const auto& p : poles_) {
      const cd w((x.x() - p.x()) / L, (x.y() - p.y()) / L);
      const double r2 = std::norm(w);
      push(0.5 * std::log(r2), Vec(w.real() / r2, w.imag() / r2, 0.0));
      const cd inv = 1.0 / w;
      cd power_inv = 1.0;  // w^-k
      for (int k = 1; k <= pole_degree_; ++k) {
        power_inv *= inv;
        const cd deriv = -static_cast<double>(k) * power_inv * inv;
        push(power_inv.real(), Vec(deriv.real(), -deriv.imag(), 0.0));
        push(power_inv.imag(), Vec(deriv.imag(), deriv.real(), 0.0));
      }
    }
  } else {
    auto grad_of = [](const Dual& d, bool imag) {
      return imag ? Vec(d.d[0].imag(), d.d[1].imag(), d.d[2].imag()) : Vec(d.d[0].real(), d.d[1].real(), d.d[2].real());
    };
    const auto R = solid_harmonics((x - center_) / L, degree_);
    for (int l = 1; l <= degree_; ++l) {
      const auto& row = R[static_cast<std::size_t>(l)];
      push(row[0].v.real(), grad_of(row[0], false));
      for (int m = 1; m <= l; ++m) {
        const auto& h = row[static_cast<std::size_t>(m)];
        push(h.v.real(), grad_of(h, false));
        push(h.v.imag(), grad_of(h, true));
      }
    }
    for (const auto& p : poles_) {
      const Vec xi = (x - p) / L;
      const double rho2 = xi.squaredNorm(), rho = std::sqrt(rho2);
      push(1.0 / rho, -xi / (rho2 * rho));
      const auto P = solid_harmonics(xi, pole_degree_);
      for (int l = 1; l <= pole_degree_; ++l) {
        const double s = std::pow(rho, -(2 * l + 1));
        const double t = (2 * l + 1) * s / rho2;
        const auto& row = P[static_cast<std::size_t>(l)];
        auto kelvin = [&](const Dual& h, bool imag) {
          const double v = imag ? h.v.imag() : h.v.real();
          push(v * s, grad_of(h, imag) * s - t * v * xi);
        };
        kelvin(row[0], false);
        for (int m = 1; m <= l; ++m) {
          kelvin(row[static_cast<std::size_t>(m)], false);
          kelvin(row[static_cast<std::size_t>(m)], true);
        }
      }
    }
  }
  if (values) *values = std::move(val);
  if (grads) *grads = std::move(g);
}

Eigen::Matrix3Xd HarmonicBasis::gradients(const Vec& x) const {
  Eigen::Matrix3Xd g;
  evaluate(x, nullptr, &g);
  return g;
}

double HarmonicBasis::value(const Eigen::VectorXd& c, const Vec& x) const {
  Eigen::VectorXd v;
  evaluate(x, &v, nullptr);
  return v.dot(c);
}

Vec HarmonicBasis::gradient(const Eigen::VectorXd& c, const Vec& x) const { return gradients(x) * c; }

}  // namespace balayage
