#include "balayage/lambda1.hpp"

#include "balayage/error.hpp"
#include "balayage/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace balayage {

SupObjective::SupObjective(const HarmonicBasis& basis, const std::vector<Vec>& points)
    : dim_(basis.dim()), points_(points) {
  const auto S = static_cast<Eigen::Index>(points.size());
  const auto M = static_cast<Eigen::Index>(basis.size());
  const Eigen::Index N = dim_;
  A_.resize(N * S, M);
  target_.resize(N * S);
  for (Eigen::Index i = 0; i < S; ++i) {
    const Vec& x = points[static_cast<std::size_t>(i)];
    const Eigen::Matrix3Xd g = basis.gradients(x);
    A_.middleRows(i * N, N) = g.topRows(N);
    target_.segment(i * N, N) = x.head(N);
  }
  scale_.resize(M);
  for (Eigen::Index j = 0; j < M; ++j) {
    const double rms = std::sqrt(A_.col(j).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(S, 1)));
    scale_(j) = rms > 0.0 ? rms : 1.0;
    A_.col(j) /= scale_(j);
  }
}

std::vector<double> SupObjective::residuals(const Eigen::VectorXd& y) const {
  const Eigen::VectorXd r = target_ - A_ * y;
  std::vector<double> out(points_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.segment(static_cast<Eigen::Index>(i) * dim_, dim_).norm();
  return out;
}

double SupObjective::max_residual(const Eigen::VectorXd& y) const {
  const auto r = residuals(y);
  return *std::max_element(r.begin(), r.end());
}

double SupObjective::smooth(const Eigen::VectorXd& y, double p, Eigen::VectorXd* grad, double* true_max) const {
  const Eigen::VectorXd r = target_ - A_ * y;
  const std::size_t S = points_.size();
  std::vector<double> s(S);
  double m = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    s[i] = r.segment(static_cast<Eigen::Index>(i) * dim_, dim_).norm();
    m = std::max(m, s[i]);
  }
  if (true_max) *true_max = m;
  if (m == 0.0) {
    if (grad) *grad = Eigen::VectorXd::Zero(A_.cols());
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < S; ++i) sum += std::pow(s[i] / m, p);
  const double T = std::pow(sum, 1.0 / p);
  if (grad) {
    Eigen::VectorXd w(r.size());
    for (std::size_t i = 0; i < S; ++i) {
      const double t = s[i] / m;
      const double f = p == 2.0 ? 1.0 : (t > 0.0 ? std::pow(t, p - 2.0) : 0.0);
      w.segment(static_cast<Eigen::Index>(i) * dim_, dim_) = f * r.segment(static_cast<Eigen::Index>(i) * dim_, dim_);
    }
    *grad = -(std::pow(T, 1.0 - p) / m) * (A_.transpose() * w);
  }
  return m * T;
}

namespace {

struct StageOutcome {
  Eigen::VectorXd y;
  double surrogate = 0.0;
  int iterations = 0;
};

// L-BFGS with Armijo backtracking on one surrogate; reports every accepted
// iterate's true max through `observe`.
template <class Observe>
StageOutcome lbfgs_stage(const SupObjective& obj, Eigen::VectorXd y, double p, int max_iterations, Observe&& observe) {
  constexpr int memory = 10;
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  Eigen::VectorXd g;
  double tm = 0.0;
  double f = obj.smooth(y, p, &g, &tm);
  observe(y, tm);
  int it = 0, stalls = 0;
  for (; it < max_iterations; ++it) {
    if (!std::isfinite(f)) {
      std::ostringstream msg;
      msg << "surrogate objective became non-finite at p = " << p;
      throw non_convergence(msg.str());
    }
    if (g.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, f)) break;
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * S[k].dot(q);
      q -= alpha[k] * Y[k];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * Y[k].dot(q);
      q += (alpha[k] - beta) * S[k];
    }
    Eigen::VectorXd d = -q;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -g.squaredNorm();
      S.clear();
      Y.clear();
      rho.clear();
    }
    double t = S.empty() ? std::min(1.0, f / std::max(g.norm(), 1e-300)) : 1.0;
    Eigen::VectorXd yn, gn;
    double fn = 0.0, tmn = 0.0;
    bool accepted = false;
    while (t > 1e-20) {
      yn = y + t * d;
      fn = obj.smooth(yn, p, &gn, &tmn);
      if (fn <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (S.empty()) break;  // steepest descent cannot improve: numerical floor
      S.clear();
      Y.clear();
      rho.clear();
      continue;
    }
    observe(yn, tmn);
    const Eigen::VectorXd s = yn - y, yy = gn - g;
    const double sy = s.dot(yy);
    if (sy > 1e-16 * s.norm() * yy.norm()) {
      S.push_back(s);
      Y.push_back(yy);
      rho.push_back(1.0 / sy);
      if (S.size() > memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    stalls = (f - fn) <= 1e-15 * std::abs(f) ? stalls + 1 : 0;
    y = yn;
    g = gn;
    f = fn;
    if (stalls >= 3) break;
  }
  return {y, f, it};
}

}  // namespace

Lambda1Result minimize_sup(const HarmonicBasis& basis, const std::vector<Vec>& samples, const Lambda1Options& options,
                           const std::vector<Vec>& dense) {
  if (samples.size() < 8 * basis.size()) {
    std::ostringstream msg;
    msg << "need at least 8 boundary samples per basis function (" << samples.size() << " for " << basis.size() << ")";
    throw invalid_input(msg.str());
  }
  const SupObjective obj(basis, samples);
  Eigen::VectorXd best_y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(obj.size()));
  if (options.warm_start.size() > 0) {
    if (options.warm_start.size() != best_y.size()) throw invalid_input("warm start does not match the basis size");
    best_y = options.warm_start.cwiseProduct(obj.scales());
  }
  double best = obj.max_residual(best_y);
  auto observe = [&](const Eigen::VectorXd& y, double tm) {
    if (tm < best) {
      best = tm;
      best_y = y;
    }
  };

  Lambda1Result out;
  out.degree = basis.degree();
  Eigen::VectorXd y = best_y;
  double previous = best;  // true max at the previous stage optimum
  for (std::size_t k = 0; k < options.p_stages.size(); ++k) {
    const double p = options.p_stages[k];
    const auto stage = lbfgs_stage(obj, y, p, options.max_iterations, observe);
    const double stage_max = obj.max_residual(stage.y);
    const bool moved = (stage.y - y).norm() > 0.0;
    y = stage.y;
    out.stages.push_back({p, stage.surrogate, best, stage.iterations});
    if (k > 0 && (!moved || std::abs(previous - stage_max) <= options.stage_tolerance * previous)) break;
    previous = stage_max;
  }

  out.coefficients = obj.native(best_y);
  out.samples = samples;
  out.residuals = obj.residuals(best_y);
  out.value = *std::max_element(out.residuals.begin(), out.residuals.end());
  out.certificate = out.value;
  for (const auto& x : dense) out.certificate = std::max(out.certificate, (x - basis.gradient(out.coefficients, x)).norm());
  return out;
}

Eigen::VectorXd embed_coefficients(const HarmonicBasis& from, const Eigen::VectorXd& c, const HarmonicBasis& to) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(to.size()));
  const auto& src = from.labels();
  const auto& dst = to.labels();
  for (std::size_t j = 0; j < src.size(); ++j) {
    const auto it = std::find(dst.begin(), dst.end(), src[j]);
    if (it != dst.end()) out(it - dst.begin()) = c(static_cast<Eigen::Index>(j));
  }
  return out;
}

int default_boundary_count(const DomainSpec& spec, const HarmonicBasis& basis) {
  const int components = spec.kind() == DomainKind::annulus ? 2 : 1;
  const int needed = static_cast<int>(8 * basis.size());
  int count = std::max(spec.dim() == 2 ? 256 : 800, (needed + components - 1) / components);
  while (static_cast<int>(boundary_samples(spec, count).size()) < needed) count = count * 5 / 4 + 1;
  return count;
}

Lambda1Result estimate_lambda1(const DomainSpec& spec, const Lambda1Options& options) {
  const HarmonicBasis basis(spec, options.degree, options.pole_degree);
  const int count = options.boundary_count > 0 ? options.boundary_count : default_boundary_count(spec, basis);
  std::vector<Vec> pts, dense;
  for (const auto& s : boundary_samples(spec, count)) pts.push_back(s.point);
  for (const auto& s : boundary_samples(spec, 4 * count)) dense.push_back(s.point);
  auto res = minimize_sup(basis, pts, options, dense);
  if (options.interior_samples > 0) {
    for (const auto& x : sample_uniform(spec, options.interior_samples, 0).points)
      res.interior_max = std::max(res.interior_max, (x - basis.gradient(res.coefficients, x)).norm());
  }
  return res;
}

}  // namespace balayage
