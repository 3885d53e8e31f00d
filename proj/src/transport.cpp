#include "balayage/transport.hpp"

#include "balayage/error.hpp"
#include "balayage/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace balayage {

namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

// The leading Halton points are strongly correlated; sequences start after this many.
constexpr std::uint64_t burn_in = 64;

Vec halton(std::uint64_t index) { return Vec(radical_inverse(index, 2), radical_inverse(index, 3), radical_inverse(index, 5)); }

double sq(const Vec& a, const Vec& b) { return (a - b).squaredNorm(); }

}  // namespace

Vec PointCloud::centroid() const {
  Vec c = Vec::Zero();
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

PointCloud sample_uniform(const DomainSpec& spec, int n, std::uint64_t seed, double margin) {
  if (n < 1) throw invalid_input("sample size must be positive");
  AxisBox box = spec.bounding_box();
  const Vec pad = Vec::Constant(std::max(margin, 0.0));
  box.lo -= pad;
  box.hi += pad;
  if (spec.dim() == 2) box.lo.z() = box.hi.z() = 0.0;
  PointCloud cloud;
  cloud.dim = spec.dim();
  cloud.points.reserve(static_cast<std::size_t>(n));
  const std::uint64_t budget = 100 * static_cast<std::uint64_t>(n) + 100;
  std::uint64_t tried = 0;
  for (std::uint64_t k = seed + burn_in + 1; cloud.points.size() < static_cast<std::size_t>(n); ++k) {
    if (++tried > budget) {
      std::ostringstream msg;
      msg << "rejection sampling efficiency below 1% (" << cloud.points.size() << " of " << tried - 1 << " accepted)";
      throw invalid_input(msg.str());
    }
    const Vec u = halton(k);
    Vec x = box.lo + (box.hi - box.lo).cwiseProduct(u);
    if (spec.dim() == 2) x.z() = 0.0;
    const bool keep = margin > 0.0 ? spec.signed_distance(x) < margin : spec.contains(x);
    if (keep) cloud.points.push_back(x);
  }
  return cloud;
}

PointCloud sample_ball(int dim, const Vec& center, double r, int n, std::uint64_t seed) {
  if (n < 1) throw invalid_input("sample size must be positive");
  if (!(r > 0.0)) throw invalid_input("ball radius must be positive");
  PointCloud cloud;
  cloud.dim = dim;
  constexpr double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    const Vec u = halton(seed + burn_in + 1 + static_cast<std::uint64_t>(i));
    Vec x;
    if (dim == 2) {
      const double rad = r * std::sqrt(u.x()), t = 2.0 * pi * u.y();
      x = Vec(rad * std::cos(t), rad * std::sin(t), 0.0);
    } else {
      const double rad = r * std::cbrt(u.x()), z = 1.0 - 2.0 * u.y(), phi = 2.0 * pi * u.z();
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      x = rad * Vec(s * std::cos(phi), s * std::sin(phi), z);
    }
    cloud.points.push_back(center + x);
  }
  return cloud;
}

BrenierTransport solve_assignment(const PointCloud& source, const PointCloud& target) {
  const int n = static_cast<int>(source.size());
  if (n == 0 || target.size() != source.size()) throw invalid_input("assignment needs two clouds of equal nonzero size");
  if (source.dim != target.dim) throw invalid_input("clouds have different dimensions");
  const auto& X = source.points;
  const auto& Y = target.points;
  auto cost = [&](int i, int j) { return sq(X[static_cast<std::size_t>(i)], Y[static_cast<std::size_t>(j)]); };
  const double big = std::numeric_limits<double>::max();

  std::vector<int> rowsol(static_cast<std::size_t>(n), -1), colsol(static_cast<std::size_t>(n), -1);
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  auto R = [](int i) { return static_cast<std::size_t>(i); };

  if (n == 1) {
    rowsol[0] = colsol[0] = 0;
    v[0] = cost(0, 0);
  } else {
    // Column reduction.
    std::vector<int> matches(R(n), 0);
    for (int j = n - 1; j >= 0; --j) {
      double mn = cost(0, j);
      int imin = 0;
      for (int i = 1; i < n; ++i) {
        const double c = cost(i, j);
        if (c < mn) {
          mn = c;
          imin = i;
        }
      }
      v[R(j)] = mn;
      if (++matches[R(imin)] == 1) {
        rowsol[R(imin)] = j;
        colsol[R(j)] = imin;
      } else if (v[R(j)] < v[R(rowsol[R(imin)])]) {
        const int j1 = rowsol[R(imin)];
        rowsol[R(imin)] = j;
        colsol[R(j)] = imin;
        colsol[R(j1)] = -1;
      } else {
        colsol[R(j)] = -1;
      }
    }
    // Reduction transfer.
    std::vector<int> free_rows;
    for (int i = 0; i < n; ++i) {
      if (matches[R(i)] == 0) {
        free_rows.push_back(i);
      } else if (matches[R(i)] == 1) {
        const int j1 = rowsol[R(i)];
        double mn = big;
        for (int j = 0; j < n; ++j)
          if (j != j1) mn = std::min(mn, cost(i, j) - v[R(j)]);
        v[R(j1)] -= mn;
      }
    }
    // Augmenting row reduction, two passes with a guard against slow tie cycling.
    for (int pass = 0; pass < 2; ++pass) {
      std::size_t k = 0, numfree = 0;
      const std::size_t prvnumfree = free_rows.size();
      std::size_t steps = 0;
      const std::size_t guard = 10 * R(n) + 100;
      while (k < prvnumfree) {
        if (++steps > guard) {
          for (std::size_t q = k; q < prvnumfree; ++q) free_rows[numfree++] = free_rows[q];
          k = prvnumfree;
          break;
        }
        const int i = free_rows[k++];
        double umin = cost(i, 0) - v[0], usubmin = big;
        int j1 = 0, j2 = 0;
        for (int j = 1; j < n; ++j) {
          const double hval = cost(i, j) - v[R(j)];
          if (hval < usubmin) {
            if (hval >= umin) {
              usubmin = hval;
              j2 = j;
            } else {
              usubmin = umin;
              umin = hval;
              j2 = j1;
              j1 = j;
            }
          }
        }
        int i0 = colsol[R(j1)];
        if (umin < usubmin) {
          v[R(j1)] -= usubmin - umin;
        } else if (i0 > -1) {
          j1 = j2;
          i0 = colsol[R(j2)];
        }
        rowsol[R(i)] = j1;
        colsol[R(j1)] = i;
        if (i0 > -1) {
          rowsol[R(i0)] = -1;
          if (umin < usubmin) {
            free_rows[--k] = i0;
          } else {
            free_rows[numfree++] = i0;
          }
        }
      }
      free_rows.resize(numfree);
    }
    // Shortest augmenting paths for the remaining free rows.
    std::vector<double> d(R(n));
    std::vector<int> pred(R(n)), collist(R(n));
    for (const int freerow : free_rows) {
      for (int j = 0; j < n; ++j) {
        d[R(j)] = cost(freerow, j) - v[R(j)];
        pred[R(j)] = freerow;
        collist[R(j)] = j;
      }
      int low = 0, up = 0, last = 0, endofpath = -1;
      double mn = 0.0;
      bool found = false;
      while (!found) {
        if (up == low) {
          last = low - 1;
          mn = d[R(collist[R(up++)])];
          for (int k = up; k < n; ++k) {
            const int j = collist[R(k)];
            const double hval = d[R(j)];
            if (hval <= mn) {
              if (hval < mn) {
                up = low;
                mn = hval;
              }
              collist[R(k)] = collist[R(up)];
              collist[R(up++)] = j;
            }
          }
          for (int k = low; k < up; ++k) {
            if (colsol[R(collist[R(k)])] < 0) {
              endofpath = collist[R(k)];
              found = true;
              break;
            }
          }
        }
        if (!found) {
          const int j1 = collist[R(low++)];
          const int i = colsol[R(j1)];
          const double hval = cost(i, j1) - v[R(j1)] - mn;
          for (int k = up; k < n; ++k) {
            const int j = collist[R(k)];
            const double v2 = cost(i, j) - v[R(j)] - hval;
            if (v2 < d[R(j)]) {
              pred[R(j)] = i;
              if (v2 == mn) {
                if (colsol[R(j)] < 0) {
                  endofpath = j;
                  found = true;
                  break;
                }
                collist[R(k)] = collist[R(up)];
                collist[R(up++)] = j;
              }
              d[R(j)] = v2;
            }
          }
        }
      }
      for (int k = 0; k <= last; ++k) {
        const int j1 = collist[R(k)];
        v[R(j1)] += d[R(j1)] - mn;
      }
      int i = -1;
      do {
        i = pred[R(endofpath)];
        colsol[R(endofpath)] = i;
        const int j1 = endofpath;
        endofpath = rowsol[R(i)];
        rowsol[R(i)] = j1;
      } while (i != freerow);
    }
  }

  BrenierTransport t;
  t.source = source;
  t.target = target;
  t.assignment = rowsol;
  t.prices = v;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (rowsol[R(i)] < 0) throw non_convergence("assignment left a row unmatched");
    total += cost(i, rowsol[R(i)]);
  }
  t.total_cost = total / n;

  std::vector<double> psi(R(n));
  for (int j = 0; j < n; ++j) psi[R(j)] = 0.5 * (Y[R(j)].squaredNorm() - v[R(j)]);
  t.potential.assign(R(n), 0.0);
  parallel_for(R(n), [&](std::size_t i) {
    double best = -big;
    for (std::size_t j = 0; j < R(n); ++j) best = std::max(best, Y[j].dot(X[i]) - psi[j]);
    t.potential[i] = best;
  });
  const double vmin = *std::min_element(t.potential.begin(), t.potential.end());
  for (double& p : t.potential) p -= vmin;
  return t;
}

double dual_feasibility_gap(const BrenierTransport& t) {
  const std::size_t n = t.source.size();
  std::vector<double> worst(n, -std::numeric_limits<double>::infinity());
  parallel_for(n, [&](std::size_t i) {
    const auto a = static_cast<std::size_t>(t.assignment[i]);
    const double own = sq(t.source.points[i], t.target.points[a]) - t.prices[a];
    double w = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) w = std::max(w, own - (sq(t.source.points[i], t.target.points[j]) - t.prices[j]));
    worst[i] = w;
  });
  return *std::max_element(worst.begin(), worst.end());
}

BrenierDiagnostics brenier_diagnostics(const BrenierTransport& t, double r_D, const DiagnosticsOptions& options) {
  BrenierDiagnostics out;
  const std::size_t n = t.source.size();
  const int N = t.source.dim;
  const auto& X = t.source.points;
  for (std::size_t i = 0; i < n; ++i) out.max_target_norm = std::max(out.max_target_norm, t.slope(i).norm());
  out.range_ok = out.max_target_norm <= r_D * (1.0 + 1e-12);

  // k nearest neighbors by brute force.
  const std::size_t k = std::min(n, static_cast<std::size_t>(2 * N + 6));
  std::vector<std::vector<std::size_t>> nbrs(n);
  std::vector<double> nn(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(n);
    for (std::size_t j = 0; j < n; ++j) d.emplace_back(sq(X[i], X[j]), j);
    const std::size_t take = std::min(n, k + 1);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(take), d.end());
    for (std::size_t q = 0; q < take; ++q) nbrs[i].push_back(d[q].second);
    nn[i] = take > 1 ? std::sqrt(d[1].first) : 0.0;
  });
  const double bandwidth = 2.0 * std::accumulate(nn.begin(), nn.end(), 0.0) / static_cast<double>(n);

  // Unknowns: g (N) and the upper triangle of H.
  const int nh = N * (N + 1) / 2;
  const int unknowns = N + nh;
  std::vector<int> status(n, 0);  // 0 not interior, 1 fitted, 2 skipped
  std::vector<Eigen::MatrixXd> H(n);
  parallel_for(n, [&](std::size_t i) {
    if (options.interior && options.interior->signed_distance(X[i]) > -options.interior_margin) return;
    const auto& nb = nbrs[i];
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb.size()) * N, unknowns);
    Eigen::VectorXd b(static_cast<Eigen::Index>(nb.size()) * N);
    for (std::size_t q = 0; q < nb.size(); ++q) {
      const std::size_t j = nb[q];
      const Vec dx = X[j] - X[i];
      const double wgt = std::exp(-0.5 * dx.squaredNorm() / (bandwidth * bandwidth));
      const double sw = std::sqrt(wgt);
      for (int r = 0; r < N; ++r) {
        const auto row = static_cast<Eigen::Index>(q) * N + r;
        A(row, r) = sw;
        int col = N;
        for (int a = 0; a < N; ++a) {
          for (int c = a; c < N; ++c, ++col) {
            // Row r of H dx picks H(r, a) dx_a; symmetric entries (a, c) feed rows a and c.
            if (r == a) A(row, col) += sw * dx[c];
            if (r == c && a != c) A(row, col) += sw * dx[a];
          }
        }
        b(row) = sw * t.slope(j)[r];
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < unknowns) {
      status[i] = 2;
      return;
    }
    const Eigen::VectorXd s = qr.solve(b);
    Eigen::MatrixXd M(N, N);
    int col = N;
    for (int a = 0; a < N; ++a)
      for (int c = a; c < N; ++c, ++col) M(a, c) = M(c, a) = s(col);
    H[i] = M;
    status[i] = 1;
  });

  std::vector<double> traces, dets;
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] == 2) ++out.skipped;
    if (status[i] != 1) continue;
    ++out.fitted;
    out.hessians.push_back(H[i]);
    out.fitted_index.push_back(static_cast<int>(i));
    traces.push_back(H[i].trace());
    dets.push_back(H[i].determinant());
  }
  out.det_edges = {-std::numeric_limits<double>::infinity(), 0.5, 0.8, 0.9, 1.1, 1.25, 2.0,
                   std::numeric_limits<double>::infinity()};
  out.det_histogram.assign(out.det_edges.size() - 1, 0);
  if (!traces.empty()) {
    int good = 0;
    for (double tr : traces)
      if (tr >= N - 0.2) ++good;
    out.trace_fraction = static_cast<double>(good) / static_cast<double>(traces.size());
    out.min_trace = *std::min_element(traces.begin(), traces.end());
    auto median = [](std::vector<double> v) {
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
      return v[v.size() / 2];
    };
    out.median_trace = median(traces);
    out.median_det = median(dets);
    for (double d : dets)
      for (std::size_t b = 0; b + 1 < out.det_edges.size(); ++b)
        if (d >= out.det_edges[b] && d < out.det_edges[b + 1]) ++out.det_histogram[b];
  }

  if (n >= 3) {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, X[i].norm() * t.slope(i).norm());
    const double tol = 1e-9 * std::max(scale, 1.0);
    for (int c = 0; c < options.cycles; ++c) {
      std::size_t a = pick(rng), b = pick(rng), d = pick(rng);
      if (a == b || b == d || a == d) {
        --c;
        continue;
      }
      ++out.cycles_tested;
      const double own = X[a].dot(t.slope(a)) + X[b].dot(t.slope(b)) + X[d].dot(t.slope(d));
      const double fwd = X[a].dot(t.slope(b)) + X[b].dot(t.slope(d)) + X[d].dot(t.slope(a));
      const double bwd = X[a].dot(t.slope(d)) + X[b].dot(t.slope(a)) + X[d].dot(t.slope(b));
      if (own < fwd - tol || own < bwd - tol) ++out.monotonicity_violations;
    }
  }
  return out;
}

std::vector<double> extend_convex(const BrenierTransport& t, const std::vector<Vec>& queries) {
  std::vector<double> out(queries.size());
  const std::size_t n = t.source.size();
  parallel_for(queries.size(), [&](std::size_t q) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      best = std::max(best, t.potential[i] + t.slope(i).dot(queries[q] - t.source.points[i]));
    out[q] = best;
  });
  return out;
}

ScalarField extend_convex(const BrenierTransport& t, const GridDomainPtr& carrier) {
  std::vector<Vec> centers(carrier->size());
  for (std::size_t i = 0; i < centers.size(); ++i) centers[i] = carrier->shape().center(i);
  return ScalarField(carrier, extend_convex(t, centers));
}

}  // namespace balayage
