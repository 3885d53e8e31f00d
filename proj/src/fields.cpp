#include "balayage/fields.hpp"

#include "balayage/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace balayage {

ScalarField::ScalarField(GridDomainPtr c, std::vector<double> v) : carrier(std::move(c)), values(std::move(v)) {
  if (!carrier || values.size() != carrier->size()) throw invalid_input("ScalarField size does not match its carrier");
  for (double x : values)
    if (!std::isfinite(x)) throw invalid_input("ScalarField values must be finite");
}

ScalarField ScalarField::zeros(GridDomainPtr c) {
  const auto n = c->size();
  return ScalarField(std::move(c), std::vector<double>(n, 0.0));
}

double ScalarField::max_inside() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i)
    if (carrier->inside(i)) m = std::max(m, values[i]);
  return m;
}

double ScalarField::min_inside() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i)
    if (carrier->inside(i)) m = std::min(m, values[i]);
  return m;
}

MeasureDensity::MeasureDensity(GridDomainPtr c, std::vector<double> d, std::vector<PointAtom> a)
    : carrier(std::move(c)), density(std::move(d)), atoms(std::move(a)) {
  if (!carrier || density.size() != carrier->size()) throw invalid_input("MeasureDensity size does not match its carrier");
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (!(density[i] >= 0.0) || !std::isfinite(density[i])) throw invalid_input("density must be finite and nonnegative");
    if (!carrier->inside(i) && density[i] != 0.0) throw invalid_input("density must vanish outside its carrier");
  }
  for (const auto& atom : atoms) {
    if (!(atom.mass > 0.0)) throw invalid_input("atom masses must be positive");
    if (!carrier->inside(carrier->shape().locate(atom.location))) throw invalid_input("atoms must lie inside the carrier");
  }
}

MeasureDensity MeasureDensity::zeros(GridDomainPtr c) {
  const auto n = c->size();
  return MeasureDensity(std::move(c), std::vector<double>(n, 0.0));
}

MeasureDensity MeasureDensity::uniform(GridDomainPtr c, double value) {
  std::vector<double> d(c->size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (c->inside(i)) d[i] = value;
  return MeasureDensity(std::move(c), std::move(d));
}

double MeasureDensity::total_mass() const {
  double m = 0.0;
  for (double d : density) m += d;
  m *= carrier->shape().cell_measure();
  for (const auto& a : atoms) m += a.mass;
  return m;
}

std::vector<double> MeasureDensity::deposited() const {
  std::vector<double> d = density;
  const double cell = carrier->shape().cell_measure();
  for (const auto& a : atoms) d[carrier->shape().locate(a.location)] += a.mass / cell;
  return d;
}

VectorField gradient(const ScalarField& field) {
  const GridDomain& dom = *field.carrier;
  const GridShape& s = dom.shape();
  VectorField out{field.carrier, std::vector<Vec>(s.size(), Vec::Zero())};
  const auto& f = field.values;
  for (std::size_t idx = 0; idx < s.size(); ++idx) {
    if (!dom.inside(idx)) continue;
    Vec g = Vec::Zero();
    for (int a = 0; a < s.dim; ++a) {
      const std::ptrdiff_t st = s.stride(a);
      const auto at = [&](int k) { return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + k * st); };
      auto ok = [&](int k) {
        // k steps along the axis stay on the lattice and inside the carrier
        const auto c = s.coords(idx);
        const int v = c[static_cast<std::size_t>(a)] + k;
        return v >= 0 && v < s.cells[static_cast<std::size_t>(a)] && dom.inside(at(k));
      };
      const bool plus = ok(1), minus = ok(-1);
      if (plus && minus) {
        g[a] = (f[at(1)] - f[at(-1)]) / (2.0 * s.h);
      } else if (plus) {
        g[a] = ok(2) ? (-3.0 * f[idx] + 4.0 * f[at(1)] - f[at(2)]) / (2.0 * s.h) : (f[at(1)] - f[idx]) / s.h;
      } else if (minus) {
        g[a] = ok(-2) ? (3.0 * f[idx] - 4.0 * f[at(-1)] + f[at(-2)]) / (2.0 * s.h) : (f[idx] - f[at(-1)]) / s.h;
      }
    }
    out.values[idx] = g;
  }
  return out;
}

namespace {

struct QuadraticFit {
  double value = 0.0;
  Vec gradient = Vec::Zero();
};

QuadraticFit fit_quadratic(const ScalarField& field, const Vec& p) {
  const GridDomain& dom = *field.carrier;
  const GridShape& s = dom.shape();
  const int n = s.dim;
  const int params = n == 2 ? 6 : 10;
  const std::size_t host = s.locate(p);
  const auto hc = s.coords(host);
  for (double radius = 2.5; radius <= 6.0; radius += 1.0) {
    const int reach = static_cast<int>(std::ceil(radius)) + 1;
    std::vector<std::size_t> cells;
    for (int di = -reach; di <= reach; ++di)
      for (int dj = -reach; dj <= reach; ++dj)
        for (int dk = (n == 3 ? -reach : 0); dk <= (n == 3 ? reach : 0); ++dk) {
          const int i = hc[0] + di, j = hc[1] + dj, k = hc[2] + dk;
          if (i < 0 || j < 0 || k < 0 || i >= s.cells[0] || j >= s.cells[1] || k >= s.cells[2]) continue;
          const std::size_t idx = s.index(i, j, k);
          if (!dom.inside(idx)) continue;
          if ((s.center(idx) - p).norm() <= radius * s.h) cells.push_back(idx);
        }
    if (static_cast<int>(cells.size()) < 2 * params) continue;
    Eigen::MatrixXd A(static_cast<Eigen::Index>(cells.size()), params);
    Eigen::VectorXd b(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t r = 0; r < cells.size(); ++r) {
      const Vec q = (s.center(cells[r]) - p) / s.h;
      const double w = 1.0 / (1.0 + q.squaredNorm());
      const auto row = static_cast<Eigen::Index>(r);
      int c = 0;
      A(row, c++) = w;
      for (int a = 0; a < n; ++a) A(row, c++) = w * q[a];
      for (int a = 0; a < n; ++a)
        for (int bb = a; bb < n; ++bb) A(row, c++) = w * q[a] * q[bb];
      b(row) = w * field.values[cells[r]];
    }
    // Thin caps put the nearby cells on few lattice planes; widen until the fit is determined.
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < params) continue;
    const Eigen::VectorXd coef = qr.solve(b);
    QuadraticFit fit;
    fit.value = coef(0);
    for (int a = 0; a < n; ++a) fit.gradient[a] = coef(1 + a) / s.h;
    return fit;
  }
  throw invalid_input("not enough inside cells near the query point for a quadratic fit");
}

}  // namespace

Vec gradient_at(const ScalarField& field, const Vec& point) { return fit_quadratic(field, point).gradient; }

double value_at(const ScalarField& field, const Vec& point) { return fit_quadratic(field, point).value; }

double bump(double r, double epsilon) {
  const double s = r / epsilon;
  if (s >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

namespace {

struct KernelTap {
  std::array<int, 3> offset;
  double weight;
};

std::vector<KernelTap> lattice_kernel(const GridShape& s, double epsilon) {
  const int reach = static_cast<int>(std::ceil(epsilon / s.h));
  std::vector<KernelTap> taps;
  double total = 0.0;
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j)
      for (int k = (s.dim == 3 ? -reach : 0); k <= (s.dim == 3 ? reach : 0); ++k) {
        const double r = s.h * std::sqrt(static_cast<double>(i * i + j * j + k * k));
        const double w = bump(r, epsilon);
        if (w > 0.0) {
          taps.push_back({{i, j, k}, w});
          total += w;
        }
      }
  for (auto& t : taps) t.weight /= total;
  return taps;
}

void check_epsilon(const GridShape& s, double epsilon) {
  if (!(epsilon >= 2.0 * s.h - 1e-12 * s.h))
    throw invalid_input("mollify needs epsilon >= 2h (epsilon = " + std::to_string(epsilon) +
                        ", h = " + std::to_string(s.h) + ")");
}

}  // namespace

MeasureDensity mollify(const MeasureDensity& input, double epsilon) {
  const GridDomain& dom = *input.carrier;
  const GridShape& s = dom.shape();
  check_epsilon(s, epsilon);
  const auto taps = lattice_kernel(s, epsilon);
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t idx = 0; idx < s.size(); ++idx) {
    const double d = input.density[idx];
    if (d == 0.0) continue;
    const auto c = s.coords(idx);
    for (const auto& t : taps) {
      const int i = c[0] + t.offset[0], j = c[1] + t.offset[1], k = c[2] + t.offset[2];
      if (i < 0 || j < 0 || k < 0 || i >= s.cells[0] || j >= s.cells[1] || k >= s.cells[2]) continue;
      const std::size_t nb = s.index(i, j, k);
      if (dom.inside(nb)) out[nb] += d * t.weight;
    }
  }
  const double cell = s.cell_measure();
  for (const auto& atom : input.atoms) {
    // Kernel centered at the exact atom location, normalized over cell centers.
    const auto hc = s.coords(s.locate(atom.location));
    const int reach = static_cast<int>(std::ceil(epsilon / s.h)) + 1;
    std::vector<std::pair<std::size_t, double>> hits;
    double total = 0.0;
    for (int di = -reach; di <= reach; ++di)
      for (int dj = -reach; dj <= reach; ++dj)
        for (int dk = (s.dim == 3 ? -reach : 0); dk <= (s.dim == 3 ? reach : 0); ++dk) {
          const int i = hc[0] + di, j = hc[1] + dj, k = hc[2] + dk;
          if (i < 0 || j < 0 || k < 0 || i >= s.cells[0] || j >= s.cells[1] || k >= s.cells[2]) continue;
          const std::size_t nb = s.index(i, j, k);
          const double w = bump((s.center(nb) - atom.location).norm(), epsilon);
          if (w > 0.0) {
            hits.emplace_back(nb, w);
            total += w;
          }
        }
    for (const auto& [nb, w] : hits)
      if (dom.inside(nb)) out[nb] += atom.mass * (w / total) / cell;
  }
  return MeasureDensity(input.carrier, std::move(out));
}

ScalarField mollify(const ScalarField& input, double epsilon) {
  const GridShape& s = input.carrier->shape();
  check_epsilon(s, epsilon);
  const auto taps = lattice_kernel(s, epsilon);
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t idx = 0; idx < s.size(); ++idx) {
    const auto c = s.coords(idx);
    double acc = 0.0, wsum = 0.0;
    for (const auto& t : taps) {
      const int i = c[0] + t.offset[0], j = c[1] + t.offset[1], k = c[2] + t.offset[2];
      if (i < 0 || j < 0 || k < 0 || i >= s.cells[0] || j >= s.cells[1] || k >= s.cells[2]) continue;
      acc += t.weight * input.values[s.index(i, j, k)];
      wsum += t.weight;
    }
    out[idx] = acc / wsum;
  }
  return ScalarField(input.carrier, std::move(out));
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw invalid_input("truncated GFD1 stream");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

void write_gfd(std::ostream& out, const GridShape& shape, const std::vector<double>& values) {
  if (values.size() != shape.size()) throw invalid_input("GFD1 value count does not match the lattice");
  out.write("GFD1", 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.dim));
  for (int a = 0; a < shape.dim; ++a) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.cells[static_cast<std::size_t>(a)]));
  for (int a = 0; a < shape.dim; ++a) put_le<double>(out, shape.origin[a]);
  put_le<double>(out, shape.h);
  for (double v : values) put_le<double>(out, v);
}

void write_gfd(const std::string& path, const GridShape& shape, const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("cannot open " + path + " for writing");
  write_gfd(out, shape, values);
}

GfdData read_gfd(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "GFD1") throw invalid_input("not a GFD1 stream");
  GfdData data;
  data.shape.dim = static_cast<int>(get_le<std::uint32_t>(in));
  if (data.shape.dim != 2 && data.shape.dim != 3) throw invalid_input("GFD1 dimension must be 2 or 3");
  for (int a = 0; a < data.shape.dim; ++a) data.shape.cells[static_cast<std::size_t>(a)] = static_cast<int>(get_le<std::uint32_t>(in));
  for (int a = 0; a < data.shape.dim; ++a) data.shape.origin[a] = get_le<double>(in);
  data.shape.h = get_le<double>(in);
  if (data.shape.dim == 2) data.shape.origin.z() = -0.5 * data.shape.h;
  data.values.resize(data.shape.size());
  for (auto& v : data.values) v = get_le<double>(in);
  return data;
}

GfdData read_gfd(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input("cannot open " + path);
  return read_gfd(in);
}

}  // namespace balayage
