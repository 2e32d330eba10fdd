#include "threespheres/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "threespheres/errors.hpp"

namespace threespheres {

double d_k(std::span<const double> x, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > x.size()) {
    throw DomainError("d_k: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(x.size()) + "]");
  }
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += x[i] * x[i];
  return std::sqrt(sum);
}

KAnnulus KAnnulus::make(int n, int k, double alpha, double beta,
                        std::optional<double> slab_halfwidth) {
  if (n < 2 || n > kMaxDim) {
    throw ConfigError("annulus: n must lie in [2, 4], got " + std::to_string(n));
  }
  if (k < 1 || k > n) {
    throw ConfigError("annulus: k must lie in [1, n], got " + std::to_string(k));
  }
  if (!(alpha >= 0.0) || !(beta > alpha) || !std::isfinite(beta)) {
    throw ConfigError("annulus: need 0 <= alpha < beta < inf");
  }
  const double slab = slab_halfwidth.value_or(4.0 * beta);
  if (!(slab > 0.0) || !std::isfinite(slab)) {
    throw ConfigError("annulus: slab half-width must be positive");
  }
  return KAnnulus(n, k, alpha, beta, slab);
}

bool KAnnulus::contains(const Point& x) const {
  const double t = d_k(x, n_, k_);
  if (!(t > alpha_ && t < beta_)) return false;
  for (int j = k_; j < n_; ++j) {
    if (!(std::abs(x[j]) < slab_)) return false;
  }
  return true;
}

double KAnnulus::sphere_measure(double t) const {
  // |S^{k-1}| t^{k-1} (2L)^{n-k}
  double area = 0.0;
  switch (k_) {
    case 1: area = 2.0; break;
    case 2: area = 2.0 * std::numbers::pi * t; break;
    case 3: area = 4.0 * std::numbers::pi * t * t; break;
    case 4: area = 2.0 * std::numbers::pi * std::numbers::pi * t * t * t; break;
  }
  return area * std::pow(2.0 * slab_, n_ - k_);
}

double SurfaceQuadrature::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

namespace {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

Rule1D trapezoid(double lo, double hi, int panels) {
  Rule1D r;
  const double h = (hi - lo) / panels;
  for (int i = 0; i <= panels; ++i) {
    r.nodes.push_back(i == panels ? hi : lo + i * h);
    r.weights.push_back((i == 0 || i == panels) ? 0.5 * h : h);
  }
  return r;
}

// Directions on S^{k-1} with surface weights for the unit sphere.
void unit_sphere_rule(int k, int density, std::vector<Point>& dirs,
                      std::vector<double>& weights) {
  using std::numbers::pi;
  switch (k) {
    case 1:
      dirs.push_back(Point{1.0});
      dirs.push_back(Point{-1.0});
      weights.assign(2, 1.0);
      return;
    case 2:
      for (int j = 0; j < density; ++j) {
        const double phi = 2.0 * pi * j / density;
        dirs.push_back(Point{std::cos(phi), std::sin(phi)});
        weights.push_back(2.0 * pi / density);
      }
      return;
    case 3: {
      const int bands = density;
      const int lons = 2 * density;
      for (int i = 0; i < bands; ++i) {
        const double theta = (i + 0.5) * pi / bands;
        const double w = std::sin(theta) * (pi / bands) * (2.0 * pi / lons);
        for (int j = 0; j < lons; ++j) {
          const double phi = 2.0 * pi * j / lons;
          dirs.push_back(Point{std::sin(theta) * std::cos(phi),
                               std::sin(theta) * std::sin(phi), std::cos(theta)});
          weights.push_back(w);
        }
      }
      return;
    }
    case 4: {
      const int bands = density;
      const int lons = 2 * density;
      for (int a = 0; a < bands; ++a) {
        const double psi = (a + 0.5) * pi / bands;
        for (int i = 0; i < bands; ++i) {
          const double theta = (i + 0.5) * pi / bands;
          const double w = std::sin(psi) * std::sin(psi) * std::sin(theta) *
                           (pi / bands) * (pi / bands) * (2.0 * pi / lons);
          for (int j = 0; j < lons; ++j) {
            const double phi = 2.0 * pi * j / lons;
            const double s = std::sin(psi) * std::sin(theta);
            dirs.push_back(Point{s * std::cos(phi), s * std::sin(phi),
                                 std::sin(psi) * std::cos(theta), std::cos(psi)});
            weights.push_back(w);
          }
        }
      }
      return;
    }
  }
}

}  // namespace

SurfaceQuadrature sample_ksphere(const KAnnulus& annulus, double t, int density,
                                 bool allow_boundary) {
  const bool inside = allow_boundary
                          ? (t >= annulus.alpha() && t <= annulus.beta() && t > 0.0)
                          : (t > annulus.alpha() && t < annulus.beta());
  if (!inside) {
    throw DomainError("sample_ksphere: t=" + std::to_string(t) +
                      " outside the annulus radii");
  }
  if (density < 4) throw ConfigError("sample_ksphere: density must be >= 4");

  const int n = annulus.n();
  const int k = annulus.k();
  std::vector<Point> dirs;
  std::vector<double> dir_weights;
  unit_sphere_rule(k, density, dirs, dir_weights);
  const double jac = std::pow(t, k - 1);

  // Free directions: tensor trapezoid on [-L, L]^(n-k).
  const Rule1D axial = trapezoid(-annulus.slab_halfwidth(), annulus.slab_halfwidth(), density);
  const int free_axes = n - k;
  std::size_t axial_count = 1;
  for (int j = 0; j < free_axes; ++j) axial_count *= axial.nodes.size();

  SurfaceQuadrature q;
  q.points.reserve(dirs.size() * axial_count);
  q.weights.reserve(dirs.size() * axial_count);
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    for (std::size_t a = 0; a < axial_count; ++a) {
      Point x{};
      for (int i = 0; i < k; ++i) x[i] = t * dirs[d][i];
      double w = dir_weights[d] * jac;
      std::size_t rest = a;
      for (int j = 0; j < free_axes; ++j) {
        const std::size_t m = rest % axial.nodes.size();
        rest /= axial.nodes.size();
        x[k + j] = axial.nodes[m];
        w *= axial.weights[m];
      }
      q.points.push_back(x);
      q.weights.push_back(w);
    }
  }
  return q;
}

std::size_t GridSpec::node_count() const {
  std::size_t c = 1;
  for (int d = 0; d < n; ++d) c *= static_cast<std::size_t>(nodes_per_axis());
  return c;
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (int d = n - 1; d > axis; --d) s *= static_cast<std::size_t>(nodes_per_axis());
  return s;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < n; ++d) v *= spacing[d];
  return v;
}

Index GridSpec::unravel(std::size_t node) const {
  Index idx{};
  const auto m = static_cast<std::size_t>(nodes_per_axis());
  for (int d = n - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(node % m);
    node /= m;
  }
  return idx;
}

std::size_t GridSpec::ravel(const Index& idx) const {
  std::size_t node = 0;
  const auto m = static_cast<std::size_t>(nodes_per_axis());
  for (int d = 0; d < n; ++d) node = node * m + static_cast<std::size_t>(idx[d]);
  return node;
}

Point GridSpec::position(const Index& idx) const {
  Point x{};
  for (int d = 0; d < n; ++d) {
    // Pin the last node to the box edge so symmetric boxes stay symmetric.
    x[d] = idx[d] == cells ? origin[d] + spacing[d] * cells
                           : origin[d] + spacing[d] * idx[d];
  }
  return x;
}

Point GridSpec::position(std::size_t node) const { return position(unravel(node)); }

std::size_t Grid::count(NodeKind kind) const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), kind));
}

GridField Grid::make_field(double fill) const {
  GridField f{spec, std::vector<double>(spec.node_count(), fill), mask};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == NodeKind::outside) f.values[i] = std::numeric_limits<double>::quiet_NaN();
  }
  return f;
}

Grid build_grid(const KAnnulus& annulus, int cells_per_axis) {
  if (cells_per_axis < 8) {
    throw ConfigError("build_grid: cells_per_axis must be >= 8, got " +
                      std::to_string(cells_per_axis));
  }
  const int n = annulus.n();
  GridSpec spec;
  spec.n = n;
  spec.cells = cells_per_axis;
  for (int d = 0; d < n; ++d) {
    const double half = d < annulus.k() ? annulus.beta() : annulus.slab_halfwidth();
    spec.origin[d] = -half;
    spec.spacing[d] = 2.0 * half / cells_per_axis;
  }

  const std::size_t count = spec.node_count();
  std::vector<NodeKind> mask(count, NodeKind::outside);
  for (std::size_t i = 0; i < count; ++i) {
    if (annulus.contains(spec.position(i))) mask[i] = NodeKind::interior;
  }

  // Boundary layer: every non-interior node in the 3^n neighbourhood of an
  // interior node, i.e. every corner of a cell that touches the interior.
  const int m = spec.nodes_per_axis();
  int neighbours = 1;
  for (int d = 0; d < n; ++d) neighbours *= 3;
  for (std::size_t i = 0; i < count; ++i) {
    if (mask[i] != NodeKind::interior) continue;
    const Index base = spec.unravel(i);
    for (int code = 0; code < neighbours; ++code) {
      Index nb = base;
      int c = code;
      bool valid = true;
      for (int d = 0; d < n; ++d) {
        nb[d] += c % 3 - 1;
        c /= 3;
        if (nb[d] < 0 || nb[d] >= m) valid = false;
      }
      if (!valid) continue;
      const std::size_t j = spec.ravel(nb);
      if (mask[j] == NodeKind::outside) mask[j] = NodeKind::boundary;
    }
  }
  return Grid{spec, std::move(mask)};
}

InterpolationStencil interpolation_stencil(const GridSpec& g, const Point& x) {
  Index base{};
  Point frac{};
  for (int d = 0; d < g.n; ++d) {
    const double s = (x[d] - g.origin[d]) / g.spacing[d];
    constexpr double slack = 1e-9;
    if (!(s >= -slack && s <= g.cells + slack)) {
      throw DomainError("interpolate: point outside the grid box");
    }
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.cells - 1);
    base[d] = i;
    frac[d] = std::clamp(s - i, 0.0, 1.0);
  }
  InterpolationStencil st;
  const int corners = 1 << g.n;
  for (int c = 0; c < corners; ++c) {
    Index idx = base;
    double w = 1.0;
    for (int d = 0; d < g.n; ++d) {
      const bool up = (c >> d) & 1;
      idx[d] += up ? 1 : 0;
      w *= up ? frac[d] : 1.0 - frac[d];
    }
    if (w == 0.0) continue;
    st.nodes[static_cast<std::size_t>(st.count)] = g.ravel(idx);
    st.weights[static_cast<std::size_t>(st.count)] = w;
    ++st.count;
  }
  return st;
}

double interpolate(const GridField& field, const Point& x) {
  const InterpolationStencil st = interpolation_stencil(field.grid, x);
  double value = 0.0;
  for (int c = 0; c < st.count; ++c) {
    const double v = field.values[st.nodes[static_cast<std::size_t>(c)]];
    if (std::isnan(v)) {
      throw DomainError("interpolate: stencil touches a node outside the domain");
    }
    value += st.weights[static_cast<std::size_t>(c)] * v;
  }
  return value;
}

}  // namespace threespheres
