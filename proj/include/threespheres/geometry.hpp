#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace threespheres {

inline constexpr int kMaxDim = 4;

/// A point of R^n, n <= kMaxDim. Coordinates past n are ignored and kept at 0.
using Point = std::array<double, kMaxDim>;
using Index = std::array<int, kMaxDim>;

/// Euclidean norm of the first k coordinates of x.
double d_k(std::span<const double> x, int k);
inline double d_k(const Point& x, int n, int k) {
  return d_k(std::span<const double>(x.data(), static_cast<std::size_t>(n)), k);
}

/// The k-annulus alpha < d_k(x) < beta in R^n. When k < n the n-k free
/// directions are truncated to |x_j| <= slab_halfwidth.
class KAnnulus {
 public:
  /// Validates 2 <= n <= 4, 1 <= k <= n, 0 <= alpha < beta. The slab
  /// half-width defaults to 4*beta.
  static KAnnulus make(int n, int k, double alpha, double beta,
                       std::optional<double> slab_halfwidth = std::nullopt);

  int n() const { return n_; }
  int k() const { return k_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double slab_halfwidth() const { return slab_; }
  bool truncated() const { return k_ < n_; }

  /// Open-set membership: alpha < d_k < beta and strictly inside the slab.
  bool contains(const Point& x) const;

  /// Measure of Sigma_k(t) intersected with the slab.
  double sphere_measure(double t) const;

 private:
  KAnnulus(int n, int k, double alpha, double beta, double slab)
      : n_(n), k_(k), alpha_(alpha), beta_(beta), slab_(slab) {}

  int n_;
  int k_;
  double alpha_;
  double beta_;
  double slab_;
};

/// Quadrature rule on a (truncated) k-sphere.
struct SurfaceQuadrature {
  std::vector<Point> points;
  std::vector<double> weights;

  double total_weight() const;
};

/// Tensor-product quadrature on Sigma_k(t) within the slab: uniform angles
/// (midpoint in polar angles, weight by the sphere Jacobian) times trapezoid
/// rules with `density` panels along each free axis. For k = 2 the circle gets
/// `density` equally spaced angles; for k = 3 the sphere gets `density`
/// latitude bands and 2*density longitudes.
/// Requires alpha < t < beta (closed interval when `allow_boundary`).
SurfaceQuadrature sample_ksphere(const KAnnulus& annulus, double t, int density,
                                 bool allow_boundary = false);

enum class NodeKind : std::uint8_t { outside = 0, interior = 1, boundary = 2 };

/// Uniform tensor grid. Node values are stored row-major: the last axis is
/// the fastest.
struct GridSpec {
  int n = 2;
  int cells = 8;
  Point origin{};
  Point spacing{};

  int nodes_per_axis() const { return cells + 1; }
  std::size_t node_count() const;
  std::size_t stride(int axis) const;
  double cell_volume() const;

  Index unravel(std::size_t node) const;
  std::size_t ravel(const Index& idx) const;
  Point position(std::size_t node) const;
  Point position(const Index& idx) const;

  bool operator==(const GridSpec&) const = default;
};

/// Values on a grid plus node classification.
struct GridField {
  GridSpec grid;
  std::vector<double> values;
  std::vector<NodeKind> mask;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

/// Grid over [-beta, beta]^k x [-L, L]^(n-k) with interior nodes inside the
/// annulus, boundary nodes the non-interior nodes sharing a cell with an
/// interior node, and everything else outside.
struct Grid {
  GridSpec spec;
  std::vector<NodeKind> mask;

  std::size_t count(NodeKind kind) const;
  /// A field on this grid, NaN at outside nodes and `fill` elsewhere.
  GridField make_field(double fill = 0.0) const;
};

Grid build_grid(const KAnnulus& annulus, int cells_per_axis);

/// Corner nodes and weights of the multilinear interpolant at x. Throws
/// DomainError if x leaves the grid box.
struct InterpolationStencil {
  std::array<std::size_t, 1 << kMaxDim> nodes{};
  std::array<double, 1 << kMaxDim> weights{};
  int count = 0;
};
InterpolationStencil interpolation_stencil(const GridSpec& grid, const Point& x);

/// Multilinear interpolation. Throws DomainError if x leaves the grid box or
/// touches a cell with an outside (NaN) corner.
double interpolate(const GridField& field, const Point& x);

}  // namespace threespheres
