#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "threespheres/geometry.hpp"

namespace threespheres {

/// Cell-centred gradient stencil shared by the energy, the solver and the
/// residual checks. A cell is active when none of its 2^n corners lies
/// outside the domain. The cell gradient along axis d is the average of the
/// 2^(n-1) one-sided differences along the cell edges parallel to d.
class CellStencil {
 public:
  CellStencil(const GridSpec& grid, std::span<const NodeKind> mask);

  const GridSpec& grid() const { return grid_; }
  std::size_t cell_count() const { return cells_.size(); }
  int corners() const { return corners_; }
  std::size_t corner_node(std::size_t cell, int corner) const {
    return cells_[cell] + offsets_[static_cast<std::size_t>(corner)];
  }
  /// d(cell gradient)_axis / d(corner value).
  double coefficient(int corner, int axis) const {
    return coeff_[static_cast<std::size_t>(corner * kMaxDim + axis)];
  }

  Point gradient(std::span<const double> values, std::size_t cell) const;
  Point centre(std::size_t cell) const;

 private:
  GridSpec grid_;
  int corners_;
  std::vector<std::size_t> cells_;
  std::vector<std::size_t> offsets_;
  std::vector<double> coeff_;
};

inline double squared_norm(const Point& g, int n) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) s += g[d] * g[d];
  return s;
}

/// Neumaier-compensated running sum; summation order is the caller's loop
/// order, so results are reproducible.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Gradient of sum_cells V (|g|^2 + eps^2)^(p/2) with respect to every node
/// value (zero-initialised, size = node count).
std::vector<double> energy_gradient_all_nodes(const CellStencil& stencil,
                                              std::span<const double> values, double p,
                                              double eps);

}  // namespace threespheres
