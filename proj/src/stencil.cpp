#include "threespheres/stencil.hpp"

#include <cmath>

namespace threespheres {

CellStencil::CellStencil(const GridSpec& grid, std::span<const NodeKind> mask)
    : grid_(grid), corners_(1 << grid.n) {
  const int n = grid.n;
  offsets_.resize(static_cast<std::size_t>(corners_));
  coeff_.assign(static_cast<std::size_t>(corners_ * kMaxDim), 0.0);
  const double edges = static_cast<double>(1 << (n - 1));
  for (int c = 0; c < corners_; ++c) {
    std::size_t off = 0;
    for (int d = 0; d < n; ++d) {
      const bool up = (c >> d) & 1;
      if (up) off += grid.stride(d);
      coeff_[static_cast<std::size_t>(c * kMaxDim + d)] =
          (up ? 1.0 : -1.0) / (edges * grid.spacing[d]);
    }
    offsets_[static_cast<std::size_t>(c)] = off;
  }

  const std::size_t count = grid.node_count();
  for (std::size_t i = 0; i < count; ++i) {
    const Index idx = grid.unravel(i);
    bool lower_corner = true;
    for (int d = 0; d < n; ++d) lower_corner = lower_corner && idx[d] < grid.cells;
    if (!lower_corner) continue;
    bool active = true;
    for (int c = 0; c < corners_ && active; ++c) {
      active = mask[i + offsets_[static_cast<std::size_t>(c)]] != NodeKind::outside;
    }
    if (active) cells_.push_back(i);
  }
}

Point CellStencil::gradient(std::span<const double> values, std::size_t cell) const {
  Point g{};
  for (int c = 0; c < corners_; ++c) {
    const double v = values[corner_node(cell, c)];
    for (int d = 0; d < grid_.n; ++d) g[d] += coefficient(c, d) * v;
  }
  return g;
}

Point CellStencil::centre(std::size_t cell) const {
  Point x = grid_.position(cells_[cell]);
  for (int d = 0; d < grid_.n; ++d) x[d] += 0.5 * grid_.spacing[d];
  return x;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

std::vector<double> energy_gradient_all_nodes(const CellStencil& stencil,
                                              std::span<const double> values, double p,
                                              double eps) {
  const GridSpec& grid = stencil.grid();
  const int n = grid.n;
  const double volume = grid.cell_volume();
  std::vector<double> out(grid.node_count(), 0.0);
  for (std::size_t cell = 0; cell < stencil.cell_count(); ++cell) {
    const Point g = stencil.gradient(values, cell);
    const double w = squared_norm(g, n) + eps * eps;
    // p w^(p/2-1) g; a zero gradient contributes nothing even when p < 2.
    const double scale = w > 0.0 ? volume * p * std::pow(w, 0.5 * p - 1.0) : 0.0;
    for (int c = 0; c < stencil.corners(); ++c) {
      double dot = 0.0;
      for (int d = 0; d < n; ++d) dot += g[d] * stencil.coefficient(c, d);
      out[stencil.corner_node(cell, c)] += scale * dot;
    }
  }
  return out;
}

}  // namespace threespheres
