#include "threespheres/radial_barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "threespheres/errors.hpp"
#include "threespheres/stencil.hpp"

namespace threespheres {

namespace {

constexpr double kLogBranchThreshold = 1e-9;
constexpr double kSolverFinalEps = 1e-8;

// expm1(z) / z, continuous through z = 0.
double expm1_ratio(double z) {
  if (std::abs(z) < 1e-8) return 1.0 + z * (0.5 + z / 6.0);
  return std::expm1(z) / z;
}

void check_exponent(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw DomainError("xi: exponent p must exceed 1, got " + std::to_string(p));
  }
}

}  // namespace

void BarrierSpec::validate() const {
  if (n < 2 || n > kMaxDim) throw ConfigError("barrier: n must lie in [2, 4]");
  if (k < 1 || k > n) throw ConfigError("barrier: k must lie in [1, n]");
  if (!(p > 1.0) || p > kPMax) {
    throw ConfigError("barrier: p must lie in (1, " + std::to_string(kPMax) + "]");
  }
  if (!(r > 0.0) || !(R > r) || !std::isfinite(R)) {
    throw ConfigError("barrier: need 0 < r < R < inf");
  }
}

double xi_continued(double r, double t, int k, double p) {
  check_exponent(p);
  if (!(r > 0.0) || !(t > 0.0)) throw DomainError("xi: radii must be positive");
  // (t^e - r^e) / e with e = q + 1 = (p - k) / (p - 1), written as
  // r^e log(t/r) * expm1(e log(t/r)) / (e log(t/r)); e = 0 is log(t/r).
  double e = (p - k) / (p - 1.0);
  if (std::abs(e) < kLogBranchThreshold) e = 0.0;
  const double ell = std::log(t / r);
  return std::pow(r, e) * ell * expm1_ratio(e * ell);
}

double xi(double r, double t, int k, double p) {
  if (!(r > 0.0)) throw DomainError("xi: r must be positive");
  if (!(t >= r)) throw DomainError("xi: need t >= r");
  return xi_continued(r, t, k, p);
}

double barrier_u0(const BarrierSpec& spec, double t, Extension ext) {
  if (ext == Extension::none && !(t >= spec.r && t <= spec.R)) {
    throw DomainError("barrier_u0: t=" + std::to_string(t) + " outside [r, R]");
  }
  if (t == spec.r) return 0.0;
  if (t == spec.R) return 1.0;
  return xi_continued(spec.r, t, spec.k, spec.p) /
         xi_continued(spec.r, spec.R, spec.k, spec.p);
}

double barrier_derivative(const BarrierSpec& spec, double t) {
  return std::pow(t, spec.flux_exponent()) / xi_continued(spec.r, spec.R, spec.k, spec.p);
}

Point barrier_gradient(const BarrierSpec& spec, const Point& x) {
  const double t = d_k(x, spec.n, spec.k);
  Point g{};
  if (t == 0.0) return g;
  const double scale = barrier_derivative(spec, t) / t;
  for (int i = 0; i < spec.k; ++i) g[i] = x[i] * scale;
  return g;
}

BarrierField barrier_field(const BarrierSpec& spec, const Grid& grid) {
  spec.validate();
  if (grid.spec.n != spec.n) throw ConfigError("barrier_field: dimension mismatch");
  BarrierField out{grid.make_field(), {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.gradient.assign(grid.spec.node_count(), Point{nan, nan, nan, nan});
  for (std::size_t i = 0; i < grid.mask.size(); ++i) {
    if (grid.mask[i] == NodeKind::outside) continue;
    const Point x = grid.spec.position(i);
    const double t = d_k(x, spec.n, spec.k);
    if (!(t > 0.0)) {
      throw DomainError("barrier_field: grid node on the k-axis where u0 is undefined");
    }
    out.field.values[i] = barrier_u0(spec, t, Extension::continuation);
    out.gradient[i] = barrier_gradient(spec, x);
  }
  return out;
}

ResidualReport plap_residual(const GridField& field, double p, double eps) {
  if (!(p > 1.0)) throw DomainError("plap_residual: p must exceed 1");
  const CellStencil stencil(field.grid, field.mask);
  ResidualReport report;
  report.eps = eps;
  report.regularized = eps > 0.0;
  if (eps == 0.0 && p < 2.0) {
    for (std::size_t c = 0; c < stencil.cell_count(); ++c) {
      if (squared_norm(stencil.gradient(field.values, c), field.grid.n) == 0.0) {
        report.eps = kSolverFinalEps;
        report.regularized = true;
        break;
      }
    }
  }
  const std::vector<double> grad =
      energy_gradient_all_nodes(stencil, field.values, p, report.eps);
  const double scale = 1.0 / (p * field.grid.cell_volume());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (field.mask[i] != NodeKind::interior) continue;
    report.max_residual = std::max(report.max_residual, std::abs(grad[i]) * scale);
  }
  return report;
}

double RadialProfile::operator()(double t) const {
  return value_r + (value_R - value_r) * barrier_u0(spec, t, Extension::continuation);
}

}  // namespace threespheres
