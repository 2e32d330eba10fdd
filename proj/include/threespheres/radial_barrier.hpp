#pragma once

#include <vector>

#include "threespheres/geometry.hpp"

namespace threespheres {

inline constexpr double kPMax = 10.0;

/// Parameters of the normalized radial barrier u0 on r <= d_k <= R.
struct BarrierSpec {
  int n = 2;
  int k = 2;
  double p = 2.0;
  double r = 1.0;
  double R = 2.0;

  void validate() const;
  /// Exponent (1-k)/(p-1) of the radial flux s^q.
  double flux_exponent() const { return (1.0 - k) / (p - 1.0); }
};

/// Whether u0 may be evaluated outside [r, R] by continuing the closed form.
enum class Extension { none, continuation };

/// xi(r, t) = integral_r^t s^((1-k)/(p-1)) ds, for 0 < r <= t.
double xi(double r, double t, int k, double p);

/// Same closed form for any t > 0 (negative for t < r).
double xi_continued(double r, double t, int k, double p);

/// xi(r, t) / xi(r, R).
double barrier_u0(const BarrierSpec& spec, double t, Extension ext = Extension::none);

/// d u0 / dt.
double barrier_derivative(const BarrierSpec& spec, double t);

/// Analytic gradient of x -> u0(d_k(x)); components past k vanish.
Point barrier_gradient(const BarrierSpec& spec, const Point& x);

struct BarrierField {
  GridField field;
  std::vector<Point> gradient;  // per node; NaN at outside nodes
};

/// u0(d_k(x)) at every non-outside node, continued past [r, R] as needed.
BarrierField barrier_field(const BarrierSpec& spec, const Grid& grid);

struct ResidualReport {
  double max_residual = 0.0;
  /// Regularization actually used; nonzero only when requested or forced by
  /// a vanishing cell gradient with p < 2.
  double eps = 0.0;
  bool regularized = false;
};

/// Max over interior nodes of |discrete div(|grad u|^(p-2) grad u)|, using the
/// solver's cell stencil (energy gradient divided by p times the cell volume).
ResidualReport plap_residual(const GridField& field, double p, double eps = 0.0);

/// f(t) = value_r + (value_R - value_r) xi(r, t) / xi(r, R).
struct RadialProfile {
  BarrierSpec spec;
  double value_r = 0.0;
  double value_R = 1.0;

  double operator()(double t) const;
};

}  // namespace threespheres
