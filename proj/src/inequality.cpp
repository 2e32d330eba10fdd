#include "threespheres/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "threespheres/errors.hpp"

namespace threespheres {

namespace {

// Below this |x - 1| the g-functions switch to their Taylor expansions.
constexpr double kSeriesThreshold = 1e-6;

void check_p(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw DomainError("exponent p must exceed 1, got " + std::to_string(p));
  }
}

double log_ratio(double x) {
  if (!(x > 1.0) || !std::isfinite(x)) {
    throw DomainError("g-functions need finite x > 1, got " + std::to_string(x));
  }
  return std::log1p(x - 1.0);
}

// With y = x^(p-1) = e^(mL):
//   g1 = tanh(L/2) / tanh(mL/2)
//   S  = sinh(mL/2) / sinh(L/2) = (x^(p-1)-1)/(x-1) * x^(-(m-1)/2)
//   g2 = S / (2 cosh((m-1)L/2)),  g3 = 2 S cosh((m-1)L/2)
double g1_from_log(double L, double m, bool series) {
  if (series) {
    const double L2 = L * L;
    return (1.0 - L2 / 12.0) / (m * (1.0 - m * m * L2 / 12.0));
  }
  return std::tanh(0.5 * L) / std::tanh(0.5 * m * L);
}

double sinh_ratio(double L, double m, bool series) {
  if (series) {
    const double L2 = L * L;
    return m * (1.0 + m * m * L2 / 24.0) / (1.0 + L2 / 24.0);
  }
  return std::sinh(0.5 * m * L) / std::sinh(0.5 * L);
}

double g2_from_log(double L, double m, bool series) {
  return sinh_ratio(L, m, series) / (2.0 * std::cosh(0.5 * (m - 1.0) * L));
}

double g3_from_log(double L, double m, bool series) {
  return 2.0 * sinh_ratio(L, m, series) * std::cosh(0.5 * (m - 1.0) * L);
}

bool near_one(double x) { return std::abs(x - 1.0) < kSeriesThreshold; }

}  // namespace

double g1(double x, double p) {
  check_p(p);
  return g1_from_log(log_ratio(x), p - 1.0, near_one(x));
}

double g2(double x, double p) {
  check_p(p);
  return g2_from_log(log_ratio(x), p - 1.0, near_one(x));
}

double g3(double x, double p) {
  check_p(p);
  return g3_from_log(log_ratio(x), p - 1.0, near_one(x));
}

double difference_quotient(double a, double b, double p) {
  check_p(p);
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("difference_quotient: need a, b > 0");
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  const double m = p - 1.0;
  const double L = std::log(hi / lo);
  // lo^(p-2) * expm1(mL)/expm1(L) = lo^(p-2) * e^((m-1)L/2) * S
  return std::pow(lo, p - 2.0) * std::exp(0.5 * (m - 1.0) * L) *
         sinh_ratio(L, m, L < kSeriesThreshold);
}

double sum_quotient(double a, double b, double p) {
  check_p(p);
  if (!(a >= 0.0) || !(b >= 0.0) || a + b == 0.0) {
    throw DomainError("sum_quotient: need a, b >= 0, not both zero");
  }
  return (std::pow(a, p - 1.0) + std::pow(b, p - 1.0)) / (a + b);
}

TightConstants tight_constants(double p) {
  check_p(p);
  TightConstants c;
  c.p = p;
  const double m = p - 1.0;
  c.c1 = std::min(1.0, 1.0 / m);
  c.c2 = std::max(1.0, 1.0 / m);
  c.high_branch = p >= 2.0;
  if (c.high_branch) {
    // g2 ranges between its limits (p-1)/2 at x -> 1 and 1 at infinity.
    c.c3 = std::min(1.0, 0.5 * m);
    c.c4 = std::max(1.0, 0.5 * m);
    // SQ/(p-1) <= I <= DQ/(p-1), and SQ >= C1 DQ.
    c.c7 = c.c1 * c.c3 / m;
    c.c8 = c.c4 / m;
  } else {
    // g3 ranges between 2(p-1) and 1.
    c.c3 = std::min(1.0, 2.0 * m);
    c.c4 = std::max(1.0, 2.0 * m);
    // DQ/(p-1) <= I <= SQ/(p-1), and SQ <= C2 DQ.
    c.c7 = c.c3 / m;
    c.c8 = c.c2 * c.c4 / m;
  }
  c.c5 = 1.0 + std::abs(p - 2.0);
  c.c6 = 2.0 * c.c5 / std::min(1.0, m);
  c.c9 = std::min(c.c7, 1.0 / c.c8);
  c.c10 = std::max(1.0 / c.c7, c.c8);
  return c;
}

double SampleVerdict::worst() const {
  return std::min({lower9, upper9, lower10, upper10});
}

SampleVerdict verify_sample(double a, double b, double p) {
  check_p(p);
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("verify_sample: need finite a, b > 0");
  }
  if (a == b) throw DomainError("verify_sample: need a != b");
  const double x = std::max(a, b) / std::min(a, b);
  const double L = std::log(x);
  const double m = p - 1.0;
  const bool series = near_one(x);
  const TightConstants c = tight_constants(p);

  SampleVerdict v;
  v.high_branch = c.high_branch;
  v.g1 = g1_from_log(L, m, series);
  v.g_second = c.high_branch ? g2_from_log(L, m, series) : g3_from_log(L, m, series);
  v.lower9 = v.g1 / c.c1 - 1.0;
  v.upper9 = 1.0 - v.g1 / c.c2;
  v.lower10 = v.g_second / c.c3 - 1.0;
  v.upper10 = 1.0 - v.g_second / c.c4;
  return v;
}

double envelope_weight(double a, double b, double p) {
  check_p(p);
  if (p >= 2.0) return std::pow(a, p - 2.0) + std::pow(b, p - 2.0);
  return 1.0 / (std::pow(a, 2.0 - p) + std::pow(b, 2.0 - p));
}

std::pair<double, double> I_p_bounds(double gv, double gu, double p) {
  check_p(p);
  if (!(gv >= 0.0) || !(gu >= 0.0)) {
    throw DomainError("I_p_bounds: gradient magnitudes must be non-negative");
  }
  if (p < 2.0 && gv == 0.0 && gu == 0.0) {
    throw SingularCaseError("I_p_bounds: both gradients vanish with p < 2");
  }
  const TightConstants c = tight_constants(p);
  const double w = envelope_weight(gv, gu, p);
  return {c.c9 * w, c.c10 * w};
}

double I_p_collinear_closed_form(double a, double b, bool opposite, double p) {
  check_p(p);
  if (!(a >= 0.0) || !(b >= 0.0)) throw DomainError("I_p: magnitudes must be >= 0");
  if (a == 0.0 && b == 0.0) {
    if (p < 2.0) throw SingularCaseError("I_p: both gradients vanish with p < 2");
    return p == 2.0 ? 1.0 : 0.0;
  }
  if (opposite) return sum_quotient(a, b, p) / (p - 1.0);
  if (a == 0.0 || b == 0.0) return std::pow(std::max(a, b), p - 2.0) / (p - 1.0);
  return difference_quotient(a, b, p) / (p - 1.0);
}

}  // namespace threespheres
