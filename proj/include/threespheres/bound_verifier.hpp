#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "threespheres/geometry.hpp"
#include "threespheres/radial_barrier.hpp"

namespace threespheres {

/// Largest interpolated value over the quadrature points of Sigma_k(t);
/// t may sit on the annulus radii themselves.
double max_on_sphere(const GridField& field, const KAnnulus& annulus, double t, int density);

/// (v - Mr) / (MR - Mr). Throws DegeneracyError unless MR > Mr.
GridField normalize(const GridField& field, double Mr, double MR);

/// (MR - Mr) u0(t) + Mr.
inline double sphere_bound(double Mr, double MR, double u0_at_t) {
  return (MR - Mr) * u0_at_t + Mr;
}

struct BoundEntry {
  double t = 0.0;
  double M = 0.0;
  double bound = 0.0;
  double margin = 0.0;             // bound - M
  double normalized_margin = 0.0;  // margin / (MR - Mr)
};

struct BoundReport {
  double r = 0.0;
  double R = 0.0;
  double Mr = 0.0;
  double MR = 0.0;
  double p = 2.0;
  int k = 2;
  int n = 2;
  bool truncated = false;
  double slab_halfwidth = 0.0;
  int density = 0;
  double tolerance = 0.0;
  std::vector<BoundEntry> entries;
  bool pass = false;
  std::string note;

  double worst_margin() const;
};

struct BoundCheckConfig {
  double r = 1.0;
  double R = 2.0;
  double p = 2.0;
  std::vector<double> t_list;
  /// Absolute tolerance on normalized margins.
  double tolerance = 1e-6;
  int density = 512;
};

/// Compares sphere maxima of `field` against (M(R)-M(r)) u0(t) + M(r).
BoundReport three_spheres_check(const GridField& field, const KAnnulus& annulus,
                                const BoundCheckConfig& config);

/// Node gradients by central differences, one-sided next to outside nodes.
std::vector<Point> central_gradient(const GridField& field);

/// Multilinear interpolation of a node vector field.
Point interpolate_gradient(const GridField& field, const std::vector<Point>& gradient,
                           const Point& x);

/// |v - u|^2 (|grad v|^|p-2| + |grad u|^|p-2|) at x for the normalized field v
/// and the analytic barrier u.
double weight_integrand(const GridField& v, const std::vector<Point>& v_gradient,
                        const BarrierSpec& barrier, const Point& x);

/// H(t): surface integral of weight_integrand over the truncated Sigma_k(t).
double H_of_t(const GridField& v, const std::vector<Point>& v_gradient,
              const BarrierSpec& barrier, const KAnnulus& annulus, double t, int density);

/// Midpoint-rule volume integral of weight_integrand over cells centred in
/// r < d_k < S (and inside the slab).
double weighted_volume_integral(const GridField& v, const std::vector<Point>& v_gradient,
                                const BarrierSpec& barrier, const KAnnulus& annulus, double r,
                                double S);

/// Sampled weight H on a strictly increasing t-grid.
struct WeightProfile {
  std::vector<double> t;
  std::vector<double> H;

  void validate() const;
};

/// Cumulative trapezoid integrals of f over the profile grid (first entry 0).
std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> f);

struct DivergenceDiagnostic {
  std::vector<double> S;
  std::vector<double> partial;  // P(S) = int_r^S 1/H, +inf once H vanishes
  double fitted_exponent = 0.0;  // slope of log(1/H) against log t
  double fit_r2 = 0.0;
  std::string verdict;           // diverging-trend | bounded-trend | inconclusive
  bool exact = false;
  std::string note;
};

/// Trend classification of int_r^inf dt / H(t) from a finite profile. The
/// exponent is fitted over the largest decade of sampled t.
DivergenceDiagnostic condition_star4(const WeightProfile& profile);

struct VolumeSample {
  double S = 0.0;
  double integral = 0.0;  // weighted volume integral over D_{r,S}
};

struct GrowthDiagnostic {
  std::vector<double> S;
  std::vector<double> Q;  // integral / S^2
  double fitted_slope = 0.0;  // of log Q against log S
  std::string verdict;        // vanishing-trend | non-vanishing-trend | inconclusive
  bool exact = false;
  /// Hoelder chain (S-r)^2 / int_r^S 1/H <= int_r^S H per profile node.
  std::vector<double> hest_slack;  // relative: (rhs - lhs) / rhs
  bool hest_holds = true;
};

GrowthDiagnostic condition_star4b(std::span<const VolumeSample> samples,
                                  const WeightProfile& profile);

/// (S-r)^2 / int_r^S 1/H and int_r^S H for every profile node after the first.
struct HoelderChain {
  std::vector<double> lhs;
  std::vector<double> rhs;
};
HoelderChain hoelder_chain(const WeightProfile& profile);

struct ExtremalProfile {
  std::vector<double> eta;  // on the profile grid
  double capacity = 0.0;    // (int 1/H)^-1
  bool degenerate = false;  // H vanished: eta jumps where H first hits zero
};

/// eta(s) = int_{t0}^s 1/H / int_{t0}^{t1} 1/H with the trapezoid rule on 1/H.
ExtremalProfile extremal_eta(const WeightProfile& profile);

/// Discrete int eta'^2 H dt for a piecewise linear eta on the profile grid,
/// with per-interval conductance consistent with extremal_eta.
double profile_energy(const WeightProfile& profile, std::span<const double> eta);

/// f(z) = sum_j c_j z^(lowest_power + j).
struct LaurentSeries {
  std::vector<std::complex<double>> coefficients;
  int lowest_power = 0;

  std::complex<double> operator()(std::complex<double> z) const;
};

/// max |f| on |z| = radius: dense angular sampling refined by Brent's method
/// around the best samples.
double max_modulus(const LaurentSeries& f, double radius, int density = 4096);

struct HadamardVerdict {
  double M1 = 0.0;
  double M2 = 0.0;
  double M3 = 0.0;
  double lhs = 0.0;  // log M2 log(r3/r1)
  double rhs = 0.0;  // log M1 log(r3/r2) + log M3 log(r2/r1)
  double slack = 0.0;
  /// Second divided difference of log M(e^s) over the three radii.
  double convexity_gap = 0.0;
  bool pass = false;
};

HadamardVerdict hadamard_classical_check(const LaurentSeries& f, double r1, double r2,
                                         double r3, int density = 4096,
                                         double slack_tolerance = 1e-10);

}  // namespace threespheres
