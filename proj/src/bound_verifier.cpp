#include "threespheres/bound_verifier.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "threespheres/errors.hpp"
#include "threespheres/stencil.hpp"

namespace threespheres {

double max_on_sphere(const GridField& field, const KAnnulus& annulus, double t, int density) {
  if (field.grid.n != annulus.n()) throw ConfigError("max_on_sphere: dimension mismatch");
  const SurfaceQuadrature q = sample_ksphere(annulus, t, density, /*allow_boundary=*/true);
  double best = -std::numeric_limits<double>::infinity();
  for (const Point& x : q.points) best = std::max(best, interpolate(field, x));
  return best;
}

namespace {

void require_normalizable(double Mr, double MR) {
  if (!(MR > Mr)) {
    std::ostringstream msg;
    msg << "normalization undefined: need M(R) > M(r), got M(r)=" << Mr << ", M(R)=" << MR;
    throw DegeneracyError(msg.str());
  }
}

}  // namespace

GridField normalize(const GridField& field, double Mr, double MR) {
  require_normalizable(Mr, MR);
  GridField out = field;
  const double scale = 1.0 / (MR - Mr);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (out.mask[i] != NodeKind::outside) out.values[i] = (out.values[i] - Mr) * scale;
  }
  return out;
}

double BoundReport::worst_margin() const {
  double w = std::numeric_limits<double>::infinity();
  for (const BoundEntry& e : entries) w = std::min(w, e.normalized_margin);
  return w;
}

BoundReport three_spheres_check(const GridField& field, const KAnnulus& annulus,
                                const BoundCheckConfig& config) {
  const BarrierSpec spec{annulus.n(), annulus.k(), config.p, config.r, config.R};
  spec.validate();
  if (config.r < annulus.alpha() || config.R > annulus.beta()) {
    throw DomainError("three_spheres_check: [r, R] must lie within the field's annulus");
  }
  if (!(config.tolerance >= 0.0)) throw ConfigError("three_spheres_check: negative tolerance");

  BoundReport report;
  report.r = config.r;
  report.R = config.R;
  report.p = config.p;
  report.k = annulus.k();
  report.n = annulus.n();
  report.truncated = annulus.truncated();
  report.slab_halfwidth = annulus.slab_halfwidth();
  report.density = config.density;
  report.tolerance = config.tolerance;
  report.Mr = max_on_sphere(field, annulus, config.r, config.density);
  report.MR = max_on_sphere(field, annulus, config.R, config.density);
  require_normalizable(report.Mr, report.MR);

  report.pass = true;
  for (double t : config.t_list) {
    if (!(t > config.r && t < config.R)) {
      throw DomainError("three_spheres_check: every t must satisfy r < t < R");
    }
    BoundEntry e;
    e.t = t;
    e.M = max_on_sphere(field, annulus, t, config.density);
    e.bound = sphere_bound(report.Mr, report.MR, barrier_u0(spec, t));
    e.margin = e.bound - e.M;
    e.normalized_margin = e.margin / (report.MR - report.Mr);
    if (e.normalized_margin < -config.tolerance) report.pass = false;
    report.entries.push_back(e);
  }
  std::ostringstream note;
  note << "sphere maxima sampled at density " << config.density << " with multilinear interpolation";
  if (report.truncated) {
    note << "; truncated: k < n, spheres restricted to the slab |x_j| <= "
         << annulus.slab_halfwidth();
  }
  report.note = note.str();
  return report;
}

std::vector<Point> central_gradient(const GridField& field) {
  const GridSpec& g = field.grid;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Point> out(field.values.size(), Point{nan, nan, nan, nan});
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (field.mask[i] == NodeKind::outside) continue;
    const Index idx = g.unravel(i);
    Point grad{};
    for (int d = 0; d < g.n; ++d) {
      const std::size_t s = g.stride(d);
      const bool has_lo = idx[d] > 0 && field.mask[i - s] != NodeKind::outside;
      const bool has_hi = idx[d] < g.cells && field.mask[i + s] != NodeKind::outside;
      const double h = g.spacing[d];
      if (has_lo && has_hi) {
        grad[d] = (field.values[i + s] - field.values[i - s]) / (2.0 * h);
      } else if (has_hi) {
        grad[d] = (field.values[i + s] - field.values[i]) / h;
      } else if (has_lo) {
        grad[d] = (field.values[i] - field.values[i - s]) / h;
      }
    }
    out[i] = grad;
  }
  return out;
}

Point interpolate_gradient(const GridField& field, const std::vector<Point>& gradient,
                           const Point& x) {
  const InterpolationStencil st = interpolation_stencil(field.grid, x);
  Point out{};
  for (int c = 0; c < st.count; ++c) {
    const Point& g = gradient[st.nodes[static_cast<std::size_t>(c)]];
    if (std::isnan(g[0])) {
      throw DomainError("interpolate_gradient: stencil touches a node outside the domain");
    }
    for (int d = 0; d < field.grid.n; ++d) out[d] += st.weights[static_cast<std::size_t>(c)] * g[d];
  }
  return out;
}

double weight_integrand(const GridField& v, const std::vector<Point>& v_gradient,
                        const BarrierSpec& barrier, const Point& x) {
  const int n = v.grid.n;
  const double vx = interpolate(v, x);
  const double ux = barrier_u0(barrier, d_k(x, n, barrier.k), Extension::continuation);
  const double gv = std::sqrt(squared_norm(interpolate_gradient(v, v_gradient, x), n));
  const double gu = std::sqrt(squared_norm(barrier_gradient(barrier, x), n));
  const double e = std::abs(barrier.p - 2.0);
  const double diff = vx - ux;
  return diff * diff * (std::pow(gv, e) + std::pow(gu, e));
}

double H_of_t(const GridField& v, const std::vector<Point>& v_gradient,
              const BarrierSpec& barrier, const KAnnulus& annulus, double t, int density) {
  const SurfaceQuadrature q = sample_ksphere(annulus, t, density, /*allow_boundary=*/true);
  CompensatedSum sum;
  for (std::size_t i = 0; i < q.points.size(); ++i) {
    sum.add(q.weights[i] * weight_integrand(v, v_gradient, barrier, q.points[i]));
  }
  return sum.value();
}

double weighted_volume_integral(const GridField& v, const std::vector<Point>& v_gradient,
                                const BarrierSpec& barrier, const KAnnulus& annulus, double r,
                                double S) {
  const CellStencil stencil(v.grid, v.mask);
  const int n = v.grid.n;
  CompensatedSum sum;
  for (std::size_t c = 0; c < stencil.cell_count(); ++c) {
    const Point x = stencil.centre(c);
    const double t = d_k(x, n, annulus.k());
    if (!(t > r && t < S)) continue;
    bool in_slab = true;
    for (int j = annulus.k(); j < n; ++j) in_slab = in_slab && std::abs(x[j]) < annulus.slab_halfwidth();
    if (!in_slab) continue;
    sum.add(weight_integrand(v, v_gradient, barrier, x));
  }
  return sum.value() * v.grid.cell_volume();
}

void WeightProfile::validate() const {
  if (t.size() != H.size()) throw ConfigError("weight profile: t and H sizes differ");
  if (t.size() < 2) throw ConfigError("weight profile: need at least two samples");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0 && !(t[i] > t[i - 1])) throw ConfigError("weight profile: t must increase strictly");
    if (!(H[i] >= 0.0) || !std::isfinite(H[i])) {
      throw ConfigError("weight profile: H must be finite and non-negative");
    }
  }
}

std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> f) {
  std::vector<double> out(t.size(), 0.0);
  CompensatedSum sum;
  for (std::size_t i = 1; i < t.size(); ++i) {
    sum.add(0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]));
    out[i] = sum.value();
  }
  return out;
}

namespace {

std::vector<double> reciprocal(const std::vector<double>& H) {
  std::vector<double> inv(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) {
    inv[i] = H[i] > 0.0 ? 1.0 / H[i] : std::numeric_limits<double>::infinity();
  }
  return inv;
}

struct LineFit {
  double slope = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit fit;
  if (sxx > 0.0) fit.slope = sxy / sxx;
  fit.r2 = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace

DivergenceDiagnostic condition_star4(const WeightProfile& profile) {
  profile.validate();
  DivergenceDiagnostic diag;
  diag.S = profile.t;
  const std::vector<double> inv = reciprocal(profile.H);
  diag.partial = cumulative_trapezoid(profile.t, inv);

  if (std::any_of(profile.H.begin(), profile.H.end(), [](double h) { return h == 0.0; })) {
    diag.verdict = "diverging-trend";
    diag.exact = true;
    diag.note = "H vanishes on the sampled grid; the partial integrals are infinite";
    return diag;
  }

  const double t_max = profile.t.back();
  std::vector<double> x, y;
  for (std::size_t i = 0; i < profile.t.size(); ++i) {
    if (profile.t[i] >= t_max / 10.0) {
      x.push_back(std::log(profile.t[i]));
      y.push_back(std::log(inv[i]));
    }
  }
  const LineFit fit = least_squares(x, y);
  diag.fitted_exponent = fit.slope;
  diag.fit_r2 = fit.r2;

  // 1/H ~ t^gamma: the integral diverges for gamma >= -1.
  constexpr double kDivergingAbove = -1.1;
  constexpr double kBoundedBelow = -1.3;
  std::ostringstream note;
  note << "trend fitted over t in [" << t_max / 10.0 << ", " << t_max
       << "]; finite samples never certify an improper integral";
  if (profile.t.front() > t_max / 10.0 || x.size() < 3) {
    diag.verdict = "inconclusive";
    note << "; sampled range shorter than a decade";
  } else if (fit.r2 < 0.9) {
    diag.verdict = "inconclusive";
    note << "; poor power-law fit";
  } else if (fit.slope >= kDivergingAbove) {
    diag.verdict = "diverging-trend";
  } else if (fit.slope <= kBoundedBelow) {
    diag.verdict = "bounded-trend";
  } else {
    diag.verdict = "inconclusive";
  }
  diag.note = note.str();
  return diag;
}

HoelderChain hoelder_chain(const WeightProfile& profile) {
  profile.validate();
  const std::vector<double> inv = reciprocal(profile.H);
  const std::vector<double> P = cumulative_trapezoid(profile.t, inv);
  const std::vector<double> A = cumulative_trapezoid(profile.t, profile.H);
  HoelderChain chain;
  for (std::size_t j = 1; j < profile.t.size(); ++j) {
    const double len = profile.t[j] - profile.t[0];
    chain.lhs.push_back(std::isinf(P[j]) ? 0.0 : len * len / P[j]);
    chain.rhs.push_back(A[j]);
  }
  return chain;
}

GrowthDiagnostic condition_star4b(std::span<const VolumeSample> samples,
                                  const WeightProfile& profile) {
  GrowthDiagnostic diag;
  bool all_zero = true;
  for (const VolumeSample& s : samples) {
    if (!(s.S > 0.0) || !(s.integral >= 0.0)) {
      throw ConfigError("condition_star4b: samples need S > 0 and non-negative integrals");
    }
    diag.S.push_back(s.S);
    diag.Q.push_back(s.integral / (s.S * s.S));
    all_zero = all_zero && s.integral == 0.0;
  }
  if (all_zero) {
    diag.verdict = "vanishing-trend";
    diag.exact = true;
  } else {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < diag.S.size(); ++i) {
      if (diag.Q[i] > 0.0) {
        x.push_back(std::log(diag.S[i]));
        y.push_back(std::log(diag.Q[i]));
      }
    }
    if (x.size() < 3) {
      diag.verdict = "inconclusive";
    } else {
      diag.fitted_slope = least_squares(x, y).slope;
      const bool decreasing = diag.Q.back() < diag.Q.front();
      if (diag.fitted_slope <= -0.1 && decreasing) {
        diag.verdict = "vanishing-trend";
      } else if (diag.fitted_slope >= 0.0) {
        diag.verdict = "non-vanishing-trend";
      } else {
        diag.verdict = "inconclusive";
      }
    }
  }

  const HoelderChain chain = hoelder_chain(profile);
  for (std::size_t j = 0; j < chain.lhs.size(); ++j) {
    const double slack = chain.rhs[j] > 0.0 ? (chain.rhs[j] - chain.lhs[j]) / chain.rhs[j] : 0.0;
    diag.hest_slack.push_back(slack);
    if (slack < -1e-12) diag.hest_holds = false;
  }
  return diag;
}

ExtremalProfile extremal_eta(const WeightProfile& profile) {
  profile.validate();
  ExtremalProfile out;
  const auto zero = std::find(profile.H.begin(), profile.H.end(), 0.0);
  if (zero != profile.H.end()) {
    const auto first = static_cast<std::size_t>(zero - profile.H.begin());
    out.degenerate = true;
    out.capacity = 0.0;
    out.eta.assign(profile.t.size(), 0.0);
    for (std::size_t i = first; i < profile.t.size(); ++i) out.eta[i] = 1.0;
    out.eta.back() = 1.0;
    return out;
  }
  const std::vector<double> P = cumulative_trapezoid(profile.t, reciprocal(profile.H));
  const double total = P.back();
  out.capacity = 1.0 / total;
  out.eta.resize(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) out.eta[i] = P[i] / total;
  out.eta.back() = 1.0;
  return out;
}

double profile_energy(const WeightProfile& profile, std::span<const double> eta) {
  profile.validate();
  if (eta.size() != profile.t.size()) throw ConfigError("profile_energy: size mismatch");
  const std::vector<double> inv = reciprocal(profile.H);
  CompensatedSum sum;
  for (std::size_t i = 1; i < eta.size(); ++i) {
    // Interval conductance dt * mean(1/H).
    const double conductance = (profile.t[i] - profile.t[i - 1]) * 0.5 * (inv[i] + inv[i - 1]);
    if (std::isinf(conductance)) continue;
    const double d = eta[i] - eta[i - 1];
    sum.add(d * d / conductance);
  }
  return sum.value();
}

std::complex<double> LaurentSeries::operator()(std::complex<double> z) const {
  std::complex<double> acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * z + *it;
  return lowest_power == 0 ? acc : acc * std::pow(z, lowest_power);
}

double max_modulus(const LaurentSeries& f, double radius, int density) {
  if (!(radius > 0.0)) throw DomainError("max_modulus: radius must be positive");
  if (density < 8) throw ConfigError("max_modulus: density must be >= 8");
  const double step = 2.0 * std::numbers::pi / density;
  auto modulus = [&](double theta) { return std::abs(f(std::polar(radius, theta))); };

  std::vector<double> samples(static_cast<std::size_t>(density));
  for (int j = 0; j < density; ++j) samples[static_cast<std::size_t>(j)] = modulus(j * step);
  std::vector<int> peaks;
  for (int j = 0; j < density; ++j) {
    const double v = samples[static_cast<std::size_t>(j)];
    const double prev = samples[static_cast<std::size_t>((j + density - 1) % density)];
    const double next = samples[static_cast<std::size_t>((j + 1) % density)];
    if (v >= prev && v >= next) peaks.push_back(j);
  }
  std::sort(peaks.begin(), peaks.end(), [&](int a, int b) {
    return samples[static_cast<std::size_t>(a)] > samples[static_cast<std::size_t>(b)];
  });
  if (peaks.size() > 8) peaks.resize(8);

  double best = *std::max_element(samples.begin(), samples.end());
  for (int j : peaks) {
    const auto [theta, neg] = boost::math::tools::brent_find_minima(
        [&](double th) { return -modulus(th); }, (j - 1) * step, (j + 1) * step,
        std::numeric_limits<double>::digits);
    (void)theta;
    best = std::max(best, -neg);
  }
  return best;
}

HadamardVerdict hadamard_classical_check(const LaurentSeries& f, double r1, double r2,
                                         double r3, int density, double slack_tolerance) {
  if (!(r1 > 0.0 && r1 < r2 && r2 < r3)) {
    throw DomainError("hadamard: need 0 < r1 < r2 < r3");
  }
  for (const auto& c : f.coefficients) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw ConfigError("hadamard: coefficients must be finite");
    }
  }
  HadamardVerdict v;
  v.M1 = max_modulus(f, r1, density);
  v.M2 = max_modulus(f, r2, density);
  v.M3 = max_modulus(f, r3, density);
  if (v.M1 == 0.0 || v.M2 == 0.0 || v.M3 == 0.0) {
    throw DegeneracyError("hadamard: maximum modulus vanishes; f is identically zero");
  }
  const double l1 = std::log(v.M1), l2 = std::log(v.M2), l3 = std::log(v.M3);
  const double s1 = std::log(r1), s2 = std::log(r2), s3 = std::log(r3);
  v.lhs = l2 * std::log(r3 / r1);
  v.rhs = l1 * std::log(r3 / r2) + l3 * std::log(r2 / r1);
  v.slack = v.rhs - v.lhs;
  v.convexity_gap = ((l3 - l2) / (s3 - s2) - (l2 - l1) / (s2 - s1)) / (s3 - s1);
  const double scale = std::max({1.0, std::abs(v.lhs), std::abs(v.rhs)});
  v.pass = v.slack >= -slack_tolerance * scale;
  return v;
}

}  // namespace threespheres
