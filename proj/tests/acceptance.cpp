// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "threespheres/bound_verifier.hpp"
#include "threespheres/inequality.hpp"
#include "threespheres/plaplace.hpp"
#include "threespheres/radial_barrier.hpp"

using namespace threespheres;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> twenty_radii(double r, double R) {
  std::vector<double> t;
  for (int i = 1; i <= 20; ++i) t.push_back(r + (R - r) * i / 21.0);
  return t;
}

Outcome barrier_exactness() {
  struct Case {
    int n, k;
    double p;
  };
  Outcome out;
  std::ostringstream d;
  for (const Case c : {Case{2, 2, 2}, Case{2, 2, 3}, Case{2, 2, 1.5}, Case{3, 2, 2}, Case{3, 3, 3}}) {
    const KAnnulus a = KAnnulus::make(c.n, c.k, 1, 2);
    const BarrierSpec s{c.n, c.k, c.p, 1, 2};
    std::vector<double> res;
    for (int cells : {64, 128, 256}) {
      res.push_back(plap_residual(barrier_field(s, build_grid(a, cells)).field, c.p).max_residual);
    }
    const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
    const bool ok = o1 >= 1.0 && o2 >= 1.0 && res[2] <= 1e-3;
    out.pass = out.pass && ok;
    d << " (" << c.n << "," << c.k << "," << c.p << "): res256=" << fmt("%.2e", res[2])
      << " orders=" << fmt("%.2f", o1) << "," << fmt("%.2f", o2) << (ok ? "" : " [fail]") << ";";
  }
  out.detail = d.str();
  return out;
}

Outcome solver_vs_oracle() {
  Outcome out;
  std::ostringstream d;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    const RadialProfile prof = solve_radial_ode(1, 2, 2, p, 0.0, 1.0);
    PLaplaceProblem pb;
    pb.annulus = KAnnulus::make(2, 2, 1, 2);
    pb.p = p;
    pb.cells = 128;
    pb.boundary = [prof](const Point& x) { return prof(d_k(x, 2, 2)); };
    const SolveResult res = solve_dirichlet(pb);
    double err = 0.0;
    for (std::size_t i = 0; i < res.field.size(); ++i) {
      if (res.field.mask[i] != NodeKind::interior) continue;
      err = std::max(err, std::abs(res.field[i] - prof(d_k(res.field.grid.position(i), 2, 2))));
    }
    const double secs = seconds_since(t0);
    const bool ok = res.report.converged && err <= 5e-3 && secs <= 60.0;
    out.pass = out.pass && ok;
    d << " p=" << p << ": err=" << fmt("%.2e", err) << " time=" << fmt("%.1fs", secs)
      << (ok ? "" : " [fail]") << ";";
  }
  out.detail = d.str();
  return out;
}

Outcome three_spheres_bound() {
  Outcome out;
  std::ostringstream d;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> amp(0.05, 0.5), phase(0.0, 2 * pi);
  std::uniform_int_distribution<int> mode(1, 6);
  double worst_pure = INFINITY, worst_pert = INFINITY, tight = 0.0;
  for (double p : {1.5, 2.0, 2.5, 3.0, 4.0}) {
    const BarrierSpec spec{2, 2, p, 1, 2};
    for (bool perturbed : {false, true}) {
      PLaplaceProblem pb;
      pb.annulus = KAnnulus::make(2, 2, 1, 2);
      pb.p = p;
      // Pure barrier data saturate the bound, so their margins are pure
      // discretization error and need the finer grid.
      pb.cells = perturbed ? 512 : 1024;
      pb.tolerance = 1e-14;
      pb.boundary = perturbed
                        ? perturbed_barrier_boundary(spec, amp(rng), mode(rng), phase(rng), 1.5)
                        : barrier_boundary(spec);
      const SolveResult res = solve_dirichlet(pb);
      BoundCheckConfig cfg;
      cfg.p = p;
      cfg.t_list = twenty_radii(1, 2);
      const BoundReport rep = three_spheres_check(res.field, pb.annulus, cfg);
      double worst = INFINITY, largest = 0.0;
      for (const BoundEntry& e : rep.entries) {
        worst = std::min(worst, e.normalized_margin);
        largest = std::max(largest, std::abs(e.margin));
      }
      bool ok = res.report.converged && worst >= -1e-6;
      if (perturbed) {
        worst_pert = std::min(worst_pert, worst);
      } else {
        worst_pure = std::min(worst_pure, worst);
        tight = std::max(tight, largest);
        ok = ok && largest <= 2e-3;
      }
      out.pass = out.pass && ok;
      if (!ok) {
        d << " p=" << p << (perturbed ? " perturbed" : " barrier")
          << ": worst margin " << fmt("%.2e", worst) << " [fail];";
      }
    }
  }
  d << " worst barrier margin=" << fmt("%.2e", worst_pure)
    << " worst perturbed margin=" << fmt("%.2e", worst_pert)
    << " max |barrier margin|=" << fmt("%.2e", tight);
  out.detail = d.str();
  return out;
}

Outcome inequality_lab() {
  Outcome out;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> loga(std::log(1e-3), std::log(1e3)), pd(1.01, 10.0);
  double worst = INFINITY;
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double a = std::exp(loga(rng)), b = std::exp(loga(rng)), p = pd(rng);
    if (a == b) continue;
    const double m = verify_sample(a, b, p).worst();
    worst = std::min(worst, m);
    if (m < -1e-12) ++violations;
  }
  double identity = 0.0;
  for (double x : {1.0 + 1e-9, 1.0 + 1e-4, 1.5, 3.0, 1e3, 1e9}) {
    identity = std::max({identity, std::abs(g1(x, 2.0) - 1), std::abs(g2(x, 3.0) - 1),
                         std::abs(g3(x, 1.5) - 1)});
  }
  out.pass = violations == 0 && identity <= 1e-12;
  out.detail = " violations=" + std::to_string(violations) + " worst margin=" + fmt("%.2e", worst) +
               " identity error=" + fmt("%.1e", identity);
  return out;
}

// Quadrature of I(p) for collinear gradients. For opposite orientations the
// integrand is |s|^(p-2) in the distance s from the sign change.
double I_quadrature(double a, double b, bool opposite, double p, double& error) {
  static boost::math::quadrature::tanh_sinh<double> rule;
  double e1 = 0.0, e2 = 0.0;
  if (opposite) {
    const auto g = [p](double s) { return std::pow(s, p - 2); };
    const double v = (rule.integrate(g, 0.0, b, 1e-12, &e1) + rule.integrate(g, 0.0, a, 1e-12, &e2)) / (a + b);
    error = (e1 + e2) / (a + b);
    return v;
  }
  const auto f = [=](double l) { return std::pow(l * a + (1 - l) * b, p - 2); };
  const double v = rule.integrate(f, 0.0, 1.0, 1e-12, &e1);
  error = e1;
  return v;
}

Outcome envelope() {
  Outcome out;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> loga(std::log(1e-2), std::log(1e2)), pd(1.01, 10.0);
  std::bernoulli_distribution flip(0.5);
  double worst = INFINITY;
  int outside = 0;
  for (int i = 0; i < 10000; ++i) {
    const double a = std::exp(loga(rng)), b = std::exp(loga(rng)), p = pd(rng);
    const bool opp = flip(rng);
    double qerr = 0.0;
    const double I = I_quadrature(a, b, opp, p, qerr);
    const auto [lo, hi] = I_p_bounds(a, b, p);
    const double slack = std::min(I - lo, hi - I);
    const double allowance = qerr + 1e-12 * I;
    worst = std::min(worst, slack / I);
    if (slack < -allowance) ++outside;
  }
  out.pass = outside == 0;
  out.detail = " outside=" + std::to_string(outside) + " worst relative slack=" + fmt("%.2e", worst);
  return out;
}

WeightProfile random_profile(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(3, 80);
  WeightProfile w;
  double t = 0.5 + u(rng);
  const int count = len(rng);
  for (int i = 0; i < count; ++i) {
    w.t.push_back(t);
    w.H.push_back(std::exp(8.0 * (u(rng) - 0.5)));
    t += 0.01 + u(rng);
  }
  return w;
}

Outcome extremal() {
  Outcome out;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_eq = 0.0, worst_comp = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    const WeightProfile w = random_profile(rng);
    const ExtremalProfile e = extremal_eta(w);
    worst_eq = std::max(worst_eq, std::abs(profile_energy(w, e.eta) / e.capacity - 1));
    for (int c = 0; c < 100; ++c) {
      std::vector<double> eta(w.t.size());
      for (std::size_t i = 1; i + 1 < eta.size(); ++i) eta[i] = 1.4 * u(rng) - 0.2;
      eta.back() = 1.0;
      worst_comp = std::min(worst_comp, profile_energy(w, eta) - e.capacity);
    }
  }
  out.pass = worst_eq <= 1e-8 && worst_comp >= -1e-8;
  out.detail = " max relative gap=" + fmt("%.1e", worst_eq) +
               " min competitor excess=" + fmt("%.2e", worst_comp);
  return out;
}

Outcome hoelder() {
  Outcome out;
  std::mt19937_64 rng(17);
  double worst = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    const GrowthDiagnostic g = condition_star4b(std::vector<VolumeSample>{}, random_profile(rng));
    for (double s : g.hest_slack) worst = std::min(worst, s);
  }
  out.pass = worst >= -1e-12;
  out.detail = " min relative slack=" + fmt("%.2e", worst);
  return out;
}

Outcome hadamard() {
  Outcome out;
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> deg(0, 8);
  double worst = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    LaurentSeries f;
    const int d = deg(rng);
    for (int j = 0; j <= d; ++j) f.coefficients.emplace_back(u(rng), u(rng));
    worst = std::min(worst, hadamard_classical_check(f, 0.5, 1.0, 2.0).slack);
  }
  double mono = 0.0;
  for (int m = 0; m <= 8; ++m) {
    mono = std::max(mono, std::abs(hadamard_classical_check(LaurentSeries{{{1.0, 0.5}}, m}, 0.5, 1.0, 2.0).slack));
  }
  out.pass = worst >= -1e-10 && mono <= 1e-12;
  out.detail = " min slack=" + fmt("%.2e", worst) + " monomial |slack|=" + fmt("%.1e", mono);
  return out;
}

Outcome divergence() {
  Outcome out;
  std::ostringstream d;
  for (double c : {0.5, 1.0, 4.0}) {
    for (int power : {1, 3}) {
      WeightProfile w;
      for (int i = 0; i < 400; ++i) {
        const double t = std::pow(1e3, i / 399.0);
        w.t.push_back(t);
        w.H.push_back(c * std::pow(t, power));
      }
      const DivergenceDiagnostic diag = condition_star4(w);
      const std::string want = power == 1 ? "diverging-trend" : "bounded-trend";
      const bool ok = diag.verdict == want && std::abs(diag.fitted_exponent + power) <= 0.1;
      out.pass = out.pass && ok;
      d << " c=" << c << " t^" << power << ": " << diag.verdict << " "
        << fmt("%.3f", diag.fitted_exponent) << (ok ? "" : " [fail]") << ";";
    }
  }
  out.detail = d.str();
  return out;
}

Outcome principles() {
  Outcome out;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1), ph(0, 2 * pi), gap(0.0, 0.5);
  const auto random_data = [&]() {
    std::array<double, 4> a{}, f{};
    for (int j = 0; j < 4; ++j) {
      a[j] = u(rng) / (1 + j);
      f[j] = ph(rng);
    }
    const double inner = u(rng);
    return BoundaryData([=](const Point& x) {
      const double th = std::atan2(x[1], x[0]);
      double v = std::hypot(x[0], x[1]) < 1.5 ? inner : 0.0;
      for (int j = 0; j < 4; ++j) v += a[j] * std::cos((j + 1) * th + f[j]);
      return v;
    });
  };
  int failures = 0, solves = 0;
  double worst = INFINITY;
  for (double p : {1.5, 2.0, 3.0}) {
    for (int pair = 0; pair < 20; ++pair) {
      const BoundaryData g1 = random_data();
      const double shift = gap(rng), freq = 1 + 4 * std::abs(u(rng));
      const BoundaryData g2 = [g1, shift, freq](const Point& x) {
        return g1(x) + shift * (1 + std::sin(freq * x[0]));
      };
      PLaplaceProblem a;
      a.annulus = KAnnulus::make(2, 2, 1, 2);
      a.p = p;
      a.cells = 64;
      PLaplaceProblem b = a;
      a.boundary = g1;
      b.boundary = g2;
      const SolveResult va = solve_dirichlet(a), vb = solve_dirichlet(b);
      solves += 2;
      if (!va.report.converged || !vb.report.converged) ++failures;
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = 0; i < va.field.size(); ++i) {
        if (va.field.mask[i] != NodeKind::boundary) continue;
        lo = std::min(lo, va.field[i]);
        hi = std::max(hi, va.field[i]);
      }
      for (std::size_t i = 0; i < va.field.size(); ++i) {
        if (va.field.mask[i] != NodeKind::interior) continue;
        const double m = std::min({vb.field[i] - va.field[i], va.field[i] - lo, hi - va.field[i]});
        worst = std::min(worst, m);
        if (m < -1e-8) ++failures;
      }
    }
  }
  out.pass = failures == 0;
  out.detail = " solves=" + std::to_string(solves) + " violations=" + std::to_string(failures) +
               " min slack=" + fmt("%.2e", worst);
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "barrier exactness", barrier_exactness},
      {2, "solver vs radial oracle", solver_vs_oracle},
      {3, "three-spheres bound", three_spheres_bound},
      {4, "inequality lab", inequality_lab},
      {5, "I(p) envelope", envelope},
      {6, "extremal cutoff", extremal},
      {7, "Hoelder estimate", hoelder},
      {8, "classical Hadamard", hadamard},
      {9, "divergence diagnostics", divergence},
      {10, "comparison and maximum principles", principles},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string(" exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s [%d] %s (%.1fs):%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
