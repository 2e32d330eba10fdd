#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "threespheres/errors.hpp"
#include "threespheres/plaplace.hpp"
#include "threespheres/stencil.hpp"

using namespace threespheres;

namespace {

// Field on the unit square with every node active.
GridField unit_square(int cells, double (*f)(const Point&)) {
  GridField out;
  out.grid.n = 2;
  out.grid.cells = cells;
  out.grid.spacing = Point{1.0 / cells, 1.0 / cells};
  const std::size_t count = out.grid.node_count();
  out.values.resize(count);
  out.mask.assign(count, NodeKind::boundary);
  for (std::size_t i = 0; i < count; ++i) out.values[i] = f(out.grid.position(i));
  return out;
}

double max_error_vs(const GridField& f, const RadialProfile& oracle, int k) {
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.mask[i] != NodeKind::interior) continue;
    err = std::max(err, std::abs(f[i] - oracle(d_k(f.grid.position(i), f.grid.n, k))));
  }
  return err;
}

PLaplaceProblem radial_problem(double p, int cells) {
  PLaplaceProblem pb;
  pb.annulus = KAnnulus::make(2, 2, 1, 2);
  pb.p = p;
  pb.cells = cells;
  pb.boundary = barrier_boundary(BarrierSpec{2, 2, p, 1, 2});
  return pb;
}

// Smooth random data: a few angular modes on each boundary circle.
BoundaryData random_boundary(std::mt19937_64& rng, double shift) {
  std::uniform_real_distribution<double> u(-1, 1), ph(0, 2 * std::numbers::pi);
  std::array<double, 4> amp{}, phase{};
  for (int j = 0; j < 4; ++j) {
    amp[j] = u(rng) / (1 + j);
    phase[j] = ph(rng);
  }
  const double inner = u(rng);
  return [=](const Point& x) {
    const double th = std::atan2(x[1], x[0]);
    double v = std::hypot(x[0], x[1]) < 1.5 ? inner : 0.0;
    for (int j = 0; j < 4; ++j) v += amp[j] * std::cos((j + 1) * th + phase[j]);
    return v + shift;
  };
}

}  // namespace

TEST_CASE("discrete_energy examples") {
  const GridField x1 = unit_square(8, [](const Point& x) { return x[0]; });
  CHECK(discrete_energy(x1, 2.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(discrete_energy(x1, 3.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  const GridField c = unit_square(8, [](const Point&) { return 0.4; });
  CHECK(discrete_energy(c, 3.0, 0.1) == doctest::Approx(std::pow(0.1, 3.0)).epsilon(1e-13));
  CHECK(discrete_energy(c, 1.5, 0.0) == 0.0);
}

TEST_CASE("discrete_energy is convex along random lines") {
  const Grid g = build_grid(KAnnulus::make(2, 2, 1, 2), 16);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double p : {1.3, 2.0, 4.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      GridField a = g.make_field(), b = g.make_field(), m = g.make_field();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.mask[i] == NodeKind::outside) continue;
        a[i] = u(rng);
        b[i] = u(rng);
        m[i] = 0.5 * (a[i] + b[i]);
      }
      const double lhs = discrete_energy(m, p, 1e-3);
      const double rhs = 0.5 * (discrete_energy(a, p, 1e-3) + discrete_energy(b, p, 1e-3));
      CHECK(lhs <= rhs * (1 + 1e-14));
    }
  }
}

TEST_CASE("energy gradient matches central finite differences") {
  const Grid g = build_grid(KAnnulus::make(2, 2, 1, 2), 16);
  const CellStencil stencil(g.spec, g.mask);
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < g.mask.size(); ++i) {
    if (g.mask[i] == NodeKind::interior) interior.push_back(i);
  }
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
  for (int field = 0; field < 10; ++field) {
    const double p = field % 2 == 0 ? 1.5 : 3.0;
    GridField f = g.make_field();
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f.mask[i] != NodeKind::outside) f[i] = u(rng);
    }
    const std::vector<double> grad = energy_gradient_all_nodes(stencil, f.values, p, 1e-2);
    for (int k = 0; k < 10; ++k) {
      const std::size_t node = interior[pick(rng)];
      const double h = 1e-6;
      GridField fp = f, fm = f;
      fp[node] += h;
      fm[node] -= h;
      const double fd = (discrete_energy(fp, p, 1e-2) - discrete_energy(fm, p, 1e-2)) / (2 * h);
      CHECK(std::abs(fd - grad[node]) <= 1e-6 * std::max(1.0, std::abs(grad[node])));
    }
  }
}

TEST_CASE("solve: harmonic annulus within 2e-3 on 128^2") {
  const SolveResult res = solve_dirichlet(radial_problem(2.0, 128));
  CHECK(res.report.converged);
  CHECK(max_error_vs(res.field, solve_radial_ode(1, 2, 2, 2.0, 0, 1), 2) <= 2e-3);
  CHECK(res.report.weak_residual <= 1e-4);
}

TEST_CASE("solve: p = 3 and p = 1.5 match the radial oracle within 5e-3 on 128^2") {
  for (double p : {3.0, 1.5}) {
    const SolveResult res = solve_dirichlet(radial_problem(p, 128));
    CAPTURE(p);
    CHECK(res.report.converged);
    CHECK(max_error_vs(res.field, solve_radial_ode(1, 2, 2, p, 0, 1), 2) <= 5e-3);
  }
}

TEST_CASE("solve: constant data needs no iterations") {
  PLaplaceProblem pb = radial_problem(3.0, 32);
  pb.boundary = constant_boundary(0.7);
  const SolveResult res = solve_dirichlet(pb);
  CHECK(res.report.converged);
  CHECK(res.report.iterations == 0);
  for (std::size_t i = 0; i < res.field.size(); ++i) {
    if (res.field.mask[i] != NodeKind::outside) CHECK(res.field[i] == 0.7);
  }
}

TEST_CASE("solve: report contract") {
  PLaplaceProblem pb = radial_problem(3.0, 48);
  pb.boundary = perturbed_barrier_boundary(BarrierSpec{2, 2, 3.0, 1, 2}, 0.2, 3, 0.4, 1.5);
  const SolveResult res = solve_dirichlet(pb);
  CHECK(res.report.converged);
  CHECK(res.report.gradient_norm <= pb.tolerance);
  CHECK(res.report.iterations <= pb.max_iterations);
  CHECK(std::isfinite(res.report.energy));
  REQUIRE(res.report.stage_energies.size() == pb.epsilon_schedule.size());
  for (const auto& stage : res.report.stage_energies) {
    for (std::size_t j = 1; j < stage.size(); ++j) CHECK(stage[j] <= stage[j - 1]);
  }
  for (std::size_t i = 0; i < res.field.size(); ++i) {
    if (res.field.mask[i] == NodeKind::boundary) {
      CHECK(res.field[i] == pb.boundary(res.field.grid.position(i)));
    }
  }
}

TEST_CASE("solve: descent and Newton agree") {
  PLaplaceProblem pb = radial_problem(3.0, 24);
  pb.boundary = perturbed_barrier_boundary(BarrierSpec{2, 2, 3.0, 1, 2}, 0.3, 2, 0.0, 1.5);
  const SolveResult newton = solve_dirichlet(pb);
  pb.method = Minimizer::descent;
  pb.harmonic_start = false;
  pb.tolerance = 1e-9;
  const SolveResult descent = solve_dirichlet(pb);
  CHECK(newton.report.converged);
  CHECK(descent.report.converged);
  double diff = 0.0;
  for (std::size_t i = 0; i < newton.field.size(); ++i) {
    if (newton.field.mask[i] == NodeKind::interior) {
      diff = std::max(diff, std::abs(newton.field[i] - descent.field[i]));
    }
  }
  CHECK(diff <= 1e-6);
}

TEST_CASE("solve: iteration cap yields an explicit failure with the best iterate") {
  PLaplaceProblem pb = radial_problem(3.0, 32);
  pb.max_iterations = 1;
  pb.harmonic_start = false;
  const SolveResult res = solve_dirichlet(pb);
  CHECK_FALSE(res.report.converged);
  CHECK(res.report.stop_reason == "max-iterations");
  CHECK(res.report.iterations == 1);
  REQUIRE(res.report.stage_energies.size() == 1);
  const auto& trace = res.report.stage_energies.front();
  REQUIRE(trace.size() == 2);
  CHECK(trace[1] < trace[0]);
  CHECK(res.field.size() == build_grid(pb.annulus, 32).spec.node_count());
}

TEST_CASE("solve: configuration errors") {
  PLaplaceProblem pb = radial_problem(2.0, 32);
  pb.p = 1.0;
  CHECK_THROWS_AS(solve_dirichlet(pb), ConfigError);
  pb.p = 2.0;
  pb.epsilon_schedule = {1e-4, 1e-2};
  CHECK_THROWS_AS(solve_dirichlet(pb), ConfigError);
  pb.epsilon_schedule = {1e-2};
  pb.tolerance = 0.0;
  CHECK_THROWS_AS(solve_dirichlet(pb), ConfigError);
}

TEST_CASE("solve: affine data is reproduced exactly") {
  for (double p : {1.5, 3.0}) {
    PLaplaceProblem pb = radial_problem(p, 24);
    pb.boundary = [](const Point& x) { return 0.3 * x[0] - 0.1; };
    const SolveResult res = solve_dirichlet(pb);
    for (std::size_t i = 0; i < res.field.size(); ++i) {
      if (res.field.mask[i] == NodeKind::interior) {
        CHECK(res.field[i] == doctest::Approx(0.3 * res.field.grid.position(i)[0] - 0.1).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("solve_radial_ode examples") {
  const RadialProfile f = solve_radial_ode(1, 2, 3, 2.5, 0, 1);
  for (double t : {1.0, 1.3, 2.0}) CHECK(f(t) == barrier_u0(BarrierSpec{3, 3, 2.5, 1, 2}, t));
  const RadialProfile c = solve_radial_ode(1, 2, 2, 3.0, 0.4, 0.4);
  CHECK(c(1.7) == 0.4);
  const double e = std::numbers::e;
  CHECK(solve_radial_ode(1, e * e, 2, 2.0, 0, 1)(e) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(solve_radial_ode(2, 1, 2, 2.0, 0, 1), DomainError);
}

TEST_CASE("oracle error decreases at first order or better") {
  for (double p : {1.5, 3.0}) {
    const RadialProfile oracle = solve_radial_ode(1, 2, 2, p, 0, 1);
    const double e32 = max_error_vs(solve_dirichlet(radial_problem(p, 32)).field, oracle, 2);
    const double e64 = max_error_vs(solve_dirichlet(radial_problem(p, 64)).field, oracle, 2);
    CAPTURE(p);
    CHECK(std::log2(e32 / e64) >= 1.0);
  }
}

TEST_CASE("weak_residual examples") {
  const GridField x1 = unit_square(16, [](const Point& x) { return 2 * x[0] + x[1]; });
  // Make the outer ring non-interior so test functions stay inside.
  GridField f = x1;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Index idx = f.grid.unravel(i);
    const bool edge = idx[0] == 0 || idx[1] == 0 || idx[0] == 16 || idx[1] == 16;
    f.mask[i] = edge ? NodeKind::boundary : NodeKind::interior;
  }
  for (double p : {1.5, 2.0, 3.0}) CHECK(weak_residual(f, p, 10, 4) <= 1e-10);

  PLaplaceProblem loose = radial_problem(2.0, 128);
  loose.method = Minimizer::descent;
  loose.harmonic_start = false;
  loose.tolerance = 1e-2;
  const SolveResult rough = solve_dirichlet(loose);
  const SolveResult tight = solve_dirichlet(radial_problem(2.0, 128));
  const double r_rough = weak_residual(rough.field, 2.0, 8, 17);
  const double r_tight = weak_residual(tight.field, 2.0, 8, 17);
  CHECK(r_tight <= 1e-4);
  CHECK(r_rough > r_tight);
  CHECK_THROWS_AS(weak_residual(f, 2.0, 0, 1), ConfigError);
}

TEST_CASE("comparison and maximum principles on random data") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> gap(0.0, 0.5);
  for (double p : {1.5, 2.0, 3.0}) {
    for (int trial = 0; trial < 3; ++trial) {
      const BoundaryData g1 = random_boundary(rng, 0.0);
      const double shift = gap(rng);
      PLaplaceProblem a = radial_problem(p, 32), b = radial_problem(p, 32);
      a.boundary = g1;
      b.boundary = [g1, shift](const Point& x) { return g1(x) + shift * (1 + std::sin(3 * x[0])); };
      const SolveResult va = solve_dirichlet(a), vb = solve_dirichlet(b);
      CHECK(va.report.converged);
      CHECK(vb.report.converged);
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = 0; i < va.field.size(); ++i) {
        if (va.field.mask[i] == NodeKind::boundary) {
          lo = std::min(lo, va.field[i]);
          hi = std::max(hi, va.field[i]);
        }
      }
      for (std::size_t i = 0; i < va.field.size(); ++i) {
        if (va.field.mask[i] != NodeKind::interior) continue;
        CHECK(va.field[i] <= vb.field[i] + 1e-8);
        CHECK(va.field[i] >= lo - 1e-8);
        CHECK(va.field[i] <= hi + 1e-8);
      }
    }
  }
}
