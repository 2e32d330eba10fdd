#include "threespheres/plaplace.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "threespheres/errors.hpp"
#include "threespheres/stencil.hpp"

namespace threespheres {

BoundaryData constant_boundary(double c) {
  return [c](const Point&) { return c; };
}

BoundaryData barrier_boundary(const BarrierSpec& spec) {
  spec.validate();
  return [spec](const Point& x) {
    return barrier_u0(spec, d_k(x, spec.n, spec.k), Extension::continuation);
  };
}

BoundaryData perturbed_barrier_boundary(const BarrierSpec& spec, double amplitude, int mode,
                                        double phase, double outer_radius) {
  spec.validate();
  return [=](const Point& x) {
    const double t = d_k(x, spec.n, spec.k);
    double value = barrier_u0(spec, t, Extension::continuation);
    if (t >= outer_radius) {
      const double theta = std::atan2(x[1], x[0]);
      value -= amplitude * 0.5 * (1.0 + std::cos(mode * theta + phase));
    }
    return value;
  };
}

void PLaplaceProblem::validate() const {
  if (!(p > 1.0) || p > kPMax) throw ConfigError("solve: p must lie in (1, 10]");
  if (!boundary) throw ConfigError("solve: boundary data missing");
  if (cells < 8) throw ConfigError("solve: cells per axis must be >= 8");
  if (epsilon_schedule.empty()) throw ConfigError("solve: empty epsilon schedule");
  for (std::size_t i = 0; i < epsilon_schedule.size(); ++i) {
    if (!(epsilon_schedule[i] > 0.0)) throw ConfigError("solve: epsilon must be positive");
    if (i > 0 && !(epsilon_schedule[i] < epsilon_schedule[i - 1])) {
      throw ConfigError("solve: epsilon schedule must be strictly decreasing");
    }
  }
  if (!(tolerance > 0.0)) throw ConfigError("solve: tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("solve: max_iterations must be >= 1");
}

double discrete_energy(const GridField& field, double p, double eps) {
  const CellStencil stencil(field.grid, field.mask);
  CompensatedSum sum;
  for (std::size_t c = 0; c < stencil.cell_count(); ++c) {
    const double w = squared_norm(stencil.gradient(field.values, c), field.grid.n) + eps * eps;
    sum.add(std::pow(w, 0.5 * p));
  }
  return sum.value() * field.grid.cell_volume();
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

constexpr double kArmijo = 1e-4;
constexpr double kStagnation = 1e-14;

class EnergyModel {
 public:
  EnergyModel(const CellStencil& stencil, std::span<const NodeKind> mask, double p)
      : stencil_(stencil), p_(p), volume_(stencil.grid().cell_volume()) {
    node_to_unknown_.assign(mask.size(), -1);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] == NodeKind::interior) {
        node_to_unknown_[i] = static_cast<std::ptrdiff_t>(unknown_to_node_.size());
        unknown_to_node_.push_back(i);
      }
    }
  }

  std::size_t size() const { return unknown_to_node_.size(); }
  std::size_t node(std::size_t unknown) const { return unknown_to_node_[unknown]; }
  double p() const { return p_; }

  double energy(std::span<const double> values, double eps, double p) const {
    CompensatedSum sum;
    const int n = stencil_.grid().n;
    for (std::size_t c = 0; c < stencil_.cell_count(); ++c) {
      sum.add(std::pow(squared_norm(stencil_.gradient(values, c), n) + eps * eps, 0.5 * p));
    }
    return sum.value() * volume_;
  }
  double energy(std::span<const double> values, double eps) const {
    return energy(values, eps, p_);
  }

  Eigen::VectorXd gradient(std::span<const double> values, double eps, double p) const {
    const std::vector<double> full = energy_gradient_all_nodes(stencil_, values, p, eps);
    Eigen::VectorXd g(static_cast<Eigen::Index>(size()));
    for (std::size_t u = 0; u < size(); ++u) g[static_cast<Eigen::Index>(u)] = full[node(u)];
    return g;
  }

  // Hessian restricted to unknowns; also returns its diagonal.
  void hessian(std::span<const double> values, double eps, double p, SparseMatrix& H,
               Eigen::VectorXd& diagonal) const {
    const int n = stencil_.grid().n;
    const int corners = stencil_.corners();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(stencil_.cell_count() * static_cast<std::size_t>(corners * corners));
    diagonal.setZero(static_cast<Eigen::Index>(size()));
    std::vector<double> bg(static_cast<std::size_t>(corners));
    for (std::size_t c = 0; c < stencil_.cell_count(); ++c) {
      const Point g = stencil_.gradient(values, c);
      const double w = squared_norm(g, n) + eps * eps;
      double a = 0.0;
      double b = 0.0;
      if (w > 0.0) {
        a = p * std::pow(w, 0.5 * p - 1.0);
        b = p * (p - 2.0) * std::pow(w, 0.5 * p - 2.0);
      } else if (p == 2.0) {
        a = 2.0;
      } else {
        continue;
      }
      for (int i = 0; i < corners; ++i) {
        double dot = 0.0;
        for (int d = 0; d < n; ++d) dot += stencil_.coefficient(i, d) * g[d];
        bg[static_cast<std::size_t>(i)] = dot;
      }
      for (int i = 0; i < corners; ++i) {
        const std::ptrdiff_t ui = node_to_unknown_[stencil_.corner_node(c, i)];
        if (ui < 0) continue;
        for (int j = 0; j < corners; ++j) {
          const std::ptrdiff_t uj = node_to_unknown_[stencil_.corner_node(c, j)];
          if (uj < 0) continue;
          double bb = 0.0;
          for (int d = 0; d < n; ++d) {
            bb += stencil_.coefficient(i, d) * stencil_.coefficient(j, d);
          }
          const double h = volume_ * (a * bb + b * bg[static_cast<std::size_t>(i)] *
                                                   bg[static_cast<std::size_t>(j)]);
          triplets.emplace_back(static_cast<int>(ui), static_cast<int>(uj), h);
          if (ui == uj) diagonal[ui] += h;
        }
      }
    }
    H.resize(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
    H.setFromTriplets(triplets.begin(), triplets.end());
  }

  void add_step(std::vector<double>& values, const std::vector<double>& base,
                const Eigen::VectorXd& direction, double alpha) const {
    values = base;
    for (std::size_t u = 0; u < size(); ++u) {
      values[node(u)] += alpha * direction[static_cast<Eigen::Index>(u)];
    }
  }

 private:
  const CellStencil& stencil_;
  double p_;
  double volume_;
  std::vector<std::ptrdiff_t> node_to_unknown_;
  std::vector<std::size_t> unknown_to_node_;
};

double max_abs(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

struct LineSearchResult {
  bool accepted = false;
  double energy = 0.0;
};

// Backtracking on sufficient decrease. Once the predicted decrease drops to
// the level of roundoff in the energy, plain non-increase is accepted.
LineSearchResult line_search(const EnergyModel& model, std::vector<double>& values,
                             double energy, const Eigen::VectorXd& gradient,
                             const Eigen::VectorXd& direction, double eps) {
  const std::vector<double> base = values;
  const double slope = gradient.dot(direction);
  std::vector<double> trial;
  double alpha = 1.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    model.add_step(trial, base, direction, alpha);
    const double e = model.energy(trial, eps);
    const bool armijo = e <= energy + kArmijo * alpha * slope;
    const bool roundoff = -alpha * slope <= kStagnation * std::abs(energy) && e <= energy;
    if (std::isfinite(e) && (armijo || roundoff)) {
      values = std::move(trial);
      return {true, e};
    }
    alpha *= 0.5;
  }
  values = base;
  return {false, energy};
}

class DirectionFinder {
 public:
  DirectionFinder(const EnergyModel& model, Minimizer method) : model_(model), method_(method) {}

  void reset() { previous_gradient_.resize(0); }

  Eigen::VectorXd operator()(std::span<const double> values, double eps,
                             const Eigen::VectorXd& gradient) {
    model_.hessian(values, eps, model_.p(), hessian_, diagonal_);
    if (method_ == Minimizer::newton) {
      if (!analyzed_) {
        solver_.analyzePattern(hessian_);
        analyzed_ = true;
      }
      solver_.factorize(hessian_);
      if (solver_.info() == Eigen::Success) {
        Eigen::VectorXd d = solver_.solve(-gradient);
        if (solver_.info() == Eigen::Success && d.allFinite() && gradient.dot(d) < 0.0) {
          return d;
        }
      }
      return preconditioned(gradient);
    }
    // Polak-Ribiere+ conjugate direction with the Jacobi preconditioner.
    const Eigen::VectorXd z = preconditioned(gradient);
    if (previous_gradient_.size() == gradient.size()) {
      const double denom = previous_gradient_.dot(previous_z_);
      const double beta = denom > 0.0 ? std::max(0.0, gradient.dot(z - previous_z_) / denom) : 0.0;
      Eigen::VectorXd d = z + beta * previous_direction_;
      if (gradient.dot(d) >= 0.0) d = z;
      remember(gradient, z, d);
      return d;
    }
    remember(gradient, z, z);
    return z;
  }

 private:
  Eigen::VectorXd preconditioned(const Eigen::VectorXd& gradient) const {
    Eigen::VectorXd z(gradient.size());
    for (Eigen::Index i = 0; i < gradient.size(); ++i) {
      z[i] = diagonal_[i] > 0.0 ? -gradient[i] / diagonal_[i] : -gradient[i];
    }
    return z;
  }

  void remember(const Eigen::VectorXd& g, const Eigen::VectorXd& z, const Eigen::VectorXd& d) {
    previous_gradient_ = g;
    previous_z_ = -z;  // P^-1 g
    previous_direction_ = d;
  }

  const EnergyModel& model_;
  Minimizer method_;
  SparseMatrix hessian_;
  Eigen::VectorXd diagonal_;
  Eigen::SimplicialLDLT<SparseMatrix> solver_;
  bool analyzed_ = false;
  Eigen::VectorXd previous_gradient_;
  Eigen::VectorXd previous_z_;
  Eigen::VectorXd previous_direction_;
};

}  // namespace

SolveResult solve_dirichlet(const PLaplaceProblem& problem) {
  problem.validate();
  const Grid grid = build_grid(problem.annulus, problem.cells);
  GridField field = grid.make_field();

  // Dirichlet values, then interior initialised at the mean boundary value.
  CompensatedSum boundary_sum;
  std::size_t boundary_count = 0;
  for (std::size_t i = 0; i < grid.mask.size(); ++i) {
    if (grid.mask[i] != NodeKind::boundary) continue;
    const double v = problem.boundary(grid.spec.position(i));
    if (!std::isfinite(v)) throw ConfigError("solve: boundary data is not finite");
    field.values[i] = v;
    boundary_sum.add(v);
    ++boundary_count;
  }
  const double mean = boundary_count > 0 ? boundary_sum.value() / boundary_count : 0.0;
  for (std::size_t i = 0; i < grid.mask.size(); ++i) {
    if (grid.mask[i] == NodeKind::interior) field.values[i] = mean;
  }

  const CellStencil stencil(grid.spec, grid.mask);
  const EnergyModel model(stencil, grid.mask, problem.p);
  DirectionFinder directions(model, problem.method);
  const auto& schedule = problem.epsilon_schedule;

  SolveReport report;
  std::vector<double>& values = field.values;
  const double reference = max_abs(model.gradient(values, schedule.front(), problem.p));
  report.initial_gradient_norm = reference;

  if (problem.harmonic_start && reference > 0.0 && model.size() > 0) {
    // The p = 2 energy is quadratic: one Newton step gives its minimizer.
    SparseMatrix H;
    Eigen::VectorXd diagonal;
    model.hessian(values, 0.0, 2.0, H, diagonal);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(H);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd step = ldlt.solve(-model.gradient(values, 0.0, 2.0));
      std::vector<double> trial;
      model.add_step(trial, values, step, 1.0);
      const double eps0 = schedule.front();
      if (model.energy(trial, eps0) < model.energy(values, eps0)) values = std::move(trial);
    }
  }

  bool converged = true;
  report.stop_reason = "gradient-tolerance";
  for (double eps : schedule) {
    directions.reset();
    double energy = model.energy(values, eps);
    std::vector<double> trace{energy};
    int stagnant = 0;
    bool stage_done = false;
    while (!stage_done) {
      const Eigen::VectorXd g = model.gradient(values, eps, problem.p);
      const double rel = reference > 0.0 ? max_abs(g) / reference : 0.0;
      report.gradient_norm = rel;
      if (rel <= problem.tolerance) break;
      if (report.iterations >= problem.max_iterations) {
        converged = false;
        report.stop_reason = "max-iterations";
        break;
      }
      ++report.iterations;
      const Eigen::VectorXd d = directions(values, eps, g);
      const LineSearchResult ls = line_search(model, values, energy, g, d, eps);
      if (!ls.accepted) {
        directions.reset();
        stage_done = true;
        if (rel > std::sqrt(problem.tolerance)) {
          converged = false;
          report.stop_reason = "line-search-failure";
        } else {
          report.stop_reason = "energy-stagnation";
        }
        break;
      }
      const double decrease = energy - ls.energy;
      energy = ls.energy;
      trace.push_back(energy);
      stagnant = decrease <= kStagnation * std::abs(energy) ? stagnant + 1 : 0;
      if (stagnant >= 2) {
        stage_done = true;
        if (rel > std::sqrt(problem.tolerance)) {
          converged = false;
          report.stop_reason = "stalled";
        } else {
          report.stop_reason = "energy-stagnation";
        }
      }
    }
    report.stage_energies.push_back(std::move(trace));
    if (!converged) break;
  }

  report.converged = converged;
  report.energy = model.energy(values, schedule.back());
  report.weak_residual = weak_residual(field, problem.p, 8, 0x5eed);
  return SolveResult{std::move(field), std::move(report)};
}

RadialProfile solve_radial_ode(double r, double R, int k, double p, double value_r,
                               double value_R) {
  if (!(r > 0.0) || !(R > r)) throw DomainError("solve_radial_ode: need 0 < r < R");
  if (!(p > 1.0)) throw DomainError("solve_radial_ode: p must exceed 1");
  if (k < 1 || k > kMaxDim) throw DomainError("solve_radial_ode: k must lie in [1, 4]");
  RadialProfile profile;
  profile.spec = BarrierSpec{std::max(k, 2), k, p, r, R};
  profile.value_r = value_r;
  profile.value_R = value_R;
  return profile;
}

double weak_residual(const GridField& field, double p, int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("weak_residual: trials must be >= 1");
  const GridSpec& g = field.grid;
  const int n = g.n;
  const CellStencil stencil(g, field.mask);

  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < field.mask.size(); ++i) {
    if (field.mask[i] == NodeKind::interior) interior.push_back(i);
  }
  if (interior.empty()) return 0.0;

  // Per-cell flux |grad v|^(p-2) grad v.
  std::vector<Point> flux(stencil.cell_count());
  for (std::size_t c = 0; c < stencil.cell_count(); ++c) {
    const Point gv = stencil.gradient(field.values, c);
    const double norm = std::sqrt(squared_norm(gv, n));
    const double s = norm > 0.0 ? std::pow(norm, p - 2.0) : 0.0;
    for (int d = 0; d < n; ++d) flux[c][d] = s * gv[d];
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> phi(g.node_count(), 0.0);

  double worst = 0.0;
  int done = 0;
  for (int attempt = 0; done < trials && attempt < 100 * trials; ++attempt) {
    const Point centre = g.position(interior[pick(rng)]);
    Point width{};
    for (int d = 0; d < n; ++d) {
      const double extent = g.spacing[d] * g.cells;
      width[d] = g.spacing[d] * 2.0 + unit(rng) * 0.25 * extent;
    }
    // Shrink until the support only meets interior nodes.
    bool ok = false;
    for (int shrink = 0; shrink < 20 && !ok; ++shrink) {
      ok = true;
      std::fill(phi.begin(), phi.end(), 0.0);
      for (std::size_t i = 0; i < phi.size() && ok; ++i) {
        const Point x = g.position(i);
        double value = 1.0;
        for (int d = 0; d < n && value > 0.0; ++d) {
          const double s = (x[d] - centre[d]) / width[d];
          value = std::abs(s) < 1.0 ? value * 0.5 * (1.0 + std::cos(std::numbers::pi * s)) : 0.0;
        }
        if (value > 0.0 && field.mask[i] != NodeKind::interior) ok = false;
        phi[i] = value;
      }
      if (!ok) {
        for (int d = 0; d < n; ++d) width[d] *= 0.7;
        bool resolvable = true;
        for (int d = 0; d < n; ++d) resolvable = resolvable && width[d] > 1.5 * g.spacing[d];
        if (!resolvable) break;
      }
    }
    if (!ok) continue;
    ++done;

    CompensatedSum pairing;
    CompensatedSum scale;
    for (std::size_t c = 0; c < stencil.cell_count(); ++c) {
      const Point gp = stencil.gradient(phi, c);
      double dot = 0.0;
      for (int d = 0; d < n; ++d) dot += flux[c][d] * gp[d];
      pairing.add(dot);
      scale.add(std::sqrt(squared_norm(gp, n)));
    }
    if (scale.value() > 0.0) worst = std::max(worst, std::abs(pairing.value()) / scale.value());
  }
  return worst;
}

}  // namespace threespheres
