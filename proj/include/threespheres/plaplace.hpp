#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "threespheres/geometry.hpp"
#include "threespheres/radial_barrier.hpp"

namespace threespheres {

/// Dirichlet data as a function of the boundary node position.
using BoundaryData = std::function<double(const Point&)>;

BoundaryData constant_boundary(double c);
/// u0(d_k(x)) continued past [r, R].
BoundaryData barrier_boundary(const BarrierSpec& spec);
/// Barrier data lowered by amplitude * (1 + cos(mode * theta + phase)) / 2 on
/// nodes with d_k >= outer_radius, theta = atan2(x_2, x_1). A positive
/// amplitude gives sub-barrier outer data.
BoundaryData perturbed_barrier_boundary(const BarrierSpec& spec, double amplitude, int mode,
                                        double phase, double outer_radius);

enum class Minimizer { newton, descent };

struct PLaplaceProblem {
  KAnnulus annulus = KAnnulus::make(2, 2, 1.0, 2.0);
  double p = 2.0;
  BoundaryData boundary = constant_boundary(0.0);
  int cells = 64;
  std::vector<double> epsilon_schedule{1e-2, 1e-4, 1e-8};
  double tolerance = 1e-10;
  int max_iterations = 10000;
  Minimizer method = Minimizer::newton;
  /// Start the minimizer from the discrete harmonic extension of the data
  /// (kept only if it lowers the first-stage energy).
  bool harmonic_start = true;

  void validate() const;
};

struct SolveReport {
  double energy = 0.0;
  int iterations = 0;
  /// Max-norm of the interior energy gradient, relative to the initial iterate.
  double gradient_norm = 0.0;
  double initial_gradient_norm = 0.0;
  double weak_residual = 0.0;
  bool converged = false;
  std::string stop_reason;
  /// Accepted energies, one list per epsilon stage (first entry: stage start).
  std::vector<std::vector<double>> stage_energies;
};

/// A non-converged solve still returns its best iterate; check
/// `report.converged`.
struct SolveResult {
  GridField field;
  SolveReport report;
};

/// sum_cells (|grad u|^2 + eps^2)^(p/2) * cell volume over active cells.
double discrete_energy(const GridField& field, double p, double eps);

SolveResult solve_dirichlet(const PLaplaceProblem& problem);

/// Radial solution with the given values on d_k = r and d_k = R.
RadialProfile solve_radial_ode(double r, double R, int k, double p, double value_r,
                               double value_R);

/// max over random tensor-cosine bumps phi supported in the interior of
/// |sum_cells <|grad v|^(p-2) grad v, grad phi> V| / sum_cells |grad phi| V.
double weak_residual(const GridField& field, double p, int trials, std::uint64_t seed);

}  // namespace threespheres
