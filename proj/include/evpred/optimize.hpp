// Derivative-free Nelder-Mead simplex minimization.
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace evpred {

struct NelderMeadOptions {
  double ftol = 1e-9;  ///< spread of objective values across the simplex
  double xtol = 1e-8;  ///< max coordinate distance of any vertex from the best
  int max_iterations = 5000;
  double initial_step = 0.5;
  /// Fresh simplices built around the optimum after convergence; stops
  /// early once a rebuild improves the objective by less than ftol.
  int max_rebuilds = 3;
  double coordinate_bound = 50.0;  ///< |theta_j| clamp applied before evaluation
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes f. Non-finite objective values are treated as +inf.
/// Coordinates are clamped to +/- coordinate_bound, which makes the
/// objective flat outside the box so drifting simplices still contract.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt = {});

}  // namespace evpred
