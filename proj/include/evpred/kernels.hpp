// Data-parallel inner loops. Every kernel takes an Execution tag: Parallel
// distributes independent items over OpenMP threads, Serial runs the same
// code on one thread. Reductions always happen in a fixed serial order, so
// both produce bit-identical results. Kernels with a `_reference` twin keep
// a deliberately naive implementation used only to check the fast path.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evpred/incidence.hpp"

namespace evpred::kernels {

enum class Execution { Serial, Parallel };

/// Conditional event probabilities for a fixed set of at-risk exposures
/// along an increasing time grid. Each patient's probability is advanced
/// incrementally, integrating only over the new grid step.
class AtRiskStepper {
 public:
  AtRiskStepper(const EventIncidence& incidence, std::span<const double> exposures);

  std::size_t patients() const { return z_.size(); }
  /// Fills out[k * patients() + i] = p_A(grid[k], z_i). Grid values must be
  /// >= 0, non-decreasing, and not below the previous call's last value.
  void advance(std::span<const double> grid, std::span<double> out, Execution exec);

 private:
  const EventIncidence* inc_;
  std::vector<double> z_;
  std::vector<double> factor_;  ///< (1 - r) / normaliser(z)
  std::vector<double> mass_;    ///< scaled mass accumulated up to last_x_
  double last_x_ = 0.0;
};

/// Naive twin of AtRiskStepper::advance: one full integral per (day, patient).
void atrisk_probability_grid_reference(const EventIncidence& incidence, std::span<const double> exposures,
                                       std::span<const double> grid, std::span<double> out);

/// p_A(horizon, z_i) for every exposure.
std::vector<double> atrisk_probabilities(const EventIncidence& incidence, std::span<const double> exposures,
                                         double horizon, Execution exec);

/// Mean and variance of a Bernoulli sum in fixed (pairwise) summation order.
struct BernoulliMoments {
  double mean = 0.0;
  double variance = 0.0;
};
BernoulliMoments bernoulli_moments(std::span<const double> probs);

/// Sequential Bernoulli convolution. pmf[k] = P(sum = k), k = 0..n.
std::vector<double> poisson_binomial_pmf(std::span<const double> probs);

/// Pairwise summation, deterministic for a given input order.
double pairwise_sum(std::span<const double> v);

}  // namespace evpred::kernels
