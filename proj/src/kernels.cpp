#include "evpred/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "evpred/parallel.hpp"

namespace evpred::kernels {

AtRiskStepper::AtRiskStepper(const EventIncidence& incidence, std::span<const double> exposures)
    : inc_(&incidence), z_(exposures.begin(), exposures.end()), factor_(z_.size()), mass_(z_.size(), 0.0) {
  const double r = incidence.params().cure_prob;
  for (std::size_t i = 0; i < z_.size(); ++i) {
    const double norm = incidence.conditional_normaliser(z_[i]);
    factor_[i] = (r >= 1.0 || std::isinf(norm)) ? 0.0 : (1.0 - r) / norm;
  }
}

void AtRiskStepper::advance(std::span<const double> grid, std::span<double> out, Execution exec) {
  const std::size_t n = z_.size();
  const std::size_t steps = grid.size();
  if (out.size() < n * steps) throw std::invalid_argument("output block too small");
  if (steps == 0) return;
  if (grid.front() < last_x_) throw std::invalid_argument("grid must not move backwards");
  for (std::size_t k = 1; k < steps; ++k)
    if (grid[k] < grid[k - 1]) throw std::invalid_argument("grid must be non-decreasing");

  const double start = last_x_;
  const long nl = static_cast<long>(n);
  ExceptionSlot failure;
#pragma omp parallel for schedule(dynamic, 16) if (exec == Execution::Parallel)
  for (long il = 0; il < nl; ++il) {
    failure.run([&] {
      const auto i = static_cast<std::size_t>(il);
      const double z = z_[i];
      double prev = start;
      double m = mass_[i];
      for (std::size_t k = 0; k < steps; ++k) {
        const double x = grid[k];
        if (x > prev && factor_[i] > 0.0) m += inc_->scaled_mass(z, z + prev, z + x);
        prev = x;
        out[k * n + i] = factor_[i] * m;
      }
      mass_[i] = m;
    });
  }
  failure.rethrow();
  last_x_ = grid.back();
}

void atrisk_probability_grid_reference(const EventIncidence& incidence, std::span<const double> exposures,
                                       std::span<const double> grid, std::span<double> out) {
  const std::size_t n = exposures.size();
  if (out.size() < n * grid.size()) throw std::invalid_argument("output block too small");
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (std::size_t i = 0; i < n; ++i) out[k * n + i] = incidence.conditional(grid[k], exposures[i]);
}

std::vector<double> atrisk_probabilities(const EventIncidence& incidence, std::span<const double> exposures,
                                         double horizon, Execution exec) {
  std::vector<double> p(exposures.size());
  const long nl = static_cast<long>(exposures.size());
  ExceptionSlot failure;
#pragma omp parallel for schedule(dynamic, 16) if (exec == Execution::Parallel)
  for (long il = 0; il < nl; ++il) {
    failure.run([&] {
      const auto i = static_cast<std::size_t>(il);
      p[i] = incidence.conditional(horizon, exposures[i]);
    });
  }
  failure.rethrow();
  return p;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

BernoulliMoments bernoulli_moments(std::span<const double> probs) {
  std::vector<double> var(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) var[i] = probs[i] * (1.0 - probs[i]);
  return {pairwise_sum(probs), pairwise_sum(var)};
}

std::vector<double> poisson_binomial_pmf(std::span<const double> probs) {
  std::vector<double> pmf(probs.size() + 1, 0.0);
  pmf[0] = 1.0;
  std::size_t len = 1;
  for (double p : probs) {
    const double q = 1.0 - p;
    pmf[len] = pmf[len - 1] * p;
    for (std::size_t k = len - 1; k > 0; --k) pmf[k] = pmf[k] * q + pmf[k - 1] * p;
    pmf[0] *= q;
    ++len;
  }
  return pmf;
}

}  // namespace evpred::kernels
