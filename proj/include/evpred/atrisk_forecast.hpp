// Predictive distribution of future events among patients already at risk:
// a sum of independent Bernoulli variables with conditional probabilities
// p_A(t, z_k), its exact and normal-approximate distributions, time to a
// remaining event target, and the probability of reaching it on time.
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "evpred/distributions.hpp"
#include "evpred/domain.hpp"
#include "evpred/kernels.hpp"

namespace evpred {

inline constexpr std::size_t kExactThreshold = 1000;

double p_event_given_atrisk(const CureModelParams& params, double x, double z);

struct AtRiskPrediction {
  std::vector<double> probs;
  double mean = 0.0;
  double variance = 0.0;
  std::optional<std::vector<double>> exact_pmf;
};

AtRiskPrediction atrisk_distribution(const CureModelParams& params, std::span<const double> exposures, double t,
                                     std::size_t exact_threshold = kExactThreshold,
                                     kernels::Execution exec = kernels::Execution::Parallel);
inline AtRiskPrediction atrisk_distribution(const CureModelParams& params, const TrialSnapshot& s, double t,
                                            std::size_t exact_threshold = kExactThreshold) {
  const auto z = s.exposures(Group::AtRiskO);
  return atrisk_distribution(params, z, t, exact_threshold);
}

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// mean -/+ z_{1-delta/2} sd, clamped to [0, cap].
Interval normal_interval(double mean, double variance, double delta,
                         double cap = std::numeric_limits<double>::infinity());
inline Interval quantiles_normal(const AtRiskPrediction& p, double delta) {
  return normal_interval(p.mean, p.variance, delta, static_cast<double>(p.probs.size()));
}

/// Equal-tailed quantiles of a pmf over 0..n: smallest k with CDF >= delta/2
/// and smallest k with CDF >= 1 - delta/2.
Interval exact_interval(std::span<const double> pmf, double delta);

/// P(sum >= k) from a pmf.
double upper_tail(std::span<const double> pmf, long k);

/// BeyondHorizon: reachable in the limit but the mean path did not get there
/// within the grid horizon.
enum class MilestoneStatus { Reached, Predicted, Unreachable, BeyondHorizon };
std::string_view to_string(MilestoneStatus s);

struct Milestone {
  MilestoneStatus status = MilestoneStatus::Predicted;
  std::optional<double> mean_day;    ///< first day the mean path reaches the target
  std::optional<double> lower_day;   ///< first day the upper band reaches it
  std::optional<double> upper_day;   ///< first day the lower band reaches it
  std::optional<double> median_day;  ///< median of the time-to-target distribution
  double asymptotic_mean = 0.0;      ///< limit of the mean path
};

struct EventCurvePoint {
  double day = 0.0;
  double atrisk_mean = 0.0;
  double atrisk_var = 0.0;
  double newrecruit_mean = 0.0;
  double newrecruit_var = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double exact_lower = std::numeric_limits<double>::quiet_NaN();
  double exact_upper = std::numeric_limits<double>::quiet_NaN();
  double prob_reached = std::numeric_limits<double>::quiet_NaN();  ///< P(target reached by day)
};

struct CurveOptions {
  double grid_step = 1.0;
  double horizon = 3650.0;
  double delta = 0.10;
  std::size_t exact_threshold = kExactThreshold;
  bool distribution = true;  ///< compute P(tau <= t) and its median
  kernels::Execution exec = kernels::Execution::Parallel;
};

/// Additional independent Poisson-type component (future recruits). Given a
/// block of days, adds its means and variances; `asymptotic_mean` is its
/// limit as t -> infinity (may be +inf).
struct ExtraComponent {
  std::function<void(std::span<const double> days, std::span<double> mean, std::span<double> var)> moments;
  double asymptotic_mean = 0.0;
};

struct EventForecast {
  Milestone milestone;
  std::vector<EventCurvePoint> curve;
};

/// Walks the daily grid from 0 until every milestone day has been found or
/// the horizon is hit. The exact distribution is used when there is no extra
/// component and the at-risk group is at most exact_threshold.
EventForecast forecast_events(const CureModelParams& params, std::span<const double> exposures, long remaining_target,
                              const CurveOptions& opt, const ExtraComponent* extra = nullptr);

/// Default horizon: 20x the study duration so far, at least one year.
double default_horizon(double cutoff_day);

inline EventForecast time_to_target(const CureModelParams& params, std::span<const double> exposures,
                                    long remaining_target, const CurveOptions& opt = {}) {
  return forecast_events(params, exposures, remaining_target, opt, nullptr);
}

/// P(R_O(T) >= K_R): exact below the threshold, otherwise
/// Phi((M - K_R + 1/2) / V) with V the standard deviation.
double probability_of_success(const CureModelParams& params, std::span<const double> exposures, double planned_days,
                              long remaining_target, std::size_t exact_threshold = kExactThreshold);

/// Normal form used at any size (continuity corrected).
double probability_of_success_normal(double mean, double variance, long remaining_target);

}  // namespace evpred
