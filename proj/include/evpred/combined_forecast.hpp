// Total future events = events among patients still to be recruited (a
// mixed Poisson count driven by the centre rates) + events among patients
// already at risk (a Bernoulli sum). The two parts are independent.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evpred/atrisk_forecast.hpp"
#include "evpred/incidence.hpp"
#include "evpred/recruitment.hpp"

namespace evpred {

/// p_A(x): probability that a newly randomised patient has the event
/// before dropout and by x.
double p_event_unconditional(const CureModelParams& params, double x);

/// Expected events by t per unit recruitment rate from a centre open on
/// [a, b]: integral over the window of p_A(t - u).
class EventYield {
 public:
  explicit EventYield(const CureModelParams& params, double knot_spacing = 1.0);

  /// Grow the cumulative table so that q_at is valid for every t <= horizon.
  void prepare(double horizon);
  double q(double t, double a, std::optional<double> b = std::nullopt);
  /// Read-only; t must be within the prepared horizon. Safe for parallel use.
  double q_at(double t, double a, std::optional<double> b = std::nullopt) const;
  /// Limit of q as t -> inf (inf for an open-ended window with events possible).
  double limit(double a, std::optional<double> b) const;
  const CureModelParams& params() const { return table_.incidence().params(); }

 private:
  CumulativeIncidenceTable table_;
  bool closed_form_ = false;
  double mu_event_ = 0.0;
  double mu_total_ = 0.0;
};

double q_event_yield(const CureModelParams& params, double t, double a, std::optional<double> b = std::nullopt);

/// Direct quadrature of p_A(t - u) over the window. Slow; test reference.
double q_event_yield_reference(const CureModelParams& params, double t, double a, std::optional<double> b);

struct CombinedPoint {
  double day = 0.0;
  double newrecruit_mean = 0.0;
  double newrecruit_var = 0.0;
  double atrisk_mean = 0.0;
  double atrisk_var = 0.0;
  double total_mean() const { return newrecruit_mean + atrisk_mean; }
  double total_var() const { return newrecruit_var + atrisk_var; }
};

/// New-recruit moments at each day: mean = sum m_j q_j,
/// var = sum (m_j q_j + v_j q_j^2).
void newrecruit_moments(EventYield& yield, std::span<const RateTerm> terms, std::span<const double> days,
                        std::span<double> mean, std::span<double> var,
                        kernels::Execution exec = kernels::Execution::Parallel);
/// Same with q from direct quadrature, one day at a time.
void newrecruit_moments_reference(const CureModelParams& params, std::span<const RateTerm> terms,
                                  std::span<const double> days, std::span<double> mean, std::span<double> var);

double newrecruit_ceiling(const EventYield& yield, std::span<const RateTerm> terms);

CombinedPoint combined_distribution(const CureModelParams& params, std::span<const double> atrisk_exposures,
                                    std::span<const RateTerm> terms, double t);

/// Curve and milestone days on the normal approximation of the total.
EventForecast forecast_combined(const CureModelParams& params, std::span<const double> atrisk_exposures,
                                std::span<const RateTerm> terms, long remaining_target, const CurveOptions& opt = {});

inline EventForecast time_to_target_combined(const CureModelParams& params, std::span<const double> atrisk_exposures,
                                             std::span<const RateTerm> terms, long remaining_target,
                                             const CurveOptions& opt = {}) {
  return forecast_combined(params, atrisk_exposures, terms, remaining_target, opt);
}

/// Normal-approximate probability of reaching the remaining target by T.
double probability_of_success_combined(const CureModelParams& params, std::span<const double> atrisk_exposures,
                                       std::span<const RateTerm> terms, double planned_days, long remaining_target);

struct RecruitmentSection {
  PGFit fit;
  std::vector<CentrePosterior> posteriors;
  long remaining_patients = 0;
  RecruitmentForecast forecast;
  std::optional<double> closure_day;  ///< applied to centres without their own closure
  std::vector<RateTerm> terms;        ///< after closure, used for events
  std::vector<std::string> warnings;
};

struct SnapshotForecast {
  std::optional<RecruitmentSection> recruitment;  ///< absent when recruitment is complete
  long remaining_events = 0;
  EventForecast events;
};

struct SnapshotForecastOptions {
  CurveOptions curve{};
  RecruitmentOptions recruitment{};
  NewCentreRates new_rates{};  ///< alpha/beta filled from the fit when gamma is set
};

/// Full pipeline after the event model is fitted: recruitment fit and
/// forecast while recruited < sample size, then combined or at-risk-only
/// event forecast for the remaining target.
SnapshotForecast forecast_snapshot(const CureModelParams& params, const TrialSnapshot& snapshot,
                                   const SnapshotForecastOptions& opt = {});

}  // namespace evpred
