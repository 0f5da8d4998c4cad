// Poisson-gamma recruitment: centre rates are independent Gamma(alpha, beta)
// draws, counts are Poisson given the rate. Fitting, per-centre posterior
// rates, and predictive recruitment after the cut-off.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evpred/atrisk_forecast.hpp"
#include "evpred/domain.hpp"
#include "evpred/kernels.hpp"
#include "evpred/optimize.hpp"

namespace evpred {

/// Active recruitment time accumulated by t for a centre open on [u, b].
/// No closure means b = +inf.
double window_duration(double t, double u, std::optional<double> b = std::nullopt);

double pg_log_pmf(long k, double t, double alpha, double beta);
double pg_pmf(long k, double t, double alpha, double beta);
double pg_loglik(std::span<const CentreRecord> centres, double alpha, double beta);

struct PGFit {
  double alpha = 0.0;
  double beta = 0.0;
  double loglik = 0.0;
  double alpha_init = 0.0;
  double beta_init = 0.0;
  double loglik_init = 0.0;
  bool converged = false;
  bool degenerate = false;  ///< no recruitment at all; rate pinned near zero
  double mean_rate() const { return alpha / beta; }
};

/// Moment-matched starting values (alpha0, beta0) from the rates k_i / v_i.
std::pair<double, double> pg_initial_values(std::span<const CentreRecord> centres);

PGFit fit_pg(std::span<const CentreRecord> centres, const NelderMeadOptions& opt = {});

struct CentrePosterior {
  std::string centre_id;
  double post_shape = 0.0;
  double post_rate = 0.0;
  std::optional<double> closure_day;
  double mean() const { return post_shape / post_rate; }
  double variance() const { return post_shape / (post_rate * post_rate); }
};

/// Closure days come from the centre records unless `closure_override` is
/// given, which then applies to every centre.
std::vector<CentrePosterior> posteriors(const PGFit& fit, std::span<const CentreRecord> centres,
                                        std::optional<double> closure_override = std::nullopt);

/// One recruiting unit after the cut-off: open on [open_day, closure_day]
/// with a random rate of the given mean and variance (variance 0 for fixed
/// new-centre rates).
struct RateTerm {
  double open_day = 0.0;
  std::optional<double> closure_day;
  double rate_mean = 0.0;
  double rate_var = 0.0;
};

struct NewCentreRates {
  bool gamma = false;  ///< draw new-centre rates from the fitted prior instead of the plan rate
  double alpha = 0.0;
  double beta = 0.0;
};

std::vector<RateTerm> rate_terms(std::span<const CentrePosterior> active, std::span<const NewCentrePlan> planned,
                                 const NewCentreRates& new_rates = {});

/// Replace every closure day.
std::vector<RateTerm> with_closure(std::vector<RateTerm> terms, std::optional<double> closure_day);

struct RecruitmentPoint {
  double day = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Mean and variance of recruits in (0, t] for each t.
void recruitment_moments(std::span<const RateTerm> terms, std::span<const double> days, std::span<double> mean,
                         std::span<double> var, kernels::Execution exec = kernels::Execution::Parallel);

/// Limit of the mean curve (inf if some window never closes).
double recruitment_ceiling(std::span<const RateTerm> terms);

struct RecruitmentForecast {
  Milestone milestone;
  std::vector<RecruitmentPoint> curve;
};

struct RecruitmentOptions {
  double grid_step = 1.0;
  double horizon = 3650.0;
  double delta = 0.10;
  kernels::Execution exec = kernels::Execution::Parallel;
};

RecruitmentForecast predict_recruitment(std::span<const RateTerm> terms, long remaining_patients,
                                        const RecruitmentOptions& opt = {});

/// Closure convention used for event forecasting: every centre without an
/// explicit closure day stops recruiting at the mean day the remaining
/// target is hit. Returns nullopt when the mean never reaches the target.
std::optional<double> default_closure_day(std::span<const RateTerm> terms, long remaining_patients,
                                          const RecruitmentOptions& opt = {});

/// Apply a closure day only to terms that have none.
std::vector<RateTerm> close_open_terms(std::vector<RateTerm> terms, double closure_day);

}  // namespace evpred
