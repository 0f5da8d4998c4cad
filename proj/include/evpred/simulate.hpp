// Monte Carlo trial generator and replication studies: centres open
// uniformly over an initiation window, patients arrive as Poisson streams,
// each draws (cured, event time, dropout time) from a true cure model, and
// an interim snapshot is cut at a fixed calendar day.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evpred/atrisk_forecast.hpp"
#include "evpred/distributions.hpp"
#include "evpred/domain.hpp"
#include "evpred/likelihood.hpp"

namespace evpred {

inline constexpr double kDaysPerMonth = 30.4375;

struct RecruitmentTruth {
  bool gamma = false;               ///< rates ~ Gamma(alpha, beta) instead of a fixed rate
  std::optional<double> rate;       ///< fixed per-centre rate; default sized to the window
  double alpha = 1.0;
  double beta = 1.0;
};

struct SimConfig {
  long n_patients = 1000;
  long centre_count = 100;
  double initiation_window_months = 6.0;
  CureModelParams truth;
  RecruitmentTruth recruitment;
  double interim_month = 7.0;
  long target_events = 550;
  std::uint64_t seed = 1;
  double confidence_level = 0.90;

  void validate() const;
  double interim_day() const { return interim_month * kDaysPerMonth; }
  double window_days() const { return initiation_window_months * kDaysPerMonth; }
  /// Fixed rate giving expected enrolment n_patients at the window end
  /// under uniform initiation: C * rate * W / 2 = n.
  double default_rate() const;
};

struct SimPatient {
  std::size_t centre = 0;
  double randomisation_day = 0.0;
  bool cured = false;
  std::optional<double> event_time;  ///< from randomisation
  double dropout_time = 0.0;         ///< from randomisation; inf for no dropout
  /// Calendar day of an observed event (event before dropout), if any.
  std::optional<double> event_day() const;
};

struct SimTrial {
  std::vector<double> centre_open_day;
  std::vector<double> centre_rate;
  std::vector<SimPatient> patients;
  std::vector<double> event_days;  ///< sorted calendar days of all events
  std::optional<double> target_hit_day;
  double recruitment_end_day = 0.0;  ///< day the last patient arrived
  TrialSnapshot snapshot;
};

/// Derived per-replication seed, independent of scheduling.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep);

SimTrial simulate_trial(const SimConfig& config);
SimTrial simulate_trial(const SimConfig& config, std::uint64_t rep);

/// Cumulative number of events by calendar day.
long events_by(const SimTrial& trial, double day);

struct StudyOptions {
  CureModelSpec spec{FamilyKind::Weibull, FamilyKind::Weibull};
  bool with_cure = true;
  bool forecast = true;          ///< milestone days from the curve walk
  bool calibration = true;       ///< band check at the realised hit day
  bool forecast_with_truth = false;  ///< forecast from the true model instead of the fit
  FitOptions fit{};
  double grid_step = 1.0;
};

struct StudyRow {
  std::uint64_t rep = 0;
  bool fit_ok = false;
  bool converged = false;
  std::string error;
  std::size_t n_event = 0, n_atrisk = 0, n_dropout = 0;
  long remaining_target = 0;
  double loglik = 0.0;
  std::vector<std::pair<std::string, double>> estimates;  ///< e.g. a_A, b_A, a_L, b_L, r
  std::optional<double> mean_day, lower_day, upper_day;   ///< forecast, days after interim
  std::optional<double> realised_day;                     ///< actual hit, days after interim
  std::optional<double> band_lower, band_upper;           ///< band at the realised day
  std::optional<bool> covered;
};

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double median_abs_error = 0.0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  std::vector<ParameterSummary> parameters;
  std::size_t n_failed = 0;
  std::size_t n_calibrated = 0;  ///< reps with a realised hit and a band
  double coverage = 0.0;
};

/// Parameter names and values reported for a fitted or true model, using
/// shape/scale for Weibull, rate for exponential, meanlog/sdlog for
/// log-normal, with _A / _L suffixes and r last.
std::vector<std::pair<std::string, double>> report_parameters(const CureModelParams& p);

StudyRow run_replication(const SimConfig& config, std::uint64_t rep, const StudyOptions& opt);
StudyReport recovery_study(const SimConfig& config, std::size_t reps, const StudyOptions& opt = {});
/// Aggregate rows (reps may come from several calls).
StudyReport summarize_study(std::vector<StudyRow> rows, const CureModelParams& truth);

/// Sample quantile with linear interpolation (type 7).
double quantile(std::vector<double> values, double p);

}  // namespace evpred
