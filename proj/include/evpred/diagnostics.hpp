// Fit diagnostics: Kaplan-Meier curves, model survival overlays with a
// sup-distance score, and an AIC/BIC table over the standard cure models.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evpred/domain.hpp"
#include "evpred/likelihood.hpp"

namespace evpred {

/// Event: events = group A, censored = O and L.
/// Dropout: events = group L, censored = A and O (dropout diagnostics).
enum class KmEndpoint { Event, Dropout };

struct KmCurve {
  KmEndpoint endpoint = KmEndpoint::Event;
  double confidence_level = 0.90;
  std::vector<double> times;  ///< distinct event times, ascending
  std::vector<long> at_risk;
  std::vector<long> events;
  std::vector<double> survival;
  std::vector<double> lower;  ///< log(-log) Greenwood band
  std::vector<double> upper;
  double max_time = 0.0;      ///< largest observed time (event or censored)

  /// Right-continuous step value at t.
  double at(double t) const;
};

KmCurve kaplan_meier(const std::vector<PatientRecord>& patients, double confidence_level = 0.90,
                     KmEndpoint endpoint = KmEndpoint::Event);
inline KmCurve kaplan_meier(const TrialSnapshot& s, KmEndpoint endpoint = KmEndpoint::Event) {
  return kaplan_meier(s.patients(), s.confidence_level(), endpoint);
}

struct OverlaySeries {
  std::string model;
  std::vector<double> values;  ///< on OverlayTable::grid
  double sup_distance = 0.0;
};

struct OverlayTable {
  std::vector<double> grid;  ///< 0, KM jump times, max time
  std::vector<double> km, km_lower, km_upper;
  std::vector<OverlaySeries> series;
};

/// Model survival for the endpoint: r + (1 - r) S_A for events, S_L for dropout.
double model_survival(const CureModelParams& params, double t, KmEndpoint endpoint);

/// sup_t |S_model(t) - S_km(t)| over [0, max_time], using both one-sided
/// limits of the step function at every jump.
double sup_distance(const KmCurve& km, const CureModelParams& params);

OverlayTable overlay(const std::vector<CureModelFit>& fits, const KmCurve& km);

struct ModelRow {
  std::string name;
  CureModelSpec spec;
  bool with_cure = true;
  std::optional<CureModelFit> fit;
  std::string error;  ///< non-empty when the fit failed
  double loglik = 0.0;
  int k = 0;
  double aic = 0.0;
  double bic = 0.0;
};

/// The five standard models: exponential without cure, exponential cure,
/// Weibull (A) + exponential (L) cure, exponential (A) + Weibull (L) cure,
/// and Weibull cure. Sorted by AIC; failed fits go last.
std::vector<std::pair<CureModelSpec, bool>> standard_models();
std::vector<ModelRow> model_table(const ExposureData& data, const FitOptions& opt = {});
inline std::vector<ModelRow> model_table(const TrialSnapshot& s, const FitOptions& opt = {}) {
  return model_table(ExposureData(s), opt);
}

}  // namespace evpred
