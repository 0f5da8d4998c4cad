// Command-line orchestration: forecast runs from interim data files,
// simulation studies, and synthetic dataset generation.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evpred/combined_forecast.hpp"
#include "evpred/diagnostics.hpp"
#include "evpred/io.hpp"
#include "evpred/likelihood.hpp"
#include "evpred/simulate.hpp"

namespace evpred {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int invalid_input = 2;
inline constexpr int not_converged = 3;
inline constexpr int unreachable = 4;
}  // namespace exit_code

struct ForecastBundle {
  RunConfig config;
  EventFile events;
  TrialSnapshot snapshot;
  std::vector<ModelRow> models;
  CureModelFit fit;
  SnapshotForecast forecast;
  std::optional<double> probability_of_success;  ///< at config.planned_days
  KmCurve km;
  OverlayTable km_overlay;
  KmCurve km_dropout;
  OverlayTable km_dropout_overlay;
  std::vector<std::string> warnings;
  bool converged = true;  ///< event fit and recruitment fit
};

/// Ingest, fit, forecast and diagnostics. Throws InputError on bad input.
ForecastBundle build_forecast(const RunConfig& config, std::vector<std::string> warnings = {});

/// Writes params.json, model_table.csv, recruitment_curve.csv (ongoing
/// recruitment only), events_curve.csv, km_overlay.csv,
/// km_dropout_overlay.csv and summary.json into `dir`.
void write_bundle(const ForecastBundle& b, const std::string& dir);

int bundle_exit_code(const ForecastBundle& b);

nlohmann::json params_json(const ForecastBundle& b);
nlohmann::json summary_json(const ForecastBundle& b);

/// Full run with error mapping onto exit codes; messages go to `err`.
int run_forecast(const RunConfig& config, std::ostream& err, std::vector<std::string> warnings = {});

/// Writes estimates.csv and summary.json for a replication study.
StudyReport run_simulation_study(const StudyConfig& config, const std::string& dir);
int run_simulation_study(const StudyConfig& config, const std::string& dir, std::ostream& err);

/// Writes one simulated interim dataset as events.csv, centres.csv and
/// run.json (a forecast config pointing at them).
void generate_dataset(const StudyConfig& config, std::uint64_t rep, const std::string& dir);

/// ISO-8601 date for days since 1970-01-01.
std::string format_iso_date(long days);

}  // namespace evpred
