// File formats: event and centre CSV files, run and study configuration.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evpred/distributions.hpp"
#include "evpred/domain.hpp"
#include "evpred/simulate.hpp"

namespace evpred {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;  ///< 1-based file line of each row
};

/// Comma-separated, header row required. Fields are trimmed; a field
/// wrapped in double quotes is unquoted. Blank lines are skipped.
CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

struct EventFile {
  std::vector<RawEventRow> rows;
  std::vector<PatientRecord> patients;
  long origin_date = 0;  ///< earliest randomisation date, days since 1970-01-01
  std::vector<std::string> warnings;
};

/// Columns analysis_time_days, censor_flag, drop_out_flag, randomisation_date.
/// InputError::row() on a bad record is its 1-based file line.
EventFile read_event_csv(const std::string& path);
EventFile parse_event_csv(std::istream& in, const std::string& name = "event file");

/// Columns study_centre_id, centre_actual_enrol,
/// centre_recruitment_window_days, and optionally closure_day.
std::vector<CentreRecord> read_centre_csv(const std::string& path, std::vector<std::string>& warnings);
std::vector<CentreRecord> parse_centre_csv(std::istream& in, std::vector<std::string>& warnings,
                                           const std::string& name = "centre file");

/// A new site entry: a bare day offset, or an object with open_day and
/// optional rate / closure_day.
struct NewSite {
  double open_day = 0.0;
  std::optional<double> rate;
  std::optional<double> closure_day;
};

struct RunConfig {
  std::string event_csv;
  std::string centre_csv;  ///< may be empty when recruitment is complete
  std::vector<NewSite> new_sites;
  std::optional<double> new_site_rate;  ///< default rate; fitted prior mean otherwise
  bool new_site_rates_gamma = false;
  FamilyKind events = FamilyKind::Exponential;
  FamilyKind drop_outs = FamilyKind::Exponential;
  bool cure = true;
  long target_number_of_events = 0;
  long sample_size = 0;
  double confidence_level = 0.90;
  double grid_days = 1.0;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cutoff_date;
  std::optional<double> planned_days;  ///< for the probability of success
  std::optional<double> horizon_days;
  std::size_t exact_threshold = 1000;
  std::string output_dir = "evpred_out";

  void validate() const;
};

/// Reads a run configuration. Relative file paths resolve against
/// `base_dir` when it is non-empty. Unknown keys are reported in `warnings`.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir, std::vector<std::string>& warnings);
RunConfig load_run_config(const std::string& path, std::vector<std::string>& warnings);

struct StudyConfig {
  SimConfig sim;
  std::size_t reps = 1;
  StudyOptions options;
};

Family parse_family(const nlohmann::json& j, const std::string& where);
nlohmann::json family_to_json(const Family& f);
StudyConfig parse_study_config(const nlohmann::json& j);
StudyConfig load_study_config(const std::string& path);

/// Round-trip text ("%.17g"); non-finite
/// values print as an empty field.
std::string format_double(double v);

}  // namespace evpred
