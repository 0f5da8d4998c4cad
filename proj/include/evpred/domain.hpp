// Trial data model: patient and centre records, interim snapshots, group
// classification and summary statistics.
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evpred {

/// Raised when input rows or configuration fail validation. `row()` is the
/// zero-based data row index, or -1 when the error is not tied to a row.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what, long row = -1)
      : std::invalid_argument(row >= 0 ? "row " + std::to_string(row) + ": " + what : what),
        row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

/// Patient status at the interim cut-off.
enum class Group {
  EventA,    ///< experienced the event (exposure x_k)
  AtRiskO,   ///< censored at cut-off, still followed (exposure z_i)
  DropoutL,  ///< lost to follow-up (exposure y_j)
};

std::string_view to_string(Group g);

struct PatientRecord {
  double exposure_days = 0.0;
  Group group = Group::AtRiskO;
  double randomisation_day = 0.0;
};

struct CentreRecord {
  std::string centre_id;
  long enrolled_count = 0;
  double window_days = 0.0;
  std::optional<double> closure_day;  ///< days after cut-off
};

struct NewCentrePlan {
  double open_day = 0.0;  ///< days after cut-off
  double rate = 0.0;      ///< patients per day
  std::optional<double> closure_day;
};

/// One row of the event file before classification.
struct RawEventRow {
  double analysis_time_days = 0.0;
  int censor_flag = 0;
  int drop_out_flag = 0;
  std::string randomisation_date;  ///< YYYY-MM-DD
};

/// Days since 1970-01-01 for an ISO-8601 calendar date. Throws InputError.
long parse_iso_date(std::string_view text);

/// Maps the flag pair onto a group. Throws InputError carrying `row` for
/// negative times or the contradictory pair (censor 0, dropout 1).
Group classify_flags(double analysis_time_days, int censor_flag, int drop_out_flag, long row = -1);

/// Classifies a whole event file. Randomisation dates become days relative
/// to the earliest randomisation date among the rows.
std::vector<PatientRecord> classify(const std::vector<RawEventRow>& rows);

struct GroupSummary {
  std::size_t n_event = 0;
  std::size_t n_atrisk = 0;
  std::size_t n_dropout = 0;
  double sum_event_exposure = 0.0;  ///< Sigma_A
  double sum_all_exposure = 0.0;    ///< Sigma_1

  std::size_t total() const { return n_event + n_atrisk + n_dropout; }
  bool operator==(const GroupSummary&) const = default;
};

class TrialSnapshot {
 public:
  struct Plan {
    long target_events = 1;
    long sample_size = 1;
    double confidence_level = 0.90;
  };

  /// Validates every record. When `cutoff_day` is empty it defaults to the
  /// latest randomisation_day + exposure_days over all patients.
  TrialSnapshot(std::vector<PatientRecord> patients, std::vector<CentreRecord> centres,
                std::vector<NewCentrePlan> new_centres, std::optional<double> cutoff_day, Plan plan);

  const std::vector<PatientRecord>& patients() const { return patients_; }
  const std::vector<CentreRecord>& centres() const { return centres_; }
  const std::vector<NewCentrePlan>& new_centres() const { return new_centres_; }
  double cutoff_day() const { return cutoff_day_; }
  long target_events() const { return plan_.target_events; }
  long sample_size() const { return plan_.sample_size; }
  double confidence_level() const { return plan_.confidence_level; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Exposures of one group, in record order.
  std::vector<double> exposures(Group g) const;
  std::size_t count(Group g) const;
  std::size_t recruited() const { return patients_.size(); }

 private:
  std::vector<PatientRecord> patients_;
  std::vector<CentreRecord> centres_;
  std::vector<NewCentrePlan> new_centres_;
  double cutoff_day_ = 0.0;
  Plan plan_;
  std::vector<std::string> warnings_;
};

GroupSummary summarize(const std::vector<PatientRecord>& patients);
inline GroupSummary summarize(const TrialSnapshot& s) { return summarize(s.patients()); }

}  // namespace evpred
