#include "evpred/domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>

namespace evpred {

std::string_view to_string(Group g) {
  switch (g) {
    case Group::EventA: return "A";
    case Group::AtRiskO: return "O";
    case Group::DropoutL: return "L";
  }
  return "?";
}

namespace {

int parse_fixed_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw InputError("bad date field '" + std::string(s) + "'");
  return v;
}

}  // namespace

long parse_iso_date(std::string_view text) {
  using namespace std::chrono;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw InputError("unparsable date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  const year_month_day ymd{year{parse_fixed_int(text.substr(0, 4))},
                           month{static_cast<unsigned>(parse_fixed_int(text.substr(5, 2)))},
                           day{static_cast<unsigned>(parse_fixed_int(text.substr(8, 2)))}};
  if (!ymd.ok()) throw InputError("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd}.time_since_epoch().count();
}

Group classify_flags(double t, int censor_flag, int drop_out_flag, long row) {
  if (!std::isfinite(t) || t < 0.0) throw InputError("analysis_time_days must be finite and >= 0", row);
  if ((censor_flag != 0 && censor_flag != 1) || (drop_out_flag != 0 && drop_out_flag != 1))
    throw InputError("flags must be 0 or 1", row);
  if (censor_flag == 0 && drop_out_flag == 1)
    throw InputError("censor_flag == 0 with drop_out_flag == 1 is contradictory", row);
  if (drop_out_flag == 1) return Group::DropoutL;
  return censor_flag == 0 ? Group::EventA : Group::AtRiskO;
}

std::vector<PatientRecord> classify(const std::vector<RawEventRow>& rows) {
  std::vector<PatientRecord> out;
  out.reserve(rows.size());
  std::vector<long> dates;
  dates.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const Group g = classify_flags(r.analysis_time_days, r.censor_flag, r.drop_out_flag, static_cast<long>(i));
    long d = 0;
    try {
      d = parse_iso_date(r.randomisation_date);
    } catch (const InputError& e) {
      throw InputError(e.what(), static_cast<long>(i));
    }
    dates.push_back(d);
    out.push_back({r.analysis_time_days, g, 0.0});
  }
  if (!dates.empty()) {
    const long first = *std::min_element(dates.begin(), dates.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i].randomisation_day = static_cast<double>(dates[i] - first);
  }
  return out;
}

GroupSummary summarize(const std::vector<PatientRecord>& patients) {
  GroupSummary s;
  for (const auto& p : patients) {
    switch (p.group) {
      case Group::EventA:
        ++s.n_event;
        s.sum_event_exposure += p.exposure_days;
        break;
      case Group::AtRiskO: ++s.n_atrisk; break;
      case Group::DropoutL: ++s.n_dropout; break;
    }
    s.sum_all_exposure += p.exposure_days;
  }
  return s;
}

TrialSnapshot::TrialSnapshot(std::vector<PatientRecord> patients, std::vector<CentreRecord> centres,
                             std::vector<NewCentrePlan> new_centres, std::optional<double> cutoff_day, Plan plan)
    : patients_(std::move(patients)), centres_(std::move(centres)), new_centres_(std::move(new_centres)), plan_(plan) {
  if (plan_.target_events < 1) throw InputError("target_events must be a positive integer");
  if (plan_.sample_size < 1) throw InputError("sample_size must be a positive integer");
  if (!(plan_.confidence_level > 0.0 && plan_.confidence_level < 1.0))
    throw InputError("confidence_level must lie in (0, 1)");

  double latest = 0.0;
  for (std::size_t i = 0; i < patients_.size(); ++i) {
    const auto& p = patients_[i];
    if (!std::isfinite(p.exposure_days) || p.exposure_days < 0.0)
      throw InputError("exposure_days must be finite and >= 0", static_cast<long>(i));
    if (!std::isfinite(p.randomisation_day) || p.randomisation_day < 0.0)
      throw InputError("randomisation_day must be finite and >= 0", static_cast<long>(i));
    latest = std::max(latest, p.randomisation_day + p.exposure_days);
  }
  cutoff_day_ = cutoff_day.value_or(latest);
  if (!std::isfinite(cutoff_day_) || cutoff_day_ < 0.0) throw InputError("cutoff_day must be finite and >= 0");
  constexpr double kRoundingSlack = 1.0;
  for (std::size_t i = 0; i < patients_.size(); ++i) {
    const auto& p = patients_[i];
    if (p.randomisation_day + p.exposure_days > cutoff_day_ + kRoundingSlack)
      throw InputError("randomisation_day + exposure_days exceeds the cut-off day", static_cast<long>(i));
  }

  long enrolled = 0;
  for (std::size_t i = 0; i < centres_.size(); ++i) {
    const auto& c = centres_[i];
    if (c.enrolled_count < 0) throw InputError("centre " + c.centre_id + ": enrolled count must be >= 0", static_cast<long>(i));
    if (!(c.window_days > 0.0) || !std::isfinite(c.window_days))
      throw InputError("centre " + c.centre_id + ": recruitment window must be > 0", static_cast<long>(i));
    if (c.closure_day && (!(*c.closure_day >= 0.0)))
      throw InputError("centre " + c.centre_id + ": closure day must be >= 0", static_cast<long>(i));
    enrolled += c.enrolled_count;
  }
  for (std::size_t j = 0; j < new_centres_.size(); ++j) {
    const auto& n = new_centres_[j];
    if (!(n.open_day >= 0.0)) throw InputError("new centre open day must be >= 0", static_cast<long>(j));
    if (!(n.rate > 0.0) || !std::isfinite(n.rate)) throw InputError("new centre rate must be > 0", static_cast<long>(j));
    if (n.closure_day && !(n.open_day < *n.closure_day))
      throw InputError("new centre open day must precede its closure day", static_cast<long>(j));
  }
  if (!centres_.empty() && enrolled != static_cast<long>(patients_.size())) {
    warnings_.push_back("centre enrolment total " + std::to_string(enrolled) + " differs from the " +
                        std::to_string(patients_.size()) + " patient records");
  }
}

std::vector<double> TrialSnapshot::exposures(Group g) const {
  std::vector<double> out;
  for (const auto& p : patients_)
    if (p.group == g) out.push_back(p.exposure_days);
  return out;
}

std::size_t TrialSnapshot::count(Group g) const {
  return static_cast<std::size_t>(
      std::count_if(patients_.begin(), patients_.end(), [g](const PatientRecord& p) { return p.group == g; }));
}

}  // namespace evpred
