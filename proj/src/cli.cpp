#include "evpred/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace evpred {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json opt_json(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json num_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? '\'' : c;
  return out + "\"";
}

std::string csv_opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

void write_json(const fs::path& p, const json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

json milestone_json(const Milestone& m) {
  return {{"status", std::string(to_string(m.status))},
          {"mean_day", opt_json(m.mean_day)},
          {"lower_day", opt_json(m.lower_day)},
          {"upper_day", opt_json(m.upper_day)},
          {"median_day", opt_json(m.median_day)},
          {"asymptotic_mean", num_json(m.asymptotic_mean)}};
}

json milestone_dates(const Milestone& m, long origin, double cutoff) {
  auto date = [&](const std::optional<double>& d) -> json {
    if (!d) return nullptr;
    return format_iso_date(origin + static_cast<long>(std::ceil(cutoff + *d - 1e-9)));
  };
  return {{"mean", date(m.mean_day)}, {"lower", date(m.lower_day)}, {"upper", date(m.upper_day)}};
}

json fit_json(const CureModelFit& f) {
  json params = json::object();
  for (const auto& [k, v] : report_parameters(f.params)) params[k] = v;
  return {{"model", model_name(f.spec, f.with_cure)},
          {"event_family", std::string(family_name(f.spec.event))},
          {"dropout_family", std::string(family_name(f.spec.dropout))},
          {"cure", f.with_cure},
          {"event", family_to_json(f.params.event)},
          {"dropout", family_to_json(f.params.dropout)},
          {"cure_prob", f.params.cure_prob},
          {"parameters", params},
          {"loglik", num_json(f.loglik)},
          {"n_params", f.n_params},
          {"converged", f.converged}};
}

void write_overlay(const fs::path& p, const OverlayTable& t) {
  auto out = open_out(p);
  out << "time,km,km_lo,km_hi";
  for (const auto& s : t.series) out << ',' << csv_field(s.model);
  out << '\n';
  for (std::size_t i = 0; i < t.grid.size(); ++i) {
    out << format_double(t.grid[i]) << ',' << format_double(t.km[i]) << ',' << format_double(t.km_lower[i]) << ','
        << format_double(t.km_upper[i]);
    for (const auto& s : t.series) out << ',' << format_double(s.values[i]);
    out << '\n';
  }
}

std::vector<CureModelFit> table_fits(const std::vector<ModelRow>& rows) {
  std::vector<CureModelFit> fits;
  for (const auto& r : rows)
    if (r.fit) fits.push_back(*r.fit);
  return fits;
}

// civil_from_days (proleptic Gregorian)
std::tuple<long, unsigned, unsigned> civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned long>(z - era * 146097);
  const unsigned long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned long mp = (5 * doy + 2) / 153;
  const auto d = static_cast<unsigned>(doy - (153 * mp + 2) / 5 + 1);
  const auto m = static_cast<unsigned>(mp < 10 ? mp + 3 : mp - 9);
  return {m <= 2 ? y + 1 : y, m, d};
}

}  // namespace

std::string format_iso_date(long days) {
  const auto [y, m, d] = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u", y, m, d);
  return buf;
}

ForecastBundle build_forecast(const RunConfig& config, std::vector<std::string> warnings) {
  config.validate();
  EventFile events = read_event_csv(config.event_csv);
  warnings.insert(warnings.end(), events.warnings.begin(), events.warnings.end());

  std::vector<CentreRecord> centres;
  if (!config.centre_csv.empty()) centres = read_centre_csv(config.centre_csv, warnings);

  std::optional<double> cutoff;
  if (config.cutoff_date) cutoff = static_cast<double>(parse_iso_date(*config.cutoff_date) - events.origin_date);

  const long recruited = static_cast<long>(events.patients.size());
  const bool ongoing = recruited < config.sample_size;
  if (recruited > config.sample_size) warnings.push_back("more patients recruited than sample_size");

  std::vector<NewCentrePlan> planned;
  if (!config.new_sites.empty()) {
    if (!ongoing) {
      warnings.push_back("recruitment is complete; new_sites ignored");
    } else {
      std::optional<double> default_rate = config.new_site_rate;
      for (const auto& s : config.new_sites) {
        if (s.rate || default_rate) continue;
        if (centres.size() < 2) throw InputError("new_sites need a rate when fewer than 2 centres are given");
        default_rate = fit_pg(centres).mean_rate();
        warnings.push_back("new sites without a rate use the fitted mean centre rate");
        break;
      }
      for (const auto& s : config.new_sites) planned.push_back({s.open_day, s.rate ? *s.rate : *default_rate, s.closure_day});
    }
  }

  TrialSnapshot snapshot(events.patients, ongoing ? centres : std::vector<CentreRecord>{}, planned, cutoff,
                         {config.target_number_of_events, config.sample_size, config.confidence_level});
  warnings.insert(warnings.end(), snapshot.warnings().begin(), snapshot.warnings().end());

  const ExposureData data(snapshot);
  const CureModelSpec spec{config.events, config.drop_outs};
  CureModelFit fitted = fit(spec, data, config.cure);
  auto models = model_table(data);

  SnapshotForecastOptions so;
  const double horizon = config.horizon_days ? *config.horizon_days : default_horizon(snapshot.cutoff_day());
  so.curve.grid_step = config.grid_days;
  so.curve.horizon = horizon;
  so.curve.delta = 1.0 - config.confidence_level;
  so.curve.exact_threshold = config.exact_threshold;
  so.recruitment.grid_step = config.grid_days;
  so.recruitment.horizon = horizon;
  so.recruitment.delta = so.curve.delta;
  so.new_rates.gamma = config.new_site_rates_gamma;
  SnapshotForecast fc = forecast_snapshot(fitted.params, snapshot, so);

  bool converged = fitted.converged;
  if (!fitted.converged) warnings.push_back("event model fit did not converge");
  if (fc.recruitment) {
    warnings.insert(warnings.end(), fc.recruitment->warnings.begin(), fc.recruitment->warnings.end());
    if (!fc.recruitment->fit.converged && !fc.recruitment->fit.degenerate) converged = false;
  }
  if (fc.events.milestone.status == MilestoneStatus::Unreachable)
    warnings.push_back("target number of events is not reachable under the fitted model");
  if (fc.events.milestone.status == MilestoneStatus::BeyondHorizon)
    warnings.push_back("target not reached within the forecast horizon");

  std::optional<double> pos;
  if (config.planned_days) {
    const auto z = snapshot.exposures(Group::AtRiskO);
    pos = fc.recruitment ? probability_of_success_combined(fitted.params, z, fc.recruitment->terms,
                                                           *config.planned_days, fc.remaining_events)
                         : probability_of_success(fitted.params, z, *config.planned_days, fc.remaining_events,
                                                  config.exact_threshold);
  }

  const auto fits = table_fits(models);
  KmCurve km = kaplan_meier(snapshot, KmEndpoint::Event);
  OverlayTable ov = overlay(fits, km);
  KmCurve kmd = kaplan_meier(snapshot, KmEndpoint::Dropout);
  OverlayTable ovd = overlay(fits, kmd);

  return ForecastBundle{config,        std::move(events), std::move(snapshot), std::move(models),
                        std::move(fitted), std::move(fc),    pos,                 std::move(km),
                        std::move(ov), std::move(kmd),     std::move(ovd),      std::move(warnings),
                        converged};
}

int bundle_exit_code(const ForecastBundle& b) {
  if (!b.converged) return exit_code::not_converged;
  if (b.forecast.events.milestone.status == MilestoneStatus::Unreachable) return exit_code::unreachable;
  return exit_code::ok;
}

json params_json(const ForecastBundle& b) {
  json j;
  j["event_model"] = fit_json(b.fit);
  json table = json::array();
  for (const auto& r : b.models) {
    json row = {{"model", r.name}, {"error", r.error}};
    if (r.fit) row["fit"] = fit_json(*r.fit);
    table.push_back(row);
  }
  j["model_table"] = table;
  if (b.forecast.recruitment) {
    const auto& rec = *b.forecast.recruitment;
    json post = json::array();
    for (const auto& p : rec.posteriors)
      post.push_back({{"centre", p.centre_id},
                      {"shape", p.post_shape},
                      {"rate", p.post_rate},
                      {"mean_rate", p.mean()},
                      {"closure_day", opt_json(p.closure_day)}});
    j["recruitment"] = {{"alpha", rec.fit.alpha},
                        {"beta", rec.fit.beta},
                        {"mean_rate", rec.fit.mean_rate()},
                        {"loglik", num_json(rec.fit.loglik)},
                        {"alpha_init", rec.fit.alpha_init},
                        {"beta_init", rec.fit.beta_init},
                        {"converged", rec.fit.converged},
                        {"degenerate", rec.fit.degenerate},
                        {"posteriors", post}};
  }
  return j;
}

json summary_json(const ForecastBundle& b) {
  const auto& s = b.snapshot;
  const double cutoff = s.cutoff_day();
  json j;
  j["exit_code"] = bundle_exit_code(b);
  j["converged"] = b.converged;
  j["origin_date"] = format_iso_date(b.events.origin_date);
  j["cutoff_day"] = cutoff;
  j["cutoff_date"] = format_iso_date(b.events.origin_date + static_cast<long>(std::floor(cutoff)));
  j["confidence_level"] = s.confidence_level();
  j["counts"] = {{"recruited", s.recruited()},
                 {"events", s.count(Group::EventA)},
                 {"at_risk", s.count(Group::AtRiskO)},
                 {"dropouts", s.count(Group::DropoutL)}};
  j["model"] = model_name(b.fit.spec, b.fit.with_cure);
  j["target_number_of_events"] = s.target_events();
  j["sample_size"] = s.sample_size();
  j["remaining_events"] = b.forecast.remaining_events;
  if (b.forecast.recruitment) {
    const auto& rec = *b.forecast.recruitment;
    j["recruitment"] = {{"remaining_patients", rec.remaining_patients},
                        {"milestone", milestone_json(rec.forecast.milestone)},
                        {"dates", milestone_dates(rec.forecast.milestone, b.events.origin_date, cutoff)},
                        {"closure_day", opt_json(rec.closure_day)}};
  } else {
    j["recruitment"] = nullptr;
  }
  j["events"] = {{"milestone", milestone_json(b.forecast.events.milestone)},
                 {"dates", milestone_dates(b.forecast.events.milestone, b.events.origin_date, cutoff)}};
  if (b.config.planned_days)
    j["probability_of_success"] = {{"planned_days", *b.config.planned_days},
                                   {"probability", num_json(*b.probability_of_success)}};
  else
    j["probability_of_success"] = nullptr;
  json fit_scores = json::object();
  for (const auto& sr : b.km_overlay.series) fit_scores[sr.model] = sr.sup_distance;
  j["km_sup_distance"] = fit_scores;
  j["seed"] = b.config.seed ? json(*b.config.seed) : json(nullptr);
  j["warnings"] = b.warnings;
  return j;
}

void write_bundle(const ForecastBundle& b, const std::string& dir) {
  const fs::path d(dir);
  fs::create_directories(d);
  write_json(d / "params.json", params_json(b));
  {
    std::map<std::string, double> sup;
    for (const auto& s : b.km_overlay.series) sup[s.model] = s.sup_distance;
    auto out = open_out(d / "model_table.csv");
    out << "rank,model,k,loglik,aic,bic,km_sup_distance,converged,error\n";
    for (std::size_t i = 0; i < b.models.size(); ++i) {
      const auto& r = b.models[i];
      out << i + 1 << ',' << csv_field(r.name) << ',';
      if (r.fit) {
        out << r.k << ',' << format_double(r.loglik) << ',' << format_double(r.aic) << ','
            << format_double(r.bic) << ',' << (sup.count(r.name) ? format_double(sup[r.name]) : "") << ','
            << (r.fit->converged ? 1 : 0);
      } else {
        out << ",,,,,0";
      }
      out << ',' << csv_field(r.error) << '\n';
    }
  }
  if (b.forecast.recruitment) {
    auto out = open_out(d / "recruitment_curve.csv");
    out << "day,mean,variance,lower,upper\n";
    for (const auto& p : b.forecast.recruitment->forecast.curve)
      out << format_double(p.day) << ',' << format_double(p.mean) << ',' << format_double(p.variance) << ','
          << format_double(p.lower) << ',' << format_double(p.upper) << '\n';
  } else {
    std::error_code ec;
    fs::remove(d / "recruitment_curve.csv", ec);
  }
  {
    auto out = open_out(d / "events_curve.csv");
    out << "day,atrisk_mean,atrisk_var,newrecruit_mean,newrecruit_var,mean,variance,lower,upper,exact_lower,"
           "exact_upper,prob_reached\n";
    for (const auto& p : b.forecast.events.curve)
      out << format_double(p.day) << ',' << format_double(p.atrisk_mean) << ',' << format_double(p.atrisk_var) << ','
          << format_double(p.newrecruit_mean) << ',' << format_double(p.newrecruit_var) << ','
          << format_double(p.mean) << ',' << format_double(p.variance) << ',' << format_double(p.lower) << ','
          << format_double(p.upper) << ',' << format_double(p.exact_lower) << ',' << format_double(p.exact_upper)
          << ',' << format_double(p.prob_reached) << '\n';
  }
  write_overlay(d / "km_overlay.csv", b.km_overlay);
  write_overlay(d / "km_dropout_overlay.csv", b.km_dropout_overlay);
  write_json(d / "summary.json", summary_json(b));
}

int run_forecast(const RunConfig& config, std::ostream& err, std::vector<std::string> warnings) {
  std::optional<ForecastBundle> b;
  try {
    b.emplace(build_forecast(config, std::move(warnings)));
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::invalid_input;
  } catch (const InsufficientData& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::invalid_input;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::failure;
  }
  for (const auto& w : b->warnings) err << "warning: " << w << '\n';
  try {
    write_bundle(*b, config.output_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::failure;
  }
  return bundle_exit_code(*b);
}

StudyReport run_simulation_study(const StudyConfig& config, const std::string& dir) {
  const StudyReport rep = recovery_study(config.sim, config.reps, config.options);
  const fs::path d(dir);
  fs::create_directories(d);

  std::vector<std::string> names;
  for (const auto& r : rep.rows)
    if (!r.estimates.empty()) {
      for (const auto& e : r.estimates) names.push_back(e.first);
      break;
    }
  {
    auto out = open_out(d / "estimates.csv");
    out << "rep,fit_ok,converged,n_event,n_atrisk,n_dropout,remaining_target,loglik";
    for (const auto& n : names) out << ',' << n;
    out << ",mean_day,lower_day,upper_day,realised_day,band_lower,band_upper,covered,error\n";
    for (const auto& r : rep.rows) {
      out << r.rep << ',' << (r.fit_ok ? 1 : 0) << ',' << (r.converged ? 1 : 0) << ',' << r.n_event << ','
          << r.n_atrisk << ',' << r.n_dropout << ',' << r.remaining_target << ','
          << (r.fit_ok ? format_double(r.loglik) : "");
      std::map<std::string, double> est(r.estimates.begin(), r.estimates.end());
      for (const auto& n : names) out << ',' << (est.count(n) ? format_double(est[n]) : "");
      out << ',' << csv_opt(r.mean_day) << ',' << csv_opt(r.lower_day) << ',' << csv_opt(r.upper_day) << ','
          << csv_opt(r.realised_day) << ',' << csv_opt(r.band_lower) << ',' << csv_opt(r.band_upper) << ','
          << (r.covered ? (*r.covered ? "1" : "0") : "") << ',' << csv_field(r.error) << '\n';
    }
  }
  json params = json::array();
  for (const auto& p : rep.parameters)
    params.push_back({{"name", p.name},
                      {"truth", num_json(p.truth)},
                      {"median", num_json(p.median)},
                      {"q05", num_json(p.q05)},
                      {"q95", num_json(p.q95)},
                      {"median_abs_error", num_json(p.median_abs_error)}});
  json truth = json::object();
  for (const auto& [k, v] : report_parameters(config.sim.truth)) truth[k] = v;
  const json summary = {{"reps", config.reps},
                        {"seed", config.sim.seed},
                        {"n_patients", config.sim.n_patients},
                        {"centre_count", config.sim.centre_count},
                        {"interim_day", config.sim.interim_day()},
                        {"target_events", config.sim.target_events},
                        {"fitted_model", model_name(config.options.spec, config.options.with_cure)},
                        {"truth", truth},
                        {"n_failed", rep.n_failed},
                        {"n_calibrated", rep.n_calibrated},
                        {"coverage", rep.n_calibrated ? json(rep.coverage) : json(nullptr)},
                        {"parameters", params}};
  write_json(d / "summary.json", summary);
  return rep;
}

int run_simulation_study(const StudyConfig& config, const std::string& dir, std::ostream& err) {
  try {
    const auto rep = run_simulation_study(config, dir);
    if (rep.n_failed > 0) err << "warning: " << rep.n_failed << " replications failed to fit\n";
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::invalid_input;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::failure;
  }
  return exit_code::ok;
}

void generate_dataset(const StudyConfig& config, std::uint64_t rep, const std::string& dir) {
  const SimTrial trial = simulate_trial(config.sim, rep);
  const TrialSnapshot& s = trial.snapshot;
  const fs::path d(dir);
  fs::create_directories(d);
  const long origin = parse_iso_date("2021-01-04");
  {
    auto out = open_out(d / "events.csv");
    out << "analysis_time_days,censor_flag,drop_out_flag,randomisation_date\n";
    for (const auto& p : s.patients()) {
      const int censor = p.group == Group::EventA ? 0 : 1;
      const int drop = p.group == Group::DropoutL ? 1 : 0;
      out << format_double(p.exposure_days) << ',' << censor << ',' << drop << ','
          << format_iso_date(origin + static_cast<long>(std::floor(p.randomisation_day))) << '\n';
    }
  }
  {
    auto out = open_out(d / "centres.csv");
    out << "study_centre_id,centre_actual_enrol,centre_recruitment_window_days\n";
    for (const auto& c : s.centres())
      out << c.centre_id << ',' << c.enrolled_count << ',' << format_double(c.window_days) << '\n';
  }
  json sites = json::array();
  for (const auto& p : s.new_centres()) sites.push_back({{"open_day", p.open_day}, {"rate", p.rate}});
  const json run = {{"event_csv", "events.csv"},
                    {"centre_csv", "centres.csv"},
                    {"new_sites", sites},
                    {"distributions_to_use",
                     {{"events", std::string(family_name(config.options.spec.event))},
                      {"drop_outs", std::string(family_name(config.options.spec.dropout))}}},
                    {"cure", config.options.with_cure},
                    {"target_number_of_events", config.sim.target_events},
                    {"sample_size", config.sim.n_patients},
                    {"confidence_level", config.sim.confidence_level},
                    {"seed", replication_seed(config.sim.seed, rep)},
                    {"output_dir", "forecast"}};
  write_json(d / "run.json", run);
}

}  // namespace evpred
