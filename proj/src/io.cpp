#include "evpred/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace evpred {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  std::string out(s.substr(a, b - a));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i < line.size() && line[i] == '"') quoted = !quoted;
    if (i == line.size() || (line[i] == ',' && !quoted)) {
      out.push_back(trim(std::string_view(line).substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double to_double(const std::string& s, const std::string& what, long row) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw InputError(what + ": '" + s + "' is not a number", row);
  return v;
}

long to_long(const std::string& s, const std::string& what, long row) {
  long v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw InputError(what + ": '" + s + "' is not an integer", row);
  return v;
}

std::map<std::string, std::size_t> column_index(const CsvTable& t, const std::vector<std::string>& required,
                                                const std::vector<std::string>& optional, const std::string& name,
                                                std::vector<std::string>& warnings) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const auto& h = t.header[i];
    const bool known = std::find(required.begin(), required.end(), h) != required.end() ||
                       std::find(optional.begin(), optional.end(), h) != optional.end();
    if (!known) {
      warnings.push_back(name + ": ignoring unknown column '" + h + "'");
      continue;
    }
    if (idx.count(h)) throw InputError(name + ": duplicate column '" + h + "'");
    idx[h] = i;
  }
  for (const auto& r : required)
    if (!idx.count(r)) throw InputError(name + ": missing column '" + r + "'");
  return idx;
}

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base) / p).lexically_normal().string();
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return j.at(key);
}

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw InputError("field '" + key + "' has the wrong type");
  }
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line.push_back(lineno);
  }
  if (!have_header) throw InputError("file has no header row");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_csv(in);
}

EventFile parse_event_csv(std::istream& in, const std::string& name) {
  const CsvTable t = parse_csv(in);
  EventFile out;
  const auto idx = column_index(t, {"analysis_time_days", "censor_flag", "drop_out_flag", "randomisation_date"}, {},
                                name, out.warnings);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const long row = static_cast<long>(t.line[r]);
    RawEventRow raw;
    raw.analysis_time_days = to_double(f[idx.at("analysis_time_days")], "analysis_time_days", row);
    raw.censor_flag = static_cast<int>(to_long(f[idx.at("censor_flag")], "censor_flag", row));
    raw.drop_out_flag = static_cast<int>(to_long(f[idx.at("drop_out_flag")], "drop_out_flag", row));
    raw.randomisation_date = f[idx.at("randomisation_date")];
    // checked here so errors carry the file line
    classify_flags(raw.analysis_time_days, raw.censor_flag, raw.drop_out_flag, row);
    try {
      parse_iso_date(raw.randomisation_date);
    } catch (const InputError& e) {
      throw InputError(e.what(), row);
    }
    out.rows.push_back(std::move(raw));
  }
  out.patients = classify(out.rows);
  long origin = 0;
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    const long d = parse_iso_date(out.rows[r].randomisation_date);
    if (r == 0 || d < origin) origin = d;
  }
  out.origin_date = origin;
  return out;
}

EventFile read_event_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_event_csv(in, path);
}

std::vector<CentreRecord> parse_centre_csv(std::istream& in, std::vector<std::string>& warnings,
                                           const std::string& name) {
  const CsvTable t = parse_csv(in);
  const auto idx = column_index(t, {"study_centre_id", "centre_actual_enrol", "centre_recruitment_window_days"},
                                {"closure_day"}, name, warnings);
  std::vector<CentreRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const long row = static_cast<long>(t.line[r]);
    CentreRecord c;
    c.centre_id = f[idx.at("study_centre_id")];
    if (c.centre_id.empty()) throw InputError("empty study_centre_id", row);
    if (!seen.insert(c.centre_id).second) throw InputError("duplicate centre '" + c.centre_id + "'", row);
    c.enrolled_count = to_long(f[idx.at("centre_actual_enrol")], "centre_actual_enrol", row);
    c.window_days = to_double(f[idx.at("centre_recruitment_window_days")], "centre_recruitment_window_days", row);
    if (c.enrolled_count < 0) throw InputError("centre_actual_enrol must be >= 0", row);
    if (!(c.window_days > 0.0) || !std::isfinite(c.window_days))
      throw InputError("centre_recruitment_window_days must be > 0", row);
    if (idx.count("closure_day") && !f[idx.at("closure_day")].empty()) {
      c.closure_day = to_double(f[idx.at("closure_day")], "closure_day", row);
      if (!(*c.closure_day >= 0.0)) throw InputError("closure_day must be >= 0", row);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CentreRecord> read_centre_csv(const std::string& path, std::vector<std::string>& warnings) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_centre_csv(in, warnings, path);
}

void RunConfig::validate() const {
  if (event_csv.empty()) throw InputError("missing field 'event_csv'");
  if (!std::filesystem::exists(event_csv)) throw InputError("event_csv '" + event_csv + "' does not exist");
  if (!centre_csv.empty() && !std::filesystem::exists(centre_csv))
    throw InputError("centre_csv '" + centre_csv + "' does not exist");
  if (target_number_of_events < 1) throw InputError("target_number_of_events must be >= 1");
  if (sample_size < 1) throw InputError("sample_size must be >= 1");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) throw InputError("confidence_level must be in (0,1)");
  if (!(grid_days > 0.0)) throw InputError("grid_days must be > 0");
  if (planned_days && !(*planned_days >= 0.0)) throw InputError("planned_days must be >= 0");
  if (horizon_days && !(*horizon_days > 0.0)) throw InputError("horizon_days must be > 0");
  if (new_site_rate && !(*new_site_rate > 0.0)) throw InputError("new_site_rate must be > 0");
  for (const auto& s : new_sites) {
    if (!(s.open_day >= 0.0)) throw InputError("new site open day must be >= 0");
    if (s.rate && !(*s.rate > 0.0)) throw InputError("new site rate must be > 0");
    if (s.closure_day && !(*s.closure_day > s.open_day)) throw InputError("new site closes before it opens");
  }
}

RunConfig parse_run_config(const json& j, const std::string& base_dir, std::vector<std::string>& warnings) {
  if (!j.is_object()) throw InputError("run configuration must be a JSON object");
  static const std::set<std::string> known{
      "event_csv",      "centre_csv",  "new_sites",     "new_site_rate", "new_site_rates_gamma",
      "distributions_to_use", "cure", "target_number_of_events", "sample_size", "confidence_level",
      "grid_days",      "seed",        "cutoff_date",   "planned_days",  "horizon_days",
      "exact_threshold", "output_dir"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) warnings.push_back("config: ignoring unknown key '" + k + "'");
  RunConfig c;
  c.event_csv = resolve(get_as<std::string>(require(j, "event_csv", "config"), "event_csv"), base_dir);
  if (j.contains("centre_csv")) c.centre_csv = resolve(get_as<std::string>(j["centre_csv"], "centre_csv"), base_dir);
  if (j.contains("new_sites")) {
    const auto& ns = j["new_sites"];
    if (!ns.is_array()) throw InputError("field 'new_sites' must be an array");
    for (const auto& e : ns) {
      NewSite s;
      if (e.is_number()) {
        s.open_day = e.get<double>();
      } else if (e.is_object()) {
        s.open_day = get_as<double>(require(e, "open_day", "new_sites entry"), "open_day");
        if (e.contains("rate")) s.rate = get_as<double>(e["rate"], "rate");
        if (e.contains("closure_day")) s.closure_day = get_as<double>(e["closure_day"], "closure_day");
      } else {
        throw InputError("new_sites entries must be numbers or objects");
      }
      c.new_sites.push_back(s);
    }
  }
  if (j.contains("new_site_rate")) c.new_site_rate = get_as<double>(j["new_site_rate"], "new_site_rate");
  if (j.contains("new_site_rates_gamma"))
    c.new_site_rates_gamma = get_as<bool>(j["new_site_rates_gamma"], "new_site_rates_gamma");
  if (j.contains("distributions_to_use")) {
    const auto& d = j["distributions_to_use"];
    try {
      if (d.contains("events")) c.events = parse_family_kind(get_as<std::string>(d["events"], "events"));
      if (d.contains("drop_outs")) c.drop_outs = parse_family_kind(get_as<std::string>(d["drop_outs"], "drop_outs"));
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw InputError(std::string("distributions_to_use: ") + e.what());
    }
  }
  if (j.contains("cure")) c.cure = get_as<bool>(j["cure"], "cure");
  c.target_number_of_events = get_as<long>(require(j, "target_number_of_events", "config"), "target_number_of_events");
  c.sample_size = get_as<long>(require(j, "sample_size", "config"), "sample_size");
  if (j.contains("confidence_level")) c.confidence_level = get_as<double>(j["confidence_level"], "confidence_level");
  if (j.contains("grid_days")) c.grid_days = get_as<double>(j["grid_days"], "grid_days");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("cutoff_date")) c.cutoff_date = get_as<std::string>(j["cutoff_date"], "cutoff_date");
  if (j.contains("planned_days")) c.planned_days = get_as<double>(j["planned_days"], "planned_days");
  if (j.contains("horizon_days")) c.horizon_days = get_as<double>(j["horizon_days"], "horizon_days");
  if (j.contains("exact_threshold")) c.exact_threshold = get_as<std::size_t>(j["exact_threshold"], "exact_threshold");
  if (j.contains("output_dir")) c.output_dir = resolve(get_as<std::string>(j["output_dir"], "output_dir"), base_dir);
  return c;
}

RunConfig load_run_config(const std::string& path, std::vector<std::string>& warnings) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j, std::filesystem::path(path).parent_path().string(), warnings);
}

Family parse_family(const json& j, const std::string& where) {
  const auto name = get_as<std::string>(require(j, "family", where), "family");
  FamilyKind k{};
  try {
    k = parse_family_kind(name);
  } catch (const std::exception& e) {
    throw InputError(where + ": " + e.what());
  }
  Family f;
  switch (k) {
    case FamilyKind::Exponential:
      f = Exponential{get_as<double>(require(j, "rate", where), "rate")};
      break;
    case FamilyKind::Weibull:
      f = Weibull::from_scale(get_as<double>(require(j, "shape", where), "shape"),
                              get_as<double>(require(j, "scale", where), "scale"));
      break;
    case FamilyKind::LogNormal:
      f = LogNormal{get_as<double>(require(j, "meanlog", where), "meanlog"),
                    get_as<double>(require(j, "sdlog", where), "sdlog")};
      break;
  }
  try {
    validate(f);
  } catch (const std::exception& e) {
    throw InputError(where + ": " + e.what());
  }
  return f;
}

json family_to_json(const Family& f) {
  json j;
  j["family"] = std::string(family_name(kind_of(f)));
  for (const auto& [k, v] : natural_parameters(f)) j[k] = v;
  return j;
}

StudyConfig parse_study_config(const json& j) {
  if (!j.is_object()) throw InputError("study configuration must be a JSON object");
  StudyConfig c;
  SimConfig& s = c.sim;
  s.n_patients = get_as<long>(require(j, "n_patients", "study"), "n_patients");
  s.centre_count = get_as<long>(require(j, "centre_count", "study"), "centre_count");
  s.initiation_window_months =
      get_as<double>(require(j, "initiation_window_months", "study"), "initiation_window_months");
  s.interim_month = get_as<double>(require(j, "interim_month", "study"), "interim_month");
  s.target_events = get_as<long>(require(j, "target_events", "study"), "target_events");
  s.seed = get_as<std::uint64_t>(require(j, "seed", "study"), "seed");
  const long reps = get_as<long>(require(j, "reps", "study"), "reps");
  if (reps < 1) throw InputError("reps must be >= 1");
  c.reps = static_cast<std::size_t>(reps);
  if (j.contains("confidence_level")) s.confidence_level = get_as<double>(j["confidence_level"], "confidence_level");
  const auto& truth = require(j, "truth", "study");
  s.truth.event = parse_family(require(truth, "event", "truth"), "truth.event");
  s.truth.dropout = parse_family(require(truth, "dropout", "truth"), "truth.dropout");
  s.truth.cure_prob = get_as<double>(require(truth, "cure_prob", "truth"), "cure_prob");
  if (j.contains("recruitment")) {
    const auto& r = j["recruitment"];
    if (r.contains("rate")) s.recruitment.rate = get_as<double>(r["rate"], "rate");
    if (r.contains("gamma")) s.recruitment.gamma = get_as<bool>(r["gamma"], "gamma");
    if (s.recruitment.gamma) {
      s.recruitment.alpha = get_as<double>(require(r, "alpha", "recruitment"), "alpha");
      s.recruitment.beta = get_as<double>(require(r, "beta", "recruitment"), "beta");
    }
  }
  if (j.contains("fit")) {
    const auto& f = j["fit"];
    try {
      if (f.contains("events")) c.options.spec.event = parse_family_kind(get_as<std::string>(f["events"], "events"));
      if (f.contains("drop_outs"))
        c.options.spec.dropout = parse_family_kind(get_as<std::string>(f["drop_outs"], "drop_outs"));
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw InputError(std::string("fit: ") + e.what());
    }
    if (f.contains("cure")) c.options.with_cure = get_as<bool>(f["cure"], "cure");
  }
  if (j.contains("forecast")) c.options.forecast = get_as<bool>(j["forecast"], "forecast");
  if (j.contains("forecast_with_truth"))
    c.options.forecast_with_truth = get_as<bool>(j["forecast_with_truth"], "forecast_with_truth");
  if (j.contains("calibration")) c.options.calibration = get_as<bool>(j["calibration"], "calibration");
  try {
    s.validate();
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("study: ") + e.what());
  }
  return c;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open study config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("study config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_study_config(j);
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace evpred
