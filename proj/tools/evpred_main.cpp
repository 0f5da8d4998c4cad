// evpred: event and recruitment forecasting for event-driven trials.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "evpred/cli.hpp"

namespace {

using evpred::exit_code::invalid_input;

struct ForecastFlags {
  std::string config;
  std::optional<std::string> event_csv, centre_csv, cutoff_date, output_dir, events, drop_outs;
  std::vector<double> new_sites;
  std::optional<double> new_site_rate, confidence_level, grid_days, planned_days, horizon_days;
  std::optional<bool> cure, new_site_rates_gamma;
  std::optional<long> target_number_of_events, sample_size;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> exact_threshold;
};

int forecast(const ForecastFlags& f) {
  std::vector<std::string> warnings;
  evpred::RunConfig c;
  try {
    nlohmann::json j = nlohmann::json::object();
    std::string base;
    if (!f.config.empty()) {
      std::ifstream in(f.config);
      if (!in) throw evpred::InputError("cannot open config '" + f.config + "'");
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw evpred::InputError("config is not valid JSON: " + std::string(e.what()));
      }
      base = std::filesystem::path(f.config).parent_path().string();
    }
    // Flags override the file; paths given on the command line stay relative to the working directory.
    if (f.event_csv) j["event_csv"] = std::filesystem::absolute(*f.event_csv).string();
    if (f.centre_csv) j["centre_csv"] = std::filesystem::absolute(*f.centre_csv).string();
    if (f.output_dir) j["output_dir"] = std::filesystem::absolute(*f.output_dir).string();
    if (f.cutoff_date) j["cutoff_date"] = *f.cutoff_date;
    if (f.events) j["distributions_to_use"]["events"] = *f.events;
    if (f.drop_outs) j["distributions_to_use"]["drop_outs"] = *f.drop_outs;
    if (!f.new_sites.empty()) j["new_sites"] = f.new_sites;
    if (f.new_site_rate) j["new_site_rate"] = *f.new_site_rate;
    if (f.new_site_rates_gamma) j["new_site_rates_gamma"] = *f.new_site_rates_gamma;
    if (f.confidence_level) j["confidence_level"] = *f.confidence_level;
    if (f.grid_days) j["grid_days"] = *f.grid_days;
    if (f.planned_days) j["planned_days"] = *f.planned_days;
    if (f.horizon_days) j["horizon_days"] = *f.horizon_days;
    if (f.cure) j["cure"] = *f.cure;
    if (f.target_number_of_events) j["target_number_of_events"] = *f.target_number_of_events;
    if (f.sample_size) j["sample_size"] = *f.sample_size;
    if (f.seed) j["seed"] = *f.seed;
    if (f.exact_threshold) j["exact_threshold"] = *f.exact_threshold;
    c = evpred::parse_run_config(j, base, warnings);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return invalid_input;
  }
  const int code = evpred::run_forecast(c, std::cerr, warnings);
  if (code == evpred::exit_code::ok || code == evpred::exit_code::not_converged ||
      code == evpred::exit_code::unreachable)
    std::cout << "wrote " << c.output_dir << '\n';
  return code;
}

std::optional<evpred::StudyConfig> load_study(const std::string& path, std::optional<std::size_t> reps,
                                              std::optional<std::uint64_t> seed) {
  try {
    auto c = evpred::load_study_config(path);
    if (reps) c.reps = *reps;
    if (seed) c.sim.seed = *seed;
    return c;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event and recruitment forecasting for event-driven trials"};
  app.require_subcommand(1);

  ForecastFlags ff;
  auto* fc = app.add_subcommand("forecast", "fit, forecast and write a report bundle");
  fc->add_option("-c,--config", ff.config, "run configuration (JSON)");
  fc->add_option("--event_csv", ff.event_csv);
  fc->add_option("--centre_csv", ff.centre_csv);
  fc->add_option("--new_sites", ff.new_sites, "open days of planned sites, after cut-off");
  fc->add_option("--new_site_rate", ff.new_site_rate);
  fc->add_option("--new_site_rates_gamma", ff.new_site_rates_gamma);
  fc->add_option("--events", ff.events, "event distribution: Exponential, Weibull, LogNormal");
  fc->add_option("--drop_outs", ff.drop_outs, "dropout distribution");
  fc->add_option("--cure", ff.cure);
  fc->add_option("--target_number_of_events", ff.target_number_of_events);
  fc->add_option("--sample_size", ff.sample_size);
  fc->add_option("--confidence_level", ff.confidence_level);
  fc->add_option("--grid_days", ff.grid_days);
  fc->add_option("--seed", ff.seed);
  fc->add_option("--cutoff_date", ff.cutoff_date);
  fc->add_option("--planned_days", ff.planned_days, "days after cut-off for the probability of success");
  fc->add_option("--horizon_days", ff.horizon_days);
  fc->add_option("--exact_threshold", ff.exact_threshold);
  fc->add_option("-o,--output_dir", ff.output_dir);

  std::string study_path, study_out = "evpred_study";
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  auto* sim = app.add_subcommand("simulate", "run a simulation recovery study");
  sim->add_option("-c,--config", study_path, "study configuration (JSON)")->required();
  sim->add_option("-o,--output_dir", study_out);
  sim->add_option("--reps", reps);
  sim->add_option("--seed", seed);

  std::string gen_path, gen_out = "evpred_data";
  std::uint64_t gen_rep = 0;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("generate", "write one simulated interim dataset");
  gen->add_option("-c,--config", gen_path, "study configuration (JSON)")->required();
  gen->add_option("-o,--output_dir", gen_out);
  gen->add_option("--rep", gen_rep);
  gen->add_option("--seed", gen_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : invalid_input;
  }

  if (fc->parsed()) return forecast(ff);
  if (sim->parsed()) {
    const auto c = load_study(study_path, reps, seed);
    if (!c) return invalid_input;
    const int code = evpred::run_simulation_study(*c, study_out, std::cerr);
    if (code == 0) std::cout << "wrote " << study_out << '\n';
    return code;
  }
  const auto c = load_study(gen_path, std::nullopt, gen_seed);
  if (!c) return invalid_input;
  try {
    evpred::generate_dataset(*c, gen_rep, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return evpred::exit_code::failure;
  }
  std::cout << "wrote " << gen_out << '\n';
  return 0;
}
