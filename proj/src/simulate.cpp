#include "evpred/simulate.hpp"
#include "evpred/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "evpred/combined_forecast.hpp"

namespace evpred {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string centre_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%03zu", i + 1);
  return buf;
}

Rng make_rng(std::uint64_t seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
  return Rng(seq);
}
}  // namespace

void SimConfig::validate() const {
  if (n_patients < 1) throw std::invalid_argument("n_patients must be >= 1");
  if (centre_count < 1) throw std::invalid_argument("centre_count must be >= 1");
  if (!(initiation_window_months >= 0.0)) throw std::invalid_argument("initiation_window_months must be >= 0");
  if (!(interim_month > 0.0)) throw std::invalid_argument("interim_month must be > 0");
  if (target_events < 1) throw std::invalid_argument("target_events must be >= 1");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) throw std::invalid_argument("confidence_level must be in (0,1)");
  if (recruitment.rate && !(*recruitment.rate > 0.0)) throw std::invalid_argument("recruitment rate must be > 0");
  if (recruitment.gamma && !(recruitment.alpha > 0.0 && recruitment.beta > 0.0))
    throw std::invalid_argument("recruitment alpha and beta must be > 0");
  evpred::validate(truth);
}

double SimConfig::default_rate() const {
  const double w = std::max(window_days(), 1.0);
  return 2.0 * static_cast<double>(n_patients) / (static_cast<double>(centre_count) * w);
}

std::optional<double> SimPatient::event_day() const {
  if (!event_time || !(*event_time < dropout_time)) return std::nullopt;
  return randomisation_day + *event_time;
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep) {
  auto rng = make_rng(seed, rep);
  return rng();
}

SimTrial simulate_trial(const SimConfig& config) { return simulate_trial(config, 0); }

SimTrial simulate_trial(const SimConfig& config, std::uint64_t rep) {
  config.validate();
  Rng rng = make_rng(config.seed, rep);
  const auto nc = static_cast<std::size_t>(config.centre_count);
  std::vector<double> open(nc);
  std::vector<double> rate(nc);
  for (std::size_t i = 0; i < nc; ++i) open[i] = config.window_days() * uniform_open01(rng);
  if (config.recruitment.gamma) {
    std::gamma_distribution<double> g(config.recruitment.alpha, 1.0 / config.recruitment.beta);
    for (auto& r : rate) r = g(rng);
  } else {
    const double r0 = config.recruitment.rate.value_or(config.default_rate());
    std::fill(rate.begin(), rate.end(), r0);
  }

  // Superposed Poisson streams, advanced between centre openings.
  std::vector<std::size_t> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return open[a] < open[b]; });
  std::vector<std::size_t> active;
  double total_rate = 0.0;
  std::size_t next = 0;
  double t = 0.0;
  std::vector<SimPatient> patients;
  patients.reserve(static_cast<std::size_t>(config.n_patients));
  while (static_cast<long>(patients.size()) < config.n_patients) {
    const double t_open = next < nc ? open[order[next]] : kInf;
    const double gap = total_rate > 0.0 ? -std::log(uniform_open01(rng)) / total_rate : kInf;
    if (t + gap >= t_open) {
      if (std::isinf(t_open)) break;
      t = t_open;
      active.push_back(order[next]);
      total_rate += rate[order[next]];
      ++next;
      continue;
    }
    t += gap;
    double pick = uniform_open01(rng) * total_rate;
    std::size_t centre = active.back();
    for (auto c : active) {
      pick -= rate[c];
      if (pick < 0.0) {
        centre = c;
        break;
      }
    }
    const auto draw = sample_cure(config.truth, rng);
    patients.push_back({centre, t, draw.cured, draw.event_time, draw.dropout_time});
  }
  const double recruitment_end = patients.empty() ? 0.0 : patients.back().randomisation_day;
  const bool recruitment_done = static_cast<long>(patients.size()) >= config.n_patients;

  std::vector<double> event_days;
  for (const auto& p : patients)
    if (auto d = p.event_day()) event_days.push_back(*d);
  std::sort(event_days.begin(), event_days.end());
  std::optional<double> hit;
  if (static_cast<long>(event_days.size()) >= config.target_events)
    hit = event_days[static_cast<std::size_t>(config.target_events - 1)];

  const double t1 = config.interim_day();
  std::vector<PatientRecord> records;
  std::vector<long> counts(nc, 0);
  for (const auto& p : patients) {
    if (p.randomisation_day > t1) continue;
    const double follow = t1 - p.randomisation_day;
    ++counts[p.centre];
    const double ev = p.event_time && *p.event_time < p.dropout_time ? *p.event_time : kInf;
    if (ev <= follow)
      records.push_back({ev, Group::EventA, p.randomisation_day});
    else if (p.dropout_time <= follow)
      records.push_back({p.dropout_time, Group::DropoutL, p.randomisation_day});
    else
      records.push_back({follow, Group::AtRiskO, p.randomisation_day});
  }
  const double stop = recruitment_done ? std::min(t1, recruitment_end) : t1;
  std::vector<CentreRecord> centres;
  std::vector<NewCentrePlan> planned;
  for (std::size_t i = 0; i < nc; ++i) {
    if (open[i] < stop) {
      centres.push_back({centre_name(i), counts[i], stop - open[i], std::nullopt});
    } else if (open[i] >= t1) {
      const double plan_rate = config.recruitment.gamma ? config.recruitment.alpha / config.recruitment.beta : rate[i];
      planned.push_back({open[i] - t1, plan_rate, std::nullopt});
    }
  }
  TrialSnapshot snap(std::move(records), std::move(centres), std::move(planned), t1,
                     {config.target_events, config.n_patients, config.confidence_level});
  return SimTrial{std::move(open), std::move(rate), std::move(patients), std::move(event_days), hit,
                  recruitment_end, std::move(snap)};
}

long events_by(const SimTrial& trial, double day) {
  return static_cast<long>(std::upper_bound(trial.event_days.begin(), trial.event_days.end(), day) -
                           trial.event_days.begin());
}

std::vector<std::pair<std::string, double>> report_parameters(const CureModelParams& p) {
  std::vector<std::pair<std::string, double>> out;
  auto add = [&](const Family& f, const char* suffix) {
    std::visit(Overloaded{[&](const Exponential& e) { out.emplace_back(std::string("mu_") + suffix, e.rate); },
                          [&](const Weibull& w) {
                            out.emplace_back(std::string("a_") + suffix, w.shape);
                            out.emplace_back(std::string("b_") + suffix, w.scale());
                          },
                          [&](const LogNormal& l) {
                            out.emplace_back(std::string("m_") + suffix, l.meanlog);
                            out.emplace_back(std::string("s_") + suffix, l.sdlog);
                          }},
               f);
  };
  add(p.event, "A");
  add(p.dropout, "L");
  out.emplace_back("r", p.cure_prob);
  return out;
}

StudyRow run_replication(const SimConfig& config, std::uint64_t rep, const StudyOptions& opt) {
  StudyRow row;
  row.rep = rep;
  const SimTrial trial = simulate_trial(config, rep);
  const TrialSnapshot& snap = trial.snapshot;
  row.n_event = snap.count(Group::EventA);
  row.n_atrisk = snap.count(Group::AtRiskO);
  row.n_dropout = snap.count(Group::DropoutL);
  row.remaining_target = config.target_events - static_cast<long>(row.n_event);
  const double t1 = snap.cutoff_day();
  if (trial.target_hit_day) row.realised_day = std::max(0.0, *trial.target_hit_day - t1);

  CureModelFit f;
  try {
    FitOptions fo = opt.fit;
    fo.parallel_restarts = false;
    f = fit(opt.spec, snap, opt.with_cure, fo);
  } catch (const std::exception& e) {
    row.error = e.what();
    return row;
  }
  row.fit_ok = true;
  row.converged = f.converged;
  row.loglik = f.loglik;
  row.estimates = report_parameters(f.params);

  const CureModelParams& model = opt.forecast_with_truth ? config.truth : f.params;
  const double delta = 1.0 - config.confidence_level;
  SnapshotForecastOptions so;
  so.curve.grid_step = opt.grid_step;
  so.curve.horizon = default_horizon(t1);
  so.curve.delta = delta;
  so.curve.exact_threshold = 0;
  so.curve.distribution = false;
  so.curve.exec = kernels::Execution::Serial;
  so.recruitment.grid_step = opt.grid_step;
  so.recruitment.horizon = default_horizon(t1);
  so.recruitment.delta = delta;
  so.recruitment.exec = kernels::Execution::Serial;
  try {
    const bool ongoing = snap.recruited() < static_cast<std::size_t>(snap.sample_size());
    std::optional<SnapshotForecast> fc;
    if (opt.forecast || ongoing) {
      // Without a forecast only the closure schedule is needed.
      if (!opt.forecast) so.curve.horizon = opt.grid_step;
      fc = forecast_snapshot(model, snap, so);
    }
    if (opt.forecast) {
      row.mean_day = fc->events.milestone.mean_day;
      row.lower_day = fc->events.milestone.lower_day;
      row.upper_day = fc->events.milestone.upper_day;
    }
    if (opt.calibration && row.realised_day && row.remaining_target > 0) {
      const auto z = snap.exposures(Group::AtRiskO);
      const double tau = *row.realised_day;
      double mean = 0.0;
      double var = 0.0;
      double cap = static_cast<double>(z.size());
      if (ongoing) {
        const auto p = combined_distribution(model, z, fc->recruitment->terms, tau);
        mean = p.total_mean();
        var = p.total_var();
        cap = kInf;
      } else {
        const auto p = atrisk_distribution(model, z, tau, 0, kernels::Execution::Serial);
        mean = p.mean;
        var = p.variance;
      }
      const auto band = normal_interval(mean, var, delta, cap);
      row.band_lower = band.lower;
      row.band_upper = band.upper;
      const double k = static_cast<double>(row.remaining_target);
      row.covered = band.lower <= k && k <= band.upper;
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

StudyReport summarize_study(std::vector<StudyRow> rows, const CureModelParams& truth) {
  StudyReport rep;
  rep.rows = std::move(rows);
  std::size_t covered = 0;
  for (const auto& r : rep.rows) {
    if (!r.fit_ok) ++rep.n_failed;
    if (r.covered) {
      ++rep.n_calibrated;
      if (*r.covered) ++covered;
    }
  }
  rep.coverage = rep.n_calibrated ? static_cast<double>(covered) / static_cast<double>(rep.n_calibrated) : 0.0;
  for (const auto& [name, value] : report_parameters(truth)) {
    std::vector<double> est;
    std::vector<double> err;
    for (const auto& r : rep.rows) {
      if (!r.fit_ok) continue;
      for (const auto& [n2, v2] : r.estimates)
        if (n2 == name) {
          est.push_back(v2);
          err.push_back(std::fabs(v2 - value));
        }
    }
    ParameterSummary s;
    s.name = name;
    s.truth = value;
    s.median = quantile(est, 0.5);
    s.q05 = quantile(est, 0.05);
    s.q95 = quantile(est, 0.95);
    s.median_abs_error = quantile(err, 0.5);
    rep.parameters.push_back(s);
  }
  return rep;
}

StudyReport recovery_study(const SimConfig& config, std::size_t reps, const StudyOptions& opt) {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  config.validate();
  std::vector<StudyRow> rows(reps);
  const long n = static_cast<long>(reps);
  ExceptionSlot failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    failure.run([&] { rows[static_cast<std::size_t>(i)] = run_replication(config, static_cast<std::uint64_t>(i), opt); });
  }
  failure.rethrow();
  return summarize_study(std::move(rows), config.truth);
}

}  // namespace evpred
