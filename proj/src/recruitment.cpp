#include "evpred/recruitment.hpp"
#include "evpred/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evpred {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_rising(double alpha, long k) {
  // sum_{j<k} log(alpha + j); the loop stays accurate for huge alpha where a
  // difference of log-gammas would cancel.
  if (k > 1000 && alpha < 1e6) return std::lgamma(alpha + static_cast<double>(k)) - std::lgamma(alpha);
  double s = 0.0;
  for (long j = 0; j < k; ++j) s += std::log(alpha + static_cast<double>(j));
  return s;
}
}  // namespace

double window_duration(double t, double u, std::optional<double> b) {
  const double close = b.value_or(kInf);
  if (u > close) throw std::invalid_argument("window opens after it closes");
  if (t <= u) return 0.0;
  if (t <= close) return t - u;
  return close - u;
}

double pg_log_pmf(long k, double t, double alpha, double beta) {
  if (k < 0) throw std::invalid_argument("count must be >= 0");
  if (t < 0.0) throw std::invalid_argument("duration must be >= 0");
  if (!(alpha > 0.0 && beta > 0.0)) throw std::invalid_argument("alpha and beta must be positive");
  if (t == 0.0) return k == 0 ? 0.0 : -kInf;
  const double kd = static_cast<double>(k);
  return log_rising(alpha, k) - std::lgamma(kd + 1.0) + kd * std::log(t) - alpha * std::log1p(t / beta) -
         kd * std::log(beta + t);
}

double pg_pmf(long k, double t, double alpha, double beta) { return std::exp(pg_log_pmf(k, t, alpha, beta)); }

double pg_loglik(std::span<const CentreRecord> centres, double alpha, double beta) {
  double s = 0.0;
  for (const auto& c : centres) s += pg_log_pmf(c.enrolled_count, c.window_days, alpha, beta);
  return s;
}

std::pair<double, double> pg_initial_values(std::span<const CentreRecord> centres) {
  const double n = static_cast<double>(centres.size());
  double m = 0.0;
  double inv_v = 0.0;
  for (const auto& c : centres) {
    m += static_cast<double>(c.enrolled_count) / c.window_days;
    inv_v += 1.0 / c.window_days;
  }
  m /= n;
  inv_v /= n;
  double s2 = 0.0;
  for (const auto& c : centres) {
    const double d = static_cast<double>(c.enrolled_count) / c.window_days - m;
    s2 += d * d;
  }
  s2 /= (n - 1.0);
  // Var(k/v) = Var(lambda) + E[lambda / v]; subtract the Poisson part.
  const double excess = s2 - m * inv_v;
  const double alpha0 = excess > 0.0 ? m * m / excess : 1.0;
  return {alpha0, alpha0 / m};
}

PGFit fit_pg(std::span<const CentreRecord> centres, const NelderMeadOptions& opt) {
  if (centres.size() < 2) throw std::invalid_argument("fitting the recruitment model needs at least 2 centres");
  long total = 0;
  for (const auto& c : centres) {
    if (!(c.window_days > 0.0)) throw std::invalid_argument("centre " + c.centre_id + ": window must be positive");
    if (c.enrolled_count < 0) throw std::invalid_argument("centre " + c.centre_id + ": negative count");
    total += c.enrolled_count;
  }
  PGFit out;
  if (total == 0) {
    out.degenerate = true;
    out.alpha = 1e-8;
    out.beta = 1.0;
    out.alpha_init = out.alpha;
    out.beta_init = out.beta;
    out.loglik = out.loglik_init = pg_loglik(centres, out.alpha, out.beta);
    out.converged = false;
    return out;
  }
  const auto [a0, b0] = pg_initial_values(centres);
  out.alpha_init = a0;
  out.beta_init = b0;
  out.loglik_init = pg_loglik(centres, a0, b0);

  // Shape and mean rate are nearly orthogonal; (log alpha, log beta) is not.
  auto objective = [&](std::span<const double> th) {
    const double alpha = std::exp(th[0]);
    const double beta = alpha / std::exp(th[1]);
    if (!(alpha > 0.0 && beta > 0.0) || std::isinf(alpha) || std::isinf(beta)) return kInf;
    return -pg_loglik(centres, alpha, beta);
  };
  const auto res = nelder_mead(objective, {std::log(a0), std::log(a0 / b0)}, opt);
  out.alpha = std::exp(res.x[0]);
  out.beta = out.alpha / std::exp(res.x[1]);
  out.loglik = -res.value;
  out.converged = res.converged;
  if (out.loglik < out.loglik_init) {
    out.alpha = a0;
    out.beta = b0;
    out.loglik = out.loglik_init;
  }
  return out;
}

std::vector<CentrePosterior> posteriors(const PGFit& fit, std::span<const CentreRecord> centres,
                                        std::optional<double> closure_override) {
  if (!(fit.alpha > 0.0 && fit.beta > 0.0)) throw std::invalid_argument("invalid recruitment fit");
  std::vector<CentrePosterior> out;
  out.reserve(centres.size());
  for (const auto& c : centres) {
    CentrePosterior p;
    p.centre_id = c.centre_id;
    p.post_shape = fit.alpha + static_cast<double>(c.enrolled_count);
    p.post_rate = fit.beta + c.window_days;
    p.closure_day = closure_override ? closure_override : c.closure_day;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<RateTerm> rate_terms(std::span<const CentrePosterior> active, std::span<const NewCentrePlan> planned,
                                 const NewCentreRates& new_rates) {
  std::vector<RateTerm> out;
  out.reserve(active.size() + planned.size());
  for (const auto& p : active) out.push_back({0.0, p.closure_day, p.mean(), p.variance()});
  for (const auto& n : planned) {
    RateTerm t{n.open_day, n.closure_day, n.rate, 0.0};
    if (new_rates.gamma) {
      if (!(new_rates.alpha > 0.0 && new_rates.beta > 0.0)) throw std::invalid_argument("invalid new-centre prior");
      t.rate_mean = new_rates.alpha / new_rates.beta;
      t.rate_var = new_rates.alpha / (new_rates.beta * new_rates.beta);
    }
    out.push_back(t);
  }
  return out;
}

std::vector<RateTerm> with_closure(std::vector<RateTerm> terms, std::optional<double> closure_day) {
  for (auto& t : terms) t.closure_day = closure_day;
  return terms;
}

std::vector<RateTerm> close_open_terms(std::vector<RateTerm> terms, double closure_day) {
  for (auto& t : terms)
    if (!t.closure_day) t.closure_day = std::max(closure_day, t.open_day);
  return terms;
}

void recruitment_moments(std::span<const RateTerm> terms, std::span<const double> days, std::span<double> mean,
                         std::span<double> var, kernels::Execution exec) {
  if (mean.size() < days.size() || var.size() < days.size()) throw std::invalid_argument("output too small");
  const long nd = static_cast<long>(days.size());
  ExceptionSlot failure;
#pragma omp parallel if (exec == kernels::Execution::Parallel)
  {
    std::vector<double> m(terms.size());
    std::vector<double> v(terms.size());
#pragma omp for schedule(static)
    for (long il = 0; il < nd; ++il) {
      failure.run([&] {
        const auto i = static_cast<std::size_t>(il);
        for (std::size_t j = 0; j < terms.size(); ++j) {
          const double d = window_duration(days[i], terms[j].open_day, terms[j].closure_day);
          m[j] = terms[j].rate_mean * d;
          v[j] = terms[j].rate_mean * d + terms[j].rate_var * d * d;
        }
        mean[i] = kernels::pairwise_sum(m);
        var[i] = kernels::pairwise_sum(v);
      });
    }
  }
  failure.rethrow();
}

double recruitment_ceiling(std::span<const RateTerm> terms) {
  double s = 0.0;
  for (const auto& t : terms) {
    if (t.rate_mean <= 0.0) continue;
    if (!t.closure_day) return kInf;
    s += t.rate_mean * (*t.closure_day - t.open_day);
  }
  return s;
}

RecruitmentForecast predict_recruitment(std::span<const RateTerm> terms, long remaining_patients,
                                        const RecruitmentOptions& opt) {
  if (!(opt.grid_step > 0.0) || !(opt.horizon > 0.0)) throw std::invalid_argument("bad grid");
  for (const auto& t : terms)
    if (t.closure_day && t.open_day > *t.closure_day) throw std::invalid_argument("window opens after it closes");
  RecruitmentForecast out;
  Milestone& ms = out.milestone;
  ms.asymptotic_mean = recruitment_ceiling(terms);
  if (remaining_patients <= 0) {
    ms.status = MilestoneStatus::Reached;
    ms.mean_day = ms.lower_day = ms.upper_day = ms.median_day = 0.0;
    return out;
  }
  const double target = static_cast<double>(remaining_patients);
  ms.status = ms.asymptotic_mean < target ? MilestoneStatus::Unreachable : MilestoneStatus::Predicted;

  const auto steps = static_cast<std::size_t>(std::floor(opt.horizon / opt.grid_step + 1e-9));
  std::vector<double> days(steps);
  for (std::size_t i = 0; i < steps; ++i) days[i] = opt.grid_step * static_cast<double>(i + 1);
  std::vector<double> mean(steps);
  std::vector<double> var(steps);
  recruitment_moments(terms, days, mean, var, opt.exec);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto band = normal_interval(mean[i], var[i], opt.delta);
    out.curve.push_back({days[i], mean[i], var[i], band.lower, band.upper});
    const double p = probability_of_success_normal(mean[i], var[i], remaining_patients);
    if (!ms.mean_day && mean[i] >= target) ms.mean_day = days[i];
    if (!ms.lower_day && band.upper >= target) ms.lower_day = days[i];
    if (!ms.upper_day && band.lower >= target) ms.upper_day = days[i];
    if (!ms.median_day && p >= 0.5) ms.median_day = days[i];
    if (ms.mean_day && ms.lower_day && ms.upper_day && ms.median_day) {
      out.curve.resize(i + 1);
      break;
    }
  }
  if (ms.status == MilestoneStatus::Predicted && !ms.mean_day) ms.status = MilestoneStatus::BeyondHorizon;
  return out;
}

std::optional<double> default_closure_day(std::span<const RateTerm> terms, long remaining_patients,
                                          const RecruitmentOptions& opt) {
  if (remaining_patients <= 0) return 0.0;
  const auto first = predict_recruitment(terms, remaining_patients, opt);
  if (!first.milestone.mean_day) return std::nullopt;
  const double b = *first.milestone.mean_day;
  // Closing at the hit day leaves the curve before it untouched, so one
  // more pass must give the same day.
  const auto closed = close_open_terms({terms.begin(), terms.end()}, b);
  const auto second = predict_recruitment(closed, remaining_patients, opt);
  return second.milestone.mean_day.value_or(b);
}

}  // namespace evpred
