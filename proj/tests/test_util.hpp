// Shared helpers for the test programs: independent density formulas,
// Boost quadrature oracles and random parameter draws.
#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <variant>
#include <vector>

#include "evpred/distributions.hpp"
#include "evpred/recruitment.hpp"

namespace evpred::testing {

// Textbook formulas written out again, without the library's code paths.
inline double oracle_pdf(const Family& f, double x) {
  if (const auto* e = std::get_if<Exponential>(&f)) return e->rate * std::exp(-e->rate * x);
  if (const auto* w = std::get_if<Weibull>(&f)) {
    const double a = w->shape;
    const double b = w->scale();
    return (a / b) * std::pow(x / b, a - 1.0) * std::exp(-std::pow(x / b, a));
  }
  const auto& l = std::get<LogNormal>(f);
  const double z = (std::log(x) - l.meanlog) / l.sdlog;
  return std::exp(-0.5 * z * z) / (x * l.sdlog * std::sqrt(2.0 * std::numbers::pi));
}

inline double oracle_survival(const Family& f, double x) {
  if (const auto* e = std::get_if<Exponential>(&f)) return std::exp(-e->rate * x);
  if (const auto* w = std::get_if<Weibull>(&f)) return std::exp(-std::pow(x / w->scale(), w->shape));
  const auto& l = std::get<LogNormal>(f);
  if (x <= 0.0) return 1.0;
  return 0.5 * std::erfc((std::log(x) - l.meanlog) / (l.sdlog * std::sqrt(2.0)));
}

/// int_lo^hi f(u) du by tanh-sinh (handles integrable endpoint singularities).
template <class F>
double integrate_oracle(F f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, lo, hi, 1e-14);
}

template <class F>
double integrate_tail_oracle(F f, double lo) {
  boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([&](double u) { return f(u); }, lo, std::numeric_limits<double>::infinity(), 1e-13);
}

/// (1 - r) int_0^x f_A(u) S_L(u) du.
inline double oracle_p_unconditional(const CureModelParams& p, double x) {
  return (1.0 - p.cure_prob) * integrate_oracle(
                                   [&](double u) { return oracle_pdf(p.event, u) * oracle_survival(p.dropout, u); },
                                   0.0, x);
}

/// Conditional event probability in (z, z + x] given no event or dropout by z.
inline double oracle_p_conditional(const CureModelParams& p, double x, double z) {
  const double r = p.cure_prob;
  const double num = (1.0 - r) * integrate_oracle(
                                     [&](double u) { return oracle_pdf(p.event, u) * oracle_survival(p.dropout, u); },
                                     z, z + x);
  return num / (oracle_survival(p.dropout, z) * (r + (1.0 - r) * oracle_survival(p.event, z)));
}

/// Per-patient log-probability sum: events contribute (1-r) f_A S_L, at-risk
/// patients S_L (r + (1-r) S_A), dropouts f_L (r + (1-r) S_A).
inline double oracle_loglik(const CureModelParams& p, const std::vector<double>& x, const std::vector<double>& z,
                            const std::vector<double>& y) {
  const double r = p.cure_prob;
  double ll = 0.0;
  for (double v : x) ll += std::log((1.0 - r) * oracle_pdf(p.event, v) * oracle_survival(p.dropout, v));
  for (double v : z) ll += std::log(oracle_survival(p.dropout, v) * (r + (1.0 - r) * oracle_survival(p.event, v)));
  for (double v : y) ll += std::log(oracle_pdf(p.dropout, v) * (r + (1.0 - r) * oracle_survival(p.event, v)));
  return ll;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline CureModelParams random_exponential_params(std::mt19937_64& g) {
  CureModelParams p;
  p.event = Exponential{std::exp(uniform(g, std::log(1e-4), std::log(5e-2)))};
  p.dropout = Exponential{std::exp(uniform(g, std::log(1e-5), std::log(1e-2)))};
  p.cure_prob = uniform(g, 0.0, 0.9);
  return p;
}

struct GroupTimes {
  std::vector<double> x, z, y;
};

/// n patients randomised uniformly on [0, window], observed at `cutoff`.
inline GroupTimes simulate_groups(const CureModelParams& p, std::size_t n, double window, double cutoff,
                                  std::uint64_t seed) {
  Rng rng(seed);
  GroupTimes g;
  for (std::size_t i = 0; i < n; ++i) {
    const double start = window * uniform_open01(rng);
    const double follow = cutoff - start;
    const auto d = sample_cure(p, rng);
    const double ev = d.event_time && *d.event_time < d.dropout_time ? *d.event_time
                                                                     : std::numeric_limits<double>::infinity();
    if (ev <= follow)
      g.x.push_back(ev);
    else if (d.dropout_time <= follow)
      g.y.push_back(d.dropout_time);
    else
      g.z.push_back(follow);
  }
  return g;
}

/// Patient already followed for z without event or dropout: redraw until the
/// draw survives past z, return the calendar offset of its event after z
/// (inf when none).
inline double sample_residual_event(const CureModelParams& p, double z, Rng& rng) {
  for (;;) {
    const auto d = sample_cure(p, rng);
    const double ev = d.event_time ? *d.event_time : std::numeric_limits<double>::infinity();
    if (std::min(ev, d.dropout_time) <= z) continue;
    return ev < d.dropout_time ? ev - z : std::numeric_limits<double>::infinity();
  }
}

struct MomentEstimate {
  std::vector<double> mean, var;
};

/// Brute-force trial continuation: at-risk patients continue from their
/// exposures, each rate term recruits a Poisson stream (gamma rate when its
/// variance is positive) whose patients draw fresh event times. Returns the
/// sample mean and variance of the event count by each day.
inline MomentEstimate simulate_future_events(const CureModelParams& p, const std::vector<double>& z,
                                             const std::vector<RateTerm>& terms, const std::vector<double>& days,
                                             int reps, std::uint64_t seed) {
  Rng rng(seed);
  const double tmax = *std::max_element(days.begin(), days.end());
  std::vector<double> s(days.size(), 0.0), s2(days.size(), 0.0), ev;
  for (int r = 0; r < reps; ++r) {
    ev.clear();
    for (double zi : z) ev.push_back(sample_residual_event(p, zi, rng));
    for (const auto& t : terms) {
      double lam = t.rate_mean;
      if (t.rate_var > 0)
        lam = std::gamma_distribution<double>(t.rate_mean * t.rate_mean / t.rate_var, t.rate_var / t.rate_mean)(rng);
      const double hi = std::min(tmax, t.closure_day.value_or(tmax));
      if (!(hi > t.open_day)) continue;
      const long n = std::poisson_distribution<long>(lam * (hi - t.open_day))(rng);
      for (long i = 0; i < n; ++i) {
        const double arrive = t.open_day + (hi - t.open_day) * uniform_open01(rng);
        const auto d = sample_cure(p, rng);
        if (d.event_time && *d.event_time < d.dropout_time) ev.push_back(arrive + *d.event_time);
      }
    }
    for (std::size_t k = 0; k < days.size(); ++k) {
      double c = 0;
      for (double e : ev) c += e <= days[k];
      s[k] += c;
      s2[k] += c * c;
    }
  }
  MomentEstimate out;
  for (std::size_t k = 0; k < days.size(); ++k) {
    const double m = s[k] / reps;
    out.mean.push_back(m);
    out.var.push_back((s2[k] - reps * m * m) / (reps - 1));
  }
  return out;
}

inline CureModelParams shape08_truth() {
  return {Weibull::from_scale(0.8, 182.0), Weibull::from_scale(0.6, 2611.0), 0.2};
}
inline CureModelParams shape12_truth() {
  return {Weibull::from_scale(1.2, 213.0), Weibull::from_scale(1.4, 3701.0), 0.2};
}

}  // namespace evpred::testing
