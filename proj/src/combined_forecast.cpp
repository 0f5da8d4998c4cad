#include "evpred/combined_forecast.hpp"
#include "evpred/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "evpred/quadrature.hpp"

namespace evpred {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Window {
  double y1 = 0.0;  ///< t - min(t, b)
  double y2 = 0.0;  ///< t - a
  bool empty = true;
};

Window window_of(double t, double a, std::optional<double> b) {
  if (b && a > *b) throw std::invalid_argument("window opens after it closes");
  if (t <= a) return {};
  const double c = b ? std::min(t, *b) : t;
  if (!(c > a)) return {};
  return {t - c, t - a, false};
}
}  // namespace

double p_event_unconditional(const CureModelParams& params, double x) {
  if (x < 0.0) throw std::invalid_argument("x must be >= 0");
  return EventIncidence(params).unconditional(x);
}

EventYield::EventYield(const CureModelParams& params, double knot_spacing)
    : table_(EventIncidence(params), knot_spacing) {
  const auto* ea = std::get_if<Exponential>(&params.event);
  const auto* el = std::get_if<Exponential>(&params.dropout);
  if (ea && el) {
    closed_form_ = true;
    mu_event_ = ea->rate;
    mu_total_ = ea->rate + el->rate;
  }
}

void EventYield::prepare(double horizon) {
  if (!closed_form_) table_.extend_to(horizon);
}

double EventYield::q(double t, double a, std::optional<double> b) {
  if (!closed_form_ && t > table_.horizon()) table_.extend_to(t);
  return q_at(t, a, b);
}

double EventYield::q_at(double t, double a, std::optional<double> b) const {
  const Window w = window_of(t, a, b);
  if (w.empty) return 0.0;
  const double r = params().cure_prob;
  if (r >= 1.0) return 0.0;
  const double d = w.y2 - w.y1;
  if (closed_form_) {
    if (mu_total_ == 0.0) return 0.0;
    const double m = mu_total_;
    // d - (e^{-m y1} - e^{-m y2}) / m, kept in expm1 form.
    const double md = m * d;
    double inner = 0.0;
    if (md < 1e-4)
      inner = d * (1.0 - std::exp(-m * w.y1) * (1.0 - md / 2.0 + md * md / 6.0));
    else
      inner = d + std::exp(-m * w.y1) * std::expm1(-md) / m;
    return (1.0 - r) * mu_event_ / m * inner;
  }
  if (w.y2 > table_.horizon() + 1e-9) throw std::logic_error("event yield table not prepared to this horizon");
  const double head = d * table_.at(w.y1);
  return (1.0 - r) * (head + table_.incidence().weighted_mass(w.y1, w.y2));
}

double EventYield::limit(double a, std::optional<double> b) const {
  const double r = params().cure_prob;
  if (r >= 1.0) return 0.0;
  const double total = closed_form_ ? (mu_total_ == 0.0 ? 0.0 : mu_event_ / mu_total_)
                                    : table_.incidence().mass(0.0, kInf);
  if (total == 0.0) return 0.0;
  if (!b) return kInf;
  return (1.0 - r) * (*b - a) * total;
}

double q_event_yield(const CureModelParams& params, double t, double a, std::optional<double> b) {
  EventYield y(params);
  return y.q(t, a, b);
}

double q_event_yield_reference(const CureModelParams& params, double t, double a, std::optional<double> b) {
  const Window w = window_of(t, a, b);
  if (w.empty) return 0.0;
  const EventIncidence inc(params);
  const QuadratureTolerance tol{1e-11, 1e-10, 48, 8};
  return integrate([&](double s) { return inc.unconditional(s); }, w.y1, w.y2, tol);
}

void newrecruit_moments(EventYield& yield, std::span<const RateTerm> terms, std::span<const double> days,
                        std::span<double> mean, std::span<double> var, kernels::Execution exec) {
  if (mean.size() < days.size() || var.size() < days.size()) throw std::invalid_argument("output too small");
  if (days.empty()) return;
  yield.prepare(*std::max_element(days.begin(), days.end()));
  const auto& y = static_cast<const EventYield&>(yield);
  const long nd = static_cast<long>(days.size());
  ExceptionSlot failure;
#pragma omp parallel if (exec == kernels::Execution::Parallel)
  {
    std::vector<double> m(terms.size());
    std::vector<double> v(terms.size());
#pragma omp for schedule(dynamic, 4)
    for (long il = 0; il < nd; ++il) {
      failure.run([&] {
        const auto i = static_cast<std::size_t>(il);
        for (std::size_t j = 0; j < terms.size(); ++j) {
          const double q = terms[j].rate_mean > 0.0 ? y.q_at(days[i], terms[j].open_day, terms[j].closure_day) : 0.0;
          m[j] = terms[j].rate_mean * q;
          v[j] = terms[j].rate_mean * q + terms[j].rate_var * q * q;
        }
        mean[i] = kernels::pairwise_sum(m);
        var[i] = kernels::pairwise_sum(v);
      });
    }
  }
  failure.rethrow();
}

void newrecruit_moments_reference(const CureModelParams& params, std::span<const RateTerm> terms,
                                  std::span<const double> days, std::span<double> mean, std::span<double> var) {
  for (std::size_t i = 0; i < days.size(); ++i) {
    std::vector<double> m(terms.size());
    std::vector<double> v(terms.size());
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const double q = q_event_yield_reference(params, days[i], terms[j].open_day, terms[j].closure_day);
      m[j] = terms[j].rate_mean * q;
      v[j] = terms[j].rate_mean * q + terms[j].rate_var * q * q;
    }
    mean[i] = kernels::pairwise_sum(m);
    var[i] = kernels::pairwise_sum(v);
  }
}

double newrecruit_ceiling(const EventYield& yield, std::span<const RateTerm> terms) {
  double s = 0.0;
  for (const auto& t : terms) {
    if (t.rate_mean <= 0.0) continue;
    s += t.rate_mean * yield.limit(t.open_day, t.closure_day);
  }
  return s;
}

CombinedPoint combined_distribution(const CureModelParams& params, std::span<const double> atrisk_exposures,
                                    std::span<const RateTerm> terms, double t) {
  if (t < 0.0) throw std::invalid_argument("horizon must be >= 0");
  CombinedPoint out;
  out.day = t;
  const auto pred = atrisk_distribution(params, atrisk_exposures, t, 0);
  out.atrisk_mean = pred.mean;
  out.atrisk_var = pred.variance;
  EventYield yield(params);
  const double day[1] = {t};
  double m[1] = {0.0};
  double v[1] = {0.0};
  newrecruit_moments(yield, terms, day, m, v, kernels::Execution::Serial);
  out.newrecruit_mean = m[0];
  out.newrecruit_var = v[0];
  return out;
}

EventForecast forecast_combined(const CureModelParams& params, std::span<const double> atrisk_exposures,
                                std::span<const RateTerm> terms, long remaining_target, const CurveOptions& opt) {
  EventYield yield(params);
  ExtraComponent extra;
  extra.asymptotic_mean = newrecruit_ceiling(yield, terms);
  extra.moments = [&](std::span<const double> days, std::span<double> m, std::span<double> v) {
    newrecruit_moments(yield, terms, days, m, v, opt.exec);
  };
  return forecast_events(params, atrisk_exposures, remaining_target, opt, &extra);
}

double probability_of_success_combined(const CureModelParams& params, std::span<const double> atrisk_exposures,
                                       std::span<const RateTerm> terms, double planned_days, long remaining_target) {
  if (planned_days < 0.0) throw std::invalid_argument("planned time must be >= 0");
  if (remaining_target <= 0) return 1.0;
  const auto p = combined_distribution(params, atrisk_exposures, terms, planned_days);
  return probability_of_success_normal(p.total_mean(), p.total_var(), remaining_target);
}

SnapshotForecast forecast_snapshot(const CureModelParams& params, const TrialSnapshot& snapshot,
                                   const SnapshotForecastOptions& opt) {
  SnapshotForecast out;
  out.remaining_events = snapshot.target_events() - static_cast<long>(snapshot.count(Group::EventA));
  const long remaining_patients = snapshot.sample_size() - static_cast<long>(snapshot.recruited());
  const auto z = snapshot.exposures(Group::AtRiskO);
  if (remaining_patients <= 0) {
    out.events = forecast_events(params, z, out.remaining_events, opt.curve, nullptr);
    return out;
  }
  const auto& centres = snapshot.centres();
  if (centres.size() < 2) throw InputError("recruitment is ongoing but centre data has fewer than 2 centres");
  RecruitmentSection rec;
  rec.remaining_patients = remaining_patients;
  rec.fit = fit_pg(centres);
  if (rec.fit.degenerate) rec.warnings.push_back("no patients recruited in any centre; recruitment rate is near zero");
  if (!rec.fit.converged && !rec.fit.degenerate) rec.warnings.push_back("recruitment fit did not converge");
  if (centres.size() < 10) rec.warnings.push_back("fewer than 10 centres: normal recruitment bounds are rough");
  rec.posteriors = posteriors(rec.fit, centres);
  NewCentreRates nr = opt.new_rates;
  if (nr.gamma) {
    nr.alpha = rec.fit.alpha;
    nr.beta = rec.fit.beta;
  }
  const auto terms = rate_terms(rec.posteriors, snapshot.new_centres(), nr);
  rec.forecast = predict_recruitment(terms, remaining_patients, opt.recruitment);
  rec.closure_day = default_closure_day(terms, remaining_patients, opt.recruitment);
  rec.terms = rec.closure_day ? close_open_terms(terms, *rec.closure_day) : terms;
  if (!rec.closure_day) rec.warnings.push_back("recruitment target not reached in the mean; centres left open");
  out.events = forecast_combined(params, z, rec.terms, out.remaining_events, opt.curve);
  out.recruitment = std::move(rec);
  return out;
}

}  // namespace evpred
