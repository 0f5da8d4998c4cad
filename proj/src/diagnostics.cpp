#include "evpred/diagnostics.hpp"
#include "evpred/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evpred {

double KmCurve::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KmCurve kaplan_meier(const std::vector<PatientRecord>& patients, double confidence_level, KmEndpoint endpoint) {
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) throw std::invalid_argument("confidence level in (0,1)");
  KmCurve km;
  km.endpoint = endpoint;
  km.confidence_level = confidence_level;
  const Group event_group = endpoint == KmEndpoint::Event ? Group::EventA : Group::DropoutL;
  std::vector<std::pair<double, bool>> obs;
  obs.reserve(patients.size());
  for (const auto& p : patients) obs.emplace_back(p.exposure_days, p.group == event_group);
  // Events before censorings at tied times.
  std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second && !b.second);
  });
  if (!obs.empty()) km.max_time = obs.back().first;
  const double z = normal_quantile(0.5 + confidence_level / 2.0);
  long n = static_cast<long>(obs.size());
  double s = 1.0;
  double greenwood = 0.0;
  std::size_t i = 0;
  while (i < obs.size()) {
    const double t = obs[i].first;
    long d = 0;
    long c = 0;
    while (i < obs.size() && obs[i].first == t) {
      (obs[i].second ? d : c) += 1;
      ++i;
    }
    if (d > 0) {
      const double nd = static_cast<double>(n);
      const double dd = static_cast<double>(d);
      s *= 1.0 - dd / nd;
      greenwood += n > d ? dd / (nd * (nd - dd)) : std::numeric_limits<double>::infinity();
      double lo = s;
      double hi = s;
      if (s > 0.0 && s < 1.0) {
        const double se = std::sqrt(greenwood) / std::fabs(std::log(s));
        if (std::isfinite(se)) {
          lo = std::pow(s, std::exp(z * se));
          hi = std::pow(s, std::exp(-z * se));
        } else {
          lo = 0.0;
          hi = 1.0;
        }
      }
      km.times.push_back(t);
      km.at_risk.push_back(n);
      km.events.push_back(d);
      km.survival.push_back(s);
      km.lower.push_back(lo);
      km.upper.push_back(hi);
    }
    n -= d + c;
  }
  return km;
}

double model_survival(const CureModelParams& params, double t, KmEndpoint endpoint) {
  return endpoint == KmEndpoint::Event ? cure_survival(params, t) : survival(params.dropout, t);
}

double sup_distance(const KmCurve& km, const CureModelParams& params) {
  double worst = 0.0;
  double prev = 1.0;  // step value on [previous jump, this jump)
  for (std::size_t j = 0; j < km.times.size(); ++j) {
    const double m = model_survival(params, km.times[j], km.endpoint);
    worst = std::max({worst, std::fabs(m - prev), std::fabs(m - km.survival[j])});
    prev = km.survival[j];
  }
  worst = std::max(worst, std::fabs(model_survival(params, km.max_time, km.endpoint) - prev));
  return worst;
}

OverlayTable overlay(const std::vector<CureModelFit>& fits, const KmCurve& km) {
  OverlayTable out;
  out.grid.push_back(0.0);
  out.km.push_back(1.0);
  out.km_lower.push_back(1.0);
  out.km_upper.push_back(1.0);
  for (std::size_t j = 0; j < km.times.size(); ++j) {
    if (km.times[j] == 0.0) {
      out.km.back() = km.survival[j];
      out.km_lower.back() = km.lower[j];
      out.km_upper.back() = km.upper[j];
      continue;
    }
    out.grid.push_back(km.times[j]);
    out.km.push_back(km.survival[j]);
    out.km_lower.push_back(km.lower[j]);
    out.km_upper.push_back(km.upper[j]);
  }
  if (km.max_time > out.grid.back()) {
    out.grid.push_back(km.max_time);
    out.km.push_back(out.km.back());
    out.km_lower.push_back(out.km_lower.back());
    out.km_upper.push_back(out.km_upper.back());
  }
  for (const auto& f : fits) {
    OverlaySeries s;
    s.model = model_name(f.spec, f.with_cure);
    for (double t : out.grid) s.values.push_back(model_survival(f.params, t, km.endpoint));
    s.sup_distance = sup_distance(km, f.params);
    out.series.push_back(std::move(s));
  }
  return out;
}

std::vector<std::pair<CureModelSpec, bool>> standard_models() {
  using K = FamilyKind;
  return {{{K::Exponential, K::Exponential}, false},
          {{K::Exponential, K::Exponential}, true},
          {{K::Weibull, K::Exponential}, true},
          {{K::Exponential, K::Weibull}, true},
          {{K::Weibull, K::Weibull}, true}};
}

std::vector<ModelRow> model_table(const ExposureData& data, const FitOptions& opt) {
  const auto models = standard_models();
  std::vector<ModelRow> rows(models.size());
  FitOptions inner = opt;
  inner.parallel_restarts = false;
  const long nm = static_cast<long>(models.size());
  ExceptionSlot failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (long il = 0; il < nm; ++il) {
    failure.run([&] {
      const auto i = static_cast<std::size_t>(il);
      ModelRow& row = rows[i];
      row.spec = models[i].first;
      row.with_cure = models[i].second;
      row.name = model_name(row.spec, row.with_cure);
      try {
        row.fit = fit(row.spec, data, row.with_cure, inner);
        row.loglik = row.fit->loglik;
        row.k = row.fit->n_params;
        const auto ic = information_criteria(*row.fit, data.total());
        row.aic = ic.aic;
        row.bic = ic.bic;
        if (!row.fit->converged) row.error = "did not converge";
      } catch (const std::exception& e) {
        row.fit.reset();
        row.error = e.what();
      }
    });
  }
  failure.rethrow();
  std::stable_sort(rows.begin(), rows.end(), [](const ModelRow& a, const ModelRow& b) {
    if (a.fit.has_value() != b.fit.has_value()) return a.fit.has_value();
    if (!a.fit) return false;
    return a.aic < b.aic;
  });
  return rows;
}

}  // namespace evpred
