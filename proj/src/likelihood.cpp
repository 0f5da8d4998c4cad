#include "evpred/likelihood.hpp"
#include "evpred/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace evpred {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> logs_of(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::log(x); });
  return out;
}

/// Per-family log density / log survival with constants hoisted out of the
/// per-patient loop. `lx` is log(x).
class FamilyTerms {
 public:
  explicit FamilyTerms(const Family& f) : family_(f), kind_(kind_of(f)) {
    if (const auto* e = std::get_if<Exponential>(&f)) {
      a_ = e->rate;
      c_ = e->rate > 0.0 ? std::log(e->rate) : kNegInf;
    } else if (const auto* w = std::get_if<Weibull>(&f)) {
      a_ = w->shape;
      b_ = w->g;
      c_ = std::log(w->shape) + std::log(w->g);
    } else {
      const auto& l = std::get<LogNormal>(f);
      a_ = l.meanlog;
      b_ = l.sdlog;
      c_ = -std::log(l.sdlog) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
  }

  double log_surv(double x, double lx) const {
    switch (kind_) {
      case FamilyKind::Exponential: return -a_ * x;
      case FamilyKind::Weibull: return -b_ * std::exp(a_ * lx);
      case FamilyKind::LogNormal: return x > 0.0 ? log_normal_sf((lx - a_) / b_) : 0.0;
    }
    return 0.0;
  }

  double log_dens(double x, double lx) const {
    if (x == 0.0) return log_pdf(family_, 0.0);
    switch (kind_) {
      case FamilyKind::Exponential: return c_ - a_ * x;
      case FamilyKind::Weibull: return c_ + (a_ - 1.0) * lx - b_ * std::exp(a_ * lx);
      case FamilyKind::LogNormal: {
        const double z = (lx - a_) / b_;
        return c_ - lx - 0.5 * z * z;
      }
    }
    return kNegInf;
  }

 private:
  Family family_;
  FamilyKind kind_;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0;
};

class CureMix {
 public:
  explicit CureMix(double r) : r_(r) {
    if (r > 0.0 && r < 1.0) {
      log_r_ = std::log(r);
      ratio_ = (1.0 - r) / r;
    }
  }
  double operator()(double log_s) const {
    if (r_ <= 0.0) return log_s;
    if (r_ >= 1.0) return 0.0;
    return log_r_ + std::log1p(ratio_ * std::exp(log_s));
  }

 private:
  double r_;
  double log_r_ = 0.0;
  double ratio_ = 0.0;
};

}  // namespace

ExposureData::ExposureData(std::vector<double> event, std::vector<double> atrisk, std::vector<double> dropout)
    : x_(std::move(event)), z_(std::move(atrisk)), y_(std::move(dropout)) {
  for (const auto* v : {&x_, &z_, &y_})
    for (double t : *v)
      if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("exposure times must be finite and >= 0");
  lx_ = logs_of(x_);
  lz_ = logs_of(z_);
  ly_ = logs_of(y_);
  for (double t : x_) sum_event_ += t;
  sum_all_ = sum_event_;
  for (double t : z_) sum_all_ += t;
  for (double t : y_) sum_all_ += t;
}

ExposureData::ExposureData(const TrialSnapshot& s)
    : ExposureData(s.exposures(Group::EventA), s.exposures(Group::AtRiskO), s.exposures(Group::DropoutL)) {}

double loglik_general(const CureModelParams& p, const ExposureData& d) {
  const double r = p.cure_prob;
  const FamilyTerms ev(p.event), dr(p.dropout);
  const CureMix mix(r);
  double ll = 0.0;
  for (std::size_t i = 0; i < d.n_atrisk(); ++i) {
    const double z = d.atrisk()[i], lz = d.log_atrisk()[i];
    ll += dr.log_surv(z, lz) + mix(ev.log_surv(z, lz));
  }
  if (d.n_event() > 0) ll += static_cast<double>(d.n_event()) * std::log1p(-r);
  for (std::size_t k = 0; k < d.n_event(); ++k) {
    const double x = d.event()[k], lx = d.log_event()[k];
    ll += ev.log_dens(x, lx) + dr.log_surv(x, lx);
  }
  for (std::size_t j = 0; j < d.n_dropout(); ++j) {
    const double y = d.dropout()[j], ly = d.log_dropout()[j];
    ll += dr.log_dens(y, ly) + mix(ev.log_surv(y, ly));
  }
  return std::isnan(ll) ? kNegInf : ll;
}

double loglik_exponential_profiled(double mu, double r, const ExposureData& d) {
  const double n_a = static_cast<double>(d.n_event());
  const double n_l = static_cast<double>(d.n_dropout());
  const CureMix mix(r);
  double ll = -mu * d.sum_event();
  if (d.n_event() > 0) ll += n_a * (std::log1p(-r) + std::log(mu));
  for (double z : d.atrisk()) ll += mix(-mu * z);
  for (double y : d.dropout()) ll += mix(-mu * y);
  if (d.n_dropout() > 0) ll += n_l * (std::log(n_l) - std::log(d.sum_all()) - 1.0);
  return std::isnan(ll) ? kNegInf : ll;
}

namespace {

Family initial_family(FamilyKind k, double rate) {
  switch (k) {
    case FamilyKind::Exponential: return Exponential{rate};
    case FamilyKind::Weibull: return Weibull{1.0, rate};
    case FamilyKind::LogNormal: return LogNormal{std::log(std::numbers::ln2 / rate), 1.0};
  }
  return Exponential{rate};
}

}  // namespace

CureModelFit fit(const CureModelSpec& spec, const ExposureData& d, bool with_cure, const FitOptions& opt) {
  if (d.n_event() == 0) throw InsufficientData("at least one event is needed to fit the event distribution");
  if (!(d.sum_all() > 0.0)) throw InsufficientData("total exposure must be positive");
  if (spec.event != FamilyKind::Exponential &&
      std::any_of(d.event().begin(), d.event().end(), [](double x) { return x == 0.0; }))
    throw InputError("zero event exposure is not allowed with a " + std::string(family_name(spec.event)) +
                     " event distribution");
  const bool has_dropouts = d.n_dropout() > 0;
  if (has_dropouts && spec.dropout != FamilyKind::Exponential &&
      std::any_of(d.dropout().begin(), d.dropout().end(), [](double y) { return y == 0.0; }))
    throw InputError("zero dropout exposure is not allowed with a " + std::string(family_name(spec.dropout)) +
                     " dropout distribution");

  ParamLayout layout{spec.event, has_dropouts ? spec.dropout : FamilyKind::Exponential, has_dropouts, with_cure};
  CureModelParams init;
  const double mu_a0 = static_cast<double>(d.n_event()) / d.sum_all();
  const double mu_l0 = static_cast<double>(d.n_dropout()) / d.sum_all();
  init.event = initial_family(spec.event, mu_a0);
  init.dropout = has_dropouts ? initial_family(spec.dropout, mu_l0) : Family{Exponential{0.0}};
  init.cure_prob = 0.0;

  const std::vector<double> starts = with_cure ? opt.cure_starts : std::vector<double>{0.0};
  if (starts.empty()) throw std::invalid_argument("at least one initial cure value is required");

  struct Restart {
    CureModelParams params;
    double loglik = kNegInf;
    bool converged = false;
  };
  std::vector<Restart> results(starts.size());

  auto objective = [&](std::span<const double> theta) {
    return -loglik_general(transform_from_unconstrained(theta, layout, init), d);
  };

  const long n_starts = static_cast<long>(starts.size());
  ExceptionSlot failure;
#pragma omp parallel for schedule(dynamic) if (opt.parallel_restarts && n_starts > 1)
  for (long s = 0; s < n_starts; ++s) {
    failure.run([&] {
      CureModelParams p0 = init;
      p0.cure_prob = starts[static_cast<std::size_t>(s)];
      const NelderMeadResult nm = nelder_mead(objective, transform_to_unconstrained(p0, layout), opt.optimizer);
      Restart& out = results[static_cast<std::size_t>(s)];
      out.params = transform_from_unconstrained(nm.x, layout, init);
      out.loglik = -nm.value;
      out.converged = nm.converged;
    });
  }
  failure.rethrow();

  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s) {
    const double diff = results[s].loglik - results[best].loglik;
    if (diff > 1e-9 || (std::abs(diff) <= 1e-9 && results[s].params.cure_prob < results[best].params.cure_prob))
      best = s;
  }

  CureModelFit out;
  out.spec = {spec.event, layout.dropout};
  out.with_cure = with_cure;
  out.params = results[best].params;
  out.loglik = results[best].loglik;
  out.n_params = static_cast<int>(layout.size());
  out.converged = std::isfinite(out.loglik) &&
                  std::any_of(results.begin(), results.end(), [](const Restart& r) { return r.converged; });
  out.n_restarts_used = static_cast<int>(results.size());
  out.best_restart = static_cast<int>(best);
  return out;
}

InformationCriteria information_criteria(double loglik, int k, std::size_t n) {
  InformationCriteria ic;
  ic.aic = 2.0 * k - 2.0 * loglik;
  ic.bic = (k == 0 ? 0.0 : k * std::log(static_cast<double>(n))) - 2.0 * loglik;
  return ic;
}

std::string model_name(const CureModelSpec& spec, bool with_cure) {
  using K = FamilyKind;
  auto lower = [](K k) {
    switch (k) {
      case K::Exponential: return std::string("exponential");
      case K::Weibull: return std::string("Weibull");
      case K::LogNormal: return std::string("log-normal");
    }
    return std::string("?");
  };
  auto upper = [&](K k) {
    std::string s = lower(k);
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
  };
  std::string base;
  if (spec.event == spec.dropout)
    base = upper(spec.event);
  else
    base = upper(spec.event) + " (A) and " + lower(spec.dropout) + " (L)";
  return with_cure ? base + " cure" : base + ", no cure";
}

}  // namespace evpred
