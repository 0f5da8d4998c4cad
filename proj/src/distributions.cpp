#include "evpred/distributions.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace evpred {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_x(double x) {
  if (std::isnan(x)) throw std::invalid_argument("time argument is NaN");
}

}  // namespace

double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double log_normal_sf(double x) {
  if (x < 35.0) return std::log(0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0));
  // Asymptotic Mills-ratio series.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) + 105.0 / (x2 * x2 * x2 * x2);
  return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double normal_quantile(double p) {
  if (!(p > 0.0)) return -kInf;
  if (!(p < 1.0)) return kInf;
  return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

Weibull Weibull::from_scale(double shape, double scale) { return {shape, std::pow(scale, -shape)}; }
double Weibull::scale() const { return std::pow(g, -1.0 / shape); }

FamilyKind kind_of(const Family& f) {
  return std::visit(Overloaded{[](const Exponential&) { return FamilyKind::Exponential; },
                               [](const Weibull&) { return FamilyKind::Weibull; },
                               [](const LogNormal&) { return FamilyKind::LogNormal; }},
                    f);
}

std::string_view family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::Exponential: return "Exponential";
    case FamilyKind::Weibull: return "Weibull";
    case FamilyKind::LogNormal: return "LogNormal";
  }
  return "?";
}

FamilyKind parse_family_kind(std::string_view name) {
  std::string s;
  for (char c : name)
    if (c != '-' && c != '_' && c != ' ') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "exponential" || s == "exp") return FamilyKind::Exponential;
  if (s == "weibull") return FamilyKind::Weibull;
  if (s == "lognormal") return FamilyKind::LogNormal;
  throw std::invalid_argument("unknown distribution family '" + std::string(name) + "'");
}

std::size_t parameter_count(FamilyKind k) { return k == FamilyKind::Exponential ? 1 : 2; }

void validate(const Family& f) {
  std::visit(Overloaded{[](const Exponential& e) {
                          if (!(e.rate >= 0.0) || !std::isfinite(e.rate))
                            throw std::invalid_argument("exponential rate must be finite and >= 0");
                        },
                        [](const Weibull& w) {
                          if (!(w.shape > 0.0) || !(w.g > 0.0) || !std::isfinite(w.shape) || !std::isfinite(w.g))
                            throw std::invalid_argument("Weibull shape and g must be finite and > 0");
                        },
                        [](const LogNormal& l) {
                          if (!std::isfinite(l.meanlog) || !(l.sdlog > 0.0) || !std::isfinite(l.sdlog))
                            throw std::invalid_argument("log-normal sdlog must be > 0 and meanlog finite");
                        }},
             f);
}

double log_pdf(const Family& f, double x) {
  require_x(x);
  if (x < 0.0) return -kInf;
  return std::visit(Overloaded{[x](const Exponential& e) {
                                 if (e.rate == 0.0) return -kInf;
                                 return std::isinf(x) ? -kInf : std::log(e.rate) - e.rate * x;
                               },
                               [x](const Weibull& w) {
                                 if (std::isinf(x)) return -kInf;
                                 if (x == 0.0) {
                                   if (w.shape == 1.0) return std::log(w.g);
                                   return w.shape < 1.0 ? kInf : -kInf;
                                 }
                                 return std::log(w.shape) + std::log(w.g) + (w.shape - 1.0) * std::log(x) -
                                        w.g * std::pow(x, w.shape);
                               },
                               [x](const LogNormal& l) {
                                 if (x == 0.0 || std::isinf(x)) return -kInf;
                                 const double lx = std::log(x);
                                 const double z = (lx - l.meanlog) / l.sdlog;
                                 return -lx - std::log(l.sdlog) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
                               }},
                    f);
}

double pdf(const Family& f, double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("pdf argument must be finite");
  if (const auto* e = std::get_if<Exponential>(&f)) return x < 0.0 ? 0.0 : e->rate * std::exp(-e->rate * x);
  if (const auto* w = std::get_if<Weibull>(&f)) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return w->shape == 1.0 ? w->g : (w->shape < 1.0 ? kInf : 0.0);
    return w->shape * w->g * std::pow(x, w->shape - 1.0) * std::exp(-w->g * std::pow(x, w->shape));
  }
  return std::exp(log_pdf(f, x));
}

double log_survival(const Family& f, double x) {
  require_x(x);
  if (x <= 0.0) return 0.0;
  return std::visit(Overloaded{[x](const Exponential& e) { return e.rate == 0.0 ? 0.0 : -e.rate * x; },
                               [x](const Weibull& w) { return -w.g * std::pow(x, w.shape); },
                               [x](const LogNormal& l) {
                                 if (std::isinf(x)) return -kInf;
                                 return log_normal_sf((std::log(x) - l.meanlog) / l.sdlog);
                               }},
                    f);
}

double survival(const Family& f, double x) { return std::exp(log_survival(f, x)); }

double cdf(const Family& f, double x) { return -std::expm1(log_survival(f, x)); }

double inverse_log_survival(const Family& f, double log_s) {
  if (std::isnan(log_s) || log_s > 0.0) throw std::invalid_argument("log-survival must lie in (-inf, 0]");
  if (log_s == 0.0) return 0.0;
  if (std::isinf(log_s)) return kInf;
  return std::visit(Overloaded{[log_s](const Exponential& e) { return e.rate == 0.0 ? kInf : -log_s / e.rate; },
                               [log_s](const Weibull& w) { return std::pow(-log_s / w.g, 1.0 / w.shape); },
                               [log_s](const LogNormal& l) {
                                 // S = 1 - Phi(z); pick the branch that keeps the argument away from 1.
                                 double z = 0.0;
                                 if (log_s > -std::numbers::ln2) {
                                   z = normal_quantile(-std::expm1(log_s));
                                 } else {
                                   const double s = std::exp(log_s);
                                   if (s == 0.0) return kInf;
                                   z = -normal_quantile(s);
                                 }
                                 return std::exp(l.meanlog + l.sdlog * z);
                               }},
                    f);
}

double sample_from_uniform(const Family& f, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("uniform draw must lie in (0, 1]");
  return inverse_log_survival(f, std::log(u));
}

double sample(const Family& f, Rng& rng) { return sample_from_uniform(f, uniform_open01(rng)); }

void validate(const CureModelParams& p) {
  validate(p.event);
  validate(p.dropout);
  if (!(p.cure_prob >= 0.0 && p.cure_prob <= 1.0)) throw std::invalid_argument("cure probability must lie in [0, 1]");
}

double log_cure_mix(double r, double log_s) {
  if (r <= 0.0) return log_s;
  if (r >= 1.0) return 0.0;
  // r + (1-r) e^l = r (1 + (1-r)/r e^l)
  return std::log(r) + std::log1p((1.0 - r) / r * std::exp(log_s));
}

double cure_survival(const CureModelParams& p, double x) {
  return p.cure_prob + (1.0 - p.cure_prob) * survival(p.event, x);
}

CureDraw sample_cure(const CureModelParams& p, Rng& rng) {
  const double u_cure = uniform_open01(rng);
  const double u_event = uniform_open01(rng);
  const double u_drop = uniform_open01(rng);
  CureDraw d;
  d.cured = u_cure < p.cure_prob;
  if (!d.cured) d.event_time = sample_from_uniform(p.event, u_event);
  d.dropout_time = sample_from_uniform(p.dropout, u_drop);
  return d;
}

std::size_t ParamLayout::size() const {
  return parameter_count(event) + (dropout_free ? parameter_count(dropout) : 0) + (cure_free ? 1 : 0);
}

namespace {

void push_family(const Family& f, std::vector<double>& out) {
  std::visit(Overloaded{[&](const Exponential& e) { out.push_back(std::log(e.rate)); },
                        [&](const Weibull& w) {
                          out.push_back(std::log(w.shape));
                          out.push_back(std::log(w.g));
                        },
                        [&](const LogNormal& l) {
                          out.push_back(l.meanlog);
                          out.push_back(std::log(l.sdlog));
                        }},
             f);
}

Family pull_family(FamilyKind k, std::span<const double> theta, std::size_t& i) {
  switch (k) {
    case FamilyKind::Exponential: return Exponential{std::exp(theta[i++])};
    case FamilyKind::Weibull: {
      const double shape = std::exp(theta[i++]);
      return Weibull{shape, std::exp(theta[i++])};
    }
    case FamilyKind::LogNormal: {
      const double m = theta[i++];
      return LogNormal{m, std::exp(theta[i++])};
    }
  }
  throw std::logic_error("unreachable family kind");
}

}  // namespace

std::vector<double> transform_to_unconstrained(const CureModelParams& p, const ParamLayout& layout) {
  if (kind_of(p.event) != layout.event || (layout.dropout_free && kind_of(p.dropout) != layout.dropout))
    throw std::invalid_argument("parameters do not match the layout's families");
  std::vector<double> theta;
  theta.reserve(layout.size());
  push_family(p.event, theta);
  if (layout.dropout_free) push_family(p.dropout, theta);
  if (layout.cure_free) {
    const double r = std::min(p.cure_prob, kMaxCureProb);
    theta.push_back(std::log(r) - std::log1p(-r));
  }
  return theta;
}

CureModelParams transform_from_unconstrained(std::span<const double> theta, const ParamLayout& layout,
                                             const CureModelParams& fixed) {
  if (theta.size() != layout.size()) throw std::invalid_argument("unconstrained vector has the wrong length");
  CureModelParams p = fixed;
  std::size_t i = 0;
  p.event = pull_family(layout.event, theta, i);
  if (layout.dropout_free) p.dropout = pull_family(layout.dropout, theta, i);
  if (layout.cure_free) {
    const double t = theta[i++];
    const double r = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
    p.cure_prob = std::min(r, kMaxCureProb);
  }
  return p;
}

std::vector<std::pair<std::string, double>> natural_parameters(const Family& f) {
  return std::visit(
      Overloaded{[](const Exponential& e) { return std::vector<std::pair<std::string, double>>{{"rate", e.rate}}; },
                 [](const Weibull& w) {
                   return std::vector<std::pair<std::string, double>>{{"shape", w.shape}, {"scale", w.scale()}};
                 },
                 [](const LogNormal& l) {
                   return std::vector<std::pair<std::string, double>>{{"meanlog", l.meanlog}, {"sdlog", l.sdlog}};
                 }},
      f);
}

}  // namespace evpred
