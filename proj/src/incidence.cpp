#include "evpred/incidence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace evpred {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

EventIncidence::EventIncidence(const CureModelParams& params, const QuadratureTolerance& tol)
    : params_(params), tol_(tol) {
  validate(params_);
  const auto* ea = std::get_if<Exponential>(&params_.event);
  const auto* el = std::get_if<Exponential>(&params_.dropout);
  if (ea && el) {
    closed_form_ = true;
    mu_event_ = ea->rate;
    mu_total_ = ea->rate + el->rate;
  }
}

double EventIncidence::scaled_mass(double base, double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  if (closed_form_) {
    if (mu_total_ == 0.0) return 0.0;
    const double head = std::exp(-mu_total_ * (lo - base));
    const double tail = std::isinf(hi) ? 1.0 : -std::expm1(-mu_total_ * (hi - lo));
    return mu_event_ / mu_total_ * head * tail;
  }
  const Family& ev = params_.event;
  const Family& dr = params_.dropout;
  const double log_sa_base = log_survival(ev, base);
  const double log_sl_base = log_survival(dr, base);
  const double w_top = std::exp(log_survival(ev, lo) - log_sa_base);
  const double w_bottom = std::exp(log_survival(ev, hi) - log_sa_base);
  if (!(w_top > w_bottom)) return 0.0;
  auto integrand = [&](double w) {
    if (w <= 0.0) {
      const double ls = log_survival(dr, kInf);
      return std::exp(ls - log_sl_base);
    }
    const double u = inverse_log_survival(ev, std::min(0.0, log_sa_base + std::log(w)));
    return std::exp(log_survival(dr, u) - log_sl_base);
  };
  return integrate(integrand, w_bottom, w_top, tol_);
}

double EventIncidence::mass(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  const double scale = std::exp(log_survival(params_.event, lo) + log_survival(params_.dropout, lo));
  if (scale == 0.0) return 0.0;
  return scale * scaled_mass(lo, lo, hi);
}

double EventIncidence::weighted_mass(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  if (std::isinf(hi)) throw std::invalid_argument("weighted_mass needs a finite upper limit");
  if (closed_form_) {
    if (mu_total_ == 0.0) return 0.0;
    const double len = hi - lo;
    const double m = mu_total_;
    const double ml = m * len;
    // int_0^L (L - t) e^{-m t} dt = (mL + expm1(-mL)) / m^2; series for small mL.
    double inner = 0.0;
    if (ml < 1e-4)
      inner = len * len * (0.5 - ml / 6.0 + ml * ml / 24.0);
    else
      inner = (ml + std::expm1(-ml)) / (m * m);
    return mu_event_ * std::exp(-m * lo) * inner;
  }
  const Family& ev = params_.event;
  const Family& dr = params_.dropout;
  const double log_sa_base = log_survival(ev, lo);
  const double log_sl_base = log_survival(dr, lo);
  const double scale = std::exp(log_sa_base + log_sl_base);
  if (scale == 0.0) return 0.0;
  const double w_bottom = std::exp(log_survival(ev, hi) - log_sa_base);
  if (!(1.0 > w_bottom)) return 0.0;
  auto integrand = [&](double w) {
    if (w <= 0.0) return 0.0;
    const double u = inverse_log_survival(ev, std::min(0.0, log_sa_base + std::log(w)));
    if (!(u < hi)) return 0.0;
    return (hi - u) * std::exp(log_survival(dr, u) - log_sl_base);
  };
  return scale * integrate(integrand, w_bottom, 1.0, tol_);
}

double EventIncidence::conditional_normaliser(double z) const {
  const double r = params_.cure_prob;
  if (r <= 0.0) return 1.0;
  return r * std::exp(-log_survival(params_.event, z)) + (1.0 - r);
}

double EventIncidence::conditional(double x, double z) const {
  if (!(x > 0.0)) return 0.0;
  if (z < 0.0) throw std::invalid_argument("exposure must be >= 0");
  const double r = params_.cure_prob;
  if (r >= 1.0) return 0.0;
  const double norm = conditional_normaliser(z);
  if (std::isinf(norm)) return 0.0;
  return (1.0 - r) * scaled_mass(z, z, z + x) / norm;
}

double EventIncidence::unconditional(double x) const { return conditional(x, 0.0); }

CumulativeIncidenceTable::CumulativeIncidenceTable(EventIncidence incidence, double knot_spacing)
    : inc_(std::move(incidence)), spacing_(knot_spacing), knots_{0.0} {
  if (!(knot_spacing > 0.0)) throw std::invalid_argument("knot spacing must be positive");
}

void CumulativeIncidenceTable::extend_to(double y) {
  while (horizon() < y) {
    const double a = horizon();
    knots_.push_back(knots_.back() + inc_.mass(a, a + spacing_));
  }
}

double CumulativeIncidenceTable::operator()(double y) {
  extend_to(y);
  return at(y);
}

double CumulativeIncidenceTable::at(double y) const {
  if (!(y > 0.0)) return 0.0;
  const auto last = knots_.size() - 1;
  auto k = static_cast<std::size_t>(std::floor(y / spacing_));
  if (k > last) k = last;
  const double a = spacing_ * static_cast<double>(k);
  return knots_[k] + inc_.mass(a, y);
}

}  // namespace evpred
