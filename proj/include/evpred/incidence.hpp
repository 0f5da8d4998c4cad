// Probability mass of "event before dropout" over time intervals, shared by
// the at-risk and ongoing-recruitment forecasts.
//
// Integrals of f_A(u) S_L(u) are evaluated after the substitution
// v = S_A(u), which turns them into integrals of the bounded function
// S_L(S_A^{-1}(v)) over a sub-interval of [0, 1]. This removes the
// u^(shape-1) singularity of Weibull densities with shape < 1 and keeps the
// far tail well conditioned. The exponential pairing uses closed forms.
#pragma once

#include <vector>

#include "evpred/distributions.hpp"
#include "evpred/quadrature.hpp"

namespace evpred {

class EventIncidence {
 public:
  explicit EventIncidence(const CureModelParams& params, const QuadratureTolerance& tol = {});

  const CureModelParams& params() const { return params_; }
  bool closed_form() const { return closed_form_; }

  /// int_lo^hi f_A(u) S_L(u) du / (S_A(base) S_L(base)), for base <= lo <= hi.
  double scaled_mass(double base, double lo, double hi) const;

  /// int_lo^hi f_A(u) S_L(u) du. `hi` may be +inf.
  double mass(double lo, double hi) const;

  /// int_lo^hi (hi - u) f_A(u) S_L(u) du, finite hi.
  double weighted_mass(double lo, double hi) const;

  /// r / S_A(z) + (1 - r): the normaliser of the conditional probability,
  /// after dividing through by S_A(z) S_L(z).
  double conditional_normaliser(double z) const;

  /// P(event in (z, z + x] before dropout | no event or dropout by z).
  double conditional(double x, double z) const;

  /// P(event by x before dropout) for a newly randomised patient.
  double unconditional(double x) const;

 private:
  CureModelParams params_;
  QuadratureTolerance tol_;
  bool closed_form_ = false;
  double mu_event_ = 0.0;
  double mu_total_ = 0.0;
};

/// Cumulative mass W(y) = int_0^y f_A S_L stored exactly at evenly spaced
/// knots; values between knots add one short integral from the knot below.
/// Not thread-safe while growing: call extend_to before parallel reads.
class CumulativeIncidenceTable {
 public:
  explicit CumulativeIncidenceTable(EventIncidence incidence, double knot_spacing = 1.0);

  void extend_to(double y);
  /// W(y); grows the table when y is beyond the last knot.
  double operator()(double y);
  /// Read-only lookup; y must be within the extended range.
  double at(double y) const;
  const EventIncidence& incidence() const { return inc_; }
  double horizon() const { return spacing_ * static_cast<double>(knots_.size() - 1); }

 private:
  EventIncidence inc_;
  double spacing_;
  std::vector<double> knots_;
};

}  // namespace evpred
