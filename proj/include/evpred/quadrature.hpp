// Adaptive Simpson quadrature with Richardson correction.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace evpred {

struct QuadratureTolerance {
  double abs = 1e-10;
  double rel = 1e-8;
  int max_depth = 48;
  int initial_panels = 4;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  ///< sum of local |S2 - S1| / 15 estimates
  double target = 0.0;  ///< error budget the estimate is judged against
  bool converged = true;
  long evaluations = 0;
};

inline std::string format_error(double e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", e);
  return buf;
}

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error estimate " + format_error(achieved) + ")"),
        achieved_(achieved) {}
  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

namespace detail {

template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double eps, int depth,
                    QuadratureResult& acc) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  acc.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Leaves that hit the depth limit are kept; convergence is judged on the
  // summed error estimate, so a short jump near an endpoint does not fail.
  if (std::abs(delta) <= 15.0 * eps || depth <= 0 || !(m > a && b > m)) {
    acc.error += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, acc) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, acc);
}

}  // namespace detail

/// Integrates f over [a, b]. The stopping target is
/// max(tol.abs, tol.rel * |coarse estimate|), split across the initial panels.
template <class F>
QuadratureResult adaptive_simpson(F&& f, double a, double b, const QuadratureTolerance& tol = {}) {
  QuadratureResult acc;
  if (a == b) return acc;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  constexpr int kMaxPanels = 64;
  const int panels = std::clamp(tol.initial_panels, 1, kMaxPanels);
  const double h = (b - a) / panels;
  // Coarse composite Simpson to size the relative tolerance.
  double coarse = 0.0;
  double fprev = f(a);
  acc.evaluations = 1;
  struct Panel {
    double a, b, fa, fm, fb, whole;
  };
  Panel ps[kMaxPanels];
  for (int i = 0; i < panels; ++i) {
    const double pa = a + i * h;
    const double pb = (i + 1 == panels) ? b : a + (i + 1) * h;
    const double fm = f(0.5 * (pa + pb));
    const double fb = f(pb);
    acc.evaluations += 2;
    const double whole = (pb - pa) / 6.0 * (fprev + 4.0 * fm + fb);
    ps[i] = {pa, pb, fprev, fm, fb, whole};
    coarse += whole;
    fprev = fb;
  }
  const double target = std::max(tol.abs, tol.rel * std::abs(coarse)) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const Panel& p = ps[i];
    total += detail::simpson_step(f, p.a, p.b, p.fa, p.fm, p.fb, p.whole, target, tol.max_depth, acc);
  }
  acc.value = sign * total;
  acc.target = std::max(tol.abs, tol.rel * std::max(std::abs(total), std::abs(coarse)));
  acc.converged = std::isfinite(acc.value) && acc.error <= acc.target;
  return acc;
}

/// Same as adaptive_simpson but throws QuadratureError when the tolerance is
/// not met within the depth limit.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureTolerance& tol = {}) {
  const QuadratureResult r = adaptive_simpson(std::forward<F>(f), a, b, tol);
  if (!r.converged) throw QuadratureError("adaptive quadrature did not reach its tolerance", r.error);
  return r.value;
}

}  // namespace evpred
