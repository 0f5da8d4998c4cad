#include "evpred/atrisk_forecast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evpred/incidence.hpp"

namespace evpred {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kBlock = 64;
}  // namespace

double p_event_given_atrisk(const CureModelParams& params, double x, double z) {
  if (x < 0.0 || z < 0.0) throw std::invalid_argument("x and z must be >= 0");
  return EventIncidence(params).conditional(x, z);
}

AtRiskPrediction atrisk_distribution(const CureModelParams& params, std::span<const double> exposures, double t,
                                     std::size_t exact_threshold, kernels::Execution exec) {
  if (t < 0.0) throw std::invalid_argument("horizon must be >= 0");
  const EventIncidence inc(params);
  AtRiskPrediction out;
  out.probs = kernels::atrisk_probabilities(inc, exposures, t, exec);
  const auto m = kernels::bernoulli_moments(out.probs);
  out.mean = m.mean;
  out.variance = m.variance;
  if (exposures.size() <= exact_threshold) out.exact_pmf = kernels::poisson_binomial_pmf(out.probs);
  return out;
}

Interval normal_interval(double mean, double variance, double delta, double cap) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  if (!(variance > 0.0)) return {mean, mean};
  const double half = normal_quantile(1.0 - delta / 2.0) * std::sqrt(variance);
  return {std::clamp(mean - half, 0.0, cap), std::clamp(mean + half, 0.0, cap)};
}

Interval exact_interval(std::span<const double> pmf, double delta) {
  if (pmf.empty()) return {0.0, 0.0};
  const double lo_p = delta / 2.0;
  const double hi_p = 1.0 - delta / 2.0;
  double cum = 0.0;
  std::optional<double> lo;
  std::optional<double> hi;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    cum += pmf[k];
    // Small slack so rounding in the running sum does not skip a quantile.
    if (!lo && cum >= lo_p - 1e-12) lo = static_cast<double>(k);
    if (!hi && cum >= hi_p - 1e-12) {
      hi = static_cast<double>(k);
      break;
    }
  }
  const double last = static_cast<double>(pmf.size() - 1);
  return {lo.value_or(last), hi.value_or(last)};
}

double upper_tail(std::span<const double> pmf, long k) {
  if (k <= 0) return 1.0;
  if (static_cast<std::size_t>(k) >= pmf.size()) return 0.0;
  double s = 0.0;
  for (auto i = pmf.size(); i-- > static_cast<std::size_t>(k);) s += pmf[i];
  return std::min(1.0, s);
}

std::string_view to_string(MilestoneStatus s) {
  switch (s) {
    case MilestoneStatus::Reached: return "reached";
    case MilestoneStatus::Predicted: return "predicted";
    case MilestoneStatus::Unreachable: return "unreachable";
    case MilestoneStatus::BeyondHorizon: return "beyond_horizon";
  }
  return "?";
}

double default_horizon(double cutoff_day) { return std::max(365.0, 20.0 * cutoff_day); }

double probability_of_success_normal(double mean, double variance, long remaining_target) {
  if (remaining_target <= 0) return 1.0;
  const double k = static_cast<double>(remaining_target);
  if (!(variance > 0.0)) return mean >= k ? 1.0 : 0.0;
  // half-unit continuity correction for the integer count
  return normal_cdf((mean - k + 0.5) / std::sqrt(variance));
}

double probability_of_success(const CureModelParams& params, std::span<const double> exposures, double planned_days,
                              long remaining_target, std::size_t exact_threshold) {
  if (planned_days < 0.0) throw std::invalid_argument("planned time must be >= 0");
  if (remaining_target <= 0) return 1.0;
  if (static_cast<std::size_t>(remaining_target) > exposures.size()) return 0.0;
  const auto pred = atrisk_distribution(params, exposures, planned_days, exact_threshold);
  if (pred.exact_pmf) return upper_tail(*pred.exact_pmf, remaining_target);
  return probability_of_success_normal(pred.mean, pred.variance, remaining_target);
}

EventForecast forecast_events(const CureModelParams& params, std::span<const double> exposures, long remaining_target,
                              const CurveOptions& opt, const ExtraComponent* extra) {
  if (!(opt.grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (!(opt.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  EventForecast out;
  Milestone& ms = out.milestone;
  const EventIncidence inc(params);
  const std::size_t n = exposures.size();

  {
    const auto ceiling = kernels::atrisk_probabilities(inc, exposures, kInf, opt.exec);
    ms.asymptotic_mean = kernels::pairwise_sum(ceiling) + (extra ? extra->asymptotic_mean : 0.0);
  }
  if (remaining_target <= 0) {
    ms.status = MilestoneStatus::Reached;
    ms.mean_day = ms.lower_day = ms.upper_day = ms.median_day = 0.0;
    return out;
  }
  const double target = static_cast<double>(remaining_target);
  ms.status = ms.asymptotic_mean < target ? MilestoneStatus::Unreachable : MilestoneStatus::Predicted;

  const bool use_exact = extra == nullptr && n <= opt.exact_threshold;
  const double cap = extra ? kInf : static_cast<double>(n);
  const auto steps = static_cast<std::size_t>(std::floor(opt.horizon / opt.grid_step + 1e-9));

  kernels::AtRiskStepper stepper(inc, exposures);
  std::vector<double> grid;
  std::vector<double> probs;
  std::vector<double> extra_mean;
  std::vector<double> extra_var;
  auto done = [&] {
    return ms.mean_day && ms.lower_day && ms.upper_day && (!opt.distribution || ms.median_day);
  };

  for (std::size_t start = 1; start <= steps && !done(); start += kBlock) {
    const std::size_t len = std::min(kBlock, steps - start + 1);
    grid.resize(len);
    for (std::size_t k = 0; k < len; ++k) grid[k] = opt.grid_step * static_cast<double>(start + k);
    probs.assign(len * n, 0.0);
    stepper.advance(grid, probs, opt.exec);
    extra_mean.assign(len, 0.0);
    extra_var.assign(len, 0.0);
    if (extra) extra->moments(grid, extra_mean, extra_var);

    for (std::size_t k = 0; k < len && !done(); ++k) {
      const std::span<const double> pk(probs.data() + k * n, n);
      const auto m = kernels::bernoulli_moments(pk);
      EventCurvePoint pt;
      pt.day = grid[k];
      pt.atrisk_mean = m.mean;
      pt.atrisk_var = m.variance;
      pt.newrecruit_mean = extra_mean[k];
      pt.newrecruit_var = extra_var[k];
      pt.mean = m.mean + extra_mean[k];
      pt.variance = m.variance + extra_var[k];
      const auto band = normal_interval(pt.mean, pt.variance, opt.delta, cap);
      pt.lower = band.lower;
      pt.upper = band.upper;
      if (use_exact) {
        const auto pmf = kernels::poisson_binomial_pmf(pk);
        const auto ex = exact_interval(pmf, opt.delta);
        pt.exact_lower = ex.lower;
        pt.exact_upper = ex.upper;
        if (opt.distribution) pt.prob_reached = upper_tail(pmf, remaining_target);
      } else if (opt.distribution) {
        pt.prob_reached = probability_of_success_normal(pt.mean, pt.variance, remaining_target);
      }
      if (!ms.mean_day && pt.mean >= target) ms.mean_day = pt.day;
      if (!ms.lower_day && pt.upper >= target) ms.lower_day = pt.day;
      if (!ms.upper_day && pt.lower >= target) ms.upper_day = pt.day;
      if (opt.distribution && !ms.median_day && pt.prob_reached >= 0.5) ms.median_day = pt.day;
      out.curve.push_back(pt);
    }
  }
  if (ms.status == MilestoneStatus::Predicted && !ms.mean_day) ms.status = MilestoneStatus::BeyondHorizon;
  return out;
}

}  // namespace evpred
