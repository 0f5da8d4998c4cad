// Parametric time-to-event families, the cure mixture built on them, and the
// bounded <-> unconstrained transforms used by the optimizer.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace evpred {

using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0, 1), fixed 53-bit construction so
/// sample streams do not depend on the standard library's distributions.
double uniform_open01(Rng& rng);

double normal_cdf(double x);
/// log(1 - Phi(x)), accurate far into the upper tail.
double log_normal_sf(double x);
double normal_quantile(double p);

struct Exponential {
  double rate = 1.0;  ///< mu >= 0; rate 0 means the time never occurs
};

/// Weibull in the g-parametrisation: S(x) = exp(-g x^shape), g = scale^-shape.
struct Weibull {
  double shape = 1.0;
  double g = 1.0;

  static Weibull from_scale(double shape, double scale);
  double scale() const;
};

struct LogNormal {
  double meanlog = 0.0;
  double sdlog = 1.0;
};

using Family = std::variant<Exponential, Weibull, LogNormal>;

enum class FamilyKind { Exponential, Weibull, LogNormal };

FamilyKind kind_of(const Family& f);
std::string_view family_name(FamilyKind k);
/// Accepts "Exponential", "Weibull", "LogNormal" (case-insensitive, also "log-normal").
FamilyKind parse_family_kind(std::string_view name);
std::size_t parameter_count(FamilyKind k);

/// Throws std::invalid_argument when a parameter violates its constraint.
void validate(const Family& f);

double log_pdf(const Family& f, double x);
double pdf(const Family& f, double x);
double log_survival(const Family& f, double x);
double survival(const Family& f, double x);
double cdf(const Family& f, double x);

/// Smallest x with log S(x) = log_s, for log_s in (-inf, 0]. Returns +inf
/// for log_s = -inf or when the time never occurs.
double inverse_log_survival(const Family& f, double log_s);

/// Inverse-CDF draw using S(x) = u, so cdf(sample_from_uniform(f, u)) = 1 - u.
double sample_from_uniform(const Family& f, double u);
double sample(const Family& f, Rng& rng);

struct CureModelSpec {
  FamilyKind event = FamilyKind::Exponential;
  FamilyKind dropout = FamilyKind::Exponential;
};

struct CureModelParams {
  Family event = Exponential{};
  Family dropout = Exponential{0.0};
  double cure_prob = 0.0;
};

void validate(const CureModelParams& p);

/// r + (1 - r) S_event(x).
double cure_survival(const CureModelParams& p, double x);
/// log(r + (1 - r) exp(log_s)) without underflow of exp(log_s) when r > 0.
double log_cure_mix(double r, double log_s);

struct CureDraw {
  bool cured = false;
  std::optional<double> event_time;
  double dropout_time = 0.0;  ///< +inf when the dropout hazard is zero
};
CureDraw sample_cure(const CureModelParams& p, Rng& rng);

/// Which natural parameters are free in an optimization.
struct ParamLayout {
  FamilyKind event = FamilyKind::Exponential;
  FamilyKind dropout = FamilyKind::Exponential;
  bool dropout_free = true;  ///< false: dropout fixed (no dropouts observed)
  bool cure_free = true;     ///< false: r pinned to its template value

  std::size_t size() const;
};

inline constexpr double kMaxCureProb = 1.0 - 1e-8;

/// Positive parameters map through log, meanlog is left as is, and r through
/// the logit. Order: event parameters, dropout parameters, cure.
std::vector<double> transform_to_unconstrained(const CureModelParams& p, const ParamLayout& layout);
/// Inverse of the above. Fixed components are copied from `fixed`. The
/// logistic image of r is capped at kMaxCureProb.
CureModelParams transform_from_unconstrained(std::span<const double> theta, const ParamLayout& layout,
                                             const CureModelParams& fixed);

/// Natural-scale parameter names and values for reports: an exponential
/// family reports {rate}, Weibull {shape, scale}, log-normal {meanlog, sdlog}.
std::vector<std::pair<std::string, double>> natural_parameters(const Family& f);

}  // namespace evpred
