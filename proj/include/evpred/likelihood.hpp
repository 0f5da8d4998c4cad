// Cure-with-dropout log-likelihood, maximum likelihood fitting and
// information criteria.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "evpred/distributions.hpp"
#include "evpred/domain.hpp"
#include "evpred/optimize.hpp"

namespace evpred {

/// Exposure times split by group, with logs precomputed for the optimizer.
class ExposureData {
 public:
  ExposureData(std::vector<double> event, std::vector<double> atrisk, std::vector<double> dropout);
  explicit ExposureData(const TrialSnapshot& s);

  const std::vector<double>& event() const { return x_; }
  const std::vector<double>& atrisk() const { return z_; }
  const std::vector<double>& dropout() const { return y_; }
  const std::vector<double>& log_event() const { return lx_; }
  const std::vector<double>& log_atrisk() const { return lz_; }
  const std::vector<double>& log_dropout() const { return ly_; }

  std::size_t n_event() const { return x_.size(); }
  std::size_t n_atrisk() const { return z_.size(); }
  std::size_t n_dropout() const { return y_.size(); }
  std::size_t total() const { return x_.size() + y_.size() + z_.size(); }
  double sum_event() const { return sum_event_; }  ///< Sigma_A
  double sum_all() const { return sum_all_; }      ///< Sigma_1

 private:
  std::vector<double> x_, z_, y_;
  std::vector<double> lx_, lz_, ly_;
  double sum_event_ = 0.0;
  double sum_all_ = 0.0;
};

/// General log-likelihood for any pairing of event and dropout families.
/// Returns -inf when any term is log(0) or undefined.
double loglik_general(const CureModelParams& params, const ExposureData& data);

/// Exponential-exponential log-likelihood with mu_L = n_L / Sigma_1 profiled
/// out. With no dropouts the dropout terms are omitted.
double loglik_exponential_profiled(double mu_event, double cure_prob, const ExposureData& data);

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  std::vector<double> cure_starts{0.1, 0.3, 0.5, 0.7, 0.9};
  NelderMeadOptions optimizer{};
  bool parallel_restarts = true;
};

struct CureModelFit {
  CureModelSpec spec;
  bool with_cure = true;
  CureModelParams params;
  double loglik = 0.0;
  int n_params = 0;
  bool converged = false;
  int n_restarts_used = 0;
  int best_restart = 0;
};

/// Maximizes the log-likelihood over unconstrained coordinates with a
/// Nelder-Mead multi-start over the initial cure probability. Without cure r
/// is pinned at 0. Without dropouts the dropout family is fixed at rate 0.
/// Throws InsufficientData when there are no events, InputError when a zero
/// exposure makes a non-exponential density undefined.
CureModelFit fit(const CureModelSpec& spec, const ExposureData& data, bool with_cure, const FitOptions& opt = {});
inline CureModelFit fit(const CureModelSpec& spec, const TrialSnapshot& s, bool with_cure, const FitOptions& opt = {}) {
  return fit(spec, ExposureData(s), with_cure, opt);
}

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

InformationCriteria information_criteria(double loglik, int n_params, std::size_t n_patients);
inline InformationCriteria information_criteria(const CureModelFit& f, std::size_t n_patients) {
  return information_criteria(f.loglik, f.n_params, n_patients);
}

/// "Exponential cure", "Weibull (A) and exponential (L) cure", ...
std::string model_name(const CureModelSpec& spec, bool with_cure);

}  // namespace evpred
