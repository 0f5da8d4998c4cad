#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evpred/atrisk_forecast.hpp"
#include "test_util.hpp"

using namespace evpred;
using evpred::testing::uniform;

namespace {
std::vector<double> random_z(std::size_t n, std::uint64_t seed, double hi = 300.0) {
  std::mt19937_64 g(seed);
  std::vector<double> z(n);
  for (auto& v : z) v = uniform(g, 0.0, hi);
  return z;
}

// All 2^n outcomes.
std::vector<double> enumerate_pmf(const std::vector<double>& p) {
  const std::size_t n = p.size();
  std::vector<double> pmf(n + 1, 0.0);
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    double prob = 1.0;
    int k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) {
        prob *= p[i];
        ++k;
      } else {
        prob *= 1.0 - p[i];
      }
    }
    pmf[k] += prob;
  }
  return pmf;
}
}  // namespace

TEST(ConditionalProbability, ZeroHorizon) {
  for (const auto& p : {evpred::testing::shape08_truth(), CureModelParams{Exponential{0.01}, Exponential{0.001}, 0.3}})
    for (double z : {0.0, 10.0, 300.0}) EXPECT_EQ(p_event_given_atrisk(p, 0.0, z), 0.0);
}

TEST(ConditionalProbability, ExponentialMemorylessWithoutCure) {
  const CureModelParams p{Exponential{0.004}, Exponential{0.001}, 0.0};
  const double mu = 0.005;
  for (double x : {10.0, 100.0, 1000.0}) {
    const double expect = 0.004 / mu * (1 - std::exp(-mu * x));
    for (double z : {0.0, 50.0, 500.0}) EXPECT_NEAR(p_event_given_atrisk(p, x, z), expect, 1e-14);
  }
}

TEST(ConditionalProbability, ExponentialClosedFormMatchesQuadrature) {
  std::mt19937_64 g(31);
  for (int i = 0; i < 100; ++i) {
    const auto p = evpred::testing::random_exponential_params(g);
    const double x = uniform(g, 0.0, 800.0), z = uniform(g, 0.0, 600.0);
    EXPECT_NEAR(p_event_given_atrisk(p, x, z), evpred::testing::oracle_p_conditional(p, x, z), 1e-8);
  }
}

TEST(ConditionalProbability, GeneralFamiliesMatchQuadrature) {
  std::mt19937_64 g(32);
  const std::vector<CureModelParams> models{evpred::testing::shape08_truth(), evpred::testing::shape12_truth(),
                                            {LogNormal{5.0, 1.0}, Weibull::from_scale(0.9, 3000), 0.3},
                                            {Weibull::from_scale(0.5, 50), LogNormal{8.0, 2.0}, 0.1}};
  for (const auto& p : models)
    for (int i = 0; i < 20; ++i) {
      const double x = uniform(g, 0.0, 800.0), z = uniform(g, 0.0, 600.0);
      EXPECT_NEAR(p_event_given_atrisk(p, x, z), evpred::testing::oracle_p_conditional(p, x, z), 1e-8);
    }
}

TEST(ConditionalProbability, MonteCarloShape08) {
  const auto p = evpred::testing::shape08_truth();
  Rng rng(2024);
  long kept = 0, hits = 0;
  for (int i = 0; i < 1000000; ++i) {
    const auto d = sample_cure(p, rng);
    const double ev = d.event_time ? *d.event_time : std::numeric_limits<double>::infinity();
    if (std::min(ev, d.dropout_time) <= 30.0) continue;
    ++kept;
    hits += ev <= 120.0 && ev < d.dropout_time;
  }
  const double freq = double(hits) / kept;
  const double se = std::sqrt(freq * (1 - freq) / kept);
  EXPECT_NEAR(p_event_given_atrisk(p, 90.0, 30.0), freq, 3 * se);
}

TEST(ConditionalProbability, MonotoneAndBounded) {
  const auto p = evpred::testing::shape12_truth();
  for (double z : {0.0, 40.0, 200.0}) {
    double prev = 0.0;
    for (double x = 0; x <= 5000; x += 50) {
      const double v = p_event_given_atrisk(p, x, z);
      EXPECT_GE(v, prev - 1e-14);
      prev = v;
    }
    const double sa = survival(p.event, z);
    const double bound = (1 - p.cure_prob) * sa / (p.cure_prob + (1 - p.cure_prob) * sa);
    EXPECT_LE(prev, bound + 1e-12);
  }
}

TEST(ConditionalProbability, ExponentialCureDecreasesWithExposure) {
  const CureModelParams p{Exponential{0.01}, Exponential{0.001}, 0.3};
  double prev = 1.0;
  for (double z = 0; z <= 600; z += 25) {
    const double v = p_event_given_atrisk(p, 100, z);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(AtRiskDistribution, EmptyGroup) {
  const auto d = atrisk_distribution(evpred::testing::shape08_truth(), std::vector<double>{}, 100.0);
  EXPECT_EQ(d.mean, 0.0);
  EXPECT_EQ(d.variance, 0.0);
  ASSERT_TRUE(d.exact_pmf);
  ASSERT_EQ(d.exact_pmf->size(), 1u);
  EXPECT_EQ((*d.exact_pmf)[0], 1.0);
}

TEST(AtRiskDistribution, BinomialReduction) {
  const CureModelParams p{Exponential{0.003}, Exponential{0.001}, 0.0};
  const std::vector<double> z(40, 77.0);
  const auto d = atrisk_distribution(p, z, 150.0);
  const double q = 0.003 / 0.004 * (1 - std::exp(-0.004 * 150.0));
  ASSERT_TRUE(d.exact_pmf);
  for (int k = 0; k <= 40; ++k) {
    const double logc = std::lgamma(41.0) - std::lgamma(k + 1.0) - std::lgamma(41.0 - k);
    const double b = std::exp(logc + k * std::log(q) + (40 - k) * std::log1p(-q));
    EXPECT_NEAR((*d.exact_pmf)[k], b, 1e-10);
  }
}

TEST(AtRiskDistribution, EnumerationOracle) {
  const auto p = evpred::testing::shape08_truth();
  for (std::size_t n = 1; n <= 15; ++n) {
    const auto z = random_z(n, 40 + n);
    const auto d = atrisk_distribution(p, z, 180.0);
    ASSERT_TRUE(d.exact_pmf);
    const auto e = enumerate_pmf(d.probs);
    for (std::size_t k = 0; k <= n; ++k) EXPECT_NEAR((*d.exact_pmf)[k], e[k], 1e-12);
  }
}

TEST(AtRiskDistribution, MomentsOfExactPmf) {
  const auto d = atrisk_distribution(evpred::testing::shape12_truth(), random_z(400, 5), 120.0);
  ASSERT_TRUE(d.exact_pmf);
  double s = 0, m = 0, m2 = 0, sp = 0, sv = 0;
  for (std::size_t k = 0; k < d.exact_pmf->size(); ++k) {
    const double w = (*d.exact_pmf)[k];
    s += w;
    m += k * w;
    m2 += double(k) * k * w;
  }
  for (double q : d.probs) {
    EXPECT_GE(q, 0.0);
    EXPECT_LE(q, 1.0);
    sp += q;
    sv += q * (1 - q);
  }
  EXPECT_NEAR(s, 1.0, 1e-10);
  EXPECT_NEAR(m, d.mean, 1e-10 * (1 + d.mean));
  EXPECT_NEAR(d.mean, sp, 1e-10 * (1 + sp));
  EXPECT_NEAR(d.variance, sv, 1e-10 * (1 + sv));
  EXPECT_NEAR(m2 - m * m, d.variance, 1e-8 * (1 + sv));
}

TEST(AtRiskDistribution, ThresholdOmitsExactPmf) {
  const auto z = random_z(50, 6);
  EXPECT_FALSE(atrisk_distribution(evpred::testing::shape08_truth(), z, 100.0, 49).exact_pmf);
  EXPECT_TRUE(atrisk_distribution(evpred::testing::shape08_truth(), z, 100.0, 50).exact_pmf);
}

TEST(NormalInterval, Arithmetic) {
  const auto iv = normal_interval(100.0, 100.0, 0.10);
  EXPECT_NEAR(iv.lower, 83.55, 5e-3);
  EXPECT_NEAR(iv.upper, 116.45, 5e-3);
  EXPECT_NEAR(iv.upper - 100.0, 10 * 1.6448536269514722, 1e-9);
  const auto z = normal_interval(12.5, 0.0, 0.10);
  EXPECT_EQ(z.lower, 12.5);
  EXPECT_EQ(z.upper, 12.5);
  const auto c = normal_interval(2.0, 4.0, 0.10, 3.0);
  EXPECT_EQ(c.lower, 0.0);
  EXPECT_EQ(c.upper, 3.0);
}

TEST(NormalInterval, CoverageOfExactMass) {
  std::mt19937_64 g(7);
  for (double pbar : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    std::vector<double> probs(100);
    for (auto& q : probs) q = std::clamp(pbar + uniform(g, -0.15, 0.15), 0.01, 0.99);
    AtRiskPrediction pred;
    pred.probs = probs;
    const auto mom = kernels::bernoulli_moments(probs);
    pred.mean = mom.mean;
    pred.variance = mom.variance;
    const auto pmf = kernels::poisson_binomial_pmf(probs);
    const auto iv = quantiles_normal(pred, 0.10);
    double mass = 0;
    for (std::size_t k = 0; k < pmf.size(); ++k)
      if (k >= iv.lower && k <= iv.upper) mass += pmf[k];
    EXPECT_GE(mass, 0.85) << pbar;
    EXPECT_LE(mass, 0.95) << pbar;
  }
}

TEST(ExactInterval, EqualTailed) {
  const std::vector<double> pmf{0.04, 0.06, 0.4, 0.4, 0.06, 0.04};
  const auto iv = exact_interval(pmf, 0.10);
  EXPECT_EQ(iv.lower, 1.0);
  EXPECT_EQ(iv.upper, 4.0);
  EXPECT_NEAR(upper_tail(pmf, 4), 0.10, 1e-15);
  EXPECT_EQ(upper_tail(pmf, 0), 1.0);
  EXPECT_EQ(upper_tail(pmf, 6), 0.0);
}

TEST(TimeToTarget, TargetAlreadyMet) {
  const auto f = time_to_target(evpred::testing::shape08_truth(), random_z(30, 8), 0);
  EXPECT_EQ(f.milestone.status, MilestoneStatus::Reached);
  EXPECT_EQ(*f.milestone.mean_day, 0.0);
  EXPECT_EQ(*f.milestone.lower_day, 0.0);
  EXPECT_EQ(*f.milestone.upper_day, 0.0);
}

TEST(TimeToTarget, InvertsExponentialMeanCurve) {
  const double ma = 0.004, ml = 0.001, mu = ma + ml;
  const CureModelParams p{Exponential{ma}, Exponential{ml}, 0.0};
  const std::vector<double> z(2000, 50.0);
  for (long k : {300L, 700L, 1200L}) {
    // n (ma/mu)(1 - e^{-mu t}) = k
    const double tstar = -std::log(1 - k * mu / (2000 * ma)) / mu;
    CurveOptions opt;
    opt.distribution = false;
    const auto f = time_to_target(p, z, k, opt);
    ASSERT_EQ(f.milestone.status, MilestoneStatus::Predicted);
    EXPECT_GE(*f.milestone.mean_day, tstar - 1e-9);
    EXPECT_LT(*f.milestone.mean_day, tstar + 1.0);
    EXPECT_LE(*f.milestone.lower_day, *f.milestone.mean_day);
    EXPECT_GE(*f.milestone.upper_day, *f.milestone.mean_day);
  }
}

TEST(TimeToTarget, CureCeilingUnreachable) {
  const CureModelParams p{Exponential{0.01}, Exponential{0.0}, 0.9};
  const auto z = random_z(100, 9);
  const auto f = time_to_target(p, z, 60);
  EXPECT_EQ(f.milestone.status, MilestoneStatus::Unreachable);
  EXPECT_LT(f.milestone.asymptotic_mean, 60.0);
  EXPECT_FALSE(f.milestone.mean_day);
}

TEST(TimeToTarget, DistributionIsCdf) {
  const auto p = evpred::testing::shape08_truth();
  const auto z = random_z(300, 10);
  const long k = 80;
  CurveOptions opt;
  opt.horizon = 4000;
  const auto f = time_to_target(p, z, k, opt);
  ASSERT_EQ(f.milestone.status, MilestoneStatus::Predicted);
  double prev = 0;
  for (const auto& pt : f.curve) {
    ASSERT_FALSE(std::isnan(pt.prob_reached));
    EXPECT_GE(pt.prob_reached, prev - 1e-12);
    prev = pt.prob_reached;
  }
  const auto lim = atrisk_distribution(p, z, 1e7);
  EXPECT_LE(prev, upper_tail(*lim.exact_pmf, k) + 1e-9);
  ASSERT_TRUE(f.milestone.median_day);
  // median is where the CDF crosses 1/2
  for (const auto& pt : f.curve)
    if (pt.day < *f.milestone.median_day) {
      EXPECT_LT(pt.prob_reached, 0.5);
    }
}

TEST(TimeToTarget, BeyondHorizon) {
  const CureModelParams p{Exponential{0.0001}, Exponential{0.0}, 0.0};
  CurveOptions opt;
  opt.horizon = 50;
  const auto f = time_to_target(p, std::vector<double>(100, 10.0), 90, opt);
  EXPECT_EQ(f.milestone.status, MilestoneStatus::BeyondHorizon);
}

TEST(ProbabilityOfSuccess, Edges) {
  const auto p = evpred::testing::shape08_truth();
  const auto z = random_z(15, 11);
  EXPECT_EQ(probability_of_success(p, z, 100.0, 0), 1.0);
  EXPECT_EQ(probability_of_success(p, z, 100.0, 16), 0.0);
}

TEST(ProbabilityOfSuccess, ExactAgainstEnumeration) {
  const auto p = evpred::testing::shape12_truth();
  const auto z = random_z(15, 12);
  const auto d = atrisk_distribution(p, z, 200.0);
  const auto e = enumerate_pmf(d.probs);
  for (long k = 1; k <= 15; ++k) {
    double tail = 0;
    for (long j = k; j <= 15; ++j) tail += e[j];
    EXPECT_NEAR(probability_of_success(p, z, 200.0, k), tail, 1e-12);
    if (tail > 0.05 && tail < 0.95) {
      EXPECT_NEAR(probability_of_success_normal(d.mean, d.variance, k), tail, 0.05) << k;
    }
  }
}
