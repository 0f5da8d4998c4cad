#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evpred/diagnostics.hpp"
#include "test_util.hpp"

using namespace evpred;

namespace {
PatientRecord rec(double t, Group g) { return {t, g, 0.0}; }

std::vector<PatientRecord> to_records(const evpred::testing::GroupTimes& g) {
  std::vector<PatientRecord> out;
  for (double v : g.x) out.push_back(rec(v, Group::EventA));
  for (double v : g.z) out.push_back(rec(v, Group::AtRiskO));
  for (double v : g.y) out.push_back(rec(v, Group::DropoutL));
  return out;
}
}  // namespace

TEST(KaplanMeier, NoEventsIsFlat) {
  const auto km = kaplan_meier({rec(3, Group::AtRiskO), rec(5, Group::DropoutL)});
  EXPECT_TRUE(km.times.empty());
  EXPECT_EQ(km.at(0), 1.0);
  EXPECT_EQ(km.at(100), 1.0);
  EXPECT_EQ(km.max_time, 5.0);
}

TEST(KaplanMeier, ThreeEvents) {
  const auto km = kaplan_meier({rec(2, Group::EventA), rec(1, Group::EventA), rec(3, Group::EventA)});
  ASSERT_EQ(km.times, (std::vector<double>{1, 2, 3}));
  EXPECT_NEAR(km.survival[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(km.survival[1], 1.0 / 3, 1e-15);
  EXPECT_EQ(km.survival[2], 0.0);
  EXPECT_EQ(km.at(0.999), 1.0);
  EXPECT_NEAR(km.at(1.0), 2.0 / 3, 1e-15);
  EXPECT_NEAR(km.at(2.5), 1.0 / 3, 1e-15);
}

TEST(KaplanMeier, HandTableWithCensoring) {
  // 2 event, 3 censored, 4 event, 4 censored (ties: events first), 6 event
  const auto km = kaplan_meier({rec(2, Group::EventA), rec(3, Group::AtRiskO), rec(4, Group::EventA),
                                rec(4, Group::DropoutL), rec(6, Group::EventA)});
  ASSERT_EQ(km.times, (std::vector<double>{2, 4, 6}));
  EXPECT_EQ(km.at_risk, (std::vector<long>{5, 3, 1}));
  EXPECT_EQ(km.events, (std::vector<long>{1, 1, 1}));
  EXPECT_NEAR(km.survival[0], 0.8, 1e-15);
  EXPECT_NEAR(km.survival[1], 0.8 * 2 / 3, 1e-15);
  EXPECT_EQ(km.survival[2], 0.0);
  // log(-log) band at 90%
  const double z = 1.6448536269514722;
  const double g1 = 1.0 / (5 * 4), g2 = g1 + 1.0 / (3 * 2);
  const double s1 = 0.8, s2 = 0.8 * 2 / 3;
  const double se1 = std::sqrt(g1) / std::abs(std::log(s1)), se2 = std::sqrt(g2) / std::abs(std::log(s2));
  EXPECT_NEAR(km.lower[0], std::pow(s1, std::exp(z * se1)), 1e-12);
  EXPECT_NEAR(km.upper[0], std::pow(s1, std::exp(-z * se1)), 1e-12);
  EXPECT_NEAR(km.lower[1], std::pow(s2, std::exp(z * se2)), 1e-12);
  EXPECT_NEAR(km.upper[1], std::pow(s2, std::exp(-z * se2)), 1e-12);
}

TEST(KaplanMeier, DropoutEndpointSwapsRoles) {
  const std::vector<PatientRecord> p{rec(2, Group::EventA), rec(3, Group::DropoutL), rec(5, Group::AtRiskO),
                                     rec(7, Group::DropoutL)};
  const auto km = kaplan_meier(p, 0.9, KmEndpoint::Dropout);
  ASSERT_EQ(km.times, (std::vector<double>{3, 7}));
  EXPECT_NEAR(km.survival[0], 2.0 / 3, 1e-15);
  EXPECT_EQ(km.survival[1], 0.0);
}

TEST(KaplanMeier, NonIncreasingAndEqualsEcdfWithoutCensoring) {
  std::mt19937_64 g(3);
  std::vector<PatientRecord> p;
  std::vector<double> t;
  for (int i = 0; i < 500; ++i) {
    t.push_back(std::round(std::exponential_distribution<>(0.05)(g)));
    p.push_back(rec(t.back(), Group::EventA));
  }
  const auto km = kaplan_meier(p);
  for (std::size_t i = 1; i < km.survival.size(); ++i) EXPECT_LE(km.survival[i], km.survival[i - 1]);
  for (double x : {0.0, 3.0, 10.0, 40.0}) {
    const double ecdf = double(std::count_if(t.begin(), t.end(), [&](double v) { return v <= x; })) / t.size();
    EXPECT_NEAR(km.at(x), 1 - ecdf, 1e-12);
  }
}

TEST(Overlay, ExponentialFitConvergesToKm) {
  std::mt19937_64 g(4);
  std::vector<double> x(10000);
  for (auto& v : x) v = std::exponential_distribution<>(0.01)(g);
  std::vector<PatientRecord> p;
  for (double v : x) p.push_back(rec(v, Group::EventA));
  const auto f = fit({FamilyKind::Exponential, FamilyKind::Exponential}, ExposureData(x, {}, {}), false);
  const auto km = kaplan_meier(p);
  EXPECT_LT(sup_distance(km, f.params), 0.03);
  const auto ov = overlay({f, f}, km);
  ASSERT_EQ(ov.series.size(), 2u);
  EXPECT_EQ(ov.series[0].values, ov.series[1].values);
  EXPECT_EQ(ov.series[0].sup_distance, ov.series[1].sup_distance);
  EXPECT_EQ(ov.grid.front(), 0.0);
  EXPECT_EQ(ov.grid.size(), ov.km.size());
}

TEST(Overlay, SupDistanceOracle) {
  const auto data = evpred::testing::simulate_groups(evpred::testing::shape08_truth(), 300, 180, 400, 5);
  const auto km = kaplan_meier(to_records(data));
  const auto p = evpred::testing::shape08_truth();
  double d = 0;
  for (std::size_t j = 0; j < km.times.size(); ++j) {
    const double before = j == 0 ? 1.0 : km.survival[j - 1];
    const double m = model_survival(p, km.times[j], KmEndpoint::Event);
    d = std::max({d, std::abs(m - before), std::abs(m - km.survival[j])});
  }
  d = std::max(d, std::abs(model_survival(p, km.max_time, KmEndpoint::Event) - km.at(km.max_time)));
  EXPECT_NEAR(sup_distance(km, p), d, 1e-12);
}

TEST(Overlay, CurePlateau) {
  const CureModelParams p{Exponential{0.05}, Exponential{0.001}, 0.7};
  EXPECT_NEAR(model_survival(p, 1e4, KmEndpoint::Event), 0.7, 1e-12);
  EXPECT_NEAR(model_survival(p, 100, KmEndpoint::Dropout), std::exp(-0.1), 1e-14);
}

TEST(ModelTable, RankedWithIdentities) {
  const auto g = evpred::testing::simulate_groups(evpred::testing::shape12_truth(), 400, 180, 300, 6);
  const ExposureData data(g.x, g.z, g.y);
  const auto rows = model_table(data);
  ASSERT_EQ(rows.size(), 5u);
  const double n = rows.size() ? double(data.total()) : 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_TRUE(rows[i].fit) << rows[i].error;
    EXPECT_NEAR(rows[i].bic - rows[i].aic, rows[i].k * (std::log(n) - 2), 1e-9);
    EXPECT_NEAR(rows[i].aic, 2 * rows[i].k - 2 * rows[i].loglik, 1e-9);
    if (i) {
      EXPECT_LE(rows[i - 1].aic, rows[i].aic);
    }
  }
  auto ll = [&](const std::string& name) {
    for (const auto& r : rows)
      if (r.name == name) return r.loglik;
    ADD_FAILURE() << name;
    return 0.0;
  };
  const double eps = 1e-6;
  EXPECT_LE(ll("Exponential, no cure"), ll("Exponential cure") + eps);
  EXPECT_LE(ll("Exponential cure"), ll("Weibull (A) and exponential (L) cure") + eps);
  EXPECT_LE(ll("Exponential cure"), ll("Exponential (A) and Weibull (L) cure") + eps);
  EXPECT_LE(ll("Weibull (A) and exponential (L) cure"), ll("Weibull cure") + eps);
  EXPECT_LE(ll("Exponential (A) and Weibull (L) cure"), ll("Weibull cure") + eps);
}

TEST(ModelTable, FailedFitsKeptLast) {
  // a zero event time makes the Weibull density undefined
  const ExposureData data({0.0, 5.0, 10.0, 20.0, 30.0}, {40.0, 50.0, 60.0}, {15.0});
  const auto rows = model_table(data);
  ASSERT_EQ(rows.size(), 5u);
  bool seen_fail = false;
  for (const auto& r : rows) {
    if (!r.fit) {
      seen_fail = true;
      EXPECT_FALSE(r.error.empty());
    } else {
      EXPECT_FALSE(seen_fail) << "successful fit after a failure";
    }
  }
  EXPECT_TRUE(seen_fail);
  EXPECT_TRUE(rows.front().fit);
}
