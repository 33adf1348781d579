#include "swapbound/distributions.hpp"
#include "test_util.hpp"

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/distributions/non_central_f.hpp>
#include <gtest/gtest.h>

#include <limits>

using namespace swapbound;
using swapbound::testing::binomial_sigma;
using swapbound::testing::draw_chi2;
using swapbound::testing::draw_noncentral_chi2;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(Chi2, TrivialValues) {
  EXPECT_EQ(chi2_cdf(0.0, Dof(2)), 0.0);
  EXPECT_EQ(chi2_cdf(kInf, Dof(4)), 1.0);
  EXPECT_NEAR(chi2_cdf(2.0 * std::log(2.0), Dof(2)), 0.5, 1e-15);
  EXPECT_THROW(chi2_cdf(-1.0, Dof(2)), DomainError);
}

TEST(Chi2, LogAccessorKeepsTinyTails) {
  const double lp = log_chi2_cdf(1e-3, Dof(40));
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_LT(lp, std::log(1e-80));
  EXPECT_NEAR(std::exp(log_chi2_cdf(3.0, Dof(4))), chi2_cdf(3.0, Dof(4)), 1e-14);
}

TEST(Dof, RejectsInvalid) {
  EXPECT_THROW(Dof(0), ValidationError);
  EXPECT_THROW(Noncentrality(-1.0), ValidationError);
  EXPECT_THROW(Noncentrality(std::nan("")), ValidationError);
}

TEST(NoncentralChi2, CentralReduction) {
  for (double x : {0.1, 1.0, 3.0, 10.0, 40.0})
    EXPECT_NEAR(noncentral_chi2_cdf(x, Dof(6), Noncentrality(0.0)), chi2_cdf(x, Dof(6)), 1e-12);
  EXPECT_EQ(noncentral_chi2_cdf(0.0, Dof(6), Noncentrality(10.0)), 0.0);
}

TEST(NoncentralChi2, MatchesBoost) {
  for (double d : {2.0, 5.0, 30.0})
    for (double delta : {0.5, 3.0, 50.0, 800.0})
      for (double x : {0.5, 5.0, 40.0, 900.0}) {
        boost::math::non_central_chi_squared dist(d, delta);
        EXPECT_NEAR(noncentral_chi2_cdf(x, Dof(d), Noncentrality(delta)), boost::math::cdf(dist, x), 1e-11)
            << d << " " << delta << " " << x;
      }
}

TEST(NoncentralChi2, MonteCarlo) {
  StreamEngine eng(make_stream(11, 0, 0));
  const long trials = 2000000;
  long hits = 0;
  for (long t = 0; t < trials; ++t) hits += draw_noncentral_chi2(2.0, 3.0, eng) <= 5.0;
  EXPECT_NEAR(static_cast<double>(hits) / trials, noncentral_chi2_cdf(5.0, Dof(2), Noncentrality(3.0)), 1e-3);
}

TEST(NoncentralChi2, HugeNoncentralityTail) {
  // Far below the mean: tiny but positive, and the log stays finite.
  const double lp = log_noncentral_chi2_cdf(10.0, Dof(4), Noncentrality(5000.0));
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_LT(lp, -1000.0);
  EXPECT_NEAR(noncentral_chi2_cdf(5100.0, Dof(4), Noncentrality(5000.0)),
              boost::math::cdf(boost::math::non_central_chi_squared(4.0, 5000.0), 5100.0), 1e-10);
}

TEST(CentralF, Symmetry) {
  for (double d : {1.0, 2.0, 7.0, 64.0, 13600.0}) EXPECT_NEAR(f_cdf(1.0, Dof(d), Dof(d)), 0.5, 1e-12);
  EXPECT_EQ(f_cdf(kInf, Dof(3), Dof(5)), 1.0);
  EXPECT_THROW(f_cdf(-0.5, Dof(3), Dof(5)), DomainError);
}

TEST(CentralF, MonteCarlo) {
  StreamEngine eng(make_stream(12, 0, 0));
  const long trials = 2000000;
  long hits = 0;
  for (long t = 0; t < trials; ++t) hits += (draw_chi2(4, eng) / 4.0) / (draw_chi2(40, eng) / 40.0) <= 1.0;
  EXPECT_NEAR(static_cast<double>(hits) / trials, f_cdf(1.0, Dof(4), Dof(40)), 1e-3);
}

TEST(NoncentralF, CentralReductionAndMonotone) {
  for (double x : {0.2, 1.0, 4.0}) EXPECT_NEAR(noncentral_f_cdf(x, Dof(4), Dof(9), Noncentrality(0.0)), f_cdf(x, Dof(4), Dof(9)), 1e-12);
  double prev = 1.0;
  for (double delta = 0.0; delta < 200.0; delta += 5.0) {
    const double v = noncentral_f_cdf(1.0, Dof(4), Dof(60), Noncentrality(delta));
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(NoncentralF, MatchesBoost) {
  for (double d1 : {2.0, 4.0, 16.0})
    for (double d2 : {4.0, 60.0, 400.0})
      for (double delta : {0.3, 20.0, 300.0}) {
        boost::math::non_central_f dist(d1, d2, delta);
        EXPECT_NEAR(noncentral_f_cdf(1.0, Dof(d1), Dof(d2), Noncentrality(delta)), boost::math::cdf(dist, 1.0), 1e-10)
            << d1 << " " << d2 << " " << delta;
      }
}

TEST(NoncentralF, MonteCarlo) {
  StreamEngine eng(make_stream(13, 0, 0));
  const long trials = 2000000;
  long hits = 0;
  for (long t = 0; t < trials; ++t)
    hits += (draw_noncentral_chi2(4, 20.0, eng) / 4.0) / (draw_chi2(60, eng) / 60.0) <= 1.0;
  EXPECT_NEAR(static_cast<double>(hits) / trials, noncentral_f_cdf(1.0, Dof(4), Dof(60), Noncentrality(20.0)), 1e-3);
}

TEST(NoncentralF, LogAccessorBelowDoubleRange) {
  const double lp = log_noncentral_f_cdf(1.0, Dof(400), Dof(13600), Noncentrality(1e5));
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_LT(lp, std::log(std::numeric_limits<double>::min()));
  EXPECT_EQ(noncentral_f_cdf(1.0, Dof(400), Dof(13600), Noncentrality(1e5)), 0.0);
}

TEST(Cdfs, NondecreasingAndBounded) {
  double p_chi = 0.0, p_nchi = 0.0, p_f = 0.0, p_nf = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = 0.05 * i;
    const double a = chi2_cdf(4 * x, Dof(3));
    const double b = noncentral_chi2_cdf(4 * x, Dof(3), Noncentrality(2.5));
    const double c = f_cdf(x, Dof(3), Dof(11));
    const double d = noncentral_f_cdf(x, Dof(3), Dof(11), Noncentrality(2.5));
    for (double v : {a, b, c, d}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(a, p_chi);
    EXPECT_GE(b, p_nchi);
    EXPECT_GE(c, p_f);
    EXPECT_GE(d, p_nf);
    p_chi = a, p_nchi = b, p_f = c, p_nf = d;
  }
}

TEST(Quadform, Exchangeable) {
  for (double d : {2.0, 6.0, 50.0}) {
    const auto r = quadform_below_zero(WeightedChiSquareMix({1.0}, {Dof(d)}), WeightedChiSquareMix({1.0}, {Dof(d)}));
    EXPECT_NEAR(r.probability, 0.5, 1e-10);
    EXPECT_LE(r.error_estimate, kQuadformTolerance);
  }
}

TEST(Quadform, ScaleInvariant) {
  const WeightedChiSquareMix pos({2.0, 0.7}, {Dof(4), Dof(2)});
  const WeightedChiSquareMix neg({1.0, 0.3}, {Dof(8), Dof(3)});
  const double base = quadform_below_zero(pos, neg).probability;
  for (double c : {1e-3, 0.5, 17.0, 1e4}) {
    WeightedChiSquareMix p2({2.0 * c, 0.7 * c}, {Dof(4), Dof(2)});
    WeightedChiSquareMix n2({1.0 * c, 0.3 * c}, {Dof(8), Dof(3)});
    EXPECT_NEAR(quadform_below_zero(p2, n2).probability, base, 1e-10);
  }
}

TEST(Quadform, MonteCarlo) {
  StreamEngine eng(make_stream(14, 0, 0));
  const long trials = 2000000;
  long hits = 0;
  for (long t = 0; t < trials; ++t) hits += 2.0 * draw_chi2(4, eng) - draw_chi2(8, eng) < 0.0;
  const double p = quadform_below_zero(WeightedChiSquareMix({2.0}, {Dof(4)}), WeightedChiSquareMix({1.0}, {Dof(8)})).probability;
  EXPECT_NEAR(static_cast<double>(hits) / trials, p, 3.0 * binomial_sigma(p, trials));
}

TEST(Quadform, RejectsEmptyAndBadWeights) {
  EXPECT_THROW(quadform_below_zero(WeightedChiSquareMix({}, {}), WeightedChiSquareMix({1.0}, {Dof(2)})), ValidationError);
  EXPECT_THROW(WeightedChiSquareMix({-1.0}, {Dof(2)}), ValidationError);
  EXPECT_THROW(WeightedChiSquareMix({1.0, 2.0}, {Dof(2)}), ValidationError);
}

TEST(GeneralizedF, UnitWeightsReduceToCentralF) {
  for (int p : {1, 2, 3})
    for (int each : {2, 8, 400})
      for (int den : {2, 40, 13600}) {
        std::vector<double> w(p, 1.0);
        EXPECT_NEAR(generalized_f_below_one(w, Dof(each), Dof(den)).probability, f_cdf(1.0, Dof(p * each), Dof(den)), 1e-10)
            << p << " " << each << " " << den;
      }
}

TEST(GeneralizedF, LargeWeightsVanish) {
  std::vector<double> w{1e8, 1e8};
  EXPECT_LT(generalized_f_below_one(w, Dof(4), Dof(40)).probability, 1e-6);
}

TEST(GeneralizedF, MonteCarlo) {
  StreamEngine eng(make_stream(15, 0, 0));
  const long trials = 2000000;
  long hits = 0;
  for (long t = 0; t < trials; ++t) {
    const double num = (3.0 * draw_chi2(4, eng) + 2.0 * draw_chi2(4, eng)) / 8.0;
    hits += num / (draw_chi2(40, eng) / 40.0) <= 1.0;
  }
  std::vector<double> w{3.0, 2.0};
  EXPECT_NEAR(static_cast<double>(hits) / trials, generalized_f_below_one(w, Dof(4), Dof(40)).probability, 1e-3);
}

TEST(GeneralizedF, MonotoneInEachWeight) {
  double prev = 1.0;
  for (double w2 = 0.5; w2 < 20.0; w2 *= 1.5) {
    std::vector<double> w{2.0, w2};
    const double v = generalized_f_below_one(w, Dof(6), Dof(60)).probability;
    EXPECT_LT(v, prev);
    prev = v;
  }
}
