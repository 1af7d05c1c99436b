#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "support.hpp"
#include "wdro/transport.hpp"

using namespace wdro;
using testing_support::Gen;

namespace {

DiscreteDistribution random_dist(Gen& gen, int n, int m, bool uniform = false) {
  DiscreteDistribution Q{gen.mat(n, m, -2, 2), Vec(n)};
  auto w = gen.simplex_weights(n);
  for (int i = 0; i < n; ++i) Q.weights(i) = uniform ? 1.0 / n : w[i];
  return Q;
}

// 1-D quantile coupling: W_p^p = int_0^1 |F^{-1}(t) - G^{-1}(t)|^p dt.
double quantile_oracle(const DiscreteDistribution& a, const DiscreteDistribution& b, double p) {
  auto sorted = [](const DiscreteDistribution& d) {
    std::vector<std::pair<double, double>> v;
    for (Eigen::Index i = 0; i < d.size(); ++i) v.push_back({d.atoms(i, 0), d.weights(i)});
    std::sort(v.begin(), v.end());
    return v;
  };
  auto x = sorted(a), y = sorted(b);
  size_t i = 0, j = 0;
  double wi = x[0].second, wj = y[0].second, total = 0;
  while (i < x.size() && j < y.size()) {
    double m = std::min(wi, wj);
    total += m * std::pow(std::abs(x[i].first - y[j].first), p);
    wi -= m;
    wj -= m;
    if (wi <= 1e-15 && ++i < x.size()) wi = x[i].second;
    if (wj <= 1e-15 && ++j < y.size()) wj = y[j].second;
  }
  return std::pow(total, 1 / p);
}

// Uniform measures with equal atom counts: an optimal plan is a permutation.
double permutation_oracle(const DiscreteDistribution& a, const DiscreteDistribution& b, double p) {
  const int n = static_cast<int>(a.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    double c = 0;
    for (int i = 0; i < n; ++i) c += std::pow((a.atom(i) - b.atom(perm[i])).norm(), p) / n;
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best, 1 / p);
}

}  // namespace

TEST(Wasserstein, SelfDistanceIsZero) {
  Gen gen(1);
  auto Q = random_dist(gen, 5, 3);
  for (double p : {1.0, 2.0, 3.0}) EXPECT_NEAR(wasserstein_p(Q, Q, p).distance, 0.0, 1e-12);
}

TEST(Wasserstein, SelfDistanceHasNoRoundingMass) {
  // degenerate pivots must not leave off-diagonal mass that the p-th root amplifies
  Gen gen(15);
  for (int t = 0; t < 100; ++t) {
    auto Q = random_dist(gen, gen.integer(1, 20), gen.integer(1, 3));
    for (double p : {1.0, 2.0, 3.0}) EXPECT_EQ(wasserstein_p(Q, Q, p).distance, 0.0) << t;
  }
}

TEST(Wasserstein, DiracsAtAnyOrder) {
  Vec a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  for (double p : {1.0, 2.0, 3.5})
    EXPECT_NEAR(wasserstein_p(dirac(a), dirac(b), p).distance, 5.0, 1e-12);
}

TEST(Wasserstein, EscapingMassAtDistanceEpsilon) {
  const double eps = 0.7;
  for (double n : {10.0, 1000.0, 1e6}) {
    DiscreteDistribution Qn{Mat(2, 1), Vec(2)};
    Qn.atoms << 0, eps * n;
    Qn.weights << 1 - 1 / n, 1 / n;
    EXPECT_NEAR(wasserstein_p(dirac(Vec::Zero(1)), Qn, 1).distance, eps, 1e-9);
  }
}

TEST(Wasserstein, MatchesQuantileCouplingInOneDimension) {
  Gen gen(2);
  for (int t = 0; t < 40; ++t) {
    auto a = random_dist(gen, gen.integer(1, 9), 1), b = random_dist(gen, gen.integer(1, 9), 1);
    for (double p : {1.0, 2.0})
      EXPECT_NEAR(wasserstein_p(a, b, p).distance, quantile_oracle(a, b, p), 1e-9);
  }
}

TEST(Wasserstein, MatchesPermutationSearch) {
  Gen gen(3);
  for (int t = 0; t < 20; ++t) {
    int n = gen.integer(1, 6), m = gen.integer(1, 3);
    auto a = random_dist(gen, n, m, true), b = random_dist(gen, n, m, true);
    for (double p : {1.0, 2.0})
      EXPECT_NEAR(wasserstein_p(a, b, p).distance, permutation_oracle(a, b, p), 1e-9);
  }
}

TEST(Wasserstein, PlanMarginalsAndDualCertificate) {
  Gen gen(4);
  for (int t = 0; t < 40; ++t) {
    auto a = random_dist(gen, gen.integer(1, 12), 3), b = random_dist(gen, gen.integer(1, 12), 3);
    for (double p : {1.0, 2.0}) {
      auto r = wasserstein_p(a, b, p);
      EXPECT_GE(r.plan.minCoeff(), 0.0);
      EXPECT_LE((r.plan.rowwise().sum() - a.weights).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LE((r.plan.colwise().sum().transpose() - b.weights).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LE(std::abs(r.cost - r.dual_value), 1e-8);
      Mat c = cost_matrix(a, b, p, NormSpec::l2());
      for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j)
          EXPECT_LE(r.duals.psi(j) - r.duals.phi(i), c(i, j) + 1e-9);
    }
  }
}

TEST(Wasserstein, MetricAxioms) {
  Gen gen(5);
  for (int t = 0; t < 30; ++t) {
    int m = gen.integer(1, 3);
    auto a = random_dist(gen, gen.integer(1, 8), m), b = random_dist(gen, gen.integer(1, 8), m),
         c = random_dist(gen, gen.integer(1, 8), m);
    for (double p : {1.0, 2.0}) {
      double ab = wasserstein_p(a, b, p).distance, ba = wasserstein_p(b, a, p).distance;
      double bc = wasserstein_p(b, c, p).distance, ac = wasserstein_p(a, c, p).distance;
      EXPECT_NEAR(ab, ba, 1e-9);
      EXPECT_LE(ac, ab + bc + 1e-8);
      EXPECT_GT(ab, 1e-6);
    }
  }
}

TEST(Wasserstein, ZeroExactlyForEqualDistributionsAfterMerging) {
  Gen gen(6);
  auto a = random_dist(gen, 4, 2);
  // split atom 0 into two halves and reorder
  DiscreteDistribution b{Mat(5, 2), Vec(5)};
  b.atoms.row(0) = a.atoms.row(3);
  b.weights(0) = a.weights(3);
  b.atoms.row(1) = a.atoms.row(0);
  b.weights(1) = a.weights(0) / 2;
  b.atoms.row(2) = a.atoms.row(1);
  b.weights(2) = a.weights(1);
  b.atoms.row(3) = a.atoms.row(0);
  b.weights(3) = a.weights(0) / 2;
  b.atoms.row(4) = a.atoms.row(2);
  b.weights(4) = a.weights(2);
  EXPECT_TRUE(same_distribution(a, b));
  EXPECT_NEAR(wasserstein_p(a, b, 1).distance, 0.0, 1e-12);
  b.weights(0) -= 1e-3;
  b.weights(4) += 1e-3;
  EXPECT_FALSE(same_distribution(a, b));
  EXPECT_GT(wasserstein_p(a, b, 1).distance, 1e-6);
}

TEST(Wasserstein, OrderMonotonicity) {
  Gen gen(7);
  for (int t = 0; t < 30; ++t) {
    auto a = random_dist(gen, gen.integer(1, 8), 2), b = random_dist(gen, gen.integer(1, 8), 2);
    double w1 = wasserstein_p(a, b, 1).distance;
    EXPECT_GE(wasserstein_p(a, b, 2).distance, w1 - 1e-9);
    EXPECT_GE(wasserstein_p(a, b, 3).distance, w1 - 1e-9);
  }
}

TEST(Wasserstein, RejectsMismatchedDimensions) {
  Gen gen(8);
  try {
    wasserstein_p(random_dist(gen, 2, 2), random_dist(gen, 2, 3), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(KantorovichRubinstein, OptimalDualsCertifyDistance) {
  Gen gen(9);
  auto a = random_dist(gen, 6, 2), b = random_dist(gen, 5, 2);
  auto r = wasserstein_p(a, b, 1);
  auto chk = kr_verify(a, b, NormSpec::l2(), r.duals);
  EXPECT_TRUE(chk.feasible);
  EXPECT_NEAR(chk.dual_value, r.distance, 1e-9);
}

TEST(KantorovichRubinstein, ZeroPotentials) {
  Gen gen(10);
  auto a = random_dist(gen, 4, 2), b = random_dist(gen, 3, 2);
  auto chk = kr_verify(a, b, NormSpec::l2(), {Vec::Zero(4), Vec::Zero(3)});
  EXPECT_TRUE(chk.feasible);
  EXPECT_EQ(chk.dual_value, 0.0);
  EXPECT_LE(chk.dual_value, wasserstein_p(a, b, 1).distance);
}

TEST(KantorovichRubinstein, PerturbedDualsViolateSomePair) {
  Gen gen(11);
  for (int t = 0; t < 10; ++t) {
    auto a = random_dist(gen, 5, 2), b = random_dist(gen, 4, 2);
    auto r = wasserstein_p(a, b, 1);
    DualPotentials d = r.duals;
    int j = gen.integer(0, 3);
    d.psi(j) += 1;
    auto chk = kr_verify(a, b, NormSpec::l2(), d);
    EXPECT_FALSE(chk.feasible);
    EXPECT_EQ(chk.col, j);
  }
}

TEST(Gelbrich, IdenticalMoments) {
  Gen gen(12);
  MomentPair m{gen.vec(3), gen.spd(3)};
  EXPECT_NEAR(gelbrich_distance(m, m), 0.0, 1e-7);
}

TEST(Gelbrich, DiracsReduceToMeanDistance) {
  MomentPair a{(Vec(2) << 0, 0).finished(), Mat::Zero(2, 2)};
  MomentPair b{(Vec(2) << 3, 4).finished(), Mat::Zero(2, 2)};
  EXPECT_DOUBLE_EQ(gelbrich_distance(a, b), 5.0);
}

TEST(Gelbrich, ScalarCase) {
  MomentPair a{Vec::Zero(1), Mat::Constant(1, 1, 4)};
  MomentPair b{Vec::Constant(1, 3), Mat::Constant(1, 1, 1)};
  // (mu - mu')^2 + (sigma - sigma')^2
  EXPECT_NEAR(gelbrich_distance(a, b), std::sqrt(9.0 + 1.0), 1e-14);
}

TEST(Gelbrich, CommutingCovariancesAgainstDiagonalFormula) {
  Gen gen(13);
  for (int t = 0; t < 20; ++t) {
    int m = gen.integer(1, 5);
    Mat U = gen.orthogonal(m);
    Vec s1 = gen.vec(m, 0.1, 3), s2 = gen.vec(m, 0.1, 3);
    MomentPair a{gen.vec(m), U * s1.asDiagonal() * U.transpose()};
    MomentPair b{gen.vec(m), U * s2.asDiagonal() * U.transpose()};
    double expect = (a.mean - b.mean).squaredNorm() +
                    (s1.cwiseSqrt() - s2.cwiseSqrt()).squaredNorm();
    EXPECT_NEAR(gelbrich_distance(a, b), std::sqrt(expect), 1e-9);
  }
}

TEST(Gelbrich, LowerBoundsTypeTwoDistance) {
  Gen gen(14);
  for (int t = 0; t < 50; ++t) {
    int m = gen.integer(1, 3);
    auto a = random_dist(gen, gen.integer(1, 8), m), b = random_dist(gen, gen.integer(1, 8), m);
    EXPECT_LE(gelbrich_distance(moments(a), moments(b)), wasserstein_p(a, b, 2).distance + 1e-8);
  }
}

TEST(Gelbrich, RejectsIndefiniteCovariance) {
  Mat bad(2, 2);
  bad << 1, 0, 0, -1;
  try {
    gelbrich_distance({Vec::Zero(2), bad}, {Vec::Zero(2), Mat::Identity(2, 2)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPSD);
  }
}
