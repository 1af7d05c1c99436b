#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "wdro/lp.hpp"
#include "wdro/numerics.hpp"
#include "wdro/subgradient.hpp"

using namespace wdro;
using testing_support::Gen;

namespace {

// ln 5 = 2 ln 2 + ln(5/4) with ln x = 2 atanh((x-1)/(x+1)), summed in long double.
long double atanh_series(long double t) {
  long double term = t, sum = 0;
  for (int k = 0; k < 200; ++k) {
    sum += term / (2 * k + 1);
    term *= t * t;
  }
  return sum;
}

double ln5_oracle() {
  long double ln2 = 2 * atanh_series(1.0L / 3.0L);
  long double ln54 = 2 * atanh_series(1.0L / 9.0L);
  return static_cast<double>(2 * ln2 + ln54);
}

}  // namespace

TEST(BisectRoot, SquareRootOfTwo) {
  double x = bisect_root([](double x) { return x * x - 2; }, 0, 2);
  EXPECT_NEAR(x, std::sqrt(2.0), 1e-10);
}

TEST(BisectRoot, IdentityRootAtZero) {
  EXPECT_NEAR(bisect_root([](double x) { return x; }, -1, 1), 0.0, 1e-10);
}

TEST(BisectRoot, LogFiveAgainstSeries) {
  double oracle = ln5_oracle();
  EXPECT_NEAR(oracle, 1.6094379124341003, 1e-15);
  double x = bisect_root([](double x) { return std::exp(x) - 5; }, 0, 3, machine_tolerance());
  EXPECT_NEAR(x, oracle, 1e-14);
}

TEST(BisectRoot, ExpandsBracketGeometrically) {
  double x = bisect_root([](double x) { return x - 1000.5; }, 0, 1, {}, Expand::Up);
  EXPECT_NEAR(x, 1000.5, 1e-7);
}

TEST(BisectRoot, NoSignChangeIsReported) {
  try {
    bisect_root([](double x) { return x * x + 1; }, -1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoBracket);
  }
}

TEST(MinimizeScalar, AmGm) {
  auto r = minimize_scalar_convex([](double g) { return g <= 0 ? kInf : g + 1 / g; }, 0, kInf);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
  EXPECT_NEAR(r.x, 1.0, 1e-6);
}

TEST(MinimizeScalar, QuadraticOnInterval) {
  auto r = minimize_scalar_convex([](double g) { return g * g; }, -1, 1);
  EXPECT_NEAR(r.x, 0.0, 1e-6);
  EXPECT_LE(r.value, 1e-12);
}

TEST(MinimizeScalar, MoreauEnvelopeAgainstClosedFormAndGrid) {
  const double eps = 0.5, na = 5.0;  // a = (3, 4)
  auto g = [&](double y) { return y <= 0 ? kInf : y * eps * eps + na * na / (4 * y); };
  auto r = minimize_scalar_convex(g, 0, kInf);
  // closed form minimizer
  double ystar = na / (2 * eps);
  EXPECT_NEAR(g(ystar), 2.5, 1e-14);
  // dense grid
  double grid = kInf;
  for (int k = 1; k <= 200000; ++k) grid = std::min(grid, g(k * 1e-4));
  EXPECT_NEAR(grid, 2.5, 1e-8);
  EXPECT_NEAR(r.value, 2.5, 1e-12);
  EXPECT_NEAR(r.x, ystar, 1e-5);
}

TEST(MinimizeScalar, UnboundedBelow) {
  try {
    minimize_scalar_convex([](double g) { return -g; }, 0, kInf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unbounded);
  }
}

TEST(SolveLp, SingleLowerBoundRow) {
  LpBuilder b;
  int x = b.add_var(-kInf, kInf, 1.0);
  b.add_row({{x, 1.0}}, RowSense::Ge, 3.0);
  LpSolution s = solve_lp(b.build());
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_NEAR(s.x(0), 3.0, 1e-12);
  EXPECT_NEAR(s.objective, 3.0, 1e-12);
  EXPECT_NEAR(s.dual(0), 1.0, 1e-12);
}

TEST(SolveLp, TriangleAgainstVertexEnumeration) {
  LpBuilder b;
  int x = b.add_var(0, kInf, -1.0), y = b.add_var(0, kInf, -1.0);
  b.add_row({{x, 1.0}, {y, 1.0}}, RowSense::Le, 1.0);
  LinearProgram lp = b.build();
  LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  Mat A(3, 2);
  A << 1, 1, -1, 0, 0, -1;
  Vec rhs(3);
  rhs << 1, 0, 0;
  Vec c(2);
  c << -1, -1;
  EXPECT_NEAR(testing_support::lp_vertex_oracle(A, rhs, c), -1.0, 1e-12);
  EXPECT_NEAR(s.objective, -1.0, 1e-12);
  EXPECT_NEAR(lp_dual_objective(lp, s.dual), -1.0, 1e-12);
}

TEST(SolveLp, InfeasibleRows) {
  LpBuilder b;
  int x = b.add_var(-kInf, kInf, 0.0);
  b.add_row({{x, 1.0}}, RowSense::Le, -1.0);
  b.add_row({{x, 1.0}}, RowSense::Ge, 0.0);
  EXPECT_EQ(solve_lp(b.build()).status, LpStatus::Infeasible);
}

TEST(SolveLp, UnboundedRay) {
  LpBuilder b;
  int x = b.add_var(0, kInf, -1.0);
  b.add_row({{x, 1.0}}, RowSense::Ge, 1.0);
  EXPECT_EQ(solve_lp(b.build()).status, LpStatus::Unbounded);
}

TEST(SolveLp, RedundantEqualityRows) {
  // two copies of the same equality
  LpBuilder b;
  int x = b.add_var(0, kInf, 1.0), y = b.add_var(0, kInf, 2.0);
  b.add_row({{x, 1.0}, {y, 1.0}}, RowSense::Eq, 2.0);
  b.add_row({{x, 2.0}, {y, 2.0}}, RowSense::Eq, 4.0);
  LinearProgram lp = b.build();
  LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_NEAR(s.objective, 2.0, 1e-12);
  EXPECT_NEAR(lp_dual_objective(lp, s.dual), 2.0, 1e-12);
}

// Property: random bounded LPs in inequality form agree with vertex
// enumeration and close the duality gap.
TEST(SolveLp, RandomInstancesMatchVertexEnumeration) {
  Gen gen(7);
  for (int trial = 0; trial < 300; ++trial) {
    int n = gen.integer(1, 3), m = gen.integer(1, 6);
    Mat A = gen.mat(m, n, -2, 2);
    Vec b = gen.vec(m, -1, 2);
    Vec c = gen.vec(n, -1, 1);
    double box = 3.0;
    LpBuilder lb;
    for (int j = 0; j < n; ++j) lb.add_var(-box, box, c(j));
    for (int i = 0; i < m; ++i) {
      std::vector<LinTerm> row;
      for (int j = 0; j < n; ++j) row.push_back({j, A(i, j)});
      RowSense s = (trial % 3 == 0 && i == 0) ? RowSense::Ge : RowSense::Le;
      double sign = s == RowSense::Ge ? -1.0 : 1.0;
      for (auto& t : row) t.coef *= sign;
      lb.add_row(row, s, sign * b(i));
    }
    LinearProgram lp = lb.build();
    LpSolution sol = solve_lp(lp);

    Mat Ab(m + 2 * n, n);
    Vec bb(m + 2 * n);
    Ab.topRows(m) = A;
    bb.head(m) = b;
    Ab.block(m, 0, n, n) = Mat::Identity(n, n);
    Ab.block(m + n, 0, n, n) = -Mat::Identity(n, n);
    bb.segment(m, 2 * n).setConstant(box);
    double oracle = testing_support::lp_vertex_oracle(Ab, bb, c);
    if (!std::isfinite(oracle)) {
      EXPECT_EQ(sol.status, LpStatus::Infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(sol.status, LpStatus::Optimal) << "trial " << trial;
    EXPECT_NEAR(sol.objective, oracle, 1e-9) << "trial " << trial;
    EXPECT_LE(std::abs(sol.objective - lp_dual_objective(lp, sol.dual)), 1e-8);
    Vec r = lp.A * sol.x - lp.b;
    for (int i = 0; i < m; ++i)
      EXPECT_LE(lp.sense[i] == RowSense::Ge ? -r(i) : r(i), 1e-9);
  }
}

TEST(SolveLp, Deterministic) {
  Gen gen(3);
  LpBuilder lb;
  for (int j = 0; j < 5; ++j) lb.add_var(0, 2, gen.uniform(-1, 1));
  for (int i = 0; i < 4; ++i) {
    std::vector<LinTerm> row;
    for (int j = 0; j < 5; ++j) row.push_back({j, gen.uniform(-1, 1)});
    lb.add_row(row, RowSense::Le, gen.uniform(0, 1));
  }
  LinearProgram lp = lb.build();
  LpSolution a = solve_lp(lp), b = solve_lp(lp);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_TRUE(a.x == b.x);
  EXPECT_TRUE(a.dual == b.dual);
}

TEST(Subgradient, AbsoluteValue) {
  auto h = [](const Vec& w, Vec& g) {
    g(0) = w(0) > 0 ? 1.0 : (w(0) < 0 ? -1.0 : 0.0);
    return std::abs(w(0));
  };
  auto r = subgradient_minimize(h, Vec::Constant(1, 5.0));
  EXPECT_LE(r.value, 1e-10);
  EXPECT_NEAR(r.x(0), 0.0, 1e-10);
  EXPECT_TRUE(r.certified);
}

TEST(Subgradient, SmoothQuadratic) {
  auto h = [](const Vec& w, Vec& g) {
    g(0) = 2 * (w(0) - 2);
    return (w(0) - 2) * (w(0) - 2);
  };
  SubgradientOptions opt;
  opt.smooth = true;
  opt.model_every = 5;
  auto r = subgradient_minimize(h, Vec::Zero(1), {}, opt);
  EXPECT_NEAR(r.x(0), 2.0, 1e-8);
}

TEST(Subgradient, HingePlusAbsoluteAgainstBreakpoints) {
  auto f = [](double w) { return std::max(0.0, 1 - w) + 0.5 * std::abs(w); };
  // breakpoint enumeration: a piecewise-linear function is minimized at a kink
  double oracle = std::min(f(0.0), f(1.0));
  EXPECT_EQ(oracle, 0.5);
  auto h = [&](const Vec& w, Vec& g) {
    double x = w(0);
    g(0) = (x < 1 ? -1.0 : 0.0) + (x > 0 ? 0.5 : (x < 0 ? -0.5 : 0.5));
    return f(x);
  };
  auto r = subgradient_minimize(h, Vec::Zero(1));
  EXPECT_NEAR(r.value, 0.5, 1e-10);
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
}

TEST(Subgradient, DeterministicRuns) {
  Gen gen(11);
  Mat A = gen.mat(8, 3);
  Vec y = gen.vec(8);
  auto h = [&](const Vec& w, Vec& g) {
    Vec r = A * w - y;
    double v = 0;
    for (int i = 0; i < 8; ++i) {
      v += std::abs(r(i));
      g += (r(i) >= 0 ? 1.0 : -1.0) * A.row(i).transpose();
    }
    return v;
  };
  auto a = subgradient_minimize(h, Vec::Zero(3));
  auto b = subgradient_minimize(h, Vec::Zero(3));
  EXPECT_EQ(a.value, b.value);
  EXPECT_TRUE(a.x == b.x);
  EXPECT_TRUE(a.certified);
}

TEST(SymEig, DiagonalInput) {
  Mat A(2, 2);
  A << 3, 0, 0, 1;
  SymEig e = sym_eig(A);
  EXPECT_DOUBLE_EQ(e.values(0), 3);
  EXPECT_DOUBLE_EQ(e.values(1), 1);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(1, 1)), 1.0, 1e-15);
}

TEST(SymEig, TwoByTwoAgainstCharacteristicPolynomial) {
  Mat A(2, 2);
  A << 2, 1, 1, 2;
  // roots of l^2 - 4 l + 3
  double disc = std::sqrt(16.0 - 12.0);
  SymEig e = sym_eig(A);
  EXPECT_NEAR(e.values(0), (4 + disc) / 2, 1e-14);
  EXPECT_NEAR(e.values(1), (4 - disc) / 2, 1e-14);
}

TEST(SymEig, IdentityFour) {
  SymEig e = sym_eig(Mat::Identity(4, 4));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(e.values(i), 1.0);
}

TEST(SymEig, RejectsAsymmetric) {
  Mat A(2, 2);
  A << 1, 2, 0, 1;
  try {
    sym_eig(A);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSymmetric);
  }
}

TEST(SymEig, RandomReconstructionAndOrthogonality) {
  Gen gen(5);
  for (int trial = 0; trial < 40; ++trial) {
    int n = gen.integer(1, 50);
    Mat A = gen.symmetric(n) * gen.uniform(0.1, 10);
    SymEig e = sym_eig(A);
    double scale = 1 + A.norm();
    EXPECT_LE((from_eig(e.vectors, e.values) - A).norm(), 1e-10 * scale);
    EXPECT_LE((e.vectors.transpose() * e.vectors - Mat::Identity(n, n)).norm(), 1e-12 * n);
    for (int k = 1; k < n; ++k) EXPECT_GE(e.values(k - 1), e.values(k));
  }
}

TEST(PsdSqrt, DiagonalAndIdentity) {
  Mat D = Vec((Vec(2) << 4, 9).finished()).asDiagonal();
  Mat R = psd_sqrt(D);
  EXPECT_NEAR(R(0, 0), 2, 1e-15);
  EXPECT_NEAR(R(1, 1), 3, 1e-15);
  EXPECT_NEAR(R(0, 1), 0, 1e-15);
  EXPECT_LE((psd_sqrt(Mat::Identity(3, 3)) - Mat::Identity(3, 3)).norm(), 1e-15);
}

TEST(PsdSqrt, TwoByTwoSquaresBack) {
  Mat A(2, 2);
  A << 2, 1, 1, 2;
  Mat R = psd_sqrt(A);
  EXPECT_LE((R * R - A).norm(), 1e-14);
  SymEig e = sym_eig(R);
  EXPECT_NEAR(e.values(0), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
}

TEST(PsdSqrt, RandomPsdSquaresBack) {
  Gen gen(9);
  for (int trial = 0; trial < 30; ++trial) {
    int n = gen.integer(1, 50), r = gen.integer(1, n);
    Mat B = gen.mat(n, r);
    Mat A = B * B.transpose();
    Mat R = psd_sqrt(A);
    EXPECT_LE((R * R - A).norm(), 1e-8 * (1 + A.norm()));
    EXPECT_LE((R - R.transpose()).norm(), 1e-14 * (1 + R.norm()));
  }
}

TEST(PsdSqrt, RejectsIndefinite) {
  Mat A(2, 2);
  A << 1, 0, 0, -1;
  try {
    psd_sqrt(A);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPSD);
  }
}
