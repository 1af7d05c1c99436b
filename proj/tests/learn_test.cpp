#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"
#include "wdro/learn.hpp"

using namespace wdro;
using testing_support::Gen;

namespace {

// Plain evaluation of the 1-D objectives, written out per loss kind.
double loss_1d(const std::string& kind, double delta, double z) {
  if (kind == "hinge") return z < 1 ? 1 - z : 0;
  if (kind == "pinball") return z >= 0 ? (1 - delta) * z : -delta * z;
  if (kind == "eps") return std::abs(z) > delta ? std::abs(z) - delta : 0;
  if (kind == "logloss") return std::log(1 + std::exp(-z));
  if (kind == "smooth_hinge") return z <= 0 ? 0.5 - z : (z < 1 ? 0.5 * (1 - z) * (1 - z) : 0);
  if (kind == "huber") return std::abs(z) <= delta ? 0.5 * z * z : delta * (std::abs(z) - delta / 2);
  return z * z;
}

double objective_1d(const std::string& kind, double delta, const std::vector<double>& x,
                    const std::vector<double>& y, bool cls, double reg, double w) {
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += loss_1d(kind, delta, cls ? y[i] * w * x[i] : w * x[i] - y[i]);
  return s / x.size() + reg * std::abs(w);
}

// Piecewise-linear convex 1-D objective: the minimum sits at a kink.
double breakpoint_min(const std::string& kind, double delta, const std::vector<double>& x,
                      const std::vector<double>& y, bool cls, double reg, double* arg) {
  std::vector<double> cand{0.0};
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0) continue;
    if (cls) {
      cand.push_back(1 / (y[i] * x[i]));
    } else {
      for (double k : {0.0, delta, -delta}) cand.push_back((y[i] + k) / x[i]);
    }
  }
  double best = kInf;
  for (double w : cand) {
    double v = objective_1d(kind, delta, x, y, cls, reg, w);
    if (v < best) {
      best = v;
      *arg = w;
    }
  }
  return best;
}

// Golden-section search on a convex function.
double golden_min(const std::function<double(double)>& f, double a, double b) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int it = 0; it < 200; ++it) {
    if (f(c) < f(d))
      b = d;
    else
      a = c;
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return f((a + b) / 2);
}

LabeledData random_classification(Gen& g, int N, int n) {
  LabeledData d{g.mat(N, n, -2, 2), Vec(N)};
  for (int i = 0; i < N; ++i) d.y(i) = g.uniform() < 0.5 ? -1 : 1;
  return d;
}

LabeledData random_regression(Gen& g, int N, int n) {
  LabeledData d{g.mat(N, n, -2, 2), Vec(N)};
  Vec w = g.vec(n);
  d.y = d.X * w + 0.3 * g.gauss(N);
  return d;
}

LabeledData one_sample() {
  LabeledData d{Mat::Ones(1, 1), Vec::Ones(1)};
  return d;
}

}  // namespace

TEST(UnivariateLoss, ValuesAndModuli) {
  EXPECT_EQ(UnivariateLoss::hinge()(0.5), 0.5);
  EXPECT_EQ(UnivariateLoss::smooth_hinge()(-1), 1.5);
  EXPECT_EQ(UnivariateLoss::smooth_hinge()(0.5), 0.125);
  EXPECT_NEAR(UnivariateLoss::logloss()(0), std::log(2.0), 1e-15);
  EXPECT_NEAR(UnivariateLoss::logloss()(-800), 800, 1e-12);
  EXPECT_EQ(UnivariateLoss::huber(1)(3), 2.5);
  EXPECT_EQ(UnivariateLoss::eps_insensitive(0.5)(-2), 1.5);
  EXPECT_EQ(UnivariateLoss::pinball(0.25)(-4), 1);
  EXPECT_EQ(UnivariateLoss::huber(0.3).lipschitz(), 0.3);
  EXPECT_EQ(UnivariateLoss::pinball(0.2).lipschitz(), 0.8);
  EXPECT_EQ(UnivariateLoss::eps_insensitive(2).lipschitz(), 1);
  EXPECT_TRUE(std::isinf(UnivariateLoss::squared().lipschitz()));
  EXPECT_THROW(UnivariateLoss::huber(0), Error);
  EXPECT_THROW(UnivariateLoss::pinball(1.5), Error);
  EXPECT_THROW(UnivariateLoss::eps_insensitive(-1), Error);
}

TEST(UnivariateLoss, SlopesMatchDifferences) {
  Gen g(30);
  std::vector<UnivariateLoss> all{UnivariateLoss::hinge(),  UnivariateLoss::smooth_hinge(),
                                  UnivariateLoss::logloss(), UnivariateLoss::squared(),
                                  UnivariateLoss::huber(0.7), UnivariateLoss::eps_insensitive(0.4),
                                  UnivariateLoss::pinball(0.3)};
  for (const auto& L : all)
    for (int t = 0; t < 100; ++t) {
      double z = g.uniform(-3, 3), h = 1e-6;
      double fd = (L(z + h) - L(z - h)) / (2 * h);
      EXPECT_NEAR(L.slope(z), fd, 1e-5) << loss_name(L.kind) << " z=" << z;
    }
}

TEST(Classifier, OneSampleHingeExamples) {
  auto a = dro_train_classifier(one_sample(), UnivariateLoss::hinge(), 0.5, NormSpec::l1());
  EXPECT_NEAR(a.w(0), 1, 1e-8);
  EXPECT_NEAR(a.objective, 0.5, 1e-8);
  EXPECT_TRUE(a.certified);
  auto b = dro_train_classifier(one_sample(), UnivariateLoss::hinge(), 2, NormSpec::l1());
  EXPECT_NEAR(b.w(0), 0, 1e-8);
  EXPECT_NEAR(b.objective, 1, 1e-8);
  ASSERT_FALSE(b.warnings.empty());
  EXPECT_EQ(b.warnings[0].rfind("DegenerateData", 0), 0u);
}

TEST(Classifier, ZeroRadiusIsEmpiricalRisk) {
  Gen g(31);
  for (const char* kind : {"logloss", "smooth_hinge"}) {
    for (int t = 0; t < 10; ++t) {
      std::vector<double> x, y;
      for (int i = 0; i < 8; ++i) {
        x.push_back(g.uniform(-2, 2));
        y.push_back(g.uniform() < 0.5 ? -1 : 1);
      }
      // keep both signs of y x so the minimum is finite
      x[0] = 1, y[0] = 1, x[1] = 1, y[1] = -1;
      LabeledData d{Mat(8, 1), Vec(8)};
      for (int i = 0; i < 8; ++i) d.X(i, 0) = x[i], d.y(i) = y[i];
      UnivariateLoss L = std::string(kind) == "logloss" ? UnivariateLoss::logloss()
                                                        : UnivariateLoss::smooth_hinge();
      auto m = dro_train_classifier(d, L, 0, NormSpec::l2());
      double oracle = golden_min([&](double w) { return objective_1d(kind, 0, x, y, true, 0, w); }, -50, 50);
      EXPECT_NEAR(m.objective, oracle, 1e-9) << kind << " " << t;
      EXPECT_FALSE(m.unattained);
    }
  }
}

TEST(Classifier, SeparableLogLossIsUnattained) {
  LabeledData d{Mat(4, 2), Vec(4)};
  d.X << 1, 2, 2, 1, -1, -1, -2, 0;
  d.y << 1, 1, -1, -1;
  TrainOptions o;
  o.tol.max_iter = 300;
  auto m = dro_train_classifier(d, UnivariateLoss::logloss(), 0, NormSpec::l2(), o);
  EXPECT_TRUE(m.unattained);
  EXPECT_FALSE(m.certified);
  EXPECT_LT(m.objective, std::log(2.0));
  bool flagged = false;
  for (auto& w : m.warnings) flagged |= w.rfind("Unattained", 0) == 0;
  EXPECT_TRUE(flagged);
  // a positive radius makes the problem coercive
  auto r = dro_train_classifier(d, UnivariateLoss::logloss(), 0.1, NormSpec::l2());
  EXPECT_FALSE(r.unattained);
}

TEST(Classifier, Rejections) {
  EXPECT_THROW(dro_train_classifier(one_sample(), UnivariateLoss::squared(), 1, NormSpec::l2()), Error);
  LabeledData bad{Mat::Ones(1, 1), Vec::Constant(1, 0.5)};
  EXPECT_THROW(dro_train_classifier(bad, UnivariateLoss::hinge(), 1, NormSpec::l2()), Error);
  EXPECT_THROW(dro_train_classifier(one_sample(), UnivariateLoss::hinge(), -1, NormSpec::l2()), Error);
  EXPECT_THROW(dro_train_classifier({Mat(0, 1), Vec(0)}, UnivariateLoss::hinge(), 1, NormSpec::l2()),
               Error);
}

TEST(Regressor, PinballExample) {
  auto m = dro_train_regressor(one_sample(), UnivariateLoss::pinball(0.5), 0.1, 1, NormSpec::l1());
  EXPECT_NEAR(m.w(0), 1, 1e-8);
  EXPECT_NEAR(m.objective, 0.05, 1e-10);
}

TEST(Regressor, HuberSymmetricExample) {
  LabeledData d{Mat::Ones(2, 1), Vec(2)};
  d.y << 1, -1;
  auto m = dro_train_regressor(d, UnivariateLoss::huber(1), 0, 1, NormSpec::l2());
  EXPECT_NEAR(m.w(0), 0, 1e-8);
  EXPECT_NEAR(m.objective, 0.5, 1e-12);
}

TEST(Regressor, OrdinaryLeastSquares) {
  Gen g(32);
  for (int t = 0; t < 10; ++t) {
    int n = g.integer(1, 4);
    LabeledData d = random_regression(g, 20, n);
    auto m = dro_train_regressor(d, UnivariateLoss::squared(), 0, 2, NormSpec::l2());
    Vec ols = (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
    EXPECT_LE((m.w - ols).cwiseAbs().maxCoeff(), 1e-8) << t;
    EXPECT_NEAR(m.objective, (d.X * ols - d.y).squaredNorm() / 20, 1e-10);
  }
}

TEST(Regressor, PairingAndLossChecks) {
  try {
    dro_train_regressor(one_sample(), UnivariateLoss::squared(), 1, 1, NormSpec::l2());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PairingMismatch);
  }
  EXPECT_THROW(dro_train_regressor(one_sample(), UnivariateLoss::huber(1), 1, 2, NormSpec::l2()), Error);
  EXPECT_THROW(dro_train_regressor(one_sample(), UnivariateLoss::hinge(), 1, 1, NormSpec::l2()), Error);
}

TEST(Regressor, SquaredLossComposedForm) {
  Gen g(33);
  LabeledData d = random_regression(g, 15, 3);
  auto m = dro_train_regressor(d, UnivariateLoss::squared(), 0.2, 2, NormSpec::linf());
  double mse = (d.X * m.w - d.y).squaredNorm() / 15;
  double expect = std::pow(std::sqrt(mse) + 0.2 * m.w.cwiseAbs().sum(), 2);
  EXPECT_NEAR(m.objective, expect, 1e-12 * expect);
  EXPECT_TRUE(m.certified);
  EXPECT_LE(m.gap, 1e-8);
}

TEST(Crosscheck, Examples) {
  auto a = dro_train_classifier(one_sample(), UnivariateLoss::hinge(), 0.5, NormSpec::l1());
  auto ca = dro_objective_crosscheck(a.w, one_sample(), UnivariateLoss::hinge(), 0.5, NormSpec::l1());
  EXPECT_LE(ca.diff, 1e-9);
  auto p = dro_train_regressor(one_sample(), UnivariateLoss::pinball(0.5), 0.1, 1, NormSpec::l1());
  auto cp = dro_objective_crosscheck(p.w, one_sample(), UnivariateLoss::pinball(0.5), 0.1, NormSpec::l1());
  EXPECT_LE(cp.diff, 1e-9);
  EXPECT_THROW(dro_objective_crosscheck(p.w, one_sample(), UnivariateLoss::logloss(), 0.1, NormSpec::l1()),
               Error);
}

TEST(Crosscheck, RandomHingeInstance) {
  Gen g(34);
  LabeledData d = random_classification(g, 5, 3);
  auto m = dro_train_classifier(d, UnivariateLoss::hinge(), 0.3, NormSpec::l2());
  auto c = dro_objective_crosscheck(m.w, d, UnivariateLoss::hinge(), 0.3, NormSpec::l2());
  EXPECT_LE(c.diff, 1e-6);
}

// ---------------------------------------------------------- properties

TEST(LearnProperty, PiecewiseLinearMatchesBreakpoints) {
  Gen g(35);
  for (int t = 0; t < 40; ++t) {
    int N = g.integer(1, 8);
    std::vector<double> x, y;
    for (int i = 0; i < N; ++i) x.push_back(g.uniform(-2, 2));
    const std::string kind = t % 3 == 0 ? "hinge" : (t % 3 == 1 ? "pinball" : "eps");
    const bool cls = kind == "hinge";
    for (int i = 0; i < N; ++i) y.push_back(cls ? (g.uniform() < 0.5 ? -1.0 : 1.0) : g.uniform(-2, 2));
    double delta = kind == "pinball" ? g.uniform(0.1, 0.9) : g.uniform(0, 0.5);
    double eps = g.uniform(0.05, 1);
    LabeledData d{Mat(N, 1), Vec(N)};
    for (int i = 0; i < N; ++i) d.X(i, 0) = x[i], d.y(i) = y[i];
    TrainedModel m;
    double lip = 1;
    if (cls) {
      m = dro_train_classifier(d, UnivariateLoss::hinge(), eps, NormSpec::l1());
    } else {
      UnivariateLoss L = kind == "pinball" ? UnivariateLoss::pinball(delta)
                                           : UnivariateLoss::eps_insensitive(delta);
      lip = L.lipschitz();
      m = dro_train_regressor(d, L, eps, 1, NormSpec::l1());
    }
    double arg;
    double oracle = breakpoint_min(kind, delta, x, y, cls, eps * lip, &arg);
    EXPECT_NEAR(m.objective, oracle, 1e-8) << kind << " " << t;
    EXPECT_TRUE(m.certified);
  }
}

TEST(LearnProperty, CrosscheckIdentity) {
  Gen g(36);
  std::vector<NormSpec> norms{NormSpec::l1(), NormSpec::l2(), NormSpec::linf()};
  for (int t = 0; t < 60; ++t) {
    int N = g.integer(1, 10), n = g.integer(1, 4);
    const NormSpec& nm = norms[t % 3];
    double eps = g.uniform(0, 1);
    Vec w = g.vec(n, -3, 3);
    Crosscheck c;
    if (t % 3 == 0) {
      c = dro_objective_crosscheck(w, random_classification(g, N, n), UnivariateLoss::hinge(), eps, nm);
    } else if (t % 3 == 1) {
      c = dro_objective_crosscheck(w, random_regression(g, N, n), UnivariateLoss::pinball(g.uniform()),
                                   eps, nm);
    } else {
      c = dro_objective_crosscheck(w, random_regression(g, N, n),
                                   UnivariateLoss::eps_insensitive(g.uniform(0, 1)), eps, nm);
    }
    EXPECT_LE(c.diff, 1e-6 * (1 + std::abs(c.regularized))) << t;
  }
}

TEST(LearnProperty, MonotoneInRadius) {
  Gen g(37);
  for (int t = 0; t < 6; ++t) {
    LabeledData d = random_classification(g, 12, 2);
    const NormSpec nm = t % 2 ? NormSpec::l1() : NormSpec::linf();
    double prev_obj = -kInf, prev_norm = kInf;
    for (double eps = 0; eps <= 1.0 + 1e-12; eps += 0.1) {
      auto m = dro_train_classifier(d, UnivariateLoss::hinge(), eps, nm);
      ASSERT_TRUE(m.certified);
      double wn = dual_norm_eval(nm, m.w);
      EXPECT_GE(m.objective, prev_obj - 1e-8) << t << " eps=" << eps;
      EXPECT_LE(wn, prev_norm + 1e-8 / 0.1 * 2) << t << " eps=" << eps;
      prev_obj = m.objective;
      prev_norm = wn;
    }
  }
}

TEST(LearnProperty, ObjectiveConvexAlongSegments) {
  Gen g(38);
  for (int t = 0; t < 200; ++t) {
    int n = g.integer(1, 4);
    LabeledData c = random_classification(g, 10, n);
    LabeledData r = random_regression(g, 10, n);
    Vec a = g.vec(n, -3, 3), b = g.vec(n, -3, 3);
    Vec mid = (a + b) / 2;
    double eps = g.uniform(0, 1);
    NormSpec nm = NormSpec::l2();
    for (auto L : {UnivariateLoss::hinge(), UnivariateLoss::smooth_hinge(), UnivariateLoss::logloss()})
      EXPECT_LE(classifier_objective(mid, c, L, eps, nm),
                (classifier_objective(a, c, L, eps, nm) + classifier_objective(b, c, L, eps, nm)) / 2 + 1e-10);
    for (auto L : {UnivariateLoss::huber(0.5), UnivariateLoss::pinball(0.3)})
      EXPECT_LE(regressor_objective(mid, r, L, eps, 1, nm),
                (regressor_objective(a, r, L, eps, 1, nm) + regressor_objective(b, r, L, eps, 1, nm)) / 2 + 1e-10);
    auto sq = UnivariateLoss::squared();
    EXPECT_LE(regressor_objective(mid, r, sq, eps, 2, nm),
              (regressor_objective(a, r, sq, eps, 2, nm) + regressor_objective(b, r, sq, eps, 2, nm)) / 2 + 1e-10);
  }
}

TEST(LearnProperty, ObjectiveReproducible) {
  Gen g(39);
  for (int t = 0; t < 10; ++t) {
    LabeledData d = random_classification(g, 10, 3);
    auto m = dro_train_classifier(d, UnivariateLoss::smooth_hinge(), 0.2, NormSpec::l2());
    EXPECT_NEAR(m.objective, classifier_objective(m.w, d, UnivariateLoss::smooth_hinge(), 0.2, NormSpec::l2()),
                1e-9);
    auto again = dro_train_classifier(d, UnivariateLoss::smooth_hinge(), 0.2, NormSpec::l2());
    EXPECT_TRUE(again.w == m.w);
    LabeledData r = random_regression(g, 10, 3);
    auto h = dro_train_regressor(r, UnivariateLoss::huber(0.5), 0.2, 1, NormSpec::l1());
    EXPECT_NEAR(h.objective, regressor_objective(h.w, r, UnivariateLoss::huber(0.5), 0.2, 1, NormSpec::l1()),
                1e-9);
  }
}
