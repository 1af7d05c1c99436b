#pragma once

#include <cmath>
#include <vector>

#include "wdro/numerics.hpp"
#include "wdro/transport.hpp"

namespace wdro {

// xi = [x; y] with x of size mx and y of size my.
struct JointMoments {
  int mx = 0;
  int my = 0;
  Vec mean;
  Mat cov;
};

struct AffineEstimator {
  Mat A;  // mx x my
  Vec b;

  Vec operator()(const Vec& y) const { return A * y + b; }
};

namespace mmse_detail {

inline void check_partition(const Mat& S, int mx, int my, const char* who) {
  require(mx > 0 && my > 0 && S.rows() == mx + my && S.cols() == mx + my,
          ErrorCode::DimensionMismatch, std::string(who) + ": partition does not match the matrix");
}

// S_xy S_yy^{-1}
inline Mat gain(const Mat& S, int mx, int my, const char* who) {
  check_partition(S, mx, my, who);
  Mat Syy = S.bottomRightCorner(my, my);
  Mat sym = (Syy + Syy.transpose()) / 2;
  SymEig e = sym_eig(sym);
  require(e.values(my - 1) > 1e-12 * std::max(1.0, e.values(0)), ErrorCode::SingularBlock,
          std::string(who) + ": observation block is singular");
  Eigen::LDLT<Mat> f(sym);
  return f.solve(Mat(S.topRightCorner(mx, my).transpose())).transpose();
}

}  // namespace mmse_detail

// Tr[S_xx - S_xy S_yy^{-1} S_yx]
inline double mmse_objective(const Mat& S, int mx, int my) {
  Mat K = mmse_detail::gain(S, mx, my, "mmse_objective");
  return (S.topLeftCorner(mx, mx) - K * S.topRightCorner(mx, my).transpose()).trace();
}

// [I, -K; -K^T, K^T K] with K = S_xy S_yy^{-1}
inline Mat mmse_gradient(const Mat& S, int mx, int my) {
  Mat K = mmse_detail::gain(S, mx, my, "mmse_gradient");
  Mat G(mx + my, mx + my);
  G.topLeftCorner(mx, mx) = Mat::Identity(mx, mx);
  G.topRightCorner(mx, my) = -K;
  G.bottomLeftCorner(my, mx) = -K.transpose();
  G.bottomRightCorner(my, my) = K.transpose() * K;
  return (G + G.transpose()) / 2;
}

// Tr[S + C - 2 (C^{1/2} S C^{1/2})^{1/2}]
inline double gelbrich_trace(const Mat& S, const Mat& C) {
  Mat r = psd_sqrt(C);
  Mat inner = r * S * r;
  return (S + C).trace() - 2 * psd_sqrt((inner + inner.transpose()) / 2).trace();
}

struct FwDirection {
  Mat D;
  double gamma_star = kInf;  // +inf when D is the center itself
  bool repaired = false;     // D was pulled toward the center to meet the eigenvalue floor
};

// argmax Tr[D G] over {Tr[D + C - 2 (C^{1/2} D C^{1/2})^{1/2}] <= eps^2, D >= lambda_min(C) I}
inline FwDirection fw_direction(const Mat& G, const Mat& C, double eps, const Tolerance& = {}) {
  check_square(G, "fw_direction");
  require(G.rows() == C.rows(), ErrorCode::DimensionMismatch, "fw_direction: dimensions");
  require(std::isfinite(eps) && eps >= 0, ErrorCode::InvalidArgument,
          "fw_direction: radius must be finite and >= 0");
  check_symmetric(G, "fw_direction");
  const Eigen::Index m = G.rows();
  FwDirection out;
  SymEig e = sym_eig(G);
  Mat W = e.vectors.transpose() * C * e.vectors;
  const double gmax = e.values.cwiseAbs().maxCoeff();
  if (eps == 0 || gmax == 0) {
    out.D = C;
    return out;
  }
  // Tr[C G (g I - G)^{-2} G] = sum_k (l_k / (g - l_k))^2 W_kk, decreasing for g > l_max
  auto lhs = [&](double g) {
    double s = 0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (e.values(k) == 0) continue;
      double d = g - e.values(k);
      if (d <= 0) return kInf;
      double r = e.values(k) / d;
      s += r * r * W(k, k);
    }
    return s;
  };
  const double lo = std::max(0.0, e.values(0));
  double g = bisect_root([&](double x) { return lhs(x) - eps * eps; }, lo, lo + std::max(1.0, gmax),
                         machine_tolerance(), Expand::Up);
  if (g <= lo) g = std::nextafter(lo, kInf);
  out.gamma_star = g;
  Vec a(m);
  for (Eigen::Index k = 0; k < m; ++k) a(k) = g / (g - e.values(k));
  Mat A = e.vectors * a.asDiagonal() * e.vectors.transpose();
  Mat D = A * C * A;
  out.D = (D + D.transpose()) / 2;
  const double floor = lambda_min(C);
  const double slack = 1e-9 * std::max(1.0, floor);
  if (lambda_min(out.D) < floor - slack) {
    // the feasible set is convex and contains C, so a point on [C, D] works
    double lo_t = 0, hi_t = 1;
    for (int it = 0; it < 100; ++it) {
      double t = (lo_t + hi_t) / 2;
      (lambda_min(Mat(C + t * (D - C))) >= floor - slack ? lo_t : hi_t) = t;
    }
    out.D = C + lo_t * (out.D - C);
    out.repaired = true;
  }
  return out;
}

struct FwOptions {
  int iterations = 500;
  double gap_tol = 0;  // stop once the gap falls to this level
  bool record_iterates = false;
};

struct FwResult {
  Mat S;  // best iterate
  double objective = 0;
  AffineEstimator estimator;
  std::vector<double> gaps;        // gap at S(k)
  std::vector<double> objectives;  // f(S(k))
  std::vector<Mat> iterates;       // only with record_iterates
  int iterations = 0;
  double regularization = 0;
  bool repaired = false;
};

inline FwResult fw_solve(const JointMoments& nominal, double eps, const FwOptions& opt = {},
                         const Tolerance& tol = {}) {
  const int mx = nominal.mx, my = nominal.my;
  mmse_detail::check_partition(nominal.cov, mx, my, "fw_solve");
  require(nominal.mean.size() == mx + my, ErrorCode::DimensionMismatch, "fw_solve: mean size");
  require(std::isfinite(eps) && eps >= 0, ErrorCode::InvalidArgument,
          "fw_solve: radius must be finite and >= 0");
  require(opt.iterations >= 0, ErrorCode::InvalidArgument, "fw_solve: negative iteration count");
  check_symmetric(nominal.cov, "fw_solve");
  check_psd(nominal.cov, "fw_solve");
  FwResult r;
  Mat C = (nominal.cov + nominal.cov.transpose()) / 2;
  const int m = mx + my;
  if (lambda_min(C) <= 0) {
    double tr = C.trace();
    r.regularization = tr > 0 ? 1e-10 * tr / m : 1e-10;
    C += r.regularization * Mat::Identity(m, m);
  }
  Mat S = C;
  r.S = S;
  r.objective = mmse_objective(S, mx, my);
  for (int k = 0; k <= opt.iterations; ++k) {
    double f = mmse_objective(S, mx, my);
    Mat G = mmse_gradient(S, mx, my);
    FwDirection dir = fw_direction(G, C, eps, tol);
    r.repaired = r.repaired || dir.repaired;
    double gap = std::max(0.0, ((dir.D - S) * G).trace());
    r.objectives.push_back(f);
    r.gaps.push_back(gap);
    if (opt.record_iterates) r.iterates.push_back(S);
    if (f > r.objective) {
      r.objective = f;
      r.S = S;
    }
    r.iterations = k;
    if (k == opt.iterations || gap <= opt.gap_tol) break;
    double alpha = 2.0 / (k + 2);
    Mat next = alpha * dir.D + (1 - alpha) * S;
    S = (next + next.transpose()) / 2;
  }
  r.estimator.A = mmse_detail::gain(r.S, mx, my, "fw_solve");
  r.estimator.b = nominal.mean.head(mx) - r.estimator.A * nominal.mean.tail(my);
  return r;
}

}  // namespace wdro
