#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "wdro/numerics.hpp"
#include "wdro/transport.hpp"
#include "wdro/wc_empirical.hpp"

namespace wdro {

struct GelbrichBall {
  MomentPair center;
  double eps = 0;
};

inline bool gelbrich_hull_contains(const GelbrichBall& ball, const MomentPair& candidate,
                                   double tol = 1e-6) {
  require(candidate.mean.size() == ball.center.mean.size(), ErrorCode::DimensionMismatch,
          "gelbrich_hull_contains: dimensions");
  return gelbrich_distance(ball.center, candidate) <= ball.eps + tol;
}

// Checks one instance of the inclusion "W_p(Q, reference) <= eps implies the
// moments of Q lie in the Gelbrich hull around the reference moments".
inline bool projection_check(const DiscreteDistribution& reference, double eps,
                             const DiscreteDistribution& Q, double p = 2, double tol = 1e-6) {
  require(p >= 2, ErrorCode::InvalidArgument, "projection_check: order must be >= 2");
  if (wasserstein_p(Q, reference, p).distance > eps + tol) return true;
  return gelbrich_hull_contains({moments(reference), eps}, moments(Q), tol);
}

struct GelbrichResult {
  double value = 0;         // dual objective at gamma_star
  double primal_value = 0;  // loss evaluated at the extremal moments
  MomentPair extremal;
  double gamma_star = 0;
  bool interior = true;      // false: the boundary equation has no root, gamma_star = 0
  double regularization = 0;  // ridge added to a singular covariance
};

namespace moment_detail {

inline double quad_moment_risk(const QuadraticLoss& L, const MomentPair& m) {
  return (L.Q * m.cov).trace() + m.mean.dot(L.Q * m.mean) + 2 * L.q.dot(m.mean);
}

}  // namespace moment_detail

// sup over the Gelbrich hull of E[xi^T Q xi + 2 q^T xi].
inline GelbrichResult gelbrich_risk_quadratic(const QuadraticLoss& loss, const MomentPair& center,
                                              double eps, const Tolerance& = {}) {
  validate(loss);
  const Eigen::Index m = loss.Q.rows();
  require(center.mean.size() == m && center.cov.rows() == m && center.cov.cols() == m,
          ErrorCode::DimensionMismatch, "gelbrich_risk_quadratic: dimensions");
  require(std::isfinite(eps) && eps > 0, ErrorCode::InvalidArgument,
          "gelbrich_risk_quadratic: radius must be positive");
  check_symmetric(center.cov, "gelbrich_risk_quadratic");
  check_psd(center.cov, "gelbrich_risk_quadratic");
  GelbrichResult r;
  MomentPair c = center;
  if (lambda_min(c.cov) <= 0) {
    double tr = c.cov.trace();
    r.regularization = tr > 0 ? 1e-10 * tr / static_cast<double>(m) : 1e-10;
    c.cov += r.regularization * Mat::Identity(m, m);
  }
  const double nominal = moment_detail::quad_moment_risk(loss, c);

  if (loss.Q.cwiseAbs().maxCoeff() == 0) {
    double qn = loss.q.norm();
    r.value = nominal + 2 * eps * qn;
    r.extremal = c;
    if (qn > 0) {
      r.extremal.mean += eps * loss.q / qn;
      r.gamma_star = qn / eps;
    }
    r.primal_value = moment_detail::quad_moment_risk(loss, r.extremal);
    return r;
  }

  SymEig e = sym_eig(loss.Q);
  const Vec& lam = e.values;
  const Mat& V = e.vectors;
  Vec g = V.transpose() * (loss.q + loss.Q * c.mean);
  Mat S = V.transpose() * c.cov * V;
  // G(gamma) = gamma eps^2 + nominal + sum_k coef_k / (gamma - lam_k)
  Vec coef(m);
  for (Eigen::Index k = 0; k < m; ++k) coef(k) = g(k) * g(k) + lam(k) * lam(k) * S(k, k);
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  const double lo = std::max(0.0, lam(0));
  auto term = [&](double gam, int power) {
    double t = 0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (coef(k) <= 1e-24 * scale * scale * (1 + c.cov.trace() + c.mean.squaredNorm())) continue;
      double d = gam - lam(k);
      if (d <= 0) return kInf;
      t += power == 1 ? coef(k) / d : coef(k) / (d * d);
    }
    return t;
  };
  const double e2 = eps * eps;
  double gam;
  if (term(lo, 2) <= e2) {
    gam = lo;
    r.interior = false;
  } else {
    gam = bisect_root([&](double x) { return term(x, 2) - e2; }, lo, lo + 1, machine_tolerance(),
                      Expand::Up);
    if (gam <= lo) gam = std::nextafter(lo, kInf);
  }
  r.gamma_star = gam;
  r.value = gam * e2 + nominal + term(gam, 1);

  Vec shift(m), a(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    double d = gam - lam(k);
    shift(k) = d > 0 ? g(k) / d : 0.0;
    a(k) = d > 0 ? gam / d : (gam == 0 && lam(k) == 0 ? 1.0 : 0.0);
  }
  r.extremal.mean = c.mean + V * shift;
  Mat A = V * a.asDiagonal() * V.transpose();
  Mat sig = A * c.cov * A;
  r.extremal.cov = (sig + sig.transpose()) / 2;
  r.primal_value = moment_detail::quad_moment_risk(loss, r.extremal);
  return r;
}

// Support function of {(mu, M = Sigma + mu mu^T)} over the hull at (q, Qm).
inline double support_V(const Vec& q, const Mat& Qm, const MomentPair& center, double eps,
                        const Tolerance& tol = {}) {
  return gelbrich_risk_quadratic({Qm, q / 2}, center, eps, tol).value;
}

// ------------------------------------------------------------ elliptical

enum class Generator { Gaussian, Logistic, StudentT };

inline const char* generator_name(Generator g) {
  switch (g) {
    case Generator::Gaussian: return "gaussian";
    case Generator::Logistic: return "logistic";
    case Generator::StudentT: return "t";
  }
  return "?";
}

struct EllipticalSpec {
  Generator generator = Generator::Gaussian;
  double nu = 0;  // degrees of freedom for the t generator
  MomentPair moments;
};

inline void validate(const EllipticalSpec& s) {
  require(s.generator != Generator::StudentT || s.nu > 2, ErrorCode::InvalidArgument,
          "elliptical: t generator needs nu > 2");
  require(s.moments.cov.rows() == s.moments.mean.size(), ErrorCode::DimensionMismatch,
          "elliptical: dimensions");
  check_symmetric(s.moments.cov, "elliptical");
  require(lambda_min(s.moments.cov) > 0, ErrorCode::NotPSD,
          "elliptical: covariance must be positive definite");
}

inline double gaussian_density(const MomentPair& m, const Vec& x) {
  Eigen::LLT<Mat> llt(m.cov);
  require(llt.info() == Eigen::Success, ErrorCode::NotPSD,
          "gaussian_density: covariance must be positive definite");
  Vec z = llt.matrixL().solve(x - m.mean);
  double logdet = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double k = static_cast<double>(x.size());
  return std::exp(-0.5 * z.squaredNorm() - 0.5 * logdet - 0.5 * k * std::log(2 * std::numbers::pi));
}

struct EllipticalResult {
  double value = 0;
  EllipticalSpec extremal;
  GelbrichResult detail;
};

inline EllipticalResult wc_risk_elliptical_quadratic(const QuadraticLoss& loss,
                                                     const EllipticalSpec& nominal, double eps,
                                                     const Tolerance& tol = {}) {
  validate(nominal);
  EllipticalResult r;
  r.detail = gelbrich_risk_quadratic(loss, nominal.moments, eps, tol);
  r.value = r.detail.value;
  r.extremal = nominal;
  r.extremal.moments = r.detail.extremal;
  return r;
}

}  // namespace wdro
