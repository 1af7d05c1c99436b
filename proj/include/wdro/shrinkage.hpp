#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "wdro/numerics.hpp"
#include "wdro/transport.hpp"

namespace wdro {

struct ShrinkageResult {
  Vec mean;
  Mat precision;
  double gamma_star = 0;
  std::vector<std::pair<double, double>> eigen_map;  // (sample eigenvalue, shrunk precision eigenvalue)
};

// Biased (1/N) sample mean and covariance of the rows.
inline MomentPair sample_moments(const Mat& samples) {
  return moments(empirical(samples));
}

namespace shrink_detail {

// 2 l g / (sqrt(l^2 g^2 + 4 l g) + l g), written without cancellation
inline double half_gap(double l, double g) {
  double lg = l * g;
  if (lg <= 0) return 0;
  return 2 * lg / (std::sqrt(lg * lg + 4 * lg) + lg);
}

inline double equation(const Vec& lam, double eps, double g) {
  double s = eps * eps * g - static_cast<double>(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) s += half_gap(lam(i), g);
  return s;
}

// g [1 - (sqrt(l^2 g^2 + 4 l g) - l g) / 2] = 4 l g^2 / (sqrt(.) + l g)^2
inline double shrunk(double l, double g) {
  double lg = l * g;
  if (lg <= 0) return g;
  double r = std::sqrt(lg * lg + 4 * lg) + lg;
  return 4 * lg * g / (r * r);
}

}  // namespace shrink_detail

inline ShrinkageResult wasserstein_shrinkage(const MomentPair& m, double eps,
                                             const Tolerance& = {}) {
  require(std::isfinite(eps) && eps > 0, ErrorCode::InvalidArgument,
          "wasserstein_shrinkage: radius must be positive");
  require(m.cov.rows() == m.mean.size(), ErrorCode::DimensionMismatch,
          "wasserstein_shrinkage: dimensions");
  check_symmetric(m.cov, "wasserstein_shrinkage");
  check_psd(m.cov, "wasserstein_shrinkage");
  SymEig e = sym_eig(m.cov);
  Vec lam = e.values;
  const double zero = rounding_zero(lam);
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) <= zero) lam(i) = 0;
  ShrinkageResult r;
  r.mean = m.mean;
  r.gamma_star = bisect_root([&](double g) { return shrink_detail::equation(lam, eps, g); }, 0, 1,
                             machine_tolerance(), Expand::Up);
  require(r.gamma_star > 0, ErrorCode::NumericalFailure, "wasserstein_shrinkage: no positive root");
  Vec x(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    x(i) = shrink_detail::shrunk(lam(i), r.gamma_star);
    r.eigen_map.push_back({lam(i), x(i)});
  }
  Mat P = from_eig(e.vectors, x);
  r.precision = (P + P.transpose()) / 2;
  return r;
}

inline ShrinkageResult wasserstein_shrinkage(const Mat& samples, double eps, const Tolerance& tol = {}) {
  return wasserstein_shrinkage(sample_moments(samples), eps, tol);
}

}  // namespace wdro
