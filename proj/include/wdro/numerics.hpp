#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "wdro/error.hpp"

namespace wdro {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tolerance {
  double abs = 1e-10;
  double rel = 1e-10;
  int max_iter = 10000;
};

// Bisection that runs until the bracket can no longer be split.
inline Tolerance machine_tolerance() { return {0.0, 0.0, 100000}; }

// ---------------------------------------------------------------- roots

enum class Expand { None, Up, Down, Both };

// Root of a continuous scalar function.  When f(a) and f(b) share a sign the
// bracket is grown by doubling its width (at most 60 times).
inline double bisect_root(const std::function<double(double)>& f, double a,
                          double b, const Tolerance& tol = {},
                          Expand expand = Expand::Both) {
  require(a < b, ErrorCode::InvalidArgument, "bisect_root: need a < b");
  double fa = f(a), fb = f(b);
  require(!std::isnan(fa) && !std::isnan(fb), ErrorCode::NumericalFailure,
          "bisect_root: NaN at bracket end");
  int grow = 0;
  while ((fa > 0 && fb > 0) || (fa < 0 && fb < 0)) {
    if (expand == Expand::None || grow >= 60)
      fail(ErrorCode::NoBracket, "bisect_root: no sign change in bracket");
    double w = b - a;
    if (expand == Expand::Up || expand == Expand::Both) {
      b = a + 2 * w;
      fb = f(b);
    }
    if (expand == Expand::Down || expand == Expand::Both) {
      a = b - 2 * w;
      fa = f(a);
    }
    ++grow;
  }
  if (fa == 0) return a;
  if (fb == 0) return b;
  int it = 0;
  while (true) {
    double m = a + (b - a) / 2;
    if (m <= a || m >= b) return std::abs(fa) <= std::abs(fb) ? a : b;
    double fm = f(m);
    if (fm == 0 || std::abs(fm) <= tol.abs) return m;
    if ((b - a) <= tol.rel * std::abs(m)) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
    if (++it > tol.max_iter)
      fail(ErrorCode::MaxIterExceeded, "bisect_root: iteration limit");
  }
}

struct ScalarMin {
  double x = 0;
  double value = 0;
  int evaluations = 0;
};

// Minimizes a convex function over [lo, hi].  hi may be +inf; lo must be
// finite.  g may return +inf at lo (open end).
inline ScalarMin minimize_scalar_convex(const std::function<double(double)>& g,
                                        double lo, double hi,
                                        const Tolerance& tol = {}) {
  require(std::isfinite(lo) && lo < hi, ErrorCode::InvalidArgument,
          "minimize_scalar_convex: bad domain");
  ScalarMin best{lo, kInf, 0};
  auto eval = [&](double x) {
    double v = g(x);
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.x = x;
    }
    return v;
  };
  double glo = eval(lo);
  double right = hi;
  if (!std::isfinite(hi)) {
    double h = std::max(1.0, std::abs(lo));
    double x1 = lo + h, x2 = lo + 2 * h;
    double g1 = eval(x1), g2 = eval(x2);
    int k = 0;
    while (g2 < g1) {
      if (++k > 60 || x2 - lo > std::ldexp(h, 60))
        fail(ErrorCode::Unbounded,
             "minimize_scalar_convex: still decreasing at horizon");
      x1 = x2;
      g1 = g2;
      x2 = lo + 2 * (x2 - lo);
      g2 = eval(x2);
    }
    right = x2;
  } else {
    eval(hi);
  }
  (void)glo;
  const double r = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = right;
  double c = b - r * (b - a), d = a + r * (b - a);
  double gc = eval(c), gd = eval(d);
  int it = 0;
  while (b - a > std::max(tol.abs, 1e-13 * (1 + std::abs(best.x)))) {
    if (gc <= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - r * (b - a);
      gc = eval(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + r * (b - a);
      gd = eval(d);
    }
    if (++it > tol.max_iter)
      fail(ErrorCode::MaxIterExceeded, "minimize_scalar_convex: limit");
    if (c <= a || d >= b || c >= d) break;
  }
  require(std::isfinite(best.value), ErrorCode::NumericalFailure,
          "minimize_scalar_convex: no finite value found");
  return best;
}

// ------------------------------------------------------------ spectral

inline void check_square(const Mat& S, const char* who) {
  require(S.rows() == S.cols(), ErrorCode::DimensionMismatch,
          std::string(who) + ": matrix is not square");
}

inline void check_symmetric(const Mat& S, const char* who) {
  check_square(S, who);
  double scale = 1.0 + S.cwiseAbs().maxCoeff();
  if (S.size() == 0) return;
  double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-9 * scale, ErrorCode::NotSymmetric,
          std::string(who) + ": matrix is not symmetric");
}

struct SymEig {
  Vec values;   // descending
  Mat vectors;  // columns, orthonormal
};

// Cyclic Jacobi rotations.
inline SymEig sym_eig(const Mat& S_in) {
  check_symmetric(S_in, "sym_eig");
  const Eigen::Index n = S_in.rows();
  Mat a = (S_in + S_in.transpose()) / 2;
  Mat v = Mat::Identity(n, n);
  double total = a.squaredNorm();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-34 * total || off == 0) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0) continue;
        if (std::abs(apq) < 1e-300) {
          a(p, q) = a(q, p) = 0;
          continue;
        }
        double theta = (a(q, q) - a(p, p)) / (2 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1));
        double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto i, auto j) { return a(i, i) > a(j, j); });
  SymEig out{Vec(n), Mat(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    Vec col = v.col(order[k]);
    Eigen::Index big = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(col(i)) > std::abs(col(big)) * (1 + 1e-12)) big = i;
    if (col(big) < 0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

inline Mat from_eig(const Mat& V, const Vec& values) {
  return V * values.asDiagonal() * V.transpose();
}

inline double psd_floor(const Vec& values) {
  double scale = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  return -1e-10 * std::max(1.0, scale);
}

// Eigenvalues of a PSD matrix at or below this level are indistinguishable
// from zero after a Jacobi sweep.
inline double rounding_zero(const Vec& values) {
  if (values.size() == 0) return 0.0;
  return 64 * std::numeric_limits<double>::epsilon() * static_cast<double>(values.size()) *
         values.cwiseAbs().maxCoeff();
}

inline Mat psd_sqrt(const Mat& S) {
  SymEig e = sym_eig(S);
  double floor = psd_floor(e.values);
  // eigenvalues at rounding level are zero; their roots would not be small
  double zero = rounding_zero(e.values);
  Vec r(e.values.size());
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    require(e.values(k) >= floor, ErrorCode::NotPSD,
            "psd_sqrt: matrix has a negative eigenvalue");
    r(k) = e.values(k) <= zero ? 0.0 : std::sqrt(e.values(k));
  }
  return from_eig(e.vectors, r);
}

inline void check_psd(const Mat& S, const char* who) {
  SymEig e = sym_eig(S);
  if (e.values.size() == 0) return;
  require(e.values.minCoeff() >= psd_floor(e.values), ErrorCode::NotPSD,
          std::string(who) + ": matrix is not positive semidefinite");
}

inline double lambda_max(const Mat& S) { return sym_eig(S).values(0); }

inline double lambda_min(const Mat& S) {
  SymEig e = sym_eig(S);
  return e.values(e.values.size() - 1);
}

}  // namespace wdro
