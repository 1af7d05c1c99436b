#pragma once

// Generators and brute-force oracles shared by the test binaries.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double a = 0, double b = 1) {
    return std::uniform_real_distribution<double>(a, b)(eng_);
  }
  double normal() { return std::normal_distribution<double>(0, 1)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  Vec vec(Eigen::Index n, double a = -1, double b = 1) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(a, b);
    return v;
  }
  Vec gauss(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }
  Mat mat(Eigen::Index r, Eigen::Index c, double a = -1, double b = 1) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(a, b);
    return m;
  }
  Mat symmetric(Eigen::Index n) {
    Mat m = mat(n, n);
    return (m + m.transpose()) / 2;
  }
  // Well conditioned positive definite matrix.
  Mat spd(Eigen::Index n, double floor = 0.2) {
    Mat m = mat(n, n);
    return m * m.transpose() + floor * Mat::Identity(n, n);
  }
  Mat orthogonal(Eigen::Index n) {
    Eigen::HouseholderQR<Mat> qr(mat(n, n));
    return qr.householderQ();
  }
  std::vector<double> simplex_weights(int n) {
    std::vector<double> w(n);
    double s = 0;
    for (auto& x : w) s += (x = uniform(0.1, 1.0));
    for (auto& x : w) x /= s;
    return w;
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// min c'x s.t. A x <= b by enumerating basic solutions.  The region must be
// bounded.  Returns +inf when no vertex is feasible.
inline double lp_vertex_oracle(const Mat& A, const Vec& b, const Vec& c, Vec* argmin = nullptr) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  double best = INFINITY;
  std::vector<int> pick(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Mat S(n, n);
      Vec r(n);
      for (int k = 0; k < n; ++k) {
        S.row(k) = A.row(pick[k]);
        r(k) = b(pick[k]);
      }
      Eigen::FullPivLU<Mat> lu(S);
      if (lu.rank() < n) return;
      Vec x = lu.solve(r);
      if (((A * x - b).array() > 1e-9).any()) return;
      double v = c.dot(x);
      if (v < best) {
        best = v;
        if (argmin) *argmin = x;
      }
      return;
    }
    for (int i = start; i < m; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

// Central differences.
inline Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                            double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

}  // namespace testing_support
