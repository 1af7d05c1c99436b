#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wdro/convex.hpp"
#include "wdro/lp.hpp"

namespace wdro {

// Atoms are the rows of `atoms`.
struct DiscreteDistribution {
  Mat atoms;
  Vec weights;

  Eigen::Index size() const { return atoms.rows(); }
  Eigen::Index dim() const { return atoms.cols(); }
  Vec atom(Eigen::Index i) const { return atoms.row(i).transpose(); }
};

struct MomentPair {
  Vec mean;
  Mat cov;
};

inline void validate(const DiscreteDistribution& Q, const char* who = "distribution") {
  require(Q.atoms.rows() > 0, ErrorCode::EmptySample, std::string(who) + ": no atoms");
  require(Q.weights.size() == Q.atoms.rows(), ErrorCode::DimensionMismatch,
          std::string(who) + ": one weight per atom required");
  require(Q.weights.minCoeff() >= 0, ErrorCode::InvalidArgument,
          std::string(who) + ": negative weight");
  require(std::abs(Q.weights.sum() - 1) <= 1e-12 * Q.weights.size() + 1e-12,
          ErrorCode::InvalidArgument, std::string(who) + ": weights do not sum to one");
}

inline DiscreteDistribution empirical(const Mat& samples) {
  require(samples.rows() > 0, ErrorCode::EmptySample, "empirical: no samples");
  const Eigen::Index n = samples.rows();
  return {samples, Vec::Constant(n, 1.0 / static_cast<double>(n))};
}

inline DiscreteDistribution dirac(const Vec& x) {
  return {x.transpose(), Vec::Ones(1)};
}

template <class F>
double expectation(const DiscreteDistribution& Q, F&& f) {
  double s = 0;
  for (Eigen::Index i = 0; i < Q.size(); ++i)
    if (Q.weights(i) != 0) s += Q.weights(i) * f(Q.atom(i));
  return s;
}

inline MomentPair moments(const DiscreteDistribution& Q) {
  validate(Q);
  Vec mu = Q.atoms.transpose() * Q.weights;
  Mat centered = Q.atoms.rowwise() - mu.transpose();
  Mat cov = centered.transpose() * Q.weights.asDiagonal() * centered;
  return {mu, (cov + cov.transpose()) / 2};
}

// Collapses atoms closer than tol (Euclidean) and drops zero weights.  The
// result is sorted lexicographically so equal distributions compare equal.
inline DiscreteDistribution merge_atoms(const DiscreteDistribution& Q, double tol = 1e-10) {
  std::vector<Vec> pts;
  std::vector<double> w;
  for (Eigen::Index i = 0; i < Q.size(); ++i) {
    if (Q.weights(i) <= 0) continue;
    Vec x = Q.atom(i);
    bool merged = false;
    for (size_t k = 0; k < pts.size(); ++k) {
      if ((pts[k] - x).norm() <= tol) {
        w[k] += Q.weights(i);
        merged = true;
        break;
      }
    }
    if (!merged) {
      pts.push_back(x);
      w.push_back(Q.weights(i));
    }
  }
  std::vector<size_t> order(pts.size());
  for (size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    for (Eigen::Index j = 0; j < pts[a].size(); ++j)
      if (pts[a](j) != pts[b](j)) return pts[a](j) < pts[b](j);
    return false;
  });
  DiscreteDistribution out{Mat(pts.size(), Q.dim()), Vec(pts.size())};
  for (size_t k = 0; k < order.size(); ++k) {
    out.atoms.row(k) = pts[order[k]].transpose();
    out.weights(k) = w[order[k]];
  }
  return out;
}

inline bool same_distribution(const DiscreteDistribution& a, const DiscreteDistribution& b,
                              double tol = 1e-10) {
  DiscreteDistribution x = merge_atoms(a, tol), y = merge_atoms(b, tol);
  if (x.size() != y.size()) return false;
  return (x.atoms - y.atoms).cwiseAbs().maxCoeff() <= tol &&
         (x.weights - y.weights).cwiseAbs().maxCoeff() <= 1e-12;
}

struct DualPotentials {
  Vec phi;  // over atoms of Q
  Vec psi;  // over atoms of Q'
};

struct TransportResult {
  double distance = 0;
  double cost = 0;  // distance^p
  Mat plan;
  DualPotentials duals;
  double dual_value = 0;
  double gap = 0;
};

inline Mat cost_matrix(const DiscreteDistribution& Q, const DiscreteDistribution& Qp, double p,
                       const NormSpec& norm) {
  Mat c(Q.size(), Qp.size());
  for (Eigen::Index i = 0; i < Q.size(); ++i)
    for (Eigen::Index j = 0; j < Qp.size(); ++j) {
      double d = norm_eval(norm, Q.atom(i) - Qp.atom(j));
      c(i, j) = p == 1 ? d : std::pow(d, p);
    }
  return c;
}

inline TransportResult wasserstein_p(const DiscreteDistribution& Q, const DiscreteDistribution& Qp,
                                     double p, const NormSpec& norm = NormSpec::l2(),
                                     const Tolerance& tol = {}) {
  validate(Q, "wasserstein_p");
  validate(Qp, "wasserstein_p");
  require(Q.dim() == Qp.dim(), ErrorCode::DimensionMismatch,
          "wasserstein_p: distributions live in different dimensions");
  require(p >= 1 && std::isfinite(p), ErrorCode::InvalidArgument,
          "wasserstein_p: order must be finite and >= 1");
  const Eigen::Index n = Q.size(), k = Qp.size();
  Mat c = cost_matrix(Q, Qp, p, norm);
  LpBuilder b;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) b.add_var(0, kInf, c(i, j));
  auto var = [&](Eigen::Index i, Eigen::Index j) { return static_cast<int>(i * k + j); };
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<LinTerm> row;
    for (Eigen::Index j = 0; j < k; ++j) row.push_back({var(i, j), 1.0});
    b.add_row(std::move(row), RowSense::Eq, Q.weights(i));
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    std::vector<LinTerm> row;
    for (Eigen::Index i = 0; i < n; ++i) row.push_back({var(i, j), 1.0});
    b.add_row(std::move(row), RowSense::Eq, Qp.weights(j));
  }
  LinearProgram lp = b.build();
  LpSolution s = require_optimal(solve_lp(lp, tol), "wasserstein_p");
  TransportResult r;
  r.plan = Mat(n, k);
  // degenerate pivots leave mass of rounding size on arbitrary cells
  const double dust = 64 * std::numeric_limits<double>::epsilon() * static_cast<double>(n + k) *
                      std::max(Q.weights.maxCoeff(), Qp.weights.maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      double x = s.x(var(i, j));
      r.plan(i, j) = x <= dust ? 0.0 : x;
    }
  r.cost = std::max(0.0, r.plan.cwiseProduct(c).sum());
  r.distance = p == 1 ? r.cost : std::pow(r.cost, 1 / p);
  r.duals.phi = -s.dual.head(n);
  r.duals.psi = s.dual.tail(k);
  r.dual_value = r.duals.psi.dot(Qp.weights) - r.duals.phi.dot(Q.weights);
  r.gap = r.cost - r.dual_value;
  return r;
}

struct KrCheck {
  bool feasible = true;
  double dual_value = 0;
  double max_violation = 0;
  Eigen::Index row = -1;  // violated pair, when infeasible
  Eigen::Index col = -1;
};

// Checks psi_j - phi_i <= ||x_i - x'_j|| on every pair and returns the dual
// objective sum_j psi_j w'_j - sum_i phi_i w_i.
inline KrCheck kr_verify(const DiscreteDistribution& Q, const DiscreteDistribution& Qp,
                         const NormSpec& norm, const DualPotentials& d) {
  require(d.phi.size() == Q.size() && d.psi.size() == Qp.size(), ErrorCode::DimensionMismatch,
          "kr_verify: one potential per atom required");
  Mat c = cost_matrix(Q, Qp, 1, norm);
  KrCheck out;
  double tol = 1e-9 * (1 + c.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < Q.size(); ++i)
    for (Eigen::Index j = 0; j < Qp.size(); ++j) {
      double v = d.psi(j) - d.phi(i) - c(i, j);
      if (v > out.max_violation) {
        out.max_violation = v;
        if (v > tol) {
          out.feasible = false;
          out.row = i;
          out.col = j;
        }
      }
    }
  out.dual_value = d.psi.dot(Qp.weights) - d.phi.dot(Q.weights);
  return out;
}

inline double gelbrich_distance(const MomentPair& a, const MomentPair& b) {
  require(a.mean.size() == b.mean.size() && a.cov.rows() == a.mean.size() &&
              b.cov.rows() == b.mean.size(),
          ErrorCode::DimensionMismatch, "gelbrich_distance: dimensions");
  Mat ra = psd_sqrt(a.cov);
  check_psd(b.cov, "gelbrich_distance");
  Mat inner = ra * b.cov * ra;
  Mat root = psd_sqrt((inner + inner.transpose()) / 2);
  double tr = (a.cov + b.cov).trace();
  double t = tr - 2 * root.trace();
  if (t < 0) {
    require(t >= -1e-8 * std::max(tr, 1e-300) || tr == 0, ErrorCode::NumericalFailure,
            "gelbrich_distance: negative trace term beyond tolerance");
    t = 0;
  }
  return std::sqrt((a.mean - b.mean).squaredNorm() + t);
}

}  // namespace wdro
