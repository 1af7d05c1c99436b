#pragma once

// Dense revised simplex.  Dantzig pricing, switching to Bland's rule after a
// run of degenerate pivots.

#include <algorithm>
#include <cmath>
#include <vector>

#include "wdro/numerics.hpp"

namespace wdro {

enum class RowSense { Le, Ge, Eq };

// minimize c'x  s.t.  A x (sense) b,  lower <= x <= upper
struct LinearProgram {
  Mat A;
  Vec b;
  std::vector<RowSense> sense;
  Vec c;
  Vec lower;
  Vec upper;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* status_name(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double objective = 0;
  Vec dual;          // one per row: y <= 0 on Le rows, y >= 0 on Ge rows
  Vec reduced_cost;  // c - A'y
  int iterations = 0;
};

namespace lp_detail {

struct Column {
  int var;      // original variable, -1 for slack/artificial
  double sign;  // x_var = shift + sign * column value
};

class Simplex {
 public:
  Simplex(Mat A, Vec b, Vec cost, std::vector<bool> artificial, std::vector<int> basis,
          int max_iter)
      : A_(std::move(A)), b_(std::move(b)), c_(std::move(cost)),
        art_(std::move(artificial)), basis_(std::move(basis)), max_iter_(max_iter) {
    m_ = A_.rows();
    n_ = A_.cols();
    in_basis_.assign(n_, -1);
    for (Eigen::Index r = 0; r < m_; ++r) in_basis_[basis_[r]] = static_cast<int>(r);
    refactor();
  }

  void set_cost(const Vec& c) { c_ = c; }
  void bar_artificials() { barred_ = true; }
  int iterations() const { return iters_; }

  // Returns false when unbounded.
  bool run() {
    int degenerate_run = 0;
    while (true) {
      if (since_refactor_ >= 50) refactor();
      Vec cb(m_);
      for (Eigen::Index r = 0; r < m_; ++r) cb(r) = c_(basis_[r]);
      Vec y = Binv_.transpose() * cb;
      bool bland = degenerate_run > 30;
      int enter = -1;
      double best = 0;
      double cscale = 1.0 + c_.cwiseAbs().maxCoeff();
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (in_basis_[j] >= 0) continue;
        if (barred_ && art_[j]) continue;
        double d = c_(j) - A_.col(j).dot(y);
        if (d < -1e-11 * cscale) {
          if (bland) {
            enter = static_cast<int>(j);
            break;
          }
          double score = d / (1.0 + A_.col(j).norm());
          if (score < best) {
            best = score;
            enter = static_cast<int>(j);
          }
        }
      }
      if (enter < 0) return true;
      Vec dir = Binv_ * A_.col(enter);
      int leave = -1;
      double theta = kInf;
      for (Eigen::Index r = 0; r < m_; ++r) {
        if (dir(r) <= 1e-11) continue;
        double ratio = std::max(0.0, xb_(r)) / dir(r);
        bool take = false;
        if (leave < 0 || ratio < theta - 1e-13 * (1 + theta)) {
          take = true;
        } else if (ratio <= theta + 1e-13 * (1 + theta)) {
          if (bland)
            take = basis_[r] < basis_[leave];
          else
            take = dir(r) > dir(leave);
        }
        if (take) {
          leave = static_cast<int>(r);
          theta = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter, dir, theta);
      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
      if (++iters_ > max_iter_)
        fail(ErrorCode::MaxIterExceeded, "solve_lp: iteration limit");
    }
  }

  // After phase 1: swap zero-level artificials out of the basis when possible.
  void drive_out_artificials() {
    for (Eigen::Index r = 0; r < m_; ++r) {
      if (!art_[basis_[r]]) continue;
      Vec row = Binv_.row(r);
      int best = -1;
      double mag = 1e-9;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (art_[j] || in_basis_[j] >= 0) continue;
        double v = std::abs(row.dot(A_.col(j)));
        if (v > mag) {
          mag = v;
          best = static_cast<int>(j);
        }
      }
      if (best >= 0) {
        Vec dir = Binv_ * A_.col(best);
        pivot(static_cast<int>(r), best, dir, 0.0);
      }
    }
  }

  double objective() const {
    double v = 0;
    for (Eigen::Index r = 0; r < m_; ++r) v += c_(basis_[r]) * xb_(r);
    return v;
  }

  Vec primal() const {
    Vec x = Vec::Zero(n_);
    for (Eigen::Index r = 0; r < m_; ++r) x(basis_[r]) = std::max(0.0, xb_(r));
    return x;
  }

  Vec duals() const {
    Vec cb(m_);
    for (Eigen::Index r = 0; r < m_; ++r) cb(r) = c_(basis_[r]);
    return Binv_.transpose() * cb;
  }

 private:
  void refactor() {
    Mat B(m_, m_);
    for (Eigen::Index r = 0; r < m_; ++r) B.col(r) = A_.col(basis_[r]);
    Eigen::PartialPivLU<Mat> lu(B);
    Binv_ = lu.inverse();
    xb_ = Binv_ * b_;
    for (Eigen::Index r = 0; r < m_; ++r)
      if (xb_(r) < 0 && xb_(r) > -1e-9 * (1 + b_.cwiseAbs().maxCoeff())) xb_(r) = 0;
    since_refactor_ = 0;
  }

  void pivot(int r, int enter, const Vec& dir, double theta) {
    xb_ -= theta * dir;
    xb_(r) = theta;
    double p = dir(r);
    Binv_.row(r) /= p;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == r || dir(i) == 0) continue;
      Binv_.row(i) -= dir(i) * Binv_.row(r);
    }
    in_basis_[basis_[r]] = -1;
    basis_[r] = enter;
    in_basis_[enter] = r;
    ++since_refactor_;
  }

  Mat A_;
  Vec b_, c_;
  std::vector<bool> art_;
  std::vector<int> basis_;
  std::vector<int> in_basis_;
  Mat Binv_;
  Vec xb_;
  Eigen::Index m_ = 0, n_ = 0;
  int iters_ = 0, since_refactor_ = 0, max_iter_;
  bool barred_ = false;
};

}  // namespace lp_detail

inline LpSolution solve_lp(const LinearProgram& lp, const Tolerance& tol = {}) {
  const Eigen::Index m0 = lp.A.rows(), n0 = lp.A.cols();
  require(lp.b.size() == m0 && static_cast<Eigen::Index>(lp.sense.size()) == m0 &&
              lp.c.size() == n0 && lp.lower.size() == n0 && lp.upper.size() == n0,
          ErrorCode::DimensionMismatch, "solve_lp: inconsistent shapes");
  for (Eigen::Index j = 0; j < n0; ++j)
    require(lp.lower(j) <= lp.upper(j), ErrorCode::InvalidArgument,
            "solve_lp: lower bound above upper bound");

  // Columns of the standard form and the shift of each original variable.
  std::vector<lp_detail::Column> cols;
  Vec shift = Vec::Zero(n0);
  std::vector<std::pair<int, double>> upper_rows;  // (column, range)
  for (Eigen::Index j = 0; j < n0; ++j) {
    double lo = lp.lower(j), hi = lp.upper(j);
    int var = static_cast<int>(j);
    if (std::isfinite(lo)) {
      shift(j) = lo;
      cols.push_back({var, 1.0});
      if (std::isfinite(hi)) upper_rows.push_back({static_cast<int>(cols.size()) - 1, hi - lo});
    } else if (std::isfinite(hi)) {
      shift(j) = hi;
      cols.push_back({var, -1.0});
    } else {
      cols.push_back({var, 1.0});
      cols.push_back({var, -1.0});
    }
  }
  const Eigen::Index nx = static_cast<Eigen::Index>(cols.size());
  const Eigen::Index m = m0 + static_cast<Eigen::Index>(upper_rows.size());

  Vec rhs(m);
  std::vector<RowSense> sense(m, RowSense::Le);
  Mat Ax = Mat::Zero(m, nx);
  for (Eigen::Index i = 0; i < m0; ++i) {
    rhs(i) = lp.b(i) - lp.A.row(i).dot(shift);
    sense[i] = lp.sense[i];
    for (Eigen::Index k = 0; k < nx; ++k) Ax(i, k) = lp.A(i, cols[k].var) * cols[k].sign;
  }
  for (size_t u = 0; u < upper_rows.size(); ++u) {
    Eigen::Index i = m0 + static_cast<Eigen::Index>(u);
    Ax(i, upper_rows[u].first) = 1.0;
    rhs(i) = upper_rows[u].second;
  }

  LpSolution out;
  if (m == 0) {
    out.x = shift;
    for (Eigen::Index k = 0; k < nx; ++k) {
      double ck = lp.c(cols[k].var) * cols[k].sign;
      if (ck < 0) {
        out.status = LpStatus::Unbounded;
        return out;
      }
    }
    out.status = LpStatus::Optimal;
    out.objective = lp.c.dot(out.x);
    out.dual = Vec(0);
    out.reduced_cost = lp.c;
    return out;
  }

  // Slacks, row flips, artificials.
  std::vector<int> slack_col(m, -1);
  Eigen::Index ns = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (sense[i] != RowSense::Eq) slack_col[i] = static_cast<int>(nx + ns++);
  std::vector<double> flip(m, 1.0);
  for (Eigen::Index i = 0; i < m; ++i)
    if (rhs(i) < 0) flip[i] = -1.0;
  std::vector<int> basis(m, -1);
  Eigen::Index na = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double slack_coef = sense[i] == RowSense::Le ? 1.0 : -1.0;
    bool slack_ok = slack_col[i] >= 0 && slack_coef * flip[i] > 0;
    if (slack_ok)
      basis[i] = slack_col[i];
    else
      basis[i] = static_cast<int>(nx + ns + na++);
  }
  const Eigen::Index n = nx + ns + na;
  Mat A = Mat::Zero(m, n);
  Vec b(m);
  std::vector<bool> art(n, false);
  for (Eigen::Index i = 0; i < m; ++i) {
    A.row(i).head(nx) = flip[i] * Ax.row(i);
    if (slack_col[i] >= 0)
      A(i, slack_col[i]) = flip[i] * (sense[i] == RowSense::Le ? 1.0 : -1.0);
    if (basis[i] >= nx + ns) {
      A(i, basis[i]) = 1.0;
      art[basis[i]] = true;
    }
    b(i) = flip[i] * rhs(i);
  }

  Vec cost = Vec::Zero(n);
  for (Eigen::Index k = 0; k < nx; ++k) cost(k) = lp.c(cols[k].var) * cols[k].sign;

  int max_iter = std::max(tol.max_iter, static_cast<int>(50 * (m + n)));
  Vec phase1 = Vec::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k)
    if (art[k]) phase1(k) = 1.0;
  lp_detail::Simplex sx(A, b, na > 0 ? phase1 : cost, art, basis, max_iter);
  if (na > 0) {
    sx.run();
    double infeas = sx.objective();
    if (infeas > 1e-9 * (1 + b.cwiseAbs().maxCoeff())) {
      out.status = LpStatus::Infeasible;
      out.iterations = sx.iterations();
      return out;
    }
    sx.drive_out_artificials();
    sx.set_cost(cost);
    sx.bar_artificials();
  }
  bool bounded = sx.run();
  out.iterations = sx.iterations();
  if (!bounded) {
    out.status = LpStatus::Unbounded;
    return out;
  }
  Vec xs = sx.primal();
  out.x = shift;
  for (Eigen::Index k = 0; k < nx; ++k) out.x(cols[k].var) += cols[k].sign * xs(k);
  Vec ys = sx.duals();
  out.dual = Vec(m0);
  for (Eigen::Index i = 0; i < m0; ++i) out.dual(i) = flip[i] * ys(i);
  out.reduced_cost = lp.c - lp.A.transpose() * out.dual;
  out.objective = lp.c.dot(out.x);
  out.status = LpStatus::Optimal;
  return out;
}

// Value of the LP dual at (y, c - A'y).  -inf when the reduced costs ask for
// an infinite bound.
inline double lp_dual_objective(const LinearProgram& lp, const Vec& y) {
  Vec d = lp.c - lp.A.transpose() * y;
  double v = lp.b.dot(y);
  double scale = 1.0 + lp.c.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (std::abs(d(j)) <= 1e-9 * scale) continue;
    double bound = d(j) > 0 ? lp.lower(j) : lp.upper(j);
    if (!std::isfinite(bound)) return -kInf;
    v += d(j) * bound;
  }
  return v;
}

// Incremental construction with sparse rows.
struct LinTerm {
  int var;
  double coef;
};

class LpBuilder {
 public:
  int add_var(double lower, double upper, double cost = 0.0) {
    lower_.push_back(lower);
    upper_.push_back(upper);
    cost_.push_back(cost);
    return static_cast<int>(cost_.size()) - 1;
  }
  int add_row(std::vector<LinTerm> terms, RowSense sense, double rhs) {
    rows_.push_back(std::move(terms));
    sense_.push_back(sense);
    rhs_.push_back(rhs);
    return static_cast<int>(rows_.size()) - 1;
  }
  void set_cost(int var, double cost) { cost_[var] = cost; }
  int num_vars() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  LinearProgram build() const {
    LinearProgram lp;
    const Eigen::Index n = num_vars(), m = num_rows();
    lp.A = Mat::Zero(m, n);
    lp.b = Vec(m);
    lp.c = Vec(n);
    lp.lower = Vec(n);
    lp.upper = Vec(n);
    lp.sense = sense_;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (const auto& t : rows_[i]) lp.A(i, t.var) += t.coef;
      lp.b(i) = rhs_[i];
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      lp.c(j) = cost_[j];
      lp.lower(j) = lower_[j];
      lp.upper(j) = upper_[j];
    }
    return lp;
  }

 private:
  std::vector<double> lower_, upper_, cost_;
  std::vector<std::vector<LinTerm>> rows_;
  std::vector<RowSense> sense_;
  std::vector<double> rhs_;
};

inline LpSolution require_optimal(LpSolution s, const char* who) {
  if (s.status == LpStatus::Infeasible)
    fail(ErrorCode::Infeasible, std::string(who) + ": linear program infeasible");
  if (s.status == LpStatus::Unbounded)
    fail(ErrorCode::Unbounded, std::string(who) + ": linear program unbounded");
  return s;
}

}  // namespace wdro
