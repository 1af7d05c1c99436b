#pragma once

// Norms and their duals, conjugates of a few standard functions, and support
// functions of whole spaces, norm balls, polyhedra and their intersections.

#include <cmath>
#include <string>
#include <vector>

#include "wdro/lp.hpp"
#include "wdro/numerics.hpp"

namespace wdro {

// ----------------------------------------------------------------- norms

inline double conjugate_exponent(double p) {
  if (p == 1) return kInf;
  if (std::isinf(p)) return 1;
  return p / (p - 1);
}

class NormSpec {
 public:
  enum class Kind { P, Scaled, Weighted, Composite };
  enum class Combine { Sum, Max };

  NormSpec() = default;

  static NormSpec p(double p) {
    require(p >= 1, ErrorCode::InvalidArgument, "norm: p must be >= 1 or inf");
    NormSpec n;
    n.kind_ = Kind::P;
    n.p_ = p;
    return n;
  }
  static NormSpec l1() { return p(1); }
  static NormSpec l2() { return p(2); }
  static NormSpec linf() { return p(kInf); }

  // alpha * ||x||_p
  static NormSpec scaled(double alpha, double p) {
    require(alpha > 0 && std::isfinite(alpha), ErrorCode::InvalidArgument,
            "norm: scale must be positive");
    NormSpec n = NormSpec::p(p);
    n.kind_ = Kind::Scaled;
    n.alpha_ = alpha;
    return n;
  }

  // ||A x||_p with A symmetric positive definite
  static NormSpec weighted(const Mat& A, double p) {
    check_symmetric(A, "weighted norm");
    require(A.rows() > 0 && lambda_min(A) > 0, ErrorCode::NotPSD,
            "weighted norm: matrix must be positive definite");
    NormSpec n = NormSpec::p(p);
    n.kind_ = Kind::Weighted;
    n.A_ = A;
    return n;
  }

  // Blocks laid out consecutively; combined by sum (or by max, which is what
  // the dual of a sum produces).
  static NormSpec composite(std::vector<NormSpec> blocks, std::vector<int> sizes,
                            Combine combine = Combine::Sum) {
    require(!blocks.empty() && blocks.size() == sizes.size(), ErrorCode::InvalidArgument,
            "composite norm: need one size per block");
    for (size_t k = 0; k < blocks.size(); ++k) {
      require(sizes[k] > 0, ErrorCode::InvalidArgument, "composite norm: empty block");
      int d = blocks[k].dim();
      require(d < 0 || d == sizes[k], ErrorCode::DimensionMismatch,
              "composite norm: block size does not match block norm");
    }
    NormSpec n;
    n.kind_ = Kind::Composite;
    n.blocks_ = std::move(blocks);
    n.sizes_ = std::move(sizes);
    n.combine_ = combine;
    return n;
  }

  Kind kind() const { return kind_; }
  double p_value() const { return p_; }
  double alpha() const { return alpha_; }
  const Mat& matrix() const { return A_; }
  const std::vector<NormSpec>& blocks() const { return blocks_; }
  const std::vector<int>& sizes() const { return sizes_; }
  Combine combine() const { return combine_; }

  // Ambient dimension, or -1 when any dimension is accepted.
  int dim() const {
    if (kind_ == Kind::Weighted) return static_cast<int>(A_.rows());
    if (kind_ == Kind::Composite) {
      int s = 0;
      for (int k : sizes_) s += k;
      return s;
    }
    return -1;
  }

  bool is_euclidean() const { return kind_ == Kind::P && p_ == 2; }

 private:
  Kind kind_ = Kind::P;
  double p_ = 2;
  double alpha_ = 1;
  Mat A_;
  std::vector<NormSpec> blocks_;
  std::vector<int> sizes_;
  Combine combine_ = Combine::Sum;
};

namespace norm_detail {

inline double pnorm(const Vec& x, double p) {
  if (x.size() == 0) return 0;
  if (std::isinf(p)) return x.cwiseAbs().maxCoeff();
  if (p == 1) return x.cwiseAbs().sum();
  if (p == 2) return x.norm();
  double m = x.cwiseAbs().maxCoeff();
  if (m == 0) return 0;
  double s = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x(i)) / m, p);
  return m * std::pow(s, 1 / p);
}

inline void check_dim(const NormSpec& n, const Vec& x) {
  int d = n.dim();
  require(d < 0 || d == x.size(), ErrorCode::DimensionMismatch,
          "norm: vector has dimension " + std::to_string(x.size()) + ", norm expects " +
              std::to_string(d));
}

}  // namespace norm_detail

inline double norm_eval(const NormSpec& n, const Vec& x) {
  norm_detail::check_dim(n, x);
  switch (n.kind()) {
    case NormSpec::Kind::P: return norm_detail::pnorm(x, n.p_value());
    case NormSpec::Kind::Scaled: return n.alpha() * norm_detail::pnorm(x, n.p_value());
    case NormSpec::Kind::Weighted: return norm_detail::pnorm(n.matrix() * x, n.p_value());
    case NormSpec::Kind::Composite: {
      double acc = 0;
      int off = 0;
      for (size_t k = 0; k < n.blocks().size(); ++k) {
        double v = norm_eval(n.blocks()[k], x.segment(off, n.sizes()[k]));
        acc = n.combine() == NormSpec::Combine::Sum ? acc + v : std::max(acc, v);
        off += n.sizes()[k];
      }
      return acc;
    }
  }
  return 0;
}

// The norm whose value is the dual of n.
inline NormSpec dual_spec(const NormSpec& n) {
  double q = conjugate_exponent(n.p_value());
  switch (n.kind()) {
    case NormSpec::Kind::P: return NormSpec::p(q);
    case NormSpec::Kind::Scaled: return NormSpec::scaled(1 / n.alpha(), q);
    case NormSpec::Kind::Weighted: {
      SymEig e = sym_eig(n.matrix());
      return NormSpec::weighted(from_eig(e.vectors, e.values.cwiseInverse()), q);
    }
    case NormSpec::Kind::Composite: {
      std::vector<NormSpec> d;
      for (const auto& b : n.blocks()) d.push_back(dual_spec(b));
      return NormSpec::composite(std::move(d), n.sizes(),
                                 n.combine() == NormSpec::Combine::Sum ? NormSpec::Combine::Max
                                                                       : NormSpec::Combine::Sum);
    }
  }
  return n;
}

inline double dual_norm_eval(const NormSpec& n, const Vec& z) {
  norm_detail::check_dim(n, z);
  switch (n.kind()) {
    case NormSpec::Kind::P: return norm_detail::pnorm(z, conjugate_exponent(n.p_value()));
    case NormSpec::Kind::Scaled:
      return norm_detail::pnorm(z, conjugate_exponent(n.p_value())) / n.alpha();
    case NormSpec::Kind::Weighted:
      return norm_detail::pnorm(Eigen::LDLT<Mat>(n.matrix()).solve(z),
                                conjugate_exponent(n.p_value()));
    case NormSpec::Kind::Composite: {
      double acc = 0;
      int off = 0;
      for (size_t k = 0; k < n.blocks().size(); ++k) {
        double v = dual_norm_eval(n.blocks()[k], z.segment(off, n.sizes()[k]));
        acc = n.combine() == NormSpec::Combine::Sum ? std::max(acc, v) : acc + v;
        off += n.sizes()[k];
      }
      return acc;
    }
  }
  return 0;
}

namespace norm_detail {

// argmax of a'x over the unit p-norm ball
inline Vec p_maximizer(const Vec& a, double p) {
  const Eigen::Index n = a.size();
  Vec x = Vec::Zero(n);
  if (n == 0 || a.cwiseAbs().maxCoeff() == 0) return x;
  if (p == 1) {
    Eigen::Index k = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(a(i)) > std::abs(a(k))) k = i;
    x(k) = a(k) > 0 ? 1.0 : -1.0;
    return x;
  }
  if (std::isinf(p)) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = a(i) > 0 ? 1.0 : (a(i) < 0 ? -1.0 : 0.0);
    return x;
  }
  double q = conjugate_exponent(p);
  double nq = pnorm(a, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = std::abs(a(i)) / nq;
    x(i) = (a(i) >= 0 ? 1.0 : -1.0) * std::pow(r, q - 1);
  }
  return x;
}

}  // namespace norm_detail

// A point of the unit ball {||x|| <= 1} attaining a'x = ||a||_*.
inline Vec hoelder_maximizer(const NormSpec& n, const Vec& a) {
  norm_detail::check_dim(n, a);
  switch (n.kind()) {
    case NormSpec::Kind::P: return norm_detail::p_maximizer(a, n.p_value());
    case NormSpec::Kind::Scaled: return norm_detail::p_maximizer(a, n.p_value()) / n.alpha();
    case NormSpec::Kind::Weighted: {
      Eigen::LDLT<Mat> ldlt(n.matrix());
      Vec u = norm_detail::p_maximizer(ldlt.solve(a), n.p_value());
      return ldlt.solve(u);
    }
    case NormSpec::Kind::Composite: {
      Vec x = Vec::Zero(a.size());
      int off = 0;
      if (n.combine() == NormSpec::Combine::Max) {
        for (size_t k = 0; k < n.blocks().size(); ++k) {
          x.segment(off, n.sizes()[k]) =
              hoelder_maximizer(n.blocks()[k], a.segment(off, n.sizes()[k]));
          off += n.sizes()[k];
        }
        return x;
      }
      size_t best = 0;
      int best_off = 0;
      double best_val = -1;
      for (size_t k = 0; k < n.blocks().size(); ++k) {
        double v = dual_norm_eval(n.blocks()[k], a.segment(off, n.sizes()[k]));
        if (v > best_val) {
          best_val = v;
          best = k;
          best_off = off;
        }
        off += n.sizes()[k];
      }
      x.segment(best_off, n.sizes()[best]) =
          hoelder_maximizer(n.blocks()[best], a.segment(best_off, n.sizes()[best]));
      return x;
    }
  }
  return Vec::Zero(a.size());
}

// True when the unit ball is a polytope in the given dimension, so that
// ||x|| <= t can be written with linear constraints.
inline bool is_polyhedral(const NormSpec& n, int dim) {
  switch (n.kind()) {
    case NormSpec::Kind::P:
    case NormSpec::Kind::Scaled:
    case NormSpec::Kind::Weighted:
      return dim <= 1 || n.p_value() == 1 || std::isinf(n.p_value());
    case NormSpec::Kind::Composite:
      for (size_t k = 0; k < n.blocks().size(); ++k)
        if (!is_polyhedral(n.blocks()[k], n.sizes()[k])) return false;
      return true;
  }
  return false;
}

// ------------------------------------------------------ LP encodings

struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0;

  static LinExpr var(int v, double coef = 1.0) { return {{{v, coef}}, 0.0}; }
  static LinExpr constant_of(double c) { return {{}, c}; }
  LinExpr& add(int v, double coef) {
    terms.push_back({v, coef});
    return *this;
  }
  LinExpr scaled(double s) const {
    LinExpr e = *this;
    for (auto& t : e.terms) t.coef *= s;
    e.constant *= s;
    return e;
  }
};

// lhs - rhs (sense) 0
inline void add_constraint(LpBuilder& b, const LinExpr& lhs, RowSense sense, const LinExpr& rhs) {
  std::vector<LinTerm> terms = lhs.terms;
  for (const auto& t : rhs.terms) terms.push_back({t.var, -t.coef});
  b.add_row(std::move(terms), sense, rhs.constant - lhs.constant);
}

// Adds rows enforcing ||x|| <= t.  Requires a polyhedral norm.
inline void add_norm_bound(LpBuilder& b, const std::vector<LinExpr>& x, const NormSpec& n,
                           const LinExpr& t) {
  const int dim = static_cast<int>(x.size());
  int d = n.dim();
  require(d < 0 || d == dim, ErrorCode::DimensionMismatch, "add_norm_bound: dimension");
  require(is_polyhedral(n, dim), ErrorCode::UnsupportedCombination,
          "norm constraint is not linear-programming representable");
  switch (n.kind()) {
    case NormSpec::Kind::P:
    case NormSpec::Kind::Scaled:
    case NormSpec::Kind::Weighted: {
      std::vector<LinExpr> y = x;
      if (n.kind() == NormSpec::Kind::Weighted) {
        for (int i = 0; i < dim; ++i) {
          LinExpr e;
          for (int j = 0; j < dim; ++j) {
            double a = n.matrix()(i, j);
            if (a == 0) continue;
            for (const auto& tm : x[j].terms) e.terms.push_back({tm.var, a * tm.coef});
            e.constant += a * x[j].constant;
          }
          y[i] = e;
        }
      }
      LinExpr bound = n.kind() == NormSpec::Kind::Scaled ? t.scaled(1 / n.alpha()) : t;
      bool sum_form = n.p_value() == 1 && dim > 1;
      if (!sum_form) {
        for (const auto& yi : y) {
          add_constraint(b, yi, RowSense::Le, bound);
          add_constraint(b, yi.scaled(-1), RowSense::Le, bound);
        }
      } else {
        LinExpr total;
        for (const auto& yi : y) {
          int u = b.add_var(0, kInf);
          add_constraint(b, yi, RowSense::Le, LinExpr::var(u));
          add_constraint(b, yi.scaled(-1), RowSense::Le, LinExpr::var(u));
          total.add(u, 1.0);
        }
        add_constraint(b, total, RowSense::Le, bound);
      }
      return;
    }
    case NormSpec::Kind::Composite: {
      int off = 0;
      LinExpr total;
      for (size_t k = 0; k < n.blocks().size(); ++k) {
        std::vector<LinExpr> xk(x.begin() + off, x.begin() + off + n.sizes()[k]);
        if (n.combine() == NormSpec::Combine::Max) {
          add_norm_bound(b, xk, n.blocks()[k], t);
        } else {
          int tk = b.add_var(0, kInf);
          add_norm_bound(b, xk, n.blocks()[k], LinExpr::var(tk));
          total.add(tk, 1.0);
        }
        off += n.sizes()[k];
      }
      if (n.combine() == NormSpec::Combine::Sum) add_constraint(b, total, RowSense::Le, t);
      return;
    }
  }
}

// ------------------------------------------------------------ conjugates

struct ConjugableFunction {
  enum class Kind { Affine, Quadratic, Norm, NormPower, Logloss, Exp };
  Kind kind = Kind::Affine;
  Vec a;        // affine / quadratic linear part
  double b = 0; // affine / quadratic constant
  Mat A;        // quadratic: 1/2 x'Ax + a'x + b
  NormSpec norm;
  double p = 2; // NormPower: (1/p)||x||^p

  static ConjugableFunction affine(Vec a, double b) {
    ConjugableFunction f;
    f.kind = Kind::Affine;
    f.a = std::move(a);
    f.b = b;
    return f;
  }
  static ConjugableFunction quadratic(Mat A, Vec a, double b) {
    check_symmetric(A, "quadratic");
    check_psd(A, "quadratic");
    require(A.rows() == a.size(), ErrorCode::DimensionMismatch, "quadratic: shapes");
    ConjugableFunction f;
    f.kind = Kind::Quadratic;
    f.A = std::move(A);
    f.a = std::move(a);
    f.b = b;
    return f;
  }
  static ConjugableFunction of_norm(NormSpec n) {
    ConjugableFunction f;
    f.kind = Kind::Norm;
    f.norm = std::move(n);
    return f;
  }
  static ConjugableFunction norm_power(NormSpec n, double p) {
    require(p > 1 && std::isfinite(p), ErrorCode::InvalidArgument, "norm power: need 1 < p < inf");
    ConjugableFunction f;
    f.kind = Kind::NormPower;
    f.norm = std::move(n);
    f.p = p;
    return f;
  }
  static ConjugableFunction logloss() {
    ConjugableFunction f;
    f.kind = Kind::Logloss;
    return f;
  }
  static ConjugableFunction exponential() {
    ConjugableFunction f;
    f.kind = Kind::Exp;
    return f;
  }
};

inline double function_eval(const ConjugableFunction& f, const Vec& x) {
  using K = ConjugableFunction::Kind;
  switch (f.kind) {
    case K::Affine:
      require(x.size() == f.a.size(), ErrorCode::DimensionMismatch, "affine: dimension");
      return f.a.dot(x) + f.b;
    case K::Quadratic:
      require(x.size() == f.a.size(), ErrorCode::DimensionMismatch, "quadratic: dimension");
      return 0.5 * x.dot(f.A * x) + f.a.dot(x) + f.b;
    case K::Norm: return norm_eval(f.norm, x);
    case K::NormPower: return std::pow(norm_eval(f.norm, x), f.p) / f.p;
    case K::Logloss:
      require(x.size() == 1, ErrorCode::DimensionMismatch, "logloss is scalar");
      return x(0) > 0 ? std::log1p(std::exp(-x(0))) : -x(0) + std::log1p(std::exp(x(0)));
    case K::Exp:
      require(x.size() == 1, ErrorCode::DimensionMismatch, "exp is scalar");
      return std::exp(x(0));
  }
  return 0;
}

namespace conj_detail {
inline double xlogx(double x) { return x <= 0 ? 0.0 : x * std::log(x); }
}  // namespace conj_detail

inline double conjugate_eval(const ConjugableFunction& f, const Vec& z) {
  using K = ConjugableFunction::Kind;
  switch (f.kind) {
    case K::Affine: {
      require(z.size() == f.a.size(), ErrorCode::DimensionMismatch, "affine: dimension");
      double tol = 1e-9 * (1 + f.a.norm());
      return (z - f.a).norm() <= tol ? -f.b : kInf;
    }
    case K::Quadratic: {
      require(z.size() == f.a.size(), ErrorCode::DimensionMismatch, "quadratic: dimension");
      SymEig e = sym_eig(f.A);
      Vec r = e.vectors.transpose() * (z - f.a);
      double tol = 1e-9 * (1 + f.a.norm());
      double cut = 1e-12 * std::max(1.0, e.values.size() ? e.values(0) : 0.0);
      double v = 0;
      for (Eigen::Index k = 0; k < r.size(); ++k) {
        if (e.values(k) > cut)
          v += r(k) * r(k) / e.values(k);
        else if (std::abs(r(k)) > tol)
          return kInf;
      }
      return 0.5 * v - f.b;
    }
    case K::Norm: return dual_norm_eval(f.norm, z) <= 1 + 1e-9 ? 0.0 : kInf;
    case K::NormPower: {
      double q = conjugate_exponent(f.p);
      return std::pow(dual_norm_eval(f.norm, z), q) / q;
    }
    case K::Logloss: {
      // conjugate of x -> log(1 + exp(-x)), finite on [-1, 0]
      require(z.size() == 1, ErrorCode::DimensionMismatch, "logloss is scalar");
      double s = -z(0);
      if (s < -1e-12 || s > 1 + 1e-12) return kInf;
      s = std::clamp(s, 0.0, 1.0);
      return conj_detail::xlogx(s) + conj_detail::xlogx(1 - s);
    }
    case K::Exp: {
      require(z.size() == 1, ErrorCode::DimensionMismatch, "exp is scalar");
      if (z(0) < 0) return kInf;
      return conj_detail::xlogx(z(0)) - z(0);
    }
  }
  return kInf;
}

// ------------------------------------------------------------------ sets

class SetSpec {
 public:
  enum class Kind { Whole, Ball, Polyhedron, Intersection };

  static SetSpec whole(int dim) {
    SetSpec s;
    s.kind_ = Kind::Whole;
    s.dim_ = dim;
    return s;
  }
  // {x : ||x - center|| <= radius}
  static SetSpec ball(NormSpec n, double radius, Vec center) {
    require(radius >= 0, ErrorCode::InvalidArgument, "ball: negative radius");
    SetSpec s;
    s.kind_ = Kind::Ball;
    s.dim_ = static_cast<int>(center.size());
    s.norm_ = std::move(n);
    s.radius_ = radius;
    s.center_ = std::move(center);
    return s;
  }
  static SetSpec ball(NormSpec n, double radius, int dim) {
    return ball(std::move(n), radius, Vec::Zero(dim));
  }
  // {x : C x <= d}
  static SetSpec polyhedron(Mat C, Vec d) {
    require(C.rows() == d.size(), ErrorCode::DimensionMismatch, "polyhedron: C and d");
    SetSpec s;
    s.kind_ = Kind::Polyhedron;
    s.dim_ = static_cast<int>(C.cols());
    s.C_ = std::move(C);
    s.d_ = std::move(d);
    return s;
  }
  static SetSpec box(const Vec& lo, const Vec& hi) {
    const Eigen::Index n = lo.size();
    Mat C(2 * n, n);
    C << Mat::Identity(n, n), -Mat::Identity(n, n);
    Vec d(2 * n);
    d << hi, -lo;
    return polyhedron(C, d);
  }
  static SetSpec intersection(std::vector<SetSpec> members) {
    require(!members.empty(), ErrorCode::InvalidArgument, "intersection: no members");
    SetSpec s;
    s.kind_ = Kind::Intersection;
    s.dim_ = members[0].dim();
    for (const auto& m : members)
      require(m.dim() == s.dim_, ErrorCode::DimensionMismatch, "intersection: dimensions");
    s.members_ = std::move(members);
    return s;
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const NormSpec& norm() const { return norm_; }
  double radius() const { return radius_; }
  const Vec& center() const { return center_; }
  const Mat& C() const { return C_; }
  const Vec& d() const { return d_; }
  const std::vector<SetSpec>& members() const { return members_; }

  bool contains(const Vec& x, double tol = 1e-9) const {
    switch (kind_) {
      case Kind::Whole: return true;
      case Kind::Ball: return norm_eval(norm_, x - center_) <= radius_ + tol;
      case Kind::Polyhedron:
        return C_.rows() == 0 || (C_ * x - d_).maxCoeff() <= tol * (1 + d_.cwiseAbs().maxCoeff());
      case Kind::Intersection:
        for (const auto& m : members_)
          if (!m.contains(x, tol)) return false;
        return true;
    }
    return false;
  }

 private:
  Kind kind_ = Kind::Whole;
  int dim_ = 0;
  NormSpec norm_;
  double radius_ = 0;
  Vec center_;
  Mat C_;
  Vec d_;
  std::vector<SetSpec> members_;
};

namespace set_detail {

inline void flatten(const SetSpec& s, std::vector<const SetSpec*>& out) {
  if (s.kind() == SetSpec::Kind::Intersection) {
    for (const auto& m : s.members()) flatten(m, out);
  } else {
    out.push_back(&s);
  }
}

// Adds the constraints x in s for LP variables x.
inline void add_membership(LpBuilder& b, const std::vector<int>& x, const SetSpec& s) {
  const int n = static_cast<int>(x.size());
  switch (s.kind()) {
    case SetSpec::Kind::Whole: return;
    case SetSpec::Kind::Polyhedron:
      for (Eigen::Index i = 0; i < s.C().rows(); ++i) {
        std::vector<LinTerm> row;
        for (int j = 0; j < n; ++j)
          if (s.C()(i, j) != 0) row.push_back({x[j], s.C()(i, j)});
        b.add_row(std::move(row), RowSense::Le, s.d()(i));
      }
      return;
    case SetSpec::Kind::Ball: {
      std::vector<LinExpr> e(n);
      for (int j = 0; j < n; ++j) e[j] = LinExpr{{{x[j], 1.0}}, -s.center()(j)};
      add_norm_bound(b, e, s.norm(), LinExpr::constant_of(s.radius()));
      return;
    }
    case SetSpec::Kind::Intersection:
      for (const auto& m : s.members()) add_membership(b, x, m);
      return;
  }
}

inline bool nonempty(const SetSpec& s) {
  if (s.kind() == SetSpec::Kind::Whole || s.kind() == SetSpec::Kind::Ball) return true;
  LpBuilder b;
  std::vector<int> x(s.dim());
  for (auto& v : x) v = b.add_var(-kInf, kInf);
  add_membership(b, x, s);
  return solve_lp(b.build()).status != LpStatus::Infeasible;
}

}  // namespace set_detail

inline double support_function_eval(const SetSpec& S, const Vec& z, const Tolerance& tol = {}) {
  require(z.size() == S.dim(), ErrorCode::DimensionMismatch, "support function: dimension");
  switch (S.kind()) {
    case SetSpec::Kind::Whole:
      return z.size() == 0 || z.cwiseAbs().maxCoeff() <= tol.abs ? 0.0 : kInf;
    case SetSpec::Kind::Ball:
      return z.dot(S.center()) + S.radius() * dual_norm_eval(S.norm(), z);
    case SetSpec::Kind::Polyhedron:
    case SetSpec::Kind::Intersection: break;
  }
  require(set_detail::nonempty(S), ErrorCode::Infeasible, "support function: empty set");
  std::vector<const SetSpec*> parts;
  set_detail::flatten(S, parts);
  const int n = S.dim();
  // infimal convolution: z = sum_k z_k, value sum_k sigma_k(z_k)
  LpBuilder b;
  std::vector<LinExpr> total(n);
  for (const SetSpec* part : parts) {
    std::vector<int> zk(n);
    for (int j = 0; j < n; ++j) {
      zk[j] = b.add_var(-kInf, kInf);
      total[j].add(zk[j], 1.0);
    }
    switch (part->kind()) {
      case SetSpec::Kind::Whole:
        for (int j = 0; j < n; ++j) b.add_row({{zk[j], 1.0}}, RowSense::Eq, 0.0);
        break;
      case SetSpec::Kind::Ball: {
        int t = b.add_var(0, kInf, part->radius());
        for (int j = 0; j < n; ++j) b.set_cost(zk[j], part->center()(j));
        std::vector<LinExpr> e(n);
        for (int j = 0; j < n; ++j) e[j] = LinExpr::var(zk[j]);
        add_norm_bound(b, e, dual_spec(part->norm()), LinExpr::var(t));
        break;
      }
      case SetSpec::Kind::Polyhedron: {
        const Eigen::Index r = part->C().rows();
        std::vector<int> lam(r);
        for (Eigen::Index i = 0; i < r; ++i) lam[i] = b.add_var(0, kInf, part->d()(i));
        for (int j = 0; j < n; ++j) {
          std::vector<LinTerm> row{{zk[j], -1.0}};
          for (Eigen::Index i = 0; i < r; ++i)
            if (part->C()(i, j) != 0) row.push_back({lam[i], part->C()(i, j)});
          b.add_row(std::move(row), RowSense::Eq, 0.0);
        }
        break;
      }
      case SetSpec::Kind::Intersection: break;
    }
  }
  for (int j = 0; j < n; ++j) b.add_row(total[j].terms, RowSense::Eq, z(j));
  LpSolution s = solve_lp(b.build(), tol);
  if (s.status == LpStatus::Infeasible) return kInf;
  if (s.status == LpStatus::Unbounded)
    fail(ErrorCode::NumericalFailure, "support function: dual program unbounded");
  return s.objective;
}

}  // namespace wdro
