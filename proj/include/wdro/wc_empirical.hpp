#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wdro/convex.hpp"
#include "wdro/lp.hpp"
#include "wdro/numerics.hpp"
#include "wdro/transport.hpp"

namespace wdro {

struct AffinePiece {
  Vec a;
  double b = 0;
};

// max_j a_j^T x + b_j
struct PiecewiseAffineLoss {
  std::vector<AffinePiece> pieces;

  int dim() const { return pieces.empty() ? 0 : static_cast<int>(pieces[0].a.size()); }
  double piece(size_t j, const Vec& x) const { return pieces[j].a.dot(x) + pieces[j].b; }
  // Lowest index among the maximizing pieces.
  size_t active(const Vec& x) const {
    size_t best = 0;
    double v = piece(0, x);
    for (size_t j = 1; j < pieces.size(); ++j) {
      double w = piece(j, x);
      if (w > v) {
        v = w;
        best = j;
      }
    }
    return best;
  }
  double operator()(const Vec& x) const { return piece(active(x), x); }
};

// x^T Q x + 2 q^T x
struct QuadraticLoss {
  Mat Q;
  Vec q;

  double operator()(const Vec& x) const { return x.dot(Q * x) + 2 * q.dot(x); }
};

struct BallSpec {
  double eps = 0;
  double p = 1;
  NormSpec norm = NormSpec::l2();
  SetSpec support = SetSpec::whole(0);
};

struct WcOptions {
  Tolerance tol;
  bool force_lp = false;  // use the LP even where a closed form exists
};

inline void validate(const PiecewiseAffineLoss& loss) {
  require(!loss.pieces.empty(), ErrorCode::InvalidArgument, "piecewise affine loss: no pieces");
  for (const auto& pc : loss.pieces)
    require(pc.a.size() == loss.pieces[0].a.size(), ErrorCode::DimensionMismatch,
            "piecewise affine loss: pieces of different dimension");
}

inline void validate(const QuadraticLoss& loss) {
  check_square(loss.Q, "quadratic loss");
  require(loss.q.size() == loss.Q.rows(), ErrorCode::DimensionMismatch, "quadratic loss: q");
  require((loss.Q - loss.Q.transpose()).cwiseAbs().maxCoeff() <= 1e-10, ErrorCode::NotSymmetric,
          "quadratic loss: Q not symmetric");
}

namespace wc_detail {

struct Polyhedron {
  Mat C;  // {x : C x <= d}; zero rows means the whole space
  Vec d;
  bool whole() const { return C.rows() == 0; }
};

inline Polyhedron polyhedral_form(const SetSpec& s, int dim) {
  std::vector<const SetSpec*> parts;
  set_detail::flatten(s, parts);
  Eigen::Index rows = 0;
  for (const SetSpec* p : parts) {
    if (p->kind() == SetSpec::Kind::Whole) continue;
    require(p->kind() == SetSpec::Kind::Polyhedron, ErrorCode::UnsupportedSupport,
            "support must be the whole space or a polyhedron");
    require(p->dim() == dim, ErrorCode::DimensionMismatch, "support dimension");
    rows += p->C().rows();
  }
  Polyhedron out{Mat(rows, dim), Vec(rows)};
  Eigen::Index r = 0;
  for (const SetSpec* p : parts) {
    if (p->kind() != SetSpec::Kind::Polyhedron) continue;
    out.C.middleRows(r, p->C().rows()) = p->C();
    out.d.segment(r, p->C().rows()) = p->d();
    r += p->C().rows();
  }
  return out;
}

inline Polyhedron check_ball(const BallSpec& ball, const DiscreteDistribution& samples,
                             const char* who) {
  validate(samples, who);
  require(std::isfinite(ball.eps) && ball.eps >= 0, ErrorCode::InvalidArgument,
          std::string(who) + ": radius must be finite and >= 0");
  require(ball.p == 1 || ball.p == 2 || std::isinf(ball.p), ErrorCode::InvalidArgument,
          std::string(who) + ": order must be 1, 2 or infinity");
  const int m = static_cast<int>(samples.dim());
  require(ball.norm.dim() < 0 || ball.norm.dim() == m, ErrorCode::DimensionMismatch,
          std::string(who) + ": norm dimension");
  Polyhedron P = polyhedral_form(ball.support, m);
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    require(P.whole() || (P.C * samples.atom(i) - P.d).maxCoeff() <=
                             1e-9 * (1 + P.d.cwiseAbs().maxCoeff()),
            ErrorCode::InvalidArgument, std::string(who) + ": sample outside the support");
  return P;
}

inline void check_losses(const std::vector<PiecewiseAffineLoss>& losses,
                         const DiscreteDistribution& samples, const char* who) {
  require(static_cast<Eigen::Index>(losses.size()) == samples.size(),
          ErrorCode::DimensionMismatch, std::string(who) + ": one loss per sample required");
  for (const auto& l : losses) {
    validate(l);
    require(l.dim() == samples.dim(), ErrorCode::DimensionMismatch,
            std::string(who) + ": loss and samples differ in dimension");
  }
}

inline double nominal(const std::vector<PiecewiseAffineLoss>& losses,
                      const DiscreteDistribution& samples) {
  double s = 0;
  for (Eigen::Index i = 0; i < samples.size(); ++i) s += samples.weights(i) * losses[i](samples.atom(i));
  return s;
}

inline double max_dual(const PiecewiseAffineLoss& l, const NormSpec& dual, size_t* arg = nullptr) {
  double best = -1;
  for (size_t j = 0; j < l.pieces.size(); ++j) {
    double v = norm_eval(dual, l.pieces[j].a);
    if (v > best) {
      best = v;
      if (arg) *arg = j;
    }
  }
  return best;
}

// Dual LP for p in {1, inf}; polyhedral norm required.
inline double wc_lp(const std::vector<PiecewiseAffineLoss>& losses, const DiscreteDistribution& Q,
                    const BallSpec& ball, const Polyhedron& P, const Tolerance& tol) {
  const int m = static_cast<int>(Q.dim());
  const Eigen::Index l = P.C.rows();
  const bool p1 = ball.p == 1;
  NormSpec dual = dual_spec(ball.norm);
  require(is_polyhedral(dual, m), ErrorCode::UnsupportedCombination,
          "this ground norm needs a conic program; only polyhedral norms are supported here");
  LpBuilder b;
  int gamma = p1 ? b.add_var(0, kInf, ball.eps) : -1;
  std::vector<int> s(Q.size());
  for (Eigen::Index i = 0; i < Q.size(); ++i) s[i] = b.add_var(-kInf, kInf, Q.weights(i));
  for (Eigen::Index i = 0; i < Q.size(); ++i) {
    Vec xi = Q.atom(i);
    Vec slack = l ? Vec(P.d - P.C * xi) : Vec();
    for (const auto& pc : losses[i].pieces) {
      std::vector<int> lam(l);
      for (Eigen::Index r = 0; r < l; ++r) lam[r] = b.add_var(0, kInf);
      LinExpr row = LinExpr::var(s[i], -1.0);
      row.constant = pc.b + pc.a.dot(xi);
      for (Eigen::Index r = 0; r < l; ++r) row.add(lam[r], slack(r));
      LinExpr bound;
      if (p1) {
        bound = LinExpr::var(gamma);
      } else {
        int t = b.add_var(0, kInf);
        row.add(t, ball.eps);
        bound = LinExpr::var(t);
      }
      add_constraint(b, row, RowSense::Le, LinExpr::constant_of(0));
      std::vector<LinExpr> z(m);
      for (int k = 0; k < m; ++k) {
        z[k].constant = pc.a(k);
        for (Eigen::Index r = 0; r < l; ++r)
          if (P.C(r, k) != 0) z[k].add(lam[r], -P.C(r, k));
      }
      add_norm_bound(b, z, dual, bound);
    }
  }
  LpSolution sol = solve_lp(b.build(), tol);
  if (sol.status == LpStatus::Infeasible) return kInf;
  require_optimal(sol, "wc_risk_pwa");
  return sol.objective;
}

// sup_{||theta|| <= R, xi + theta in P} a^T theta
inline Vec directional_lp(const Vec& a, const Vec& xi, double R, const NormSpec& norm,
                          const Polyhedron& P, const Tolerance& tol) {
  const int m = static_cast<int>(a.size());
  LpBuilder b;
  std::vector<LinExpr> th(m);
  std::vector<int> v(m);
  for (int k = 0; k < m; ++k) {
    v[k] = b.add_var(-kInf, kInf, -a(k));
    th[k] = LinExpr::var(v[k]);
  }
  add_norm_bound(b, th, norm, LinExpr::constant_of(R));
  Vec rhs = P.d - P.C * xi;
  for (Eigen::Index r = 0; r < P.C.rows(); ++r) {
    std::vector<LinTerm> row;
    for (int k = 0; k < m; ++k)
      if (P.C(r, k) != 0) row.push_back({v[k], P.C(r, k)});
    b.add_row(std::move(row), RowSense::Le, std::max(0.0, rhs(r)));
  }
  LpSolution sol = require_optimal(solve_lp(b.build(), tol), "robust_lower_bound");
  Vec th_out(m);
  for (int k = 0; k < m; ++k) th_out(k) = sol.x(v[k]);
  return th_out;
}

}  // namespace wc_detail

// Worst-case expected loss over the ball, one loss per sample (sample i is
// scored with losses[i]).
inline double wc_risk_pwa(const std::vector<PiecewiseAffineLoss>& losses,
                          const DiscreteDistribution& samples, const BallSpec& ball,
                          const WcOptions& opt = {}) {
  using namespace wc_detail;
  Polyhedron P = check_ball(ball, samples, "wc_risk_pwa");
  check_losses(losses, samples, "wc_risk_pwa");
  const int m = static_cast<int>(samples.dim());
  if (!P.whole())
    require(ball.p != 2, ErrorCode::UnsupportedCombination,
            "wc_risk_pwa: order 2 with a polyhedral support needs a conic program");
  const double nom = nominal(losses, samples);
  if (ball.eps == 0) return nom;
  NormSpec dual = dual_spec(ball.norm);
  const bool lp_ok = is_polyhedral(dual, m);
  if (P.whole() && !(opt.force_lp && lp_ok && ball.p != 2)) {
    if (ball.p == 1) {
      double lip = 0;
      for (const auto& l : losses) lip = std::max(lip, max_dual(l, dual));
      return nom + ball.eps * lip;
    }
    if (std::isinf(ball.p)) {
      double s = 0;
      for (Eigen::Index i = 0; i < samples.size(); ++i) {
        double best = -kInf;
        for (size_t j = 0; j < losses[i].pieces.size(); ++j)
          best = std::max(best, losses[i].piece(j, samples.atom(i)) +
                                    ball.eps * norm_eval(dual, losses[i].pieces[j].a));
        s += samples.weights(i) * best;
      }
      return s;
    }
    // p = 2: inf_g g eps^2 + sum_i w_i max_j (l_j(xi_i) + ||a_j||_*^2 / (4 g))
    std::vector<std::vector<double>> c(samples.size()), k2(samples.size());
    bool flat = true;
    for (Eigen::Index i = 0; i < samples.size(); ++i)
      for (size_t j = 0; j < losses[i].pieces.size(); ++j) {
        c[i].push_back(losses[i].piece(j, samples.atom(i)));
        double k = norm_eval(dual, losses[i].pieces[j].a);
        k2[i].push_back(k * k);
        if (k > 0) flat = false;
      }
    if (flat) return nom;
    auto g = [&](double gam) {
      if (gam <= 0) return kInf;
      double s = gam * ball.eps * ball.eps;
      for (Eigen::Index i = 0; i < samples.size(); ++i) {
        double best = -kInf;
        for (size_t j = 0; j < c[i].size(); ++j) best = std::max(best, c[i][j] + k2[i][j] / (4 * gam));
        s += samples.weights(i) * best;
      }
      return s;
    };
    return minimize_scalar_convex(g, 0, kInf, opt.tol).value;
  }
  require(lp_ok, ErrorCode::UnsupportedCombination,
          "wc_risk_pwa: polyhedral support with this norm needs a conic program");
  return wc_lp(losses, samples, ball, P, opt.tol);
}

inline double wc_risk_pwa(const PiecewiseAffineLoss& loss, const DiscreteDistribution& samples,
                          const BallSpec& ball, const WcOptions& opt = {}) {
  return wc_risk_pwa(std::vector<PiecewiseAffineLoss>(samples.size(), loss), samples, ball, opt);
}

inline double lipschitz_modulus_pwa(const PiecewiseAffineLoss& loss, const NormSpec& norm) {
  validate(loss);
  return wc_detail::max_dual(loss, dual_spec(norm));
}

inline double lipschitz_upper_bound(const PiecewiseAffineLoss& loss,
                                    const DiscreteDistribution& samples, const BallSpec& ball) {
  wc_detail::check_ball(ball, samples, "lipschitz_upper_bound");
  std::vector<PiecewiseAffineLoss> losses(samples.size(), loss);
  wc_detail::check_losses(losses, samples, "lipschitz_upper_bound");
  double nom = wc_detail::nominal(losses, samples);
  return ball.eps == 0 ? nom : nom + ball.eps * lipschitz_modulus_pwa(loss, ball.norm);
}

// Best risk over perturbations of the samples themselves (each atom moved,
// weights kept).  Always a feasible value, hence a lower bound.
inline double robust_lower_bound(const PiecewiseAffineLoss& loss,
                                 const DiscreteDistribution& samples, const BallSpec& ball,
                                 const WcOptions& opt = {}) {
  using namespace wc_detail;
  Polyhedron P = check_ball(ball, samples, "robust_lower_bound");
  validate(loss);
  require(loss.dim() == samples.dim(), ErrorCode::DimensionMismatch,
          "robust_lower_bound: loss and samples differ in dimension");
  const Eigen::Index N = samples.size();
  const size_t J = loss.pieces.size();
  const Vec& w = samples.weights;
  std::vector<PiecewiseAffineLoss> losses(N, loss);
  const double nom = nominal(losses, samples);
  if (ball.eps == 0) return nom;
  const double eps = ball.eps;
  NormSpec dual = dual_spec(ball.norm);
  std::vector<double> k(J);
  for (size_t j = 0; j < J; ++j) k[j] = norm_eval(dual, loss.pieces[j].a);
  Mat c(N, J);
  for (Eigen::Index i = 0; i < N; ++i)
    for (size_t j = 0; j < J; ++j) c(i, j) = loss.piece(j, samples.atom(i));
  // g_i(r): best loss reachable from sample i at distance r in the whole space
  auto g = [&](Eigen::Index i, double r) {
    double best = -kInf;
    for (size_t j = 0; j < J; ++j) best = std::max(best, c(i, j) + k[j] * r);
    return best;
  };

  if (P.whole()) {
    if (J == 1 && std::isfinite(ball.p)) return nom + eps * k[0];
    if (std::isinf(ball.p)) {
      double s = 0;
      for (Eigen::Index i = 0; i < N; ++i) s += w(i) * g(i, eps);
      return s;
    }
    double best = nom;
    // all budget on one sample
    for (Eigen::Index i = 0; i < N; ++i) {
      if (w(i) == 0) continue;
      double r = ball.p == 1 ? eps / w(i) : eps / std::sqrt(w(i));
      best = std::max(best, nom + w(i) * (g(i, r) - g(i, 0)));
    }
    if (ball.p == 1) return best;
    // p = 2: same radius everywhere, then the Lagrangian split
    {
      double s = 0;
      for (Eigen::Index i = 0; i < N; ++i) s += w(i) * g(i, eps);
      best = std::max(best, s);
    }
    double kmax = *std::max_element(k.begin(), k.end());
    if (kmax == 0) return best;
    auto radii = [&](double lam) {
      Vec r(N);
      for (Eigen::Index i = 0; i < N; ++i) {
        double v = -kInf;
        size_t arg = 0;
        for (size_t j = 0; j < J; ++j) {
          double u = c(i, j) + k[j] * k[j] / (4 * lam);
          if (u > v) {
            v = u;
            arg = j;
          }
        }
        r(i) = k[arg] / (2 * lam);
      }
      return r;
    };
    auto budget = [&](double lam) {
      Vec r = radii(lam);
      return w.dot(r.cwiseProduct(r));
    };
    const double e2 = eps * eps;
    double hi = 1;
    while (budget(hi) > e2) hi *= 2;
    double lo = hi / 2;
    while (lo > 1e-300 && budget(lo) <= e2) lo /= 2;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      double mid = (lo + hi) / 2;
      (budget(mid) <= e2 ? hi : lo) = mid;
    }
    Vec r = radii(hi);
    double used = w.dot(r.cwiseProduct(r));
    if (used > 0) r *= std::sqrt(e2 / used);  // budget left over only helps
    double s = 0;
    for (Eigen::Index i = 0; i < N; ++i) s += w(i) * g(i, r(i));
    return std::max(best, s);
  }

  require(ball.p != 2, ErrorCode::UnsupportedCombination,
          "robust_lower_bound: order 2 with a polyhedral support needs a conic program");
  require(is_polyhedral(ball.norm, static_cast<int>(samples.dim())), ErrorCode::UnsupportedCombination,
          "robust_lower_bound: polyhedral support with this norm needs a conic program");
  auto best_move = [&](Eigen::Index i, double R) {
    Vec xi = samples.atom(i);
    double v = loss(xi);
    for (size_t j = 0; j < J; ++j)
      v = std::max(v, loss(Vec(xi + directional_lp(loss.pieces[j].a, xi, R, ball.norm, P, opt.tol))));
    return v;
  };
  if (std::isinf(ball.p)) {
    double s = 0;
    for (Eigen::Index i = 0; i < N; ++i) s += w(i) * best_move(i, eps);
    return s;
  }
  double best = nom;
  for (Eigen::Index i = 0; i < N; ++i) {
    if (w(i) == 0) continue;
    best = std::max(best, nom + w(i) * (best_move(i, eps / w(i)) - loss(samples.atom(i))));
  }
  // joint move keeping each sample on its nominally active piece
  const int m = static_cast<int>(samples.dim());
  LpBuilder b;
  std::vector<std::vector<int>> th(N, std::vector<int>(m));
  LinExpr spent;
  for (Eigen::Index i = 0; i < N; ++i) {
    const Vec& a = loss.pieces[loss.active(samples.atom(i))].a;
    std::vector<LinExpr> e(m);
    for (int q = 0; q < m; ++q) {
      th[i][q] = b.add_var(-kInf, kInf, -w(i) * a(q));
      e[q] = LinExpr::var(th[i][q]);
    }
    int tau = b.add_var(0, kInf);
    add_norm_bound(b, e, ball.norm, LinExpr::var(tau));
    spent.add(tau, w(i));
    Vec rhs = P.d - P.C * samples.atom(i);
    for (Eigen::Index r = 0; r < P.C.rows(); ++r) {
      std::vector<LinTerm> row;
      for (int q = 0; q < m; ++q)
        if (P.C(r, q) != 0) row.push_back({th[i][q], P.C(r, q)});
      b.add_row(std::move(row), RowSense::Le, std::max(0.0, rhs(r)));
    }
  }
  add_constraint(b, spent, RowSense::Le, LinExpr::constant_of(eps));
  LpSolution sol = require_optimal(solve_lp(b.build(), opt.tol), "robust_lower_bound");
  double s = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    Vec x = samples.atom(i);
    for (int q = 0; q < m; ++q) x(q) += sol.x(th[i][q]);
    s += w(i) * loss(x);
  }
  return std::max(best, s);
}

// ------------------------------------------------------------ extremal

// Mass weight * (1 - shrink / n) at a fixed location.
struct FixedAtom {
  Vec location;
  double weight = 0;
  double shrink = 0;
};

// Mass weight / n at origin + n^rate * direction.
struct EscapingAtom {
  Vec origin;
  Vec direction;
  double rate = 1;
  double weight = 0;
};

struct AsymptoticFamily {
  std::vector<FixedAtom> fixed;
  std::vector<EscapingAtom> escaping;
  double min_n = 1;  // members are defined for n >= min_n

  DiscreteDistribution at(double n) const {
    require(n >= min_n, ErrorCode::InvalidArgument, "asymptotic family: n below its range");
    const Eigen::Index k = static_cast<Eigen::Index>(fixed.size() + escaping.size());
    const Eigen::Index m = fixed.empty() ? escaping[0].origin.size() : fixed[0].location.size();
    DiscreteDistribution Q{Mat(k, m), Vec(k)};
    Eigen::Index r = 0;
    for (const auto& f : fixed) {
      Q.atoms.row(r) = f.location.transpose();
      Q.weights(r++) = f.weight * (1 - f.shrink / n);
    }
    for (const auto& e : escaping) {
      Q.atoms.row(r) = (e.origin + std::pow(n, e.rate) * e.direction).transpose();
      Q.weights(r++) = e.weight / n;
    }
    return Q;
  }
};

enum class ExtremalKind { Attained, Asymptotic };

struct ExtremalReport {
  ExtremalKind kind = ExtremalKind::Attained;
  DiscreteDistribution distribution;  // when attained
  AsymptoticFamily family;            // when asymptotic
  double certified_value = 0;
};

inline ExtremalReport extremal_pwa(const PiecewiseAffineLoss& loss,
                                   const DiscreteDistribution& samples, const BallSpec& ball,
                                   const WcOptions& opt = {}) {
  using namespace wc_detail;
  Polyhedron P = check_ball(ball, samples, "extremal_pwa");
  require(ball.p == 1, ErrorCode::UnsupportedCombination, "extremal_pwa: order must be 1");
  validate(loss);
  require(loss.dim() == samples.dim(), ErrorCode::DimensionMismatch,
          "extremal_pwa: loss and samples differ in dimension");
  const Eigen::Index N = samples.size();
  const int m = static_cast<int>(samples.dim());
  const size_t J = loss.pieces.size();
  const Vec& w = samples.weights;
  ExtremalReport rep;
  std::vector<PiecewiseAffineLoss> losses(N, loss);
  const double nom = nominal(losses, samples);
  if (ball.eps == 0) {
    rep.distribution = samples;
    rep.certified_value = nom;
    return rep;
  }

  if (P.whole()) {
    NormSpec dual = dual_spec(ball.norm);
    size_t jstar = 0;
    double lip = max_dual(loss, dual, &jstar);
    rep.certified_value = nom + ball.eps * lip;
    if (lip == 0) {
      rep.distribution = samples;
      return rep;
    }
    // samples where some piece of maximal slope is active
    std::vector<Eigen::Index> S;
    size_t jS = jstar;
    for (size_t j = 0; j < J && S.empty(); ++j) {
      if (norm_eval(dual, loss.pieces[j].a) < lip) continue;
      for (Eigen::Index i = 0; i < N; ++i) {
        Vec xi = samples.atom(i);
        if (loss.piece(j, xi) >= loss(xi) && w(i) > 0) S.push_back(i);
      }
      if (!S.empty()) jS = j;
    }
    if (!S.empty()) {
      Vec dir = hoelder_maximizer(ball.norm, loss.pieces[jS].a);
      double W = 0;
      for (auto i : S) W += w(i);
      DiscreteDistribution Q = samples;
      for (auto i : S) Q.atoms.row(i) += (ball.eps / W) * dir.transpose();
      rep.distribution = Q;
      return rep;
    }
    Vec dir = hoelder_maximizer(ball.norm, loss.pieces[jstar].a);
    rep.kind = ExtremalKind::Asymptotic;
    Eigen::Index i0 = 0;
    while (w(i0) == 0) ++i0;
    for (Eigen::Index i = 0; i < N; ++i)
      if (w(i) > 0) rep.family.fixed.push_back({samples.atom(i), w(i), i == i0 ? 1.0 : 0.0});
    rep.family.escaping.push_back({samples.atom(i0), (ball.eps / w(i0)) * dir, 1.0, w(i0)});
    return rep;
  }

  require(is_polyhedral(ball.norm, m), ErrorCode::UnsupportedCombination,
          "extremal_pwa: polyhedral support with this norm needs a conic program");
  // maximize sum_i w_i sum_j [alpha_ij l_j(xi_i) + a_j^T theta_ij]
  LpBuilder b;
  std::vector<std::vector<int>> alpha(N, std::vector<int>(J));
  std::vector<std::vector<std::vector<int>>> theta(N, std::vector<std::vector<int>>(J, std::vector<int>(m)));
  LinExpr spent;
  for (Eigen::Index i = 0; i < N; ++i) {
    Vec xi = samples.atom(i);
    Vec slack = P.d - P.C * xi;
    LinExpr total;
    for (size_t j = 0; j < J; ++j) {
      alpha[i][j] = b.add_var(0, kInf, -w(i) * loss.piece(j, xi));
      total.add(alpha[i][j], 1.0);
      std::vector<LinExpr> e(m);
      for (int q = 0; q < m; ++q) {
        theta[i][j][q] = b.add_var(-kInf, kInf, -w(i) * loss.pieces[j].a(q));
        e[q] = LinExpr::var(theta[i][j][q]);
      }
      int tau = b.add_var(0, kInf);
      add_norm_bound(b, e, ball.norm, LinExpr::var(tau));
      spent.add(tau, w(i));
      for (Eigen::Index r = 0; r < P.C.rows(); ++r) {
        LinExpr row = LinExpr::var(alpha[i][j], -std::max(0.0, slack(r)));
        for (int q = 0; q < m; ++q)
          if (P.C(r, q) != 0) row.add(theta[i][j][q], P.C(r, q));
        add_constraint(b, row, RowSense::Le, LinExpr::constant_of(0));
      }
    }
    add_constraint(b, total, RowSense::Eq, LinExpr::constant_of(1));
  }
  add_constraint(b, spent, RowSense::Le, LinExpr::constant_of(ball.eps));
  LpSolution sol = require_optimal(solve_lp(b.build(), opt.tol), "extremal_pwa");
  rep.certified_value = -sol.objective;

  struct Pair {
    Eigen::Index i;
    double a;
    Vec th;
  };
  std::vector<Pair> plus, inf;
  std::vector<int> escaping_count(N, 0);
  for (Eigen::Index i = 0; i < N; ++i)
    for (size_t j = 0; j < J; ++j) {
      double a = sol.x(alpha[i][j]);
      Vec th(m);
      for (int q = 0; q < m; ++q) th(q) = sol.x(theta[i][j][q]);
      if (a > 1e-12)
        plus.push_back({i, a, th});
      else if (th.cwiseAbs().maxCoeff() > 1e-12) {
        inf.push_back({i, 0, th});
        ++escaping_count[i];
      }
    }
  if (inf.empty()) {
    DiscreteDistribution Q{Mat(plus.size(), m), Vec(plus.size())};
    for (size_t r = 0; r < plus.size(); ++r) {
      Q.atoms.row(r) = (samples.atom(plus[r].i) + plus[r].th / plus[r].a).transpose();
      Q.weights(r) = w(plus[r].i) * plus[r].a;
    }
    Q.weights /= Q.weights.sum();
    rep.distribution = merge_atoms(Q);
    return rep;
  }
  // Each sample gives up 1/n of its mass per escaping direction, so that the
  // weights stay normalized sample by sample.
  rep.kind = ExtremalKind::Asymptotic;
  std::vector<double> asum(N, 0.0);
  for (const auto& pr : plus) asum[pr.i] += pr.a;
  for (const auto& pr : plus) {
    double k = escaping_count[pr.i];
    rep.family.fixed.push_back({samples.atom(pr.i) + pr.th / pr.a, w(pr.i) * pr.a / asum[pr.i], k});
    rep.family.min_n = std::max(rep.family.min_n, k);
  }
  for (const auto& pr : inf) rep.family.escaping.push_back({samples.atom(pr.i), pr.th, 1.0, w(pr.i)});
  return rep;
}

// ----------------------------------------------------------- quadratic

namespace wc_detail {

struct QuadSetup {
  SymEig eig;
  double lmax = 0;
  std::vector<Vec> g;  // eigen coordinates of Q xi_i + q
  std::vector<bool> top;
  bool obstructed = false;
  double nominal = 0;
};

inline QuadSetup quad_setup(const QuadraticLoss& loss, const DiscreteDistribution& samples) {
  QuadSetup s;
  s.eig = sym_eig(loss.Q);
  s.lmax = s.eig.values(0);
  const Eigen::Index m = loss.Q.rows();
  double scale = std::max(1.0, s.eig.values.cwiseAbs().maxCoeff());
  s.top.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) s.top[k] = s.eig.values(k) >= s.lmax - 1e-10 * scale;
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    Vec xi = samples.atom(i);
    s.nominal += samples.weights(i) * loss(xi);
    Vec gi = s.eig.vectors.transpose() * (loss.Q * xi + loss.q);
    double tol = 1e-11 * (1 + gi.norm() + scale * xi.norm());
    for (Eigen::Index k = 0; k < m; ++k) {
      if (!s.top[k]) continue;
      if (std::abs(gi(k)) > tol && samples.weights(i) > 0)
        s.obstructed = s.obstructed || s.lmax >= 0;
      else
        gi(k) = 0;
    }
    s.g.push_back(gi);
  }
  if (s.obstructed || s.lmax < 0)  // keep the raw top-space components
    for (Eigen::Index i = 0; i < samples.size(); ++i)
      s.g[i] = s.eig.vectors.transpose() * (loss.Q * samples.atom(i) + loss.q);
  return s;
}

// Components over eigen-directions with a zero numerator are dropped, which
// is the deflated limit at the top eigenvalue.
inline double quad_term(const QuadSetup& s, const Vec& g, double gam, int power) {
  double t = 0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (g(k) == 0) continue;
    double d = gam - s.eig.values(k);
    if (d <= 0) return kInf;
    t += power == 1 ? g(k) * g(k) / d : g(k) * g(k) / (d * d);
  }
  return t;
}

struct QuadSolution {
  double gamma = 0;
  double value = 0;
  double slack = 0;  // unused budget at the boundary
  bool boundary = false;
};

inline QuadSolution quad_solve(const QuadSetup& s, const DiscreteDistribution& samples,
                               double eps) {
  const Vec& w = samples.weights;
  auto h = [&](double gam) {
    double t = 0;
    for (size_t i = 0; i < s.g.size(); ++i) {
      if (w(i) == 0) continue;
      t += w(i) * quad_term(s, s.g[i], gam, 2);
    }
    return t;
  };
  auto F = [&](double gam) {
    double t = gam * eps * eps + s.nominal;
    for (size_t i = 0; i < s.g.size(); ++i)
      if (w(i) != 0) t += w(i) * quad_term(s, s.g[i], gam, 1);
    return t;
  };
  const double e2 = eps * eps;
  const double lo = std::max(0.0, s.lmax);
  QuadSolution out;
  if (!s.obstructed) {
    double h0 = h(lo);
    if (h0 <= e2) {
      out.gamma = lo;
      out.value = F(lo);
      out.slack = e2 - h0;
      out.boundary = true;
      return out;
    }
  }
  double gam = bisect_root([&](double x) { return e2 - h(x); }, lo, lo + 1, machine_tolerance(),
                           Expand::Up);
  if (gam <= lo) gam = std::nextafter(lo, kInf);
  out.gamma = gam;
  out.value = F(gam);
  return out;
}

inline Vec quad_shift(const QuadSetup& s, const Vec& g, double gam) {
  Vec c = Vec::Zero(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k)
    if (g(k) != 0) c(k) = g(k) / (gam - s.eig.values(k));
  return s.eig.vectors * c;
}

}  // namespace wc_detail

inline double wc_risk_quadratic(const QuadraticLoss& loss, const DiscreteDistribution& samples,
                                double eps, const Tolerance& = {}) {
  validate(loss);
  validate(samples, "wc_risk_quadratic");
  require(loss.Q.rows() == samples.dim(), ErrorCode::DimensionMismatch,
          "wc_risk_quadratic: loss and samples differ in dimension");
  require(std::isfinite(eps) && eps >= 0, ErrorCode::InvalidArgument,
          "wc_risk_quadratic: radius must be finite and >= 0");
  auto s = wc_detail::quad_setup(loss, samples);
  if (eps == 0) return s.nominal;
  return wc_detail::quad_solve(s, samples, eps).value;
}

inline ExtremalReport extremal_quadratic(const QuadraticLoss& loss,
                                         const DiscreteDistribution& samples, double eps,
                                         const Tolerance& tol = {}) {
  ExtremalReport rep;
  rep.certified_value = wc_risk_quadratic(loss, samples, eps, tol);
  if (eps == 0) {
    rep.distribution = samples;
    return rep;
  }
  auto s = wc_detail::quad_setup(loss, samples);
  auto sol = wc_detail::quad_solve(s, samples, eps);
  const Eigen::Index N = samples.size();
  std::vector<Vec> pts(N);
  for (Eigen::Index i = 0; i < N; ++i)
    pts[i] = samples.atom(i) + wc_detail::quad_shift(s, s.g[i], sol.gamma);
  const bool escape = sol.boundary && s.lmax > 0 && sol.slack > 1e-14 * eps * eps;
  if (!escape) {
    rep.distribution = samples;
    for (Eigen::Index i = 0; i < N; ++i) rep.distribution.atoms.row(i) = pts[i].transpose();
    return rep;
  }
  rep.kind = ExtremalKind::Asymptotic;
  Eigen::Index i0 = 0;
  while (samples.weights(i0) == 0) ++i0;
  for (Eigen::Index i = 0; i < N; ++i)
    if (samples.weights(i) > 0)
      rep.family.fixed.push_back({pts[i], samples.weights(i), i == i0 ? 1.0 : 0.0});
  Vec v = s.eig.vectors.col(0);
  rep.family.escaping.push_back(
      {samples.atom(i0), std::sqrt(sol.slack / samples.weights(i0)) * v, 0.5, samples.weights(i0)});
  return rep;
}

}  // namespace wdro
