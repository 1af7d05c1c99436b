#pragma once

// First-order minimization of a convex function with best-iterate tracking.
// Steps are c/sqrt(k) along the normalized subgradient (or Barzilai-Borwein
// gradient steps with backtracking when the objective is smooth).  Every
// evaluated point contributes a linear minorant; the minorants are minimized
// over a box around the best point, which both proposes a trial point and,
// when the box is not binding, certifies a global lower bound.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "wdro/lp.hpp"

namespace wdro {

// Returns h(x) and writes a subgradient into g.
using FirstOrderOracle = std::function<double(const Vec& x, Vec& g)>;

struct SubgradientOptions {
  double step_scale = 1.0;
  bool smooth = false;
  double norm_cap = kInf;  // iterates are projected onto the Euclidean ball
  int model_every = 1;
  int max_cuts = 60;
};

struct SubgradientResult {
  Vec x;
  double value = kInf;
  double lower_bound = -kInf;
  double gap = kInf;
  int iterations = 0;
  bool certified = false;
};

class SolverLimit : public Error {
 public:
  SolverLimit(const std::string& what, SubgradientResult r)
      : Error(ErrorCode::MaxIterExceeded, what), result(std::move(r)) {}
  SubgradientResult result;
};

namespace sg_detail {

struct Cut {
  Vec x;
  double f;
  Vec g;
};

inline Vec project(Vec x, double cap) {
  double nx = x.norm();
  if (std::isfinite(cap) && nx > cap) x *= cap / nx;
  return x;
}

}  // namespace sg_detail

inline SubgradientResult subgradient_minimize(const FirstOrderOracle& h, const Vec& x0,
                                              const Tolerance& tol = {},
                                              const SubgradientOptions& opt = {}) {
  using sg_detail::Cut;
  const Eigen::Index n = x0.size();
  SubgradientResult best;
  std::vector<Cut> cuts;
  auto evaluate = [&](const Vec& x, Vec& g) {
    g = Vec::Zero(n);
    double f = h(x, g);
    require(!std::isnan(f), ErrorCode::NumericalFailure, "subgradient_minimize: NaN objective");
    cuts.push_back({x, f, g});
    if (f < best.value) {
      best.value = f;
      best.x = x;
    }
    return f;
  };
  auto converged = [&]() {
    best.gap = best.value - best.lower_bound;
    return best.gap <= tol.abs + tol.rel * std::abs(best.value);
  };
  auto prune = [&]() {
    if (static_cast<int>(cuts.size()) <= opt.max_cuts) return;
    std::vector<double> slack(cuts.size());
    for (size_t i = 0; i < cuts.size(); ++i)
      slack[i] = best.value - (cuts[i].f + cuts[i].g.dot(best.x - cuts[i].x));
    std::vector<size_t> order(cuts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (slack[a] != slack[b]) return slack[a] < slack[b];
      return a > b;
    });
    order.resize(opt.max_cuts);
    std::sort(order.begin(), order.end());
    std::vector<Cut> kept;
    for (size_t i : order) kept.push_back(std::move(cuts[i]));
    cuts = std::move(kept);
  };

  Vec x = sg_detail::project(x0, opt.norm_cap), g;
  double fx = evaluate(x, g);
  double radius = std::max(1.0, x.cwiseAbs().maxCoeff());
  Vec x_prev, g_prev;
  double step = opt.step_scale;

  for (int k = 1; k <= tol.max_iter; ++k) {
    best.iterations = k;
    if (g.norm() == 0) {
      // Zero subgradient: x is a minimizer.
      best.lower_bound = fx;
      converged();
      best.certified = true;
      return best;
    }

    if (k % opt.model_every == 0 && n > 0) {
      LpBuilder b;
      std::vector<int> xv(n);
      for (Eigen::Index i = 0; i < n; ++i)
        xv[i] = b.add_var(best.x(i) - radius, best.x(i) + radius);
      int t = b.add_var(-kInf, kInf, 1.0);
      for (const Cut& c : cuts) {
        std::vector<LinTerm> row;
        for (Eigen::Index i = 0; i < n; ++i)
          if (c.g(i) != 0) row.push_back({xv[i], c.g(i)});
        row.push_back({t, -1.0});
        b.add_row(std::move(row), RowSense::Le, c.g.dot(c.x) - c.f);
      }
      LpSolution s = solve_lp(b.build());
      if (s.status == LpStatus::Optimal) {
        Vec xm = s.x.head(n);
        double model = s.x(n);
        bool boxed = ((xm - best.x).cwiseAbs().array() >= radius * (1 - 1e-7)).any();
        if (!boxed)
          best.lower_bound = std::max(best.lower_bound, model);
        else
          radius *= 2;
        xm = sg_detail::project(xm, opt.norm_cap);
        Vec gm;
        evaluate(xm, gm);
        if (converged()) {
          best.certified = true;
          return best;
        }
      }
      prune();
    }

    Vec xn;
    if (opt.smooth) {
      double alpha = step;
      if (x_prev.size() == n) {
        Vec s = x - x_prev, y = g - g_prev;
        double sy = s.dot(y);
        if (sy > 0) alpha = s.squaredNorm() / sy;
      }
      x_prev = x;
      g_prev = g;
      // Armijo backtracking
      for (int bt = 0; bt < 60; ++bt) {
        xn = sg_detail::project(x - alpha * g, opt.norm_cap);
        Vec gn;
        double fn = evaluate(xn, gn);
        if (fn <= fx - 1e-4 * g.dot(x - xn) || bt == 59) {
          x = xn;
          fx = fn;
          g = gn;
          break;
        }
        alpha /= 2;
      }
      if (g.norm() <= tol.abs) {
        best.lower_bound = std::max(best.lower_bound, fx);
        converged();
        best.certified = true;
        return best;
      }
    } else {
      xn = sg_detail::project(x - (step / std::sqrt(static_cast<double>(k))) * g / g.norm(),
                              opt.norm_cap);
      fx = evaluate(xn, g);
      x = xn;
      // Restart from the best point so the model and the steps stay close.
      if (k % 10 == 0 && best.x.size() == n) {
        x = best.x;
        fx = evaluate(x, g);
      }
    }
    if (converged()) {
      best.certified = true;
      return best;
    }
  }
  converged();
  throw SolverLimit("subgradient_minimize: iteration limit; best value " +
                        std::to_string(best.value) + ", gap estimate " +
                        std::to_string(best.gap),
                    best);
}

}  // namespace wdro
