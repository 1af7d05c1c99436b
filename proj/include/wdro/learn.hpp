#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wdro/convex.hpp"
#include "wdro/subgradient.hpp"
#include "wdro/wc_empirical.hpp"

namespace wdro {

enum class LossKind { Hinge, SmoothHinge, LogLoss, Squared, Huber, EpsInsensitive, Pinball };

inline const char* loss_name(LossKind k) {
  switch (k) {
    case LossKind::Hinge: return "hinge";
    case LossKind::SmoothHinge: return "smooth_hinge";
    case LossKind::LogLoss: return "logloss";
    case LossKind::Squared: return "squared";
    case LossKind::Huber: return "huber";
    case LossKind::EpsInsensitive: return "eps_insensitive";
    case LossKind::Pinball: return "pinball";
  }
  return "?";
}

struct UnivariateLoss {
  LossKind kind = LossKind::Hinge;
  double delta = 0;

  static UnivariateLoss hinge() { return {LossKind::Hinge, 0}; }
  static UnivariateLoss smooth_hinge() { return {LossKind::SmoothHinge, 0}; }
  static UnivariateLoss logloss() { return {LossKind::LogLoss, 0}; }
  static UnivariateLoss squared() { return {LossKind::Squared, 0}; }
  static UnivariateLoss huber(double d) {
    require(std::isfinite(d) && d > 0, ErrorCode::InvalidArgument, "huber: delta must be > 0");
    return {LossKind::Huber, d};
  }
  static UnivariateLoss eps_insensitive(double d) {
    require(std::isfinite(d) && d >= 0, ErrorCode::InvalidArgument,
            "eps_insensitive: delta must be >= 0");
    return {LossKind::EpsInsensitive, d};
  }
  static UnivariateLoss pinball(double d) {
    require(d >= 0 && d <= 1, ErrorCode::InvalidArgument, "pinball: delta must lie in [0, 1]");
    return {LossKind::Pinball, d};
  }

  bool classification() const {
    return kind == LossKind::Hinge || kind == LossKind::SmoothHinge || kind == LossKind::LogLoss;
  }
  bool piecewise_affine() const {
    return kind == LossKind::Hinge || kind == LossKind::EpsInsensitive || kind == LossKind::Pinball;
  }
  bool smooth() const {
    return kind == LossKind::SmoothHinge || kind == LossKind::LogLoss || kind == LossKind::Squared ||
           kind == LossKind::Huber;
  }
  // +inf for the squared loss
  double lipschitz() const {
    switch (kind) {
      case LossKind::Hinge:
      case LossKind::SmoothHinge:
      case LossKind::LogLoss:
      case LossKind::EpsInsensitive: return 1;
      case LossKind::Huber: return delta;
      case LossKind::Pinball: return std::max(delta, 1 - delta);
      case LossKind::Squared: return kInf;
    }
    return kInf;
  }

  double operator()(double z) const {
    switch (kind) {
      case LossKind::Hinge: return std::max(0.0, 1 - z);
      case LossKind::SmoothHinge:
        return z <= 0 ? 0.5 - z : (z < 1 ? 0.5 * (1 - z) * (1 - z) : 0.0);
      case LossKind::LogLoss: return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
      case LossKind::Squared: return z * z;
      case LossKind::Huber:
        return std::abs(z) <= delta ? 0.5 * z * z : delta * (std::abs(z) - 0.5 * delta);
      case LossKind::EpsInsensitive: return std::max(0.0, std::abs(z) - delta);
      case LossKind::Pinball: return std::max(-delta * z, (1 - delta) * z);
    }
    return 0;
  }

  // A subgradient (the derivative where it exists).
  double slope(double z) const {
    switch (kind) {
      case LossKind::Hinge: return z < 1 ? -1.0 : 0.0;
      case LossKind::SmoothHinge: return z <= 0 ? -1.0 : (z < 1 ? z - 1 : 0.0);
      case LossKind::LogLoss: return z > 0 ? -std::exp(-z) / (1 + std::exp(-z)) : -1 / (1 + std::exp(z));
      case LossKind::Squared: return 2 * z;
      case LossKind::Huber: return std::abs(z) <= delta ? z : (z > 0 ? delta : -delta);
      case LossKind::EpsInsensitive:
        return std::abs(z) <= delta ? 0.0 : (z > 0 ? 1.0 : -1.0);
      case LossKind::Pinball: return z > 0 ? 1 - delta : (z < 0 ? -delta : 0.0);
    }
    return 0;
  }
};

// Rows of X are inputs; y holds labels (+-1) or real outputs.
struct LabeledData {
  Mat X;
  Vec y;
};

struct TrainedModel {
  Vec w;
  double objective = 0;
  int iterations = 0;
  double gap = kInf;
  bool certified = false;
  bool unattained = false;  // infimum not attained, or best iterate at the norm cap
  std::vector<std::string> warnings;
};

struct TrainOptions {
  Tolerance tol{};
  double norm_cap = 1e6;
};

namespace learn_detail {

inline void check_data(const LabeledData& d, const char* who) {
  require(d.X.rows() > 0, ErrorCode::EmptySample, std::string(who) + ": no samples");
  require(d.X.cols() > 0, ErrorCode::DimensionMismatch, std::string(who) + ": no features");
  require(d.y.size() == d.X.rows(), ErrorCode::DimensionMismatch,
          std::string(who) + ": one output per sample");
  require(d.X.allFinite() && d.y.allFinite(), ErrorCode::InvalidArgument,
          std::string(who) + ": non-finite data");
}

// z_i = y_i w'x_i (classification) or w'x_i - y_i (regression)
inline Vec margins(const LabeledData& d, const Vec& w, bool classification) {
  Vec s = d.X * w;
  return classification ? Vec(s.cwiseProduct(d.y)) : Vec(s - d.y);
}

inline double mean_loss(const UnivariateLoss& L, const Vec& z) {
  double s = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += L(z(i));
  return s / static_cast<double>(z.size());
}

// gradient of (1/N) sum L(z_i) with respect to w
inline Vec mean_loss_grad(const UnivariateLoss& L, const LabeledData& d, const Vec& z,
                          bool classification) {
  Vec c(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    c(i) = L.slope(z(i)) * (classification ? d.y(i) : 1.0);
  return d.X.transpose() * c / static_cast<double>(z.size());
}

// True when some direction v has y_i v'x_i >= 0 for all i with at least one
// strict inequality, i.e. the log loss keeps decreasing along v forever.
inline bool has_recession_direction(const LabeledData& d) {
  const Eigen::Index N = d.X.rows(), n = d.X.cols();
  LpBuilder b;
  std::vector<int> v(n);
  Vec c = -(d.X.transpose() * d.y);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = b.add_var(-1, 1, c(k));
  for (Eigen::Index i = 0; i < N; ++i) {
    std::vector<LinTerm> row;
    for (Eigen::Index k = 0; k < n; ++k)
      if (d.X(i, k) != 0) row.push_back({v[k], d.y(i) * d.X(i, k)});
    if (!row.empty()) b.add_row(std::move(row), RowSense::Ge, 0.0);
  }
  LpSolution s = solve_lp(b.build());
  const double scale = std::max(1.0, d.X.cwiseAbs().maxCoeff());
  return s.status == LpStatus::Optimal && -s.objective > 1e-9 * scale;
}

inline TrainedModel run(const FirstOrderOracle& h, Eigen::Index n, bool smooth,
                        const TrainOptions& opt) {
  SubgradientOptions so;
  so.smooth = smooth;
  so.norm_cap = opt.norm_cap;
  SubgradientResult r;
  try {
    r = subgradient_minimize(h, Vec::Zero(n), opt.tol, so);
  } catch (const SolverLimit& e) {
    r = e.result;
  }
  TrainedModel m;
  m.w = r.x;
  m.objective = r.value;
  m.iterations = r.iterations;
  m.gap = r.gap;
  m.certified = r.certified;
  m.unattained = std::isfinite(opt.norm_cap) && r.x.norm() >= opt.norm_cap * (1 - 1e-9);
  return m;
}

}  // namespace learn_detail

// (1/N) sum L(y_i w'x_i) + eps ||w||_*
inline double classifier_objective(const Vec& w, const LabeledData& d, const UnivariateLoss& L,
                                   double eps, const NormSpec& input_norm) {
  return learn_detail::mean_loss(L, learn_detail::margins(d, w, true)) +
         (eps == 0 ? 0.0 : eps * dual_norm_eval(input_norm, w));
}

// p = 1: (1/N) sum L(w'x_i - y_i) + eps Lip(L) ||w||_*
// p = 2 (squared loss): [sqrt((1/N) sum (w'x_i - y_i)^2) + eps ||w||_*]^2
inline double regressor_objective(const Vec& w, const LabeledData& d, const UnivariateLoss& L,
                                  double eps, double p, const NormSpec& input_norm) {
  Vec z = learn_detail::margins(d, w, false);
  double reg = eps == 0 ? 0.0 : eps * dual_norm_eval(input_norm, w);
  if (p == 2) {
    double r = std::sqrt(learn_detail::mean_loss(L, z)) + reg;
    return r * r;
  }
  return learn_detail::mean_loss(L, z) + L.lipschitz() * reg;
}

inline TrainedModel dro_train_classifier(const LabeledData& d, const UnivariateLoss& L, double eps,
                                         const NormSpec& input_norm, const TrainOptions& opt = {}) {
  using namespace learn_detail;
  check_data(d, "dro_train_classifier");
  require(L.classification(), ErrorCode::UnsupportedLoss,
          std::string("dro_train_classifier: not a classification loss: ") + loss_name(L.kind));
  require(std::isfinite(eps) && eps >= 0, ErrorCode::InvalidArgument,
          "dro_train_classifier: radius must be finite and >= 0");
  for (Eigen::Index i = 0; i < d.y.size(); ++i)
    require(d.y(i) == 1 || d.y(i) == -1, ErrorCode::InvalidArgument,
            "dro_train_classifier: labels must be +1 or -1");
  const Eigen::Index n = d.X.cols();
  dual_norm_eval(input_norm, Vec::Zero(n));  // dimension check
  const NormSpec dual = dual_spec(input_norm);
  auto h = [&](const Vec& w, Vec& g) {
    Vec z = margins(d, w, true);
    g = mean_loss_grad(L, d, z, true);
    double v = mean_loss(L, z);
    if (eps > 0) {
      v += eps * norm_eval(dual, w);
      g += eps * hoelder_maximizer(input_norm, w);
    }
    return v;
  };
  const bool smooth = L.smooth() && (eps == 0 || dual.is_euclidean());
  // the log loss is positive everywhere, so with eps = 0 a recession
  // direction means the infimum (zero loss along it) is never reached
  const bool escapes = L.kind == LossKind::LogLoss && eps == 0 && has_recession_direction(d);
  TrainOptions o = opt;
  if (escapes) o.tol.max_iter = std::min(o.tol.max_iter, 2000);
  TrainedModel m = run(h, n, smooth, o);
  if (escapes) {
    m.unattained = true;
    m.certified = false;
  }
  if ((d.y.array() == d.y(0)).all())
    m.warnings.push_back("DegenerateData: all labels are identical");
  if (m.unattained) m.warnings.push_back("Unattained: the infimum is not attained; best iterate returned");
  return m;
}

inline TrainedModel dro_train_regressor(const LabeledData& d, const UnivariateLoss& L, double eps,
                                        double p, const NormSpec& input_norm,
                                        const TrainOptions& opt = {}) {
  using namespace learn_detail;
  check_data(d, "dro_train_regressor");
  require(!L.classification(), ErrorCode::UnsupportedLoss,
          std::string("dro_train_regressor: not a regression loss: ") + loss_name(L.kind));
  require(std::isfinite(eps) && eps >= 0, ErrorCode::InvalidArgument,
          "dro_train_regressor: radius must be finite and >= 0");
  const bool sq = L.kind == LossKind::Squared;
  require((sq && p == 2) || (!sq && p == 1), ErrorCode::PairingMismatch,
          "dro_train_regressor: the squared loss needs p = 2 and Lipschitz losses need p = 1");
  const Eigen::Index n = d.X.cols();
  dual_norm_eval(input_norm, Vec::Zero(n));
  const NormSpec dual = dual_spec(input_norm);
  const double lip = sq ? 1.0 : L.lipschitz();
  // for p = 2 the square root of the objective is minimized; same minimizers
  auto h = [&](const Vec& w, Vec& g) {
    Vec z = margins(d, w, false);
    double v = mean_loss(L, z);
    g = mean_loss_grad(L, d, z, false);
    if (sq && eps > 0) {
      double r = std::sqrt(v);
      g = r > 0 ? Vec(g / (2 * r)) : Vec::Zero(n);
      v = r;
    }
    if (eps > 0) {
      v += eps * lip * norm_eval(dual, w);
      g += eps * lip * hoelder_maximizer(input_norm, w);
    }
    return v;
  };
  const bool smooth = L.smooth() && (eps == 0 || dual.is_euclidean());
  TrainedModel m = run(h, n, smooth, opt);
  if (m.unattained) m.warnings.push_back("Unattained: best iterate at the norm cap");
  if (sq && eps > 0) {
    double lb = std::max(0.0, m.objective - m.gap);
    m.gap = (m.objective - lb) * (m.objective + lb);
    m.objective *= m.objective;
  }
  return m;
}

struct Crosscheck {
  double regularized = 0;
  double worst_case = 0;
  double diff = 0;
};

// Compares the regularized objective at w with the worst-case risk of the
// per-sample piecewise-affine losses xi -> L(y w'x) or L(w'x - y), where only
// the inputs move.
inline Crosscheck dro_objective_crosscheck(const Vec& w, const LabeledData& d,
                                           const UnivariateLoss& L, double eps,
                                           const NormSpec& input_norm) {
  learn_detail::check_data(d, "dro_objective_crosscheck");
  require(L.piecewise_affine(), ErrorCode::UnsupportedLoss,
          std::string("dro_objective_crosscheck: loss is not piecewise affine: ") + loss_name(L.kind));
  require(w.size() == d.X.cols(), ErrorCode::DimensionMismatch,
          "dro_objective_crosscheck: weight dimension");
  const Eigen::Index N = d.X.rows(), n = d.X.cols();
  std::vector<PiecewiseAffineLoss> losses(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    auto& P = losses[i].pieces;
    const double y = d.y(i);
    switch (L.kind) {
      case LossKind::Hinge:
        P = {{Vec::Zero(n), 0.0}, {-y * w, 1.0}};
        break;
      case LossKind::EpsInsensitive:
        P = {{Vec::Zero(n), 0.0}, {w, -y - L.delta}, {-w, y - L.delta}};
        break;
      case LossKind::Pinball:
        P = {{-L.delta * w, L.delta * y}, {(1 - L.delta) * w, -(1 - L.delta) * y}};
        break;
      default:
        break;
    }
  }
  BallSpec ball;
  ball.eps = eps;
  ball.p = 1;
  ball.norm = input_norm;
  ball.support = SetSpec::whole(static_cast<int>(n));
  WcOptions wo;
  wo.force_lp = is_polyhedral(dual_spec(input_norm), static_cast<int>(n));
  Crosscheck c;
  c.regularized = L.classification() ? classifier_objective(w, d, L, eps, input_norm)
                                     : regressor_objective(w, d, L, eps, 1, input_norm);
  c.worst_case = wc_risk_pwa(losses, empirical(d.X), ball, wo);
  c.diff = std::abs(c.regularized - c.worst_case);
  return c;
}

}  // namespace wdro
