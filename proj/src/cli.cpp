#include "wdro/cli/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "wdro/cli/io.hpp"

namespace wdro::cli {

namespace {

// Values come from the command line first, then the --config file, then
// the built-in default.  Every value read is echoed into `resolved`.
class Resolver {
 public:
  Resolver(CLI::App& app, CLI::App& sub) : app_(app), sub_(sub) {}

  void load_config(const std::string& path) {
    path_ = path;
    config_ = read_json(path);
    if (!config_.is_object()) throw UsageError(path + ": expected a JSON object of option values");
    for (auto it = config_.begin(); it != config_.end(); ++it) {
      if (it.key() == "command") {
        if (it.value() != sub_.get_name())
          throw UsageError(path + ": key 'command' says '" + it.value().dump() + "' but the command is '" +
                           sub_.get_name() + "'");
        continue;
      }
      if (it.key() == "config") throw UsageError(path + ": key 'config' is not allowed in a config file");
      if (!option(it.key()))
        throw UsageError(path + ": unknown key '" + it.key() + "' for command '" + sub_.get_name() + "'");
    }
  }

  bool given(const std::string& name) const {
    const CLI::Option* o = option(name);
    return (o && o->count() > 0) || config_.contains(name);
  }

  double num(const std::string& name, std::optional<double> def = std::nullopt) {
    double x;
    if (auto s = cli_value(name)) {
      x = parse_number(*s, "--" + name);
    } else if (config_.contains(name)) {
      const Json& j = config_[name];
      if (j.is_number())
        x = j.get<double>();
      else if (j.is_string())
        x = parse_number(j.get<std::string>(), where(name));
      else
        throw UsageError(where(name) + ": expected a number");
    } else if (def) {
      x = *def;
    } else {
      throw UsageError("missing required option --" + name);
    }
    resolved[name] = number(x);
    return x;
  }

  long long integer(const std::string& name, std::optional<long long> def = std::nullopt) {
    std::optional<double> d;
    if (def) d = static_cast<double>(*def);
    double x = num(name, d);
    if (x != std::floor(x) || std::abs(x) > 9.0e15)
      throw UsageError((given_on_cli(name) ? "--" + name : where(name)) + ": expected an integer");
    resolved[name] = static_cast<long long>(x);
    return static_cast<long long>(x);
  }

  std::string str(const std::string& name, std::optional<std::string> def = std::nullopt) {
    std::string s;
    if (auto v = cli_value(name)) {
      s = *v;
    } else if (config_.contains(name)) {
      if (!config_[name].is_string()) throw UsageError(where(name) + ": expected a string");
      s = config_[name].get<std::string>();
    } else if (def) {
      s = *def;
    } else {
      throw UsageError("missing required option --" + name);
    }
    resolved[name] = s;
    return s;
  }

  bool flag(const std::string& name) {
    bool b = false;
    const CLI::Option* o = option(name);
    if (o && o->count() > 0) {
      b = true;
    } else if (config_.contains(name)) {
      if (!config_[name].is_boolean()) throw UsageError(where(name) + ": expected true or false");
      b = config_[name].get<bool>();
    }
    resolved[name] = b;
    return b;
  }

  std::vector<double> list(const std::string& name) {
    std::vector<double> out;
    auto from_string = [&](const std::string& s, const std::string& w) {
      std::stringstream ss(s);
      std::string f;
      while (std::getline(ss, f, ',')) out.push_back(parse_number(f, w));
    };
    if (auto v = cli_value(name)) {
      from_string(*v, "--" + name);
    } else if (config_.contains(name)) {
      const Json& j = config_[name];
      if (j.is_string())
        from_string(j.get<std::string>(), where(name));
      else
        out = std::vector<double>(to_vec(j, where(name)).data(), to_vec(j, where(name)).data() + j.size());
    } else {
      throw UsageError("missing required option --" + name);
    }
    if (out.empty()) throw UsageError("--" + name + ": empty list");
    Json a = Json::array();
    for (double x : out) a.push_back(number(x));
    resolved[name] = a;
    return out;
  }

  Json resolved = Json::object();

 private:
  const CLI::Option* option(const std::string& name) const {
    if (const CLI::Option* o = sub_.get_option_no_throw("--" + name)) return o;
    return app_.get_option_no_throw("--" + name);
  }
  bool given_on_cli(const std::string& name) const {
    const CLI::Option* o = option(name);
    return o && o->count() > 0;
  }
  std::optional<std::string> cli_value(const std::string& name) const {
    const CLI::Option* o = option(name);
    if (o && o->count() > 0) return o->as<std::string>();
    return std::nullopt;
  }
  std::string where(const std::string& name) const { return path_ + ": key '" + name + "'"; }
  static double parse_number(std::string s, const std::string& w) {
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    while (!s.empty() && s.back() == ' ') s.pop_back();
    if (s == "inf" || s == "Infinity") return kInf;
    if (s == "-inf" || s == "-Infinity") return -kInf;
    try {
      size_t used = 0;
      double x = std::stod(s, &used);
      if (used == s.size() && !std::isnan(x)) return x;
    } catch (const std::exception&) {
    }
    throw UsageError(w + ": expected a number, got '" + s + "'");
  }

  CLI::App& app_;
  CLI::App& sub_;
  Json config_ = Json::object();
  std::string path_;
};

struct Ctx {
  Resolver& r;
  Tolerance tol;
  std::uint64_t seed = 0;
  Json results = Json::object();
  Json certificates = Json::object();
};

Json distribution_json(const DiscreteDistribution& d) {
  return Json{{"atoms", from_mat(d.atoms)}, {"weights", from_vec(d.weights)}};
}

Json moments_json(const MomentPair& m) {
  return Json{{"mean", from_vec(m.mean)}, {"cov", from_mat(m.cov)}};
}

Json extremal_json(const ExtremalReport& rep) {
  Json j;
  j["kind"] = rep.kind == ExtremalKind::Attained ? "attained" : "asymptotic";
  j["certified_value"] = number(rep.certified_value);
  if (rep.kind == ExtremalKind::Attained) {
    j["distribution"] = distribution_json(rep.distribution);
  } else {
    Json fixed = Json::array(), esc = Json::array();
    for (const auto& f : rep.family.fixed)
      fixed.push_back({{"location", from_vec(f.location)}, {"weight", number(f.weight)}, {"shrink", number(f.shrink)}});
    for (const auto& e : rep.family.escaping)
      esc.push_back({{"origin", from_vec(e.origin)},
                     {"direction", from_vec(e.direction)},
                     {"rate", number(e.rate)},
                     {"weight", number(e.weight)}});
    j["family"] = {{"fixed", fixed}, {"escaping", esc}, {"min_n", number(rep.family.min_n)}};
  }
  return j;
}

PiecewiseAffineLoss parse_pwa(const Json& j, const std::string& where) {
  if (!j.contains("pieces") || !j["pieces"].is_array() || j["pieces"].empty())
    throw UsageError(where + ": a piecewise-affine loss needs a non-empty \"pieces\" array");
  PiecewiseAffineLoss L;
  for (size_t k = 0; k < j["pieces"].size(); ++k) {
    const Json& p = j["pieces"][k];
    std::string w = where + ": pieces[" + std::to_string(k) + "]";
    if (!p.is_object() || !p.contains("a") || !p.contains("b") || !p["b"].is_number())
      throw UsageError(w + ": expected {\"a\": [...], \"b\": number}");
    L.pieces.push_back({to_vec(p["a"], w + ".a"), p["b"].get<double>()});
  }
  return L;
}

QuadraticLoss parse_quadratic(const Json& j, const std::string& where) {
  if (!j.contains("Q")) throw UsageError(where + ": a quadratic loss needs \"Q\"");
  QuadraticLoss L;
  L.Q = to_mat(j["Q"], where + ": Q");
  L.q = j.contains("q") ? to_vec(j["q"], where + ": q") : Vec::Zero(L.Q.rows());
  if (L.Q.rows() != L.Q.cols() || L.q.size() != L.Q.rows())
    throw UsageError(where + ": Q must be square and q must match its size");
  return L;
}

std::string loss_type(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw UsageError(where + ": expected an object with a \"type\" of \"pwa\" or \"quadratic\"");
  std::string t = j["type"];
  if (t != "pwa" && t != "quadratic") throw UsageError(where + ": unknown loss type '" + t + "'");
  return t;
}

// ------------------------------------------------------------- commands

void cmd_transport(Ctx& c) {
  auto a = load_distribution(c.r.str("a"));
  auto b = load_distribution(c.r.str("b"));
  double p = parse_order(c.r.str("p", "1"));
  std::string norm_name = c.r.str("norm", "l2");
  NormSpec norm = parse_norm(norm_name);
  auto t = wasserstein_p(a, b, p, norm, c.tol);
  c.results["distance"] = number(t.distance);
  c.results["cost"] = number(t.cost);
  c.results["plan"] = from_mat(t.plan);
  c.results["potentials"] = {{"phi", from_vec(t.duals.phi)}, {"psi", from_vec(t.duals.psi)}};
  c.certificates["primal_cost"] = number(t.cost);
  c.certificates["dual_value"] = number(t.dual_value);
  c.certificates["gap"] = number(t.gap);
  if (p == 1) {
    auto kr = kr_verify(a, b, norm, t.duals);
    c.certificates["potentials_feasible"] = kr.feasible;
    c.certificates["max_violation"] = number(kr.max_violation);
  }
  if (p == 2 && norm.is_euclidean())
    c.certificates["gelbrich_lower_bound"] = number(gelbrich_distance(moments(a), moments(b)));
}

void cmd_wc_risk(Ctx& c) {
  const std::string samples_path = c.r.str("samples");
  auto samples = load_distribution(samples_path);
  const std::string loss_path = c.r.str("loss");
  Json lj = read_json(loss_path);
  const std::string type = loss_type(lj, loss_path);
  BallSpec ball;
  ball.eps = c.r.num("eps");
  ball.p = parse_order(c.r.str("p", type == "quadratic" ? "2" : "1"));
  ball.norm = parse_norm(c.r.str("norm", "l2"));
  const int m = static_cast<int>(samples.dim());
  ball.support = SetSpec::whole(m);
  if (c.r.given("support")) {
    std::string sp = c.r.str("support");
    ball.support = parse_support(read_json(sp), m, sp);
  }
  const bool want_extremal = c.r.flag("extremal");
  WcOptions opt;
  opt.tol = c.tol;
  opt.force_lp = c.r.flag("force-lp");
  c.results["loss_type"] = type;

  if (type == "quadratic") {
    QuadraticLoss L = parse_quadratic(lj, loss_path);
    require(ball.p == 2, ErrorCode::UnsupportedCombination, "wc-risk: a quadratic loss needs p = 2");
    require(ball.norm.is_euclidean(), ErrorCode::UnsupportedCombination,
            "wc-risk: a quadratic loss needs the Euclidean ground norm");
    require(ball.support.kind() == SetSpec::Kind::Whole, ErrorCode::UnsupportedSupport,
            "wc-risk: a quadratic loss needs the whole space as support");
    c.results["nominal"] = number(expectation(samples, L));
    double v = wc_risk_quadratic(L, samples, ball.eps, c.tol);
    c.results["value"] = number(v);
    if (want_extremal) {
      auto rep = extremal_quadratic(L, samples, ball.eps, c.tol);
      c.results["extremal"] = extremal_json(rep);
      if (rep.kind == ExtremalKind::Attained) {
        c.certificates["extremal_risk"] = number(expectation(rep.distribution, L));
        c.certificates["extremal_distance"] = number(wasserstein_p(rep.distribution, samples, 2).distance);
      } else {
        auto Qn = rep.family.at(std::max(1e6, rep.family.min_n));
        c.certificates["member_n"] = number(std::max(1e6, rep.family.min_n));
        c.certificates["member_risk"] = number(expectation(Qn, L));
        c.certificates["member_distance"] = number(wasserstein_p(Qn, samples, 2).distance);
      }
    }
    return;
  }

  PiecewiseAffineLoss L = parse_pwa(lj, loss_path);
  c.results["nominal"] = number(expectation(samples, L));
  double v = wc_risk_pwa(L, samples, ball, opt);
  c.results["value"] = number(v);
  if (ball.p == 1) c.results["lipschitz"] = number(lipschitz_modulus_pwa(L, ball.norm));
  if (want_extremal) {
    auto rep = extremal_pwa(L, samples, ball, opt);
    c.results["extremal"] = extremal_json(rep);
    const bool finite_p = std::isfinite(ball.p);
    if (rep.kind == ExtremalKind::Attained) {
      c.certificates["extremal_risk"] = number(expectation(rep.distribution, L));
      if (finite_p)
        c.certificates["extremal_distance"] =
            number(wasserstein_p(rep.distribution, samples, ball.p, ball.norm).distance);
    } else {
      double n = std::max(1e6, rep.family.min_n);
      auto Qn = rep.family.at(n);
      c.certificates["member_n"] = number(n);
      c.certificates["member_risk"] = number(expectation(Qn, L));
      if (finite_p) c.certificates["member_distance"] = number(wasserstein_p(Qn, samples, ball.p, ball.norm).distance);
    }
  }
}

void cmd_gelbrich(Ctx& c) {
  MomentPair center = load_moments(c.r.str("moments"));
  const std::string loss_path = c.r.str("loss");
  Json lj = read_json(loss_path);
  if (loss_type(lj, loss_path) != "quadratic") throw UsageError(loss_path + ": gelbrich needs a quadratic loss");
  QuadraticLoss L = parse_quadratic(lj, loss_path);
  if (L.Q.rows() != center.mean.size()) throw UsageError(loss_path + ": loss dimension differs from the moments");
  double eps = c.r.num("eps");
  GelbrichResult g;
  if (c.r.given("generator")) {
    std::string gen = c.r.str("generator");
    EllipticalSpec spec;
    spec.moments = center;
    if (gen == "gaussian") {
      spec.generator = Generator::Gaussian;
    } else if (gen == "logistic") {
      spec.generator = Generator::Logistic;
    } else if (gen == "t") {
      spec.generator = Generator::StudentT;
      spec.nu = c.r.num("nu");
    } else {
      throw UsageError("--generator: expected gaussian, logistic or t, got '" + gen + "'");
    }
    auto e = wc_risk_elliptical_quadratic(L, spec, eps, c.tol);
    g = e.detail;
    c.results["generator"] = generator_name(e.extremal.generator);
  } else {
    g = gelbrich_risk_quadratic(L, center, eps, c.tol);
  }
  c.results["value"] = number(g.value);
  c.results["primal_value"] = number(g.primal_value);
  c.results["gamma_star"] = number(g.gamma_star);
  c.results["interior"] = g.interior;
  c.results["extremal"] = moments_json(g.extremal);
  c.certificates["duality_gap"] = number(g.value - g.primal_value);
  c.certificates["regularization"] = number(g.regularization);
  MomentPair reg = center;
  reg.cov += g.regularization * Mat::Identity(center.cov.rows(), center.cov.cols());
  c.certificates["boundary_residual"] = number(gelbrich_distance(reg, g.extremal) - eps);
}

void cmd_shrink(Ctx& c) {
  const std::string path = c.r.str("input");
  const bool as_cov = c.r.flag("covariance");
  MomentPair m;
  if (as_cov) {
    CsvTable t = read_csv(path);
    if (t.data.rows() != t.data.cols()) throw UsageError(path + ": a covariance matrix must be square");
    m = {Vec::Zero(t.data.cols()), t.data};
  } else {
    m = load_moments(path);
  }
  double eps = c.r.num("eps");
  auto s = wasserstein_shrinkage(m, eps, c.tol);
  c.results["gamma_star"] = number(s.gamma_star);
  Json em = Json::array();
  Vec lam(s.eigen_map.size());
  for (size_t i = 0; i < s.eigen_map.size(); ++i) {
    em.push_back({number(s.eigen_map[i].first), number(s.eigen_map[i].second)});
    lam(static_cast<Eigen::Index>(i)) = s.eigen_map[i].first;
  }
  c.results["eigen_map"] = em;
  c.results["mean"] = from_vec(s.mean);
  c.results["precision"] = from_mat(s.precision);
  c.certificates["root_residual"] = number(shrink_detail::equation(lam, eps, s.gamma_star));
}

void cmd_mmse(Ctx& c) {
  const std::string path = c.r.str("moments");
  JointMoments J;
  bool mx_in_file = false;
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    Json j = read_json(path);
    MomentPair m = load_moments(path);
    J.mean = m.mean;
    J.cov = m.cov;
    if (j.contains("mx")) {
      if (!j["mx"].is_number_integer()) throw UsageError(path + ": mx must be an integer");
      J.mx = j["mx"].get<int>();
      mx_in_file = true;
    }
  } else {
    MomentPair m = load_moments(path);
    J.mean = m.mean;
    J.cov = m.cov;
  }
  if (c.r.given("mx") || !mx_in_file) J.mx = static_cast<int>(c.r.integer("mx"));
  J.my = static_cast<int>(J.mean.size()) - J.mx;
  if (J.mx < 1 || J.my < 1) throw UsageError("--mx: must leave at least one coordinate on each side");
  double eps = c.r.num("eps");
  FwOptions opt;
  opt.iterations = static_cast<int>(c.r.integer("iterations", 500));
  opt.gap_tol = c.r.num("gap-tol", 0.0);
  if (opt.iterations < 0) throw UsageError("--iterations: must be >= 0");
  auto r = fw_solve(J, eps, opt, c.tol);
  c.results["gain"] = from_mat(r.estimator.A);
  c.results["offset"] = from_vec(r.estimator.b);
  c.results["objective"] = number(r.objective);
  c.results["worst_covariance"] = from_mat(r.S);
  c.results["iterations"] = r.iterations;
  c.results["gap_history"] = from_vec(Eigen::Map<const Vec>(r.gaps.data(), r.gaps.size()));
  double min_gap = *std::min_element(r.gaps.begin(), r.gaps.end());
  Mat C = (J.cov + J.cov.transpose()) / 2 + r.regularization * Mat::Identity(J.cov.rows(), J.cov.cols());
  c.certificates["final_gap"] = number(r.gaps.back());
  c.certificates["best_gap"] = number(min_gap);
  c.certificates["upper_bound"] = number(r.objective + min_gap);
  c.certificates["trace_residual"] = number(gelbrich_trace(r.S, C) - eps * eps);
  c.certificates["eigen_floor_residual"] = number(lambda_min(r.S) - lambda_min(C));
  c.certificates["repaired"] = r.repaired;
  c.certificates["regularization"] = number(r.regularization);
}

struct TrainSetup {
  LabeledData data;
  std::vector<std::string> features;
  UnivariateLoss loss;
  bool classify = true;
  double p = 1;
  NormSpec norm;
  TrainOptions opt;
  Vec center, scale;  // when standardized
};

UnivariateLoss parse_loss(Resolver& r) {
  std::string name = r.str("loss");
  if (name == "hinge") return UnivariateLoss::hinge();
  if (name == "smooth_hinge") return UnivariateLoss::smooth_hinge();
  if (name == "logloss") return UnivariateLoss::logloss();
  if (name == "squared") return UnivariateLoss::squared();
  if (name == "huber") return UnivariateLoss::huber(r.num("delta"));
  if (name == "eps_insensitive") return UnivariateLoss::eps_insensitive(r.num("delta"));
  if (name == "pinball") return UnivariateLoss::pinball(r.num("delta"));
  throw UsageError("--loss: unknown loss '" + name + "'");
}

TrainSetup train_setup(Ctx& c) {
  TrainSetup s;
  const std::string path = c.r.str("data");
  CsvTable t = read_csv(path);
  if (t.header.size() < 2) throw UsageError(path + ": need at least one feature column and a target column");
  std::string target = c.r.str("target", t.header.back());
  auto it = std::find(t.header.begin(), t.header.end(), target);
  if (it == t.header.end()) throw UsageError("--target: no column named '" + target + "' in " + path);
  const Eigen::Index tc = it - t.header.begin();
  s.data.X = Mat(t.data.rows(), t.data.cols() - 1);
  for (Eigen::Index k = 0, o = 0; k < t.data.cols(); ++k) {
    if (k == tc) continue;
    s.data.X.col(o++) = t.data.col(k);
    s.features.push_back(t.header[k]);
  }
  s.data.y = t.data.col(tc);
  s.loss = parse_loss(c.r);
  std::string task = c.r.str("task", s.loss.classification() ? "classify" : "regress");
  if (task != "classify" && task != "regress") throw UsageError("--task: expected classify or regress");
  s.classify = task == "classify";
  s.p = s.classify ? 1 : parse_order(c.r.str("p", s.loss.kind == LossKind::Squared ? "2" : "1"));
  s.norm = parse_norm(c.r.str("norm", "l2"));
  s.opt.tol = c.tol;
  s.opt.tol.max_iter = static_cast<int>(c.r.integer("max-iter", c.tol.max_iter));
  if (c.r.flag("standardize")) {
    const double n = static_cast<double>(s.data.X.rows());
    s.center = s.data.X.colwise().mean().transpose();
    s.scale = Vec(s.data.X.cols());
    for (Eigen::Index k = 0; k < s.data.X.cols(); ++k) {
      double sd = std::sqrt((s.data.X.col(k).array() - s.center(k)).square().sum() / n);
      s.scale(k) = sd > 0 ? sd : 1.0;
      s.data.X.col(k) = (s.data.X.col(k).array() - s.center(k)) / s.scale(k);
    }
  }
  return s;
}

TrainedModel train_once(const TrainSetup& s, const LabeledData& d, double eps) {
  return s.classify ? dro_train_classifier(d, s.loss, eps, s.norm, s.opt)
                    : dro_train_regressor(d, s.loss, eps, s.p, s.norm, s.opt);
}

void cmd_train(Ctx& c) {
  TrainSetup s = train_setup(c);
  double eps = c.r.num("eps");
  const bool cross = c.r.flag("crosscheck");
  Json feats = Json::array();
  for (auto& f : s.features) feats.push_back(f);
  c.results["features"] = feats;
  if (s.center.size()) c.results["standardization"] = {{"center", from_vec(s.center)}, {"scale", from_vec(s.scale)}};
  TrainedModel m = train_once(s, s.data, eps);
  c.results["weights"] = from_vec(m.w);
  c.results["objective"] = number(m.objective);
  c.results["iterations"] = m.iterations;
  c.results["unattained"] = m.unattained;
  Json w = Json::array();
  for (auto& x : m.warnings) w.push_back(x);
  c.results["warnings"] = w;
  c.certificates["certified"] = m.certified;
  c.certificates["gap"] = number(m.gap);
  if (cross) {
    auto x = dro_objective_crosscheck(m.w, s.data, s.loss, eps, s.norm);
    c.certificates["crosscheck"] = {
        {"regularized", number(x.regularized)}, {"worst_case", number(x.worst_case)}, {"diff", number(x.diff)}};
  }
}

void cmd_calibrate(Ctx& c) {
  std::string method = c.r.str("method");
  if (method == "empirical") {
    TailModel t;
    t.alpha = c.r.num("alpha");
    t.A = c.r.num("A", 1.0);
    const bool heuristic = !c.r.given("c1") || !c.r.given("c2");
    t.c1 = c.r.num("c1", std::numbers::e);
    t.c2 = c.r.num("c2", 1.0);
    t.m = static_cast<int>(c.r.integer("m"));
    double N = c.r.num("N"), eta = c.r.num("eta"), p = c.r.num("p", 1.0);
    double radius = radius_empirical(t, N, eta, p);
    bool large = N >= std::log(t.c1 / eta) / t.c2;
    c.results["radius"] = number(radius);
    c.results["branch"] = large ? "large_N" : "small_N";
    c.results["exponent"] = number(large ? std::min(p / t.m, 0.5) : p / t.alpha);
    c.results["heuristic_constants"] = heuristic;
  } else if (method == "moments") {
    MomentTailModel t;
    const bool heuristic = !c.r.given("c");
    t.c = c.r.num("c", std::numbers::e);
    double N = c.r.num("N"), eta = c.r.num("eta");
    c.results["radius"] = number(radius_moments(t, N, eta));
    c.results["heuristic_constants"] = heuristic;
  } else if (method == "cv") {
    TrainSetup s = train_setup(c);
    std::vector<double> grid = c.r.list("grid");
    int folds = static_cast<int>(c.r.integer("folds", 5));
    auto subset = [&](const std::vector<int>& idx) {
      LabeledData d{Mat(idx.size(), s.data.X.cols()), Vec(idx.size())};
      for (size_t k = 0; k < idx.size(); ++k) {
        d.X.row(k) = s.data.X.row(idx[k]);
        d.y(k) = s.data.y(idx[k]);
      }
      return d;
    };
    std::function<Vec(const std::vector<int>&, double)> train = [&](const std::vector<int>& idx, double eps) {
      return train_once(s, subset(idx), eps).w;
    };
    std::function<double(const Vec&, const std::vector<int>&)> eval = [&](const Vec& w, const std::vector<int>& idx) {
      LabeledData d = subset(idx);
      Vec z = d.X * w;
      z = s.classify ? Vec(z.cwiseProduct(d.y)) : Vec(z - d.y);
      double total = 0;
      for (Eigen::Index i = 0; i < z.size(); ++i) total += s.loss(z(i));
      return total / static_cast<double>(z.size());
    };
    auto r = cv_radius<Vec>(train, eval, static_cast<int>(s.data.X.rows()), grid, folds, c.seed);
    c.results["eps_star"] = number(r.eps_star);
    c.results["grid"] = from_vec(Eigen::Map<const Vec>(r.grid.data(), r.grid.size()));
    c.results["risk"] = from_vec(Eigen::Map<const Vec>(r.risk.data(), r.risk.size()));
  } else {
    throw UsageError("--method: expected empirical, moments or cv, got '" + method + "'");
  }
}

struct Command {
  const char* name;
  const char* help;
  std::vector<std::pair<const char*, const char*>> options;
  std::vector<std::pair<const char*, const char*>> flags;
  void (*fn)(Ctx&);
};

const std::vector<Command>& commands() {
  static const std::vector<Command> all = {
      {"transport",
       "Wasserstein distance between two discrete distributions",
       {{"--a", "first distribution (.json atoms/weights or .csv samples)"},
        {"--b", "second distribution"},
        {"--p", "order, >= 1 (default 1)"},
        {"--norm", "ground norm: l1, l2, linf or l<p> (default l2)"}},
       {},
       cmd_transport},
      {"wc-risk",
       "worst-case expected loss over a Wasserstein ball around samples",
       {{"--samples", "samples (.csv) or distribution (.json)"},
        {"--loss", "loss descriptor (.json, type pwa or quadratic)"},
        {"--eps", "radius"},
        {"--p", "order: 1, 2 or inf (default 1; 2 for quadratic losses)"},
        {"--norm", "ground norm (default l2)"},
        {"--support", "support descriptor (.json); default the whole space"}},
       {{"--extremal", "also report a worst-case distribution"}, {"--force-lp", "use the LP path where available"}},
       cmd_wc_risk},
      {"gelbrich",
       "worst-case quadratic risk over a Gelbrich moment ball",
       {{"--moments", "moments (.json mean/cov) or samples (.csv)"},
        {"--loss", "quadratic loss descriptor (.json)"},
        {"--eps", "radius"},
        {"--generator", "elliptical generator: gaussian, logistic or t"},
        {"--nu", "degrees of freedom for the t generator"}},
       {},
       cmd_gelbrich},
      {"shrink",
       "Wasserstein shrinkage precision matrix estimator",
       {{"--input", "samples (.csv), moments (.json) or covariance (.csv with --covariance)"}, {"--eps", "radius"}},
       {{"--covariance", "the CSV holds a covariance matrix rather than samples"}},
       cmd_shrink},
      {"mmse",
       "robust affine estimator by Frank-Wolfe",
       {{"--moments", "joint moments (.json mean/cov[/mx]) or samples (.csv)"},
        {"--mx", "size of the estimated block (leading coordinates)"},
        {"--eps", "radius"},
        {"--iterations", "Frank-Wolfe iterations (default 500)"},
        {"--gap-tol", "stop once the gap is at most this (default 0)"}},
       {},
       cmd_mmse},
      {"train",
       "robust linear classifier or regressor",
       {{"--data", "CSV with features and a target column"},
        {"--target", "target column (default: last)"},
        {"--task", "classify or regress (default from the loss)"},
        {"--loss", "hinge, smooth_hinge, logloss, squared, huber, eps_insensitive, pinball"},
        {"--delta", "loss parameter"},
        {"--eps", "radius"},
        {"--p", "order for regression (1, or 2 for squared)"},
        {"--norm", "input norm (default l2)"},
        {"--max-iter", "solver iteration limit"}},
       {{"--standardize", "center and scale features first"},
        {"--crosscheck", "compare with the worst-case risk (piecewise-affine losses)"}},
       cmd_train},
      {"calibrate",
       "radius selection",
       {{"--method", "empirical, moments or cv"},
        {"--N", "sample size"},
        {"--eta", "confidence level in (0, 1]"},
        {"--p", "order (empirical; default 1)"},
        {"--m", "dimension (empirical)"},
        {"--alpha", "tail exponent (empirical)"},
        {"--A", "tail bound (empirical; default 1)"},
        {"--c1", "constant (empirical; heuristic default e)"},
        {"--c2", "constant (empirical; heuristic default 1)"},
        {"--c", "constant (moments; heuristic default e)"},
        {"--data", "CSV for cv"},
        {"--target", "target column for cv"},
        {"--task", "classify or regress for cv"},
        {"--loss", "loss for cv"},
        {"--delta", "loss parameter for cv"},
        {"--norm", "input norm for cv"},
        {"--max-iter", "solver iteration limit for cv"},
        {"--grid", "comma-separated radii for cv"},
        {"--folds", "number of folds for cv (default 5)"}},
       {{"--standardize", "center and scale features first (cv)"}},
       cmd_calibrate},
  };
  return all;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  CLI::App app{"Wasserstein distributionally robust optimization toolkit", "wdro"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--tol", "absolute and relative solver tolerance");
  app.add_option("--seed", "seed for randomized steps (default 0)");
  app.add_option("--output", "write the report here instead of stdout");
  app.add_option("--config", "JSON file of option values; flags override it");
  std::map<CLI::App*, const Command*> by_app;
  for (const Command& cmd : commands()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->fallthrough();
    for (auto& [name, help] : cmd.options) sub->add_option(name, help);
    for (auto& [name, help] : cmd.flags) sub->add_flag(name, help);
    by_app[sub] = &cmd;
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "wdro: " << e.what() << "\nRun 'wdro --help' for usage.\n";
    return 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  const Command& cmd = *by_app.at(sub);

  Resolver r(app, *sub);
  Ctx ctx{r, Tolerance{}, 0, Json::object(), Json::object()};
  std::string output;
  Json error = nullptr;
  int code = 0;
  double parse_ms = 0;
  auto t1 = clock::now();
  try {
    if (const CLI::Option* o = app.get_option_no_throw("--config"); o && o->count() > 0)
      r.load_config(o->as<std::string>());
    if (r.given("tol")) {
      double tol = r.num("tol");
      if (!(tol >= 0)) throw UsageError("--tol: must be >= 0");
      ctx.tol.abs = ctx.tol.rel = tol;
    }
    if (r.given("seed")) {
      long long s = r.integer("seed");
      if (s < 0) throw UsageError("--seed: must be >= 0");
      ctx.seed = static_cast<std::uint64_t>(s);
    }
    if (const CLI::Option* o = app.get_option_no_throw("--output"); o && o->count() > 0)
      output = o->as<std::string>();
    t1 = clock::now();
    parse_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    cmd.fn(ctx);
  } catch (const UsageError& e) {
    err << "wdro " << cmd.name << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    error = {{"code", code_name(e.code())}, {"message", e.what()}};
    code = 1;
  } catch (const std::exception& e) {
    error = {{"code", "InternalError"}, {"message", e.what()}};
    code = 1;
  }
  const double compute_ms = std::chrono::duration<double, std::milli>(clock::now() - t1).count();

  Json report;
  report["toolkit_version"] = kVersion;
  report["command"] = cmd.name;
  report["status"] = code == 0 ? "ok" : "error";
  report["config"] = r.resolved;
  report["results"] = ctx.results;
  report["certificates"] = ctx.certificates;
  report["error"] = error;
  report["timings"] = {{"parse_ms", parse_ms}, {"compute_ms", compute_ms}};
  if (output.empty()) {
    write_json(out, report);
  } else {
    std::ofstream f(output);
    if (!f) {
      err << "wdro " << cmd.name << ": cannot write " << output << '\n';
      return 2;
    }
    write_json(f, report);
  }
  return code;
}

}  // namespace wdro::cli
