#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <vector>

#include "wdro/numerics.hpp"

namespace wdro {

// The constants c1, c2 are not known in practice; the defaults are heuristic.
struct TailModel {
  double alpha = 0;  // tail exponent, must exceed p
  double A = 1;      // bound on E exp(||xi||^alpha)
  double c1 = std::numbers::e;
  double c2 = 1;
  int m = 1;
};

struct MomentTailModel {
  double c = std::numbers::e;  // heuristic default
};

inline double radius_empirical(const TailModel& t, double N, double eta, double p) {
  require(N > 0 && std::isfinite(N), ErrorCode::InvalidArgument, "radius_empirical: N must be > 0");
  require(eta > 0 && eta <= 1, ErrorCode::InvalidArgument, "radius_empirical: eta must lie in (0, 1]");
  require(p >= 1 && std::isfinite(p), ErrorCode::InvalidArgument, "radius_empirical: p must be >= 1");
  require(t.m >= 1, ErrorCode::InvalidArgument, "radius_empirical: dimension must be >= 1");
  require(t.alpha > p, ErrorCode::InvalidArgument, "radius_empirical: tail exponent must exceed p");
  require(t.A > 0, ErrorCode::InvalidArgument, "radius_empirical: tail bound must be > 0");
  require(t.c1 > 1 && t.c2 > 0, ErrorCode::InvalidArgument,
          "radius_empirical: constants need c1 > 1 and c2 > 0");
  require(2 * p != t.m, ErrorCode::UnsupportedCase, "radius_empirical: p = m/2 is not supported");
  const double L = std::log(t.c1 / eta);
  const double base = L / (t.c2 * N);
  const double expo = N >= L / t.c2 ? std::min(p / t.m, 0.5) : p / t.alpha;
  return std::pow(base, expo);
}

inline double radius_moments(const MomentTailModel& t, double N, double eta) {
  require(N > 0 && std::isfinite(N), ErrorCode::InvalidArgument, "radius_moments: N must be > 0");
  require(eta > 0 && eta <= 1, ErrorCode::InvalidArgument, "radius_moments: eta must lie in (0, 1]");
  require(t.c > 1, ErrorCode::InvalidArgument, "radius_moments: constant must exceed 1");
  return std::log(t.c / eta) / std::sqrt(N);
}

// Confidence schedule exp(-sqrt(N)) for consistency experiments.
inline double eta_schedule(double N) { return std::exp(-std::sqrt(N)); }

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Samples are ordered by a hash of (seed, index) and dealt round-robin, so
// every fold gets floor(N/folds) or ceil(N/folds) samples.
inline std::vector<int> fold_assignment(int N, int folds, std::uint64_t seed) {
  require(folds >= 2, ErrorCode::InvalidArgument, "fold_assignment: need at least 2 folds");
  require(N >= folds, ErrorCode::InsufficientData, "fold_assignment: fewer samples than folds");
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> key(N);
  for (int i = 0; i < N; ++i) key[i] = splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(i));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  std::vector<int> fold(N);
  for (int r = 0; r < N; ++r) fold[order[r]] = r % folds;
  return fold;
}

struct CvResult {
  double eps_star = 0;
  std::vector<double> grid;  // ascending
  std::vector<double> risk;  // mean out-of-fold risk per grid point
};

// train(train_idx, eps) -> Model, evaluate(model, test_idx) -> risk
template <class Model>
CvResult cv_radius(const std::function<Model(const std::vector<int>&, double)>& train,
                   const std::function<double(const Model&, const std::vector<int>&)>& evaluate,
                   int N, std::vector<double> eps_grid, int folds, std::uint64_t seed) {
  require(!eps_grid.empty(), ErrorCode::InvalidArgument, "cv_radius: empty radius grid");
  for (double e : eps_grid)
    require(std::isfinite(e) && e >= 0, ErrorCode::InvalidArgument, "cv_radius: radii must be >= 0");
  std::vector<int> fold = fold_assignment(N, folds, seed);
  std::sort(eps_grid.begin(), eps_grid.end());
  eps_grid.erase(std::unique(eps_grid.begin(), eps_grid.end()), eps_grid.end());
  CvResult r;
  r.grid = eps_grid;
  for (double eps : eps_grid) {
    double total = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<int> tr, te;
      for (int i = 0; i < N; ++i) (fold[i] == f ? te : tr).push_back(i);
      total += evaluate(train(tr, eps), te);
    }
    r.risk.push_back(total / folds);
  }
  size_t best = 0;
  for (size_t k = 1; k < r.risk.size(); ++k)
    if (r.risk[k] < r.risk[best]) best = k;
  r.eps_star = r.grid[best];
  return r;
}

struct CoverageResult {
  int covered = 0;
  int trials = 0;
  double fraction() const { return trials ? static_cast<double>(covered) / trials : 0.0; }
};

// Fraction of trials in which the bound computed from trial t is at least
// the true value.
inline CoverageResult mc_coverage(const std::function<double(int)>& bound_for_trial,
                                  double true_value, int trials) {
  require(trials > 0, ErrorCode::InvalidArgument, "mc_coverage: need at least one trial");
  CoverageResult c;
  c.trials = trials;
  for (int t = 0; t < trials; ++t)
    if (true_value <= bound_for_trial(t)) ++c.covered;
  return c;
}

}  // namespace wdro
