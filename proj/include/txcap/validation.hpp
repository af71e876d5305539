#pragma once

// Self-checks run by `txcap validate`: sampler KS, Campbell moments, bound
// sandwich and capacity slope, each at modest sizes on the given parameters.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "txcap/analysis.hpp"
#include "txcap/experiments.hpp"
#include "txcap/simulator.hpp"
#include "txcap/stats.hpp"

namespace txcap {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline CheckResult check_sampler_ks(const NetworkParams& p, std::uint64_t seed) {
  const auto k = derive_constants(p);
  RandomStream rng(seed, 1);
  std::vector<double> g(100000);
  for (auto& x : g) x = sample_g(rng, p, k);
  const double ks = ks_statistic(g, [&](double x) { return cdf_primary(x, p, k); });
  return {"sampler_ks", ks, 0.01, ks < 0.01, "KS distance of 1e5 primary-interferer draws"};
}

inline CheckResult check_order_statistic_ks(const NetworkParams& p, std::uint64_t seed) {
  const auto k = derive_constants(p);
  RandomStream rng(seed, 2);
  const double radius = std::max(100.0 * p.d, truncation_radius(p));
  std::vector<double> g(10000);
  detail::TopK scratch;
  EffectiveTrial t;
  for (auto& x : g) {
    run_effective_trial(rng, p, radius, &t, scratch);
    x = t.primary;
  }
  const double ks = ks_statistic(g, [&](double x) { return x > 0.0 ? cdf_primary(x, p, k) : 0.0; });
  return {"order_statistic_ks", ks, 0.03, ks < 0.03, "KS distance of the L-th largest mark, 1e4 networks"};
}

inline std::vector<CheckResult> check_campbell(const NetworkParams& p, std::uint64_t seed) {
  const auto k = derive_constants(p);
  std::vector<CheckResult> out;
  int idx = 0;
  for (double g : {0.1, 1.0, 10.0}) {
    RandomStream rng(seed, 10 + idx++);
    const auto s = campbell_stats(p, g, 10000, rng, truncation_radius(p));
    const auto m = secondary_moments(g, p, k);
    const double zm = std::abs(s.mean - m.mean) / s.mean_se;
    const double zv = std::abs(s.variance - m.variance) / s.variance_se;
    char label[64];
    std::snprintf(label, sizeof label, "campbell_mean_g=%g", g);
    out.push_back({label, zm, 3.0, zm <= 3.0, "standard errors from the closed-form mean"});
    std::snprintf(label, sizeof label, "campbell_variance_g=%g", g);
    out.push_back({label, zv, 3.0, zv <= 3.0, "standard errors from the closed-form variance"});
  }
  return out;
}

inline CheckResult check_sandwich(const NetworkParams& p, std::uint64_t seed) {
  ExperimentSpec spec;
  spec.base = p;
  spec.sim.trials = 20000;
  spec.sim.seed = seed;
  spec.mc_samples = 20000;
  spec.points_per_decade = 6.0;
  spec.L_set = {p.L};
  const auto grid = sweep_grid(spec, p.L, 0.01, 0.3);
  const auto sweep = run_sweep(spec, p.L, SimMode::effective, grid);
  std::size_t inside = 0;
  for (const auto& s : sweep)
    inside += s.estimate.ci_high >= s.lower && s.estimate.ci_low <= s.upper + 3.0 * s.upper_std_error;
  const double frac = static_cast<double>(inside) / static_cast<double>(sweep.size());
  return {"bound_sandwich", frac, 0.95, frac >= 0.95, "fraction of grid points whose CI meets the bounds"};
}

inline CheckResult check_slope(const NetworkParams& p) {
  std::vector<CapacityPoint> pts;
  const auto curve = lower_bound_curve(p, p.L);
  for (double e : {1e-5, 1e-4, 1e-3, 1e-2}) pts.push_back({e, solve_capacity(e, curve, density_hint(p)).capacity});
  const double slope = capacity_sensitivity(pts);
  const double rel = std::abs(slope * p.L - 1.0);
  return {"capacity_slope", slope, 1.0 / p.L, rel <= 0.15, "log-log slope of the lower-bound capacity"};
}

}  // namespace detail

inline std::vector<CheckResult> run_validation(const NetworkParams& params, std::uint64_t seed) {
  params.validate();
  if (!(params.lambda > 0.0)) throw std::invalid_argument("validate needs lambda > 0");
  std::vector<CheckResult> out;
  out.push_back(detail::check_sampler_ks(params, seed));
  out.push_back(detail::check_order_statistic_ks(params, seed));
  for (auto& c : detail::check_campbell(params, seed)) out.push_back(std::move(c));
  out.push_back(detail::check_sandwich(params, seed));
  out.push_back(detail::check_slope(params));
  return out;
}

}  // namespace txcap
