#pragma once

/**
 * @file experiments.hpp
 * @brief Parameter sweeps behind the outage, capacity-vs-L and scaling datasets.
 *
 * Each sweep point is an independent simulation with its own seed derived
 * from (base seed, L, grid index, mode), so a row can be re-run alone.
 * lambda grids are log-spaced and aligned to multiples of 1/points_per_decade
 * decades; when no grid is given it is derived from the analytic bounds so
 * that the simulated curve is bracketed.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "txcap/analysis.hpp"
#include "txcap/model.hpp"
#include "txcap/simulator.hpp"
#include "txcap/stats.hpp"

namespace txcap {

enum class FigureId { fig1, fig2, fig3, custom };

inline const char* to_string(FigureId f) {
  switch (f) {
    case FigureId::fig1: return "fig1";
    case FigureId::fig2: return "fig2";
    case FigureId::fig3: return "fig3";
    case FigureId::custom: return "custom";
  }
  return "custom";
}

inline FigureId parse_figure_id(const std::string& s) {
  if (s == "fig1") return FigureId::fig1;
  if (s == "fig2") return FigureId::fig2;
  if (s == "fig3") return FigureId::fig3;
  if (s == "custom") return FigureId::custom;
  throw std::invalid_argument("unknown figure id '" + s + "'");
}

/// fixed: every point uses sim.region_radius; truncation: the smallest radius meeting the tail rule.
enum class RadiusPolicy { fixed, truncation };

inline const char* to_string(RadiusPolicy p) { return p == RadiusPolicy::fixed ? "fixed" : "truncation"; }

inline RadiusPolicy parse_radius_policy(const std::string& s) {
  if (s == "fixed") return RadiusPolicy::fixed;
  if (s == "truncation") return RadiusPolicy::truncation;
  throw std::invalid_argument("unknown radius policy '" + s + "'");
}

/// Parameters the figures use where the source leaves them open: d = 1, theta = 1, P_t = 0.95.
inline NetworkParams default_figure_params() {
  NetworkParams p;
  p.lambda = 0.01;
  p.d = 1.0;
  p.alpha = 4.0;
  p.theta = 1.0;
  p.beta = -std::log(0.95);
  p.L = 2;
  return p;
}

struct ExperimentSpec {
  FigureId figure_id = FigureId::custom;
  NetworkParams base = default_figure_params();
  SimConfig sim;
  RadiusPolicy radius_policy = RadiusPolicy::truncation;
  std::vector<double> lambdas;  ///< explicit sweep; empty means derive from the bounds
  double points_per_decade = 12.0;
  std::vector<int> L_set;
  std::vector<double> epsilons;
  std::vector<SimMode> modes{SimMode::effective};
  double outage_min = 1e-3;  ///< span covered by a derived fig1 sweep
  double outage_max = 0.3;
  std::size_t mc_samples = 100000;
  std::size_t target_events = 0;  ///< >0: raise trials so ~this many outages are expected
  std::size_t max_trials = 10'000'000;
  std::string output;

  void validate() const {
    base.validate();
    NetworkParams probe = base;
    sim.validate(probe);
    if (L_set.empty()) throw std::invalid_argument("experiment needs a non-empty L set");
    for (int L : L_set)
      if (L < 1) throw std::invalid_argument("L values must be >= 1");
    if (modes.empty()) throw std::invalid_argument("experiment needs at least one mode");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (!(lambdas[i] > 0.0)) throw std::invalid_argument("lambda grid values must be positive");
      if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
        throw std::invalid_argument("lambda grid must be strictly increasing");
    }
    for (double e : epsilons)
      if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("epsilon values must be in (0,1)");
    if (!(points_per_decade > 0.0)) throw std::invalid_argument("points_per_decade must be positive");
    if (!(outage_min > 0.0 && outage_min < outage_max && outage_max < 1.0))
      throw std::invalid_argument("need 0 < outage_min < outage_max < 1");
    if (mc_samples < 10000) throw std::invalid_argument("mc_samples must be >= 1e4");
  }
};

/// Defaults for one of the three datasets.
inline ExperimentSpec default_experiment(FigureId id) {
  ExperimentSpec s;
  s.figure_id = id;
  s.sim.trials = 100000;
  s.sim.seed = 2024;
  switch (id) {
    case FigureId::fig1:
      s.L_set = {2, 4};
      s.modes = {SimMode::effective, SimMode::channel};
      break;
    case FigureId::fig2:
      s.L_set = {1, 2, 3, 4, 5, 6, 7, 8};
      s.epsilons = {1e-1, 1e-2, 1e-3};
      break;
    case FigureId::fig3:
      s.L_set = {2, 3, 4};
      for (int k = -10; k <= -2; ++k) s.epsilons.push_back(std::pow(10.0, k / 2.0));
      s.sim.trials = 20000;
      s.target_events = 400;
      s.max_trials = 4'000'000;
      break;
    case FigureId::custom:
      s.L_set = {2};
      s.epsilons = {1e-2};
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

struct GridPoint {
  long index = 0;  ///< stable key used in seed derivation
  double lambda = 0.0;
};

/// Log grid 10^{k / per_decade} covering [lo, hi].
inline std::vector<GridPoint> aligned_log_grid(double lo, double hi, double per_decade) {
  if (!(lo > 0.0 && hi >= lo)) throw std::invalid_argument("aligned_log_grid: bad range");
  const long first = static_cast<long>(std::floor(std::log10(lo) * per_decade + 1e-9));
  const long last = static_cast<long>(std::ceil(std::log10(hi) * per_decade - 1e-9));
  std::vector<GridPoint> grid;
  for (long k = first; k <= last; ++k) grid.push_back({k, std::pow(10.0, k / per_decade)});
  return grid;
}

inline NetworkParams with_lambda_and_L(NetworkParams p, double lambda, int L) {
  p.lambda = lambda;
  p.L = L;
  return p;
}

/// Upper-bound curve in lambda with common random numbers (one seed for every lambda).
inline std::function<double(double)> upper_bound_curve(const NetworkParams& base, int L,
                                                       std::size_t mc_samples, std::uint64_t seed) {
  return [=](double lambda) {
    const auto p = with_lambda_and_L(base, lambda, L);
    RandomStream rng(seed);
    return outage_upper(p, derive_constants(p), mc_samples, rng).value;
  };
}

inline std::function<double(double)> lower_bound_curve(const NetworkParams& base, int L) {
  return [=](double lambda) {
    const auto p = with_lambda_and_L(base, lambda, L);
    return outage_lower(p, derive_constants(p));
  };
}

/// lambda range whose simulated outage is sure to cover [p_min, p_max] (bounds sandwich + margin).
/// Starting density for root brackets, in units of d^-2 so rescaled networks
/// bisect through exactly rescaled iterates.
inline double density_hint(const NetworkParams& p) { return 0.01 / (p.d * p.d); }

inline std::pair<double, double> bracketing_lambda_range(const ExperimentSpec& spec, int L,
                                                         double p_min, double p_max,
                                                         double margin = 1.25) {
  const auto upper = upper_bound_curve(spec.base, L, 20000, derive_seed(spec.sim.seed, L, 0xB0));
  const auto lower = lower_bound_curve(spec.base, L);
  const double lo = solve_capacity(p_min, upper, density_hint(spec.base), CapacityMethod::upper_bound).lambda_eps;
  const double hi = solve_capacity(p_max, lower, density_hint(spec.base), CapacityMethod::lower_bound).lambda_eps;
  return {lo / margin, hi * margin};
}

inline std::vector<GridPoint> sweep_grid(const ExperimentSpec& spec, int L, double p_min,
                                         double p_max) {
  if (!spec.lambdas.empty()) {
    std::vector<GridPoint> grid;
    for (std::size_t i = 0; i < spec.lambdas.size(); ++i)
      grid.push_back({static_cast<long>(i), spec.lambdas[i]});
    return grid;
  }
  const auto [lo, hi] = bracketing_lambda_range(spec, L, p_min, p_max);
  return aligned_log_grid(lo, hi, spec.points_per_decade);
}

struct SweepPoint {
  double lambda = 0.0;
  int L = 0;
  OutageEstimate estimate;
  double lower = 0.0;
  double upper = 0.0;
  double upper_std_error = 0.0;
};

inline std::size_t trials_for_point(const ExperimentSpec& spec, double lower_bound) {
  std::size_t trials = spec.sim.trials;
  if (spec.target_events > 0 && lower_bound > 0.0) {
    const double wanted = std::ceil(static_cast<double>(spec.target_events) / lower_bound);
    const double capped = std::min(wanted, static_cast<double>(spec.max_trials));
    trials = std::max(trials, static_cast<std::size_t>(capped));
  }
  return trials;
}

/// Simulates one (L, mode) sweep and attaches the analytic bounds to each point.
/// With `stop_above`, the sweep ends after the first point whose CI lies wholly
/// above it; the grid is ascending so later points only cost time.
inline std::vector<SweepPoint> run_sweep(const ExperimentSpec& spec, int L, SimMode mode,
                                         std::span<const GridPoint> grid, bool with_upper = true,
                                         std::optional<double> stop_above = std::nullopt) {
  std::vector<SweepPoint> out;
  out.reserve(grid.size());
  const std::uint64_t upper_seed = derive_seed(spec.sim.seed, static_cast<std::uint64_t>(L), 0xB0);
  for (const auto& gp : grid) {
    const auto params = with_lambda_and_L(spec.base, gp.lambda, L);
    const auto consts = derive_constants(params);
    SweepPoint sp;
    sp.lambda = gp.lambda;
    sp.L = L;
    sp.lower = outage_lower(params, consts);
    if (with_upper) {
      RandomStream rng(upper_seed);
      const auto ub = outage_upper(params, consts, spec.mc_samples, rng);
      sp.upper = ub.value;
      sp.upper_std_error = ub.std_error;
    }
    SimConfig cfg = spec.sim;
    cfg.mode = mode;
    cfg.trials = trials_for_point(spec, sp.lower);
    cfg.region_radius = spec.radius_policy == RadiusPolicy::fixed ? spec.sim.region_radius
                                                                   : truncation_radius(params);
    cfg.seed = derive_seed(spec.sim.seed, static_cast<std::uint64_t>(L),
                           static_cast<std::uint64_t>(gp.index), static_cast<std::uint64_t>(mode) + 1);
    sp.estimate = estimate_outage(params, cfg);
    out.push_back(sp);
    if (stop_above && sp.estimate.ci_low > *stop_above) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inversion of a simulated outage curve

struct SimulatedPoint {
  double lambda = 0.0;
  OutageEstimate estimate;
};

namespace detail {

// First crossing of a nondecreasing sequence, interpolated log-log (linearly
// if the lower neighbour is zero). Empty if eps is outside (p.front(), p.back()].
inline std::optional<double> crossing(std::span<const double> lambdas, std::span<const double> p,
                                      double eps) {
  if (p.empty() || !(eps > p.front()) || eps > p.back()) return std::nullopt;
  std::size_t j = 1;
  while (p[j] < eps) ++j;
  const double l0 = lambdas[j - 1], l1 = lambdas[j];
  const double p0 = p[j - 1], p1 = p[j];
  if (p1 == eps) {
    std::size_t k = j;
    while (k > 0 && p[k - 1] == eps) --k;
    return lambdas[k];
  }
  if (p0 > 0.0) {
    const double t = (std::log(eps) - std::log(p0)) / (std::log(p1) - std::log(p0));
    return std::exp(std::log(l0) + t * (std::log(l1) - std::log(l0)));
  }
  return l0 + (eps - p0) / (p1 - p0) * (l1 - l0);
}

}  // namespace detail

/**
 * lambda_eps from noisy outage estimates: isotonic fit of p_hat (weighted by
 * trials), then interpolation between the neighbours of the crossing. The
 * same is done on the CI edges to get the capacity uncertainty; an edge that
 * never crosses inside the grid is pinned to the grid end. No extrapolation.
 */
inline CapacityResult invert_simulated_curve(std::span<const SimulatedPoint> points, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0,1)");
  if (points.size() < 2) throw std::invalid_argument("need at least two simulated points");
  std::vector<double> lambdas, p, lo, hi, w;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && !(points[i].lambda > points[i - 1].lambda))
      throw std::invalid_argument("simulated points must have strictly increasing lambda");
    lambdas.push_back(points[i].lambda);
    p.push_back(points[i].estimate.p_hat);
    lo.push_back(points[i].estimate.ci_low);
    hi.push_back(points[i].estimate.ci_high);
    w.push_back(static_cast<double>(std::max<std::size_t>(points[i].estimate.trials, 1)));
  }
  const auto fit = isotonic_regression(p, w);
  const auto lambda_eps = detail::crossing(lambdas, fit, epsilon);
  if (!lambda_eps)
    throw BracketError("simulated outage does not cross epsilon inside the grid", lambdas.front(),
                       fit.front(), lambdas.back(), fit.back());

  const auto fit_hi = isotonic_regression(hi, w);
  const auto fit_lo = isotonic_regression(lo, w);
  const double lambda_low = detail::crossing(lambdas, fit_hi, epsilon).value_or(lambdas.front());
  const double lambda_high = detail::crossing(lambdas, fit_lo, epsilon).value_or(lambdas.back());

  auto result = CapacityResult::make(epsilon, *lambda_eps, CapacityMethod::simulation);
  result.capacity_err_low = std::max(0.0, result.capacity - (1.0 - epsilon) * std::min(lambda_low, *lambda_eps));
  result.capacity_err_high = std::max(0.0, (1.0 - epsilon) * std::max(lambda_high, *lambda_eps) - result.capacity);
  return result;
}

inline std::vector<SimulatedPoint> to_simulated_points(std::span<const SweepPoint> sweep) {
  std::vector<SimulatedPoint> pts;
  pts.reserve(sweep.size());
  for (const auto& s : sweep) pts.push_back({s.lambda, s.estimate});
  return pts;
}

// ---------------------------------------------------------------------------
// Datasets

struct Fig1Row {
  SimMode mode = SimMode::effective;
  SweepPoint point;
};

struct Fig1Dataset {
  ExperimentSpec spec;
  std::vector<Fig1Row> rows;
};

struct CapacityRow {
  int L = 0;
  CapacityResult result;
  std::optional<CapacityEnvelope> envelope;
  std::optional<AsymptoticConstants> kappas;
};

/// Capacity curves: one row per (L, epsilon) plus the sweeps they came from.
struct CapacityCurve {
  ExperimentSpec spec;
  std::vector<CapacityRow> rows;
  std::vector<std::vector<SweepPoint>> sweeps;  ///< one per L, in L_set order
};

inline Fig1Dataset run_fig1(const ExperimentSpec& spec) {
  spec.validate();
  Fig1Dataset data{spec, {}};
  for (int L : spec.L_set) {
    const auto grid = sweep_grid(spec, L, spec.outage_min, spec.outage_max);
    for (SimMode mode : spec.modes) {
      const auto sweep = run_sweep(spec, L, mode, grid, true, spec.outage_max);
      for (const auto& sp : sweep) data.rows.push_back({mode, sp});
    }
  }
  return data;
}

namespace detail {

inline CapacityCurve run_capacity_curves(const ExperimentSpec& spec, bool with_envelopes) {
  spec.validate();
  if (spec.epsilons.empty()) throw std::invalid_argument("capacity experiment needs epsilon values");
  CapacityCurve curve{spec, {}, {}};
  const auto [eps_min, eps_max] = std::minmax_element(spec.epsilons.begin(), spec.epsilons.end());
  for (int L : spec.L_set) {
    const auto grid = sweep_grid(spec, L, *eps_min, *eps_max);
    auto sweep = run_sweep(spec, L, SimMode::effective, grid, false, *eps_max);
    const auto pts = to_simulated_points(sweep);
    std::optional<AsymptoticConstants> kappas;
    if (with_envelopes) {
      const auto params = with_lambda_and_L(spec.base, spec.base.lambda, L);
      try {
        kappas = asymptotic_constants(params, derive_constants(params));
      } catch (const DivergenceError&) {
      }
    }
    for (double eps : spec.epsilons) {
      CapacityRow row;
      row.L = L;
      row.result = invert_simulated_curve(pts, eps);
      if (kappas) {
        row.kappas = kappas;
        row.envelope = asymptotic_capacity_envelope(with_lambda_and_L(spec.base, 1.0, L), *kappas, eps);
      }
      curve.rows.push_back(row);
    }
    curve.sweeps.push_back(std::move(sweep));
  }
  return curve;
}

}  // namespace detail

inline CapacityCurve run_fig2(const ExperimentSpec& spec) {
  return detail::run_capacity_curves(spec, false);
}

inline CapacityCurve run_fig3(const ExperimentSpec& spec) {
  return detail::run_capacity_curves(spec, true);
}

// ---------------------------------------------------------------------------
// CSV output (17 significant digits, header row, LF endings)

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_fig1_csv(std::ostream& os, const Fig1Dataset& data) {
  os << "lambda,L,alpha,theta,beta,d,R,trials,seed,mode,pout_sim,ci_low,ci_high,"
        "pout_lower_bound,pout_upper_bound,upper_bound_stderr\n";
  const auto& b = data.spec.base;
  for (const auto& row : data.rows) {
    const auto& sp = row.point;
    const auto& e = sp.estimate;
    os << format_double(sp.lambda) << ',' << sp.L << ',' << format_double(b.alpha) << ','
       << format_double(b.theta) << ',' << format_double(b.beta) << ',' << format_double(b.d) << ','
       << format_double(e.region_radius) << ',' << e.trials << ',' << e.seed << ','
       << to_string(row.mode) << ',' << format_double(e.p_hat) << ',' << format_double(e.ci_low)
       << ',' << format_double(e.ci_high) << ',' << format_double(sp.lower) << ','
       << format_double(sp.upper) << ',' << format_double(sp.upper_std_error) << '\n';
  }
}

inline void write_fig2_csv(std::ostream& os, const CapacityCurve& data) {
  os << "L,epsilon,lambda_eps,capacity,capacity_err_low,capacity_err_high,alpha,theta,beta,d,seed\n";
  const auto& b = data.spec.base;
  for (const auto& row : data.rows) {
    const auto& r = row.result;
    os << row.L << ',' << format_double(r.epsilon) << ',' << format_double(r.lambda_eps) << ','
       << format_double(r.capacity) << ',' << format_double(r.capacity_err_low) << ','
       << format_double(r.capacity_err_high) << ',' << format_double(b.alpha) << ','
       << format_double(b.theta) << ',' << format_double(b.beta) << ',' << format_double(b.d) << ','
       << data.spec.sim.seed << '\n';
  }
}

inline void write_fig3_csv(std::ostream& os, const CapacityCurve& data) {
  os << "L,epsilon,capacity_sim,capacity_err_low,capacity_err_high,asym_low,asym_high,kappa1,"
        "kappa2,kappa3_or_blank\n";
  for (const auto& row : data.rows) {
    const auto& r = row.result;
    os << row.L << ',' << format_double(r.epsilon) << ',' << format_double(r.capacity) << ','
       << format_double(r.capacity_err_low) << ',' << format_double(r.capacity_err_high) << ',';
    if (row.envelope)
      os << format_double(row.envelope->low) << ',' << format_double(row.envelope->high) << ',';
    else
      os << ",,";
    if (row.kappas) {
      os << format_double(row.kappas->kappa1) << ',' << format_double(row.kappas->kappa2) << ',';
      if (row.kappas->kappa3) os << format_double(*row.kappas->kappa3);
    } else {
      os << ",,";
    }
    os << '\n';
  }
}

}  // namespace txcap
