#pragma once

/**
 * @file analysis.hpp
 * @brief Outage bounds, small-density constants and capacity inversion.
 *
 * Conventions: W is the typical-link gain, G the strongest interferer left
 * after zero-forcing, and B = W / (d^alpha theta) the interference level at
 * which the link fails.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "txcap/model.hpp"
#include "txcap/random.hpp"
#include "txcap/special_math.hpp"

namespace txcap {

/// An expectation or constant that is infinite for the given parameters.
class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The outage curve never crossed the target inside the search range.
class BracketError : public std::runtime_error {
 public:
  BracketError(const std::string& what, double lambda_low, double p_low, double lambda_high,
               double p_high)
      : std::runtime_error(what + " [P(" + std::to_string(lambda_low) + ")=" +
                           std::to_string(p_low) + ", P(" + std::to_string(lambda_high) +
                           ")=" + std::to_string(p_high) + "]"),
        lambda_low(lambda_low),
        p_low(p_low),
        lambda_high(lambda_high),
        p_high(p_high) {}

  double lambda_low, p_low, lambda_high, p_high;
};

struct UpperBoundEstimate {
  double value = 0.0;       ///< P_out^U
  double std_error = 0.0;   ///< Monte Carlo standard error of value
  double lower = 0.0;       ///< P_out^L used as the primary-interference term
  std::size_t samples = 0;
};

struct OutageBounds {
  double lower = 0.0;
  double upper = 0.0;
  double upper_std_error = 0.0;
  std::size_t mc_samples = 0;
  std::uint64_t seed = 0;
  QuadratureSpec quadrature;
};

enum class Regime { L_le_alpha, L_gt_alpha };

inline const char* to_string(Regime r) {
  return r == Regime::L_le_alpha ? "L_le_alpha" : "L_gt_alpha";
}

struct AsymptoticConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  std::optional<double> kappa3;
  Regime regime = Regime::L_le_alpha;
};

enum class CapacityMethod { lower_bound, upper_bound, simulation, asymptotic };

inline const char* to_string(CapacityMethod m) {
  switch (m) {
    case CapacityMethod::lower_bound: return "lower_bound";
    case CapacityMethod::upper_bound: return "upper_bound";
    case CapacityMethod::simulation: return "simulation";
    case CapacityMethod::asymptotic: return "asymptotic";
  }
  return "unknown";
}

struct CapacityResult {
  double epsilon = 0.0;
  double lambda_eps = 0.0;
  double capacity = 0.0;  ///< (1 - epsilon) * lambda_eps
  CapacityMethod method = CapacityMethod::lower_bound;
  double capacity_err_low = 0.0;   ///< distance down to the lower uncertainty edge
  double capacity_err_high = 0.0;  ///< distance up to the upper uncertainty edge

  static CapacityResult make(double epsilon, double lambda_eps, CapacityMethod method) {
    return {epsilon, lambda_eps, (1.0 - epsilon) * lambda_eps, method, 0.0, 0.0};
  }
};

// Relative accuracy only: small-density outages go far below any fixed absolute floor.
inline constexpr QuadratureSpec kProbabilityQuadrature{1e-10, 1e-300, 2000};

/**
 * Lower bound on outage from the primary interferer alone:
 * E[P(L, c2 lambda W^{-delta})] with W = beta d^alpha + Exp(1).
 */
inline double outage_lower(const NetworkParams& params, const DerivedConstants& consts,
                           const QuadratureSpec& quad = kProbabilityQuadrature) {
  params.validate();
  if (params.lambda == 0.0) return 0.0;
  const double floor = params.gain_floor();
  const double scale = consts.c2 * params.lambda;
  const double order = static_cast<double>(params.L);
  auto integrand = [&](double t) {
    const double w = floor + t;
    const double x = (w == 0.0) ? INFINITY : scale * std::pow(w, -consts.delta);
    return reg_lower_gamma(order, x) * std::exp(-t);
  };
  return std::clamp(integrate_semi_infinite(integrand, 0.0, quad).value, 0.0, 1.0);
}

namespace detail {

// Chebyshev bound on Pr(I_Pi(g) >= b - g), capped at 1.
inline double chebyshev_term(double g, double b, double lambda, const DerivedConstants& consts) {
  const double mean = consts.c3 * lambda * std::pow(g, 1.0 - consts.delta);
  const double variance = consts.c4 * lambda * std::pow(g, 2.0 - consts.delta);
  const double gap = b - g - mean;
  if (gap <= 0.0) return 1.0;
  return std::min(variance / (gap * gap), 1.0);
}

}  // namespace detail

/**
 * Upper bound P^L + E[1{G < B} min(Var / (B - G - mean)^2, 1)].
 *
 * The primary term comes from outage_lower; the Chebyshev term is a Monte
 * Carlo average over exact (W, G) draws. Reusing one seed gives a curve that
 * is monotone and continuous in lambda.
 */
inline UpperBoundEstimate outage_upper(const NetworkParams& params, const DerivedConstants& consts,
                                       std::size_t mc_samples, RandomStream& rng,
                                       const QuadratureSpec& quad = {}) {
  if (mc_samples < 10000) throw std::invalid_argument("outage_upper needs at least 1e4 samples");
  UpperBoundEstimate out;
  out.samples = mc_samples;
  out.lower = outage_lower(params, consts, quad);
  if (params.lambda == 0.0) return out;

  const double level_scale = 1.0 / (std::pow(params.d, params.alpha) * params.theta);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < mc_samples; ++i) {
    const double w = sample_w(rng, params);
    const double g = sample_g(rng, params, consts);
    const double b = level_scale * w;
    const double term = (g < b) ? detail::chebyshev_term(g, b, params.lambda, consts) : 0.0;
    sum += term;
    sum_sq += term * term;
  }
  const double n = static_cast<double>(mc_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  out.value = std::min(1.0, out.lower + mean);
  out.std_error = std::sqrt(var / (n - 1.0));
  return out;
}

/**
 * Same upper bound by nested quadrature: outer over W, inner over G against
 * its density, split where the Chebyshev ratio reaches 1. Slow; meant for
 * verification.
 */
inline double outage_upper_nested_quadrature(const NetworkParams& params,
                                             const DerivedConstants& consts,
                                             const QuadratureSpec& quad = {}) {
  params.validate();
  if (params.lambda == 0.0) return 0.0;
  const double lambda = params.lambda;
  const double floor = params.gain_floor();
  const double level_scale = 1.0 / (std::pow(params.d, params.alpha) * params.theta);
  QuadratureSpec inner_spec = quad;
  inner_spec.absolute_tolerance = quad.absolute_tolerance * 1e-2;

  auto gap = [&](double g, double b) {
    return b - g - consts.c3 * lambda * std::pow(g, 1.0 - consts.delta);
  };
  auto bisect = [](auto&& pred, double lo, double hi) {
    // pred(lo) false, pred(hi) true
    for (int i = 0; i < 200 && hi - lo > 1e-16 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (pred(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };

  auto chebyshev_mass = [&](double b) {
    // Mass of {G < b} weighted by the Chebyshev term.
    const double g_zero = bisect([&](double g) { return gap(g, b) <= 0.0; }, 0.0, b);
    const double g_star = bisect(
        [&](double g) {
          const double gp = gap(g, b);
          return gp <= 0.0 || consts.c4 * lambda * std::pow(g, 2.0 - consts.delta) >= gp * gp;
        },
        0.0, g_zero);
    auto weighted = [&](double g) {
      if (g <= 0.0) return 0.0;
      return pdf_primary(g, params, consts) * detail::chebyshev_term(g, b, lambda, consts);
    };
    const double head = integrate_finite(weighted, 0.0, g_star, inner_spec).value;
    return head + cdf_primary(b, params, consts) - cdf_primary(g_star, params, consts);
  };

  auto integrand = [&](double t) {
    const double w = floor + t;
    if (w <= 0.0) return std::exp(-t);
    const double b = level_scale * w;
    const double primary = reg_lower_gamma(params.L, consts.c2 * lambda * std::pow(w, -consts.delta));
    return (primary + chebyshev_mass(b)) * std::exp(-t);
  };
  return std::clamp(integrate_semi_infinite(integrand, 0.0, quad).value, 0.0, 1.0);
}

/**
 * E[B^{-order}] = (d^alpha theta)^order Gamma(1 - order, beta d^alpha) / P_t.
 * With beta = 0 this is the complete gamma, finite only for order < 1.
 */
inline double moment_w_neg(const NetworkParams& params, const DerivedConstants& consts,
                           double order) {
  params.validate();
  const double floor = params.gain_floor();
  double w_moment = 0.0;
  if (floor == 0.0) {
    if (order >= 1.0)
      throw DivergenceError("E[W^-s] diverges for s >= 1 when beta = 0");
    w_moment = std::tgamma(1.0 - order);
  } else {
    w_moment = upper_gamma_general(1.0 - order, floor) / consts.p_t;
  }
  return std::pow(std::pow(params.d, params.alpha) * params.theta, order) * w_moment;
}

inline AsymptoticConstants asymptotic_constants(const NetworkParams& params,
                                                const DerivedConstants& consts) {
  params.validate();
  const double L = params.L;
  const double alpha = params.alpha;
  const double delta = consts.delta;
  const double floor = params.gain_floor();

  AsymptoticConstants k;
  k.regime = (L <= alpha) ? Regime::L_le_alpha : Regime::L_gt_alpha;

  const double order = 1.0 - delta * L;
  double tail = 0.0;
  if (floor > 0.0) {
    tail = upper_gamma_general(order, floor);
  } else if (order > 0.0) {
    tail = std::tgamma(order);
  } else {
    throw DivergenceError("kappa1 needs beta > 0 when 1 - delta L <= 0");
  }
  k.kappa1 = tail * std::pow(consts.c2, L) / (consts.p_t * std::tgamma(L + 1.0));
  k.kappa2 = std::pow(2.0, delta * L) / L * (alpha / (alpha - 2.0) - std::pow(2.0, -delta));

  if (k.regime == Regime::L_gt_alpha) {
    if (floor <= 0.0) throw DivergenceError("kappa3 needs beta > 0 (Gamma(-1, 0) diverges)");
    const double shape = L - alpha + 1.0;
    if (shape <= 0.0 && shape == std::floor(shape))
      throw DivergenceError("kappa3 hits a pole of Gamma(L - alpha + 1)");
    const double base = consts.c1 * params.d * params.d * std::pow(params.theta, delta);
    k.kappa3 = 8.0 * std::pow(base, alpha) * upper_gamma_general(-1.0, floor) *
               std::tgamma(shape) / ((alpha - 2.0) * consts.p_t * std::tgamma(L));
  }
  return k;
}

/// Small-density outage envelope at lambda, clamped to [0, 1].
inline std::pair<double, double> asymptotic_outage_bounds(const NetworkParams& params,
                                                          const AsymptoticConstants& kappas,
                                                          double lambda_query) {
  if (!(lambda_query > 0.0)) throw std::invalid_argument("lambda_query must be positive");
  const double lo = kappas.kappa1 * std::pow(lambda_query, params.L);
  double hi = 0.0;
  if (kappas.regime == Regime::L_le_alpha) {
    hi = lo * (1.0 + kappas.kappa2);
  } else {
    if (!kappas.kappa3) throw std::invalid_argument("kappa3 missing for the L > alpha regime");
    hi = *kappas.kappa3 * std::pow(lambda_query, params.alpha);
  }
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

struct CapacityEnvelope {
  double low = 0.0;
  double high = 0.0;
};

/// Capacity implied by the small-outage constants, (1 - eps) times the density envelope.
inline CapacityEnvelope asymptotic_capacity_envelope(const NetworkParams& params,
                                                     const AsymptoticConstants& kappas,
                                                     double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0,1)");
  const double L = params.L;
  const double keep = 1.0 - epsilon;
  CapacityEnvelope env;
  env.high = keep * std::pow(epsilon / kappas.kappa1, 1.0 / L);
  if (kappas.regime == Regime::L_le_alpha) {
    env.low = keep * std::pow(epsilon / (kappas.kappa1 * (1.0 + kappas.kappa2)), 1.0 / L);
  } else {
    env.low = keep * std::pow(epsilon / *kappas.kappa3, 1.0 / params.alpha);
  }
  return env;
}

/**
 * Finds lambda with |P(lambda) - eps| <= 1e-6 eps for a nondecreasing curve:
 * doubling/halving from the hint until the target is bracketed, then
 * geometric bisection.
 */
inline CapacityResult solve_capacity(double epsilon, const std::function<double(double)>& curve,
                                     double bracket_hint,
                                     CapacityMethod method = CapacityMethod::lower_bound) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0,1)");
  if (!(bracket_hint > 0.0)) throw std::invalid_argument("bracket_hint must be positive");
  const double tol = 1e-6 * epsilon;
  constexpr int kMaxExpansions = 400;

  double lo = bracket_hint, hi = bracket_hint;
  double p_lo = curve(lo), p_hi = p_lo;
  if (std::abs(p_lo - epsilon) <= tol) return CapacityResult::make(epsilon, lo, method);
  if (p_lo < epsilon) {
    int i = 0;
    while (p_hi < epsilon) {
      if (++i > kMaxExpansions)
        throw BracketError("outage curve never reaches epsilon", bracket_hint, p_lo, hi, p_hi);
      lo = hi;
      p_lo = p_hi;
      hi *= 2.0;
      p_hi = curve(hi);
    }
  } else {
    int i = 0;
    while (p_lo >= epsilon) {
      if (++i > kMaxExpansions)
        throw BracketError("outage curve never drops below epsilon", lo, p_lo, bracket_hint, p_hi);
      hi = lo;
      p_hi = p_lo;
      lo *= 0.5;
      p_lo = curve(lo);
    }
  }
  if (std::abs(p_hi - epsilon) <= tol) return CapacityResult::make(epsilon, hi, method);

  for (int i = 0; i < 500; ++i) {
    const double mid = std::sqrt(lo * hi);
    const double p_mid = curve(mid);
    if (std::abs(p_mid - epsilon) <= tol) return CapacityResult::make(epsilon, mid, method);
    if (p_mid < epsilon) {
      lo = mid;
      p_lo = p_mid;
    } else {
      hi = mid;
      p_hi = p_mid;
    }
    if (hi <= lo * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) break;
  }
  throw BracketError("outage curve jumps over epsilon (no point within tolerance)", lo, p_lo, hi,
                     p_hi);
}

struct CapacityPoint {
  double epsilon = 0.0;
  double capacity = 0.0;
};

/// Least-squares slope of log C against log eps.
inline double capacity_sensitivity(std::span<const CapacityPoint> curve) {
  if (curve.size() < 3) throw std::invalid_argument("capacity_sensitivity needs >= 3 points");
  double sx = 0, sy = 0;
  for (const auto& p : curve) {
    if (!(p.epsilon > 0.0) || !(p.capacity > 0.0))
      throw std::invalid_argument("capacity_sensitivity needs positive values");
    sx += std::log(p.epsilon);
    sy += std::log(p.capacity);
  }
  const double n = static_cast<double>(curve.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& p : curve) {
    const double dx = std::log(p.epsilon) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.capacity) - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("capacity_sensitivity: all epsilon values identical");
  return sxy / sxx;
}

}  // namespace txcap
