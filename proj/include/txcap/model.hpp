#pragma once

/**
 * @file model.hpp
 * @brief Network parameters, derived constants and the effective-model laws.
 *
 * lambda is always the density of ACTIVE transmitters. The area constant
 * c1 = pi * Gamma(1 + delta) therefore carries no activation-probability factor.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "txcap/random.hpp"
#include "txcap/special_math.hpp"

namespace txcap {

struct NetworkParams {
  double lambda = 0.01;  ///< active transmitter density per unit area
  double d = 1.0;        ///< link length
  double alpha = 4.0;    ///< path-loss exponent
  double theta = 1.0;    ///< SIR threshold (linear)
  double beta = 0.0;     ///< activation threshold on the link gain
  int L = 2;             ///< antennas per node

  /// lambda = 0 is accepted as the empty network.
  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("lambda must be finite and non-negative");
    if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("d must be positive");
    if (!(alpha > 2.0) || !std::isfinite(alpha))
      throw std::invalid_argument("alpha must be strictly greater than 2");
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("beta must be finite and non-negative");
    if (L < 1) throw std::invalid_argument("L must be at least 1");
  }

  /// beta * d^alpha, the lower edge of the link-gain support.
  double gain_floor() const { return beta * std::pow(d, alpha); }
};

struct DerivedConstants {
  double delta = 0.0;
  double p_t = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
};

inline DerivedConstants derive_constants(const NetworkParams& params) {
  params.validate();
  DerivedConstants k;
  k.delta = 2.0 / params.alpha;
  k.p_t = std::exp(-params.beta * std::pow(params.d, params.alpha));
  const double gamma_term = gamma_fn(1.0 + k.delta);
  k.c1 = std::numbers::pi * gamma_term;
  k.c2 = k.c1 * std::pow(params.theta, k.delta) * params.d * params.d;
  k.c3 = 2.0 * k.c1 / (params.alpha - 2.0);
  k.c4 = k.c1 / (params.alpha - 1.0);
  return k;
}

/// Typical-link gain W: beta d^alpha plus a unit exponential.
inline double sample_w(RandomStream& rng, const NetworkParams& params) {
  return params.gain_floor() + rng.exponential();
}

/// G = (c1 lambda / X)^{1/delta} with X ~ Gamma(L, 1): the exact inverse of the Poisson-count CDF.
inline double primary_from_gamma_draw(double gamma_draw, const NetworkParams& params,
                                      const DerivedConstants& consts) {
  return std::pow(consts.c1 * params.lambda / gamma_draw, 1.0 / consts.delta);
}

inline double sample_g(RandomStream& rng, const NetworkParams& params,
                       const DerivedConstants& consts) {
  return primary_from_gamma_draw(rng.gamma_int(params.L), params, consts);
}

namespace detail {
inline void require_positive_level(double g, const char* who) {
  if (!(g > 0.0)) throw std::domain_error(std::string(who) + ": level g must be positive");
}
}  // namespace detail

/// Mean number of interferers whose mark is at least g.
inline double marked_density_mu(double g, const NetworkParams& params,
                                const DerivedConstants& consts) {
  detail::require_positive_level(g, "marked_density_mu");
  return consts.c1 * params.lambda * std::pow(g, -consts.delta);
}

/// Pr(G <= g): fewer than L marks at or above g.
inline double cdf_primary(double g, const NetworkParams& params, const DerivedConstants& consts) {
  detail::require_positive_level(g, "cdf_primary");
  if (std::isinf(g)) return 1.0;
  const double mu = marked_density_mu(g, params, consts);
  // near 1 the partial sum rounds non-monotonically; the complement does not
  if (mu < params.L) return 1.0 - reg_lower_gamma(params.L, mu);
  double term = std::exp(-mu);
  double sum = term;
  for (int k = 1; k < params.L; ++k) {
    term *= mu / k;
    sum += term;
  }
  return std::min(sum, 1.0);
}

inline double pdf_primary(double g, const NetworkParams& params, const DerivedConstants& consts) {
  detail::require_positive_level(g, "pdf_primary");
  if (params.lambda == 0.0) return 0.0;
  const double mu = marked_density_mu(g, params, consts);
  if (mu == 0.0 || std::isinf(mu)) return 0.0;
  // delta * mu^L * exp(-mu) / (g * Gamma(L))
  const double log_pdf = std::log(consts.delta) + params.L * std::log(mu) - mu - std::log(g) -
                         std::lgamma(static_cast<double>(params.L));
  return std::exp(log_pdf);
}

struct SecondaryMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the aggregate interference from marks below g.
inline SecondaryMoments secondary_moments(double g, const NetworkParams& params,
                                          const DerivedConstants& consts) {
  detail::require_positive_level(g, "secondary_moments");
  return {consts.c3 * params.lambda * std::pow(g, 1.0 - consts.delta),
          consts.c4 * params.lambda * std::pow(g, 2.0 - consts.delta)};
}

}  // namespace txcap
