#pragma once

/**
 * @file simulator.hpp
 * @brief Monte Carlo network simulation around a typical receiver at the origin.
 *
 * Two modes share the same point process:
 *  - channel: L x L Rayleigh matrices, random transmit beamformers and an
 *    explicit zero-forcing receive beamformer (interferers ranked by
 *    effective-channel norm);
 *  - effective: scalar marks I_n = r_n^{-alpha} rho_n with rho_n ~ Exp(1)
 *    (interferers ranked by interference power).
 *
 * Interferers are placed directly at the active density lambda; noise is ignored.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "txcap/model.hpp"
#include "txcap/random.hpp"
#include "txcap/stats.hpp"

namespace txcap {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

enum class SimMode { channel, effective };

inline const char* to_string(SimMode m) { return m == SimMode::channel ? "channel" : "effective"; }

inline SimMode parse_sim_mode(const std::string& s) {
  if (s == "channel") return SimMode::channel;
  if (s == "effective") return SimMode::effective;
  throw std::invalid_argument("unknown simulation mode '" + s + "'");
}

struct SimConfig {
  SimMode mode = SimMode::effective;
  double region_radius = 100.0;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::size_t stream_count = 1;

  void validate(const NetworkParams& params) const {
    if (!(region_radius >= 10.0 * params.d))
      throw std::invalid_argument("region_radius must be at least 10 d");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (stream_count < 1) throw std::invalid_argument("stream_count must be at least 1");
  }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/**
 * Poisson point process on the disk of the given radius centered at the origin.
 * Points are generated outward (successive areas pi r^2 are a rate-`density`
 * Poisson process), which yields a Poisson count and uniform positions.
 */
template <class Visit>
void for_each_ppp_point_sq_radius(RandomStream& rng, double density, double radius, Visit&& visit) {
  if (!(density > 0.0)) return;
  const double area_limit = std::numbers::pi * radius * radius;
  double area = rng.exponential() / density;
  while (area <= area_limit) {
    visit(area / std::numbers::pi);
    area += rng.exponential() / density;
  }
}

inline std::vector<Point2> sample_ppp(RandomStream& rng, double density, double radius) {
  if (!(density >= 0.0)) throw std::invalid_argument("sample_ppp: density must be non-negative");
  if (!(radius > 0.0)) throw std::invalid_argument("sample_ppp: radius must be positive");
  std::vector<Point2> points;
  for_each_ppp_point_sq_radius(rng, density, radius, [&](double r2) {
    const double r = std::sqrt(r2);
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    points.push_back({r * std::cos(phi), r * std::sin(phi)});
  });
  return points;
}

/// Mean interference from beyond `radius`, 2 pi lambda R^{2-alpha} / (alpha - 2).
inline double truncated_tail_mean(const NetworkParams& params, double radius) {
  return 2.0 * std::numbers::pi * params.lambda * std::pow(radius, 2.0 - params.alpha) /
         (params.alpha - 2.0);
}

/// Interference level at which the link fails on average: d^{-alpha} theta^{-1} E[W].
inline double mean_failure_level(const NetworkParams& params) {
  return (params.gain_floor() + 1.0) / (std::pow(params.d, params.alpha) * params.theta);
}

/// The neglected tail must stay below `tolerance` times the mean failure level.
inline bool truncation_ok(const NetworkParams& params, double radius, double tolerance = 1e-3) {
  return truncated_tail_mean(params, radius) <= tolerance * mean_failure_level(params);
}

/// Smallest radius meeting the truncation rule, never below 10 d.
inline double truncation_radius(const NetworkParams& params, double tolerance = 1e-3) {
  const double floor = 10.0 * params.d;
  if (params.lambda == 0.0) return floor;
  const double target = tolerance * mean_failure_level(params);
  const double r = std::pow(2.0 * std::numbers::pi * params.lambda / ((params.alpha - 2.0) * target),
                            1.0 / (params.alpha - 2.0));
  return std::max(floor, r * (1.0 + 1e-12));
}

// ---------------------------------------------------------------------------
// Zero-forcing receive beamformer

namespace detail {

inline Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double norm(std::span<const Complex> a) {
  double s = 0.0;
  for (const auto& z : a) s += std::norm(z);
  return std::sqrt(s);
}

// Two passes of modified Gram-Schmidt against an orthonormal set.
inline void project_out(CVector& r, const std::vector<CVector>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) {
      const Complex c = inner(q, r);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * q[i];
    }
}

}  // namespace detail

struct ZfBeamformer {
  CVector v;                 ///< unit-norm receive beamformer
  std::size_t dropped = 0;   ///< inputs discarded as numerically dependent
};

/// Standard basis e_1..e_L, the fixed tie-break basis used by the simulator.
inline std::vector<CVector> standard_basis(int dimension) {
  std::vector<CVector> basis(dimension, CVector(dimension));
  for (int i = 0; i < dimension; ++i) basis[i][i] = 1.0;
  return basis;
}

/**
 * Unit vector orthogonal to every channel in `channels`.
 *
 * The channels are orthonormalized (a channel whose residual is below
 * 1e-10 of its norm is dropped and counted); the tie-break vectors are then
 * projected onto the orthogonal complement in order, and the first with a
 * clearly nonzero residual is normalized and returned.
 */
inline ZfBeamformer zf_receive_beamformer(std::span<const CVector> channels,
                                          std::span<const CVector> tie_break_basis) {
  if (tie_break_basis.empty()) throw std::invalid_argument("zf: empty tie-break basis");
  const std::size_t dim = tie_break_basis.front().size();
  if (channels.size() >= dim)
    throw std::invalid_argument("zf: need fewer channels than antennas to leave a null space");

  ZfBeamformer out;
  std::vector<CVector> ortho;
  for (const auto& h : channels) {
    if (h.size() != dim) throw std::invalid_argument("zf: channel dimension mismatch");
    const double h_norm = detail::norm(h);
    CVector r = h;
    detail::project_out(r, ortho);
    const double r_norm = detail::norm(r);
    if (h_norm == 0.0 || r_norm <= 1e-10 * h_norm) {
      ++out.dropped;
      continue;
    }
    for (auto& z : r) z /= r_norm;
    ortho.push_back(std::move(r));
  }
  for (const auto& e : tie_break_basis) {
    CVector r = e;
    detail::project_out(r, ortho);
    const double r_norm = detail::norm(r);
    if (r_norm > 1e-6 * detail::norm(e)) {
      for (auto& z : r) z /= r_norm;
      detail::project_out(r, ortho);
      const double renorm = detail::norm(r);
      for (auto& z : r) z /= renorm;
      out.v = std::move(r);
      return out;
    }
  }
  throw std::domain_error("zf: tie-break basis lies inside the canceled span");
}

// ---------------------------------------------------------------------------
// Trials

struct ChannelTrial {
  std::vector<Point2> interferer_positions;
  std::vector<CVector> channel_matrices;  ///< G_n, row-major L x L, one per interferer
  CVector typical_channel;                ///< G_0
  std::vector<CVector> transmit_beamformers;  ///< f_n
  CVector typical_beamformer;             ///< f_0
  std::vector<CVector> effective_channels;    ///< h_n = r_n^{-alpha/2} G_n f_n
  CVector receive_beamformer;             ///< v_0
  std::vector<std::size_t> canceled;      ///< interferer indices nulled by v_0
  std::vector<double> residual_marks;     ///< |v_0^H G_n f_n|^2 of the non-canceled interferers
  std::size_t dropped = 0;
  double w = 0.0;
  double interference = 0.0;        ///< sum over non-canceled |v_0^H h_n|^2
  double canceled_residual = 0.0;   ///< sum over canceled |v_0^H h_n|^2
  double received_power = 0.0;      ///< sum over all ||h_n||^2 before beamforming
  double sir = 0.0;
  bool outage = false;
};

struct EffectiveTrial {
  std::vector<double> distances;
  std::vector<double> marks;   ///< rho_n
  std::vector<double> powers;  ///< I_n = r_n^{-alpha} rho_n
  std::size_t count = 0;
  std::size_t removed = 0;     ///< min(L - 1, count)
  double primary = 0.0;        ///< G: strongest remaining mark, 0 if none
  double secondary = 0.0;      ///< sum of the marks weaker than G
  double w = 0.0;
  double sir = 0.0;
  bool outage = false;
};

namespace detail {

inline double sir_of(double signal, double interference) {
  return interference > 0.0 ? signal / interference : INFINITY;
}

// Keeps the `capacity` largest values in descending order; everything pushed
// out or never admitted goes into `rest`.
struct TopK {
  std::vector<double> top;
  std::size_t capacity = 0;
  double rest = 0.0;

  void reset(std::size_t k) {
    top.clear();
    capacity = k;
    rest = 0.0;
  }
  void push(double v) {
    if (capacity == 0) {
      rest += v;
      return;
    }
    if (top.size() == capacity) {
      if (v <= top.back()) {
        rest += v;
        return;
      }
      rest += top.back();
      top.pop_back();
    }
    top.insert(std::upper_bound(top.begin(), top.end(), v, std::greater<>()), v);
  }
};

}  // namespace detail

/**
 * Effective-model trial. When `record` is null only the outcome is computed.
 * Returns the outage flag.
 */
inline bool run_effective_trial(RandomStream& rng, const NetworkParams& params, double radius,
                                EffectiveTrial* record, detail::TopK& scratch) {
  const std::size_t keep = static_cast<std::size_t>(params.L);  // L-1 canceled + primary
  scratch.reset(keep);
  const double half_alpha = 0.5 * params.alpha;
  const bool alpha_is_4 = params.alpha == 4.0;
  std::size_t count = 0;
  if (record) {
    record->distances.clear();
    record->marks.clear();
    record->powers.clear();
  }
  for_each_ppp_point_sq_radius(rng, params.lambda, radius, [&](double r2) {
    const double rho = rng.exponential();
    const double path = alpha_is_4 ? 1.0 / (r2 * r2) : std::pow(r2, -half_alpha);
    const double power = rho * path;
    scratch.push(power);
    ++count;
    if (record) {
      record->distances.push_back(std::sqrt(r2));
      record->marks.push_back(rho);
      record->powers.push_back(power);
    }
  });
  const double w = sample_w(rng, params);
  const double signal = w / std::pow(params.d, params.alpha);
  const std::size_t removed = std::min<std::size_t>(keep - 1, count);
  const double primary = count >= keep ? scratch.top.back() : 0.0;
  const double interference = primary + scratch.rest;
  const double sir = detail::sir_of(signal, interference);
  const bool outage = sir <= params.theta;
  if (record) {
    record->count = count;
    record->removed = removed;
    record->primary = primary;
    record->secondary = scratch.rest;
    record->w = w;
    record->sir = sir;
    record->outage = outage;
  }
  return outage;
}

inline EffectiveTrial run_effective_trial(RandomStream& rng, const NetworkParams& params,
                                          double radius) {
  EffectiveTrial t;
  detail::TopK scratch;
  run_effective_trial(rng, params, radius, &t, scratch);
  return t;
}

namespace detail {

inline CVector isotropic_unit_vector(RandomStream& rng, int dim) {
  CVector f(dim);
  for (auto& z : f) z = rng.complex_normal();
  const double n = norm(f);
  for (auto& z : f) z /= n;
  return f;
}

inline CVector random_matrix(RandomStream& rng, int dim) {
  CVector m(static_cast<std::size_t>(dim) * dim);
  for (auto& z : m) z = rng.complex_normal();
  return m;
}

inline CVector mat_vec(const CVector& m, const CVector& v) {
  const std::size_t dim = v.size();
  CVector out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    Complex s{};
    for (std::size_t j = 0; j < dim; ++j) s += m[i * dim + j] * v[j];
    out[i] = s;
  }
  return out;
}

}  // namespace detail

/**
 * Channel-level trial with explicit zero-forcing.
 *
 * The typical link uses f_0 = e_1 and a receive beamformer that depends only
 * on the interferers. W is drawn by sample_w and G_0 is built so that
 * |v_0^H G_0 f_0|^2 = W; the rest of G_0 stays i.i.d. CN(0, 1).
 */
inline ChannelTrial run_channel_trial(RandomStream& rng, const NetworkParams& params, double radius) {
  const int dim = params.L;
  ChannelTrial t;
  t.interferer_positions = sample_ppp(rng, params.lambda, radius);
  const std::size_t count = t.interferer_positions.size();
  t.channel_matrices.reserve(count);
  t.transmit_beamformers.reserve(count);
  t.effective_channels.reserve(count);
  std::vector<double> norms(count);
  std::vector<double> distances(count);
  for (std::size_t n = 0; n < count; ++n) {
    const auto& p = t.interferer_positions[n];
    distances[n] = std::hypot(p.x, p.y);
    t.channel_matrices.push_back(detail::random_matrix(rng, dim));
    t.transmit_beamformers.push_back(detail::isotropic_unit_vector(rng, dim));
    CVector h = detail::mat_vec(t.channel_matrices.back(), t.transmit_beamformers.back());
    const double path_amp = std::pow(distances[n], -0.5 * params.alpha);
    for (auto& z : h) z *= path_amp;
    norms[n] = detail::norm(h);
    t.received_power += norms[n] * norms[n];
    t.effective_channels.push_back(std::move(h));
  }

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t cancel = std::min<std::size_t>(dim - 1, count);
  std::partial_sort(order.begin(), order.begin() + cancel, order.end(),
                    [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  t.canceled.assign(order.begin(), order.begin() + cancel);

  std::vector<CVector> nulled;
  nulled.reserve(cancel);
  for (std::size_t k : t.canceled) nulled.push_back(t.effective_channels[k]);
  const auto basis = standard_basis(dim);
  auto zf = zf_receive_beamformer(nulled, basis);
  t.receive_beamformer = std::move(zf.v);
  t.dropped = zf.dropped;
  const CVector& v = t.receive_beamformer;

  std::vector<char> is_canceled(count, 0);
  for (std::size_t k : t.canceled) is_canceled[k] = 1;
  for (std::size_t n = 0; n < count; ++n) {
    const double gain = std::norm(detail::inner(v, t.effective_channels[n]));
    if (is_canceled[n]) {
      t.canceled_residual += gain;
    } else {
      t.interference += gain;
      t.residual_marks.push_back(gain * std::pow(distances[n], params.alpha));
    }
  }

  // Typical link: f_0 = e_1, column 0 of G_0 carries the signal.
  t.typical_beamformer = basis.front();
  t.w = sample_w(rng, params);
  t.typical_channel = detail::random_matrix(rng, dim);
  CVector column(dim);
  for (int i = 0; i < dim; ++i) column[i] = t.typical_channel[static_cast<std::size_t>(i) * dim];
  const Complex along = detail::inner(v, column);
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  const Complex target = std::polar(std::sqrt(t.w), phase);
  for (int i = 0; i < dim; ++i)
    t.typical_channel[static_cast<std::size_t>(i) * dim] = column[i] + v[i] * (target - along);

  const double signal = t.w / std::pow(params.d, params.alpha);
  t.sir = detail::sir_of(signal, t.interference);
  t.outage = t.sir <= params.theta;
  return t;
}

using TrialRecord = std::variant<ChannelTrial, EffectiveTrial>;

inline bool outage_of(const TrialRecord& r) {
  return std::visit([](const auto& t) { return t.outage; }, r);
}

inline TrialRecord run_trial(RandomStream& rng, const NetworkParams& params, const SimConfig& config) {
  if (config.mode == SimMode::channel) return run_channel_trial(rng, params, config.region_radius);
  return run_effective_trial(rng, params, config.region_radius);
}

// ---------------------------------------------------------------------------
// Outage estimation

struct OutageEstimate {
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t trials = 0;
  std::size_t outages = 0;
  std::uint64_t seed = 0;
  std::size_t stream_count = 1;
  SimMode mode = SimMode::effective;
  double region_radius = 0.0;
  bool truncation_warning = false;
};

/// Trials assigned to substream `index` out of `streams`.
inline std::size_t substream_trials(std::size_t trials, std::size_t streams, std::size_t index) {
  return trials / streams + (index < trials % streams ? 1 : 0);
}

/**
 * Runs substream i with RandomStream(seed, i) for its share of the trials and
 * sums the outage counts. `workers` only changes scheduling (0: all cores).
 */
inline OutageEstimate estimate_outage(const NetworkParams& params, const SimConfig& config,
                                      std::size_t workers = 0) {
  params.validate();
  config.validate(params);
  if (config.trials < 100) throw std::invalid_argument("estimate_outage needs at least 100 trials");
  const std::size_t streams = config.stream_count;
  std::vector<std::size_t> counts(streams, 0);

  auto run_stream = [&](std::size_t i) {
    RandomStream rng(config.seed, i);
    const std::size_t n = substream_trials(config.trials, streams, i);
    std::size_t outages = 0;
    if (config.mode == SimMode::effective) {
      detail::TopK scratch;
      for (std::size_t k = 0; k < n; ++k)
        outages += run_effective_trial(rng, params, config.region_radius, nullptr, scratch);
    } else {
      for (std::size_t k = 0; k < n; ++k)
        outages += run_channel_trial(rng, params, config.region_radius).outage;
    }
    counts[i] = outages;
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, streams);
  if (workers <= 1) {
    for (std::size_t i = 0; i < streams; ++i) run_stream(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < streams; i += workers) run_stream(i);
      });
    for (auto& th : pool) th.join();
  }

  OutageEstimate est;
  est.outages = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  est.trials = config.trials;
  est.p_hat = static_cast<double>(est.outages) / static_cast<double>(est.trials);
  const auto ci = wilson_interval(est.outages, est.trials);
  est.ci_low = ci.low;
  est.ci_high = ci.high;
  est.seed = config.seed;
  est.stream_count = streams;
  est.mode = config.mode;
  est.region_radius = config.region_radius;
  est.truncation_warning = !truncation_ok(params, config.region_radius);
  return est;
}

// ---------------------------------------------------------------------------
// Campbell validation

struct CampbellStats {
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
  std::size_t realizations = 0;
  bool truncation_warning = false;
};

/// Empirical moments of the interference summed over marks below g.
inline CampbellStats campbell_stats(const NetworkParams& params, double g, std::size_t realizations,
                                    RandomStream& rng, double radius) {
  params.validate();
  if (!(g > 0.0)) throw std::domain_error("campbell_stats: level g must be positive");
  if (realizations < 1000) throw std::invalid_argument("campbell_stats needs >= 1000 realizations");
  MomentAccumulator acc;
  acc.values.reserve(realizations);
  const bool alpha_is_4 = params.alpha == 4.0;
  for (std::size_t k = 0; k < realizations; ++k) {
    double sum = 0.0;
    for_each_ppp_point_sq_radius(rng, params.lambda, radius, [&](double r2) {
      const double power =
          rng.exponential() * (alpha_is_4 ? 1.0 / (r2 * r2) : std::pow(r2, -0.5 * params.alpha));
      if (power < g) sum += power;
    });
    acc.add(sum);
  }
  const auto s = acc.summary();
  return {s.mean, s.variance, s.mean_se, s.variance_se, realizations, !truncation_ok(params, radius)};
}

}  // namespace txcap
