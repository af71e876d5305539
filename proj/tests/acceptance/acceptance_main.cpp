// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// usage: acceptance <path to txcap cli> [criterion numbers...]

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "txcap/experiments.hpp"
#include "txcap/validation.hpp"

using namespace txcap;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

std::string g_cli;
fs::path g_tmp;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void info(const std::string& s) {
  std::printf("      %s\n", s.c_str());
  std::fflush(stdout);
}

double rel(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  const std::string cmd = "'" + g_cli + "' " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NetworkParams defaults(double lambda, int L) {
  return with_lambda_and_L(default_figure_params(), lambda, L);
}

// ---------------------------------------------------------------------------
// 1, 2: bounds against simulation on the fig1 effective-mode sweep

std::vector<std::vector<SweepPoint>> g_fig1;

Outcome sandwich() {
  auto spec = default_experiment(FigureId::fig1);
  spec.modes = {SimMode::effective};
  Outcome o{true, ""};
  for (int L : {2, 4}) {
    const auto grid = sweep_grid(spec, L, spec.outage_min, spec.outage_max);
    auto sweep = run_sweep(spec, L, SimMode::effective, grid, true, spec.outage_max);
    std::size_t inside = 0;
    for (const auto& s : sweep) {
      const bool ok = s.estimate.ci_high >= s.lower && s.estimate.ci_low <= s.upper;
      inside += ok;
      if (!ok)
        info(fmt("L=%d lambda=%.4g p=%.4g [%.4g, %.4g] bounds [%.4g, %.4g] outside", L, s.lambda,
                 s.estimate.p_hat, s.estimate.ci_low, s.estimate.ci_high, s.lower, s.upper));
    }
    const double frac = static_cast<double>(inside) / static_cast<double>(sweep.size());
    const double p_first = sweep.front().estimate.p_hat, p_last = sweep.back().estimate.p_hat;
    const bool spans = p_first <= spec.outage_min && p_last >= spec.outage_max;
    o.pass = o.pass && frac >= 0.95 && spans;
    o.detail += fmt("L=%d %zu/%zu overlap, p-hat %.2g..%.3g; ", L, inside, sweep.size(), p_first, p_last);
    g_fig1.push_back(std::move(sweep));
  }
  return o;
}

Outcome convergence() {
  if (g_fig1.empty()) return {false, "needs criterion 1 in the same run"};
  Outcome o{true, ""};
  for (const auto& sweep : g_fig1) {
    const auto& a = sweep.front();
    const auto& b = sweep.back();
    const double gap_small = (a.upper - a.estimate.p_hat) / a.estimate.p_hat;
    const double gap_large = (b.upper - b.estimate.p_hat) / b.estimate.p_hat;
    const bool ok = std::isfinite(gap_small) && gap_small < 0.5 * gap_large;
    o.pass = o.pass && ok;
    o.detail += fmt("L=%d upper gap %.3f at lambda=%.3g vs %.3f at %.3g; ", a.L, gap_small, a.lambda,
                    gap_large, b.lambda);
    const double low_small = (a.estimate.p_hat - a.lower) / a.estimate.p_hat;
    const double low_large = (b.estimate.p_hat - b.lower) / b.estimate.p_hat;
    info(fmt("L=%d lower-bound gap (p-hat - P^L)/p-hat: %.3f at smallest lambda, %.3f at largest", a.L,
             low_small, low_large));
  }
  return o;
}

void channel_effective_gap() {
  const auto p = defaults(0.07, 2);
  SimConfig cfg;
  cfg.trials = 20000;
  cfg.seed = 2024;
  cfg.stream_count = 1;
  cfg.region_radius = truncation_radius(p);
  cfg.mode = SimMode::effective;
  const auto e = estimate_outage(p, cfg);
  cfg.mode = SimMode::channel;
  const auto c = estimate_outage(p, cfg);
  info(fmt("channel vs effective at L=2 lambda=0.07: %.4g [%.4g, %.4g] vs %.4g [%.4g, %.4g]", c.p_hat,
           c.ci_low, c.ci_high, e.p_hat, e.ci_low, e.ci_high));
}

// ---------------------------------------------------------------------------
// 3, 4

Outcome campbell() {
  Outcome o{true, ""};
  for (const auto& c : detail::check_campbell(defaults(0.01, 2), 2024)) {
    o.pass = o.pass && c.pass;
    o.detail += fmt("%s %.2f SE; ", c.name.c_str(), c.value);
  }
  return o;
}

Outcome primary_law() {
  const auto p = defaults(0.01, 2);
  const auto a = detail::check_sampler_ks(p, 2024);
  const auto b = detail::check_order_statistic_ks(p, 2024);
  return {a.pass && b.pass, fmt("sampler KS %.4g (< 0.01), L-th largest mark KS %.4g (< 0.03)", a.value, b.value)};
}

// ---------------------------------------------------------------------------
// 5

Outcome kappa1_limit() {
  const auto base = defaults(0.01, 2);
  const auto kappas = asymptotic_constants(base, derive_constants(base));
  const double lambda0 = std::sqrt(1e-4 / kappas.kappa1);
  double prev_dev = INFINITY;
  bool monotone = true;
  double first = 0.0, last = 0.0;
  for (int k = 0; k <= 8; ++k) {
    const auto p = defaults(lambda0 * std::pow(10.0, -0.5 * k), 2);
    const double r = outage_lower(p, derive_constants(p)) / (kappas.kappa1 * p.lambda * p.lambda);
    const double dev = std::abs(r - 1.0);
    monotone = monotone && dev <= prev_dev;
    prev_dev = dev;
    if (k == 0) first = r;
    last = r;
  }
  return {monotone && std::abs(last - 1.0) <= 0.02,
          fmt("ratio to kappa1 %.5f at predicted outage 1e-4, %.7f at 1e-12, deviation %s", first, last,
              monotone ? "shrinking" : "not monotone")};
}

// ---------------------------------------------------------------------------
// 6, 7

CapacityCurve g_fig3;
bool g_fig3_ready = false;

Outcome capacity_slope() {
  auto spec = default_experiment(FigureId::fig3);
  spec.epsilons.clear();
  for (int k = -8; k <= -4; ++k) spec.epsilons.push_back(std::pow(10.0, 0.5 * k));
  g_fig3 = run_fig3(spec);
  g_fig3_ready = true;
  Outcome o{true, ""};
  for (int L : spec.L_set) {
    std::vector<CapacityPoint> pts;
    for (const auto& r : g_fig3.rows)
      if (r.L == L) pts.push_back({r.result.epsilon, r.result.capacity});
    const double slope = capacity_sensitivity(pts);
    const double dev = std::abs(slope * L - 1.0);
    o.pass = o.pass && dev <= 0.15;
    o.detail += fmt("L=%d slope %.4f vs %.4f (%.1f%%); ", L, slope, 1.0 / L, 100.0 * dev);
  }
  return o;
}

Outcome envelope() {
  if (!g_fig3_ready) return {false, "needs criterion 6 in the same run"};
  std::size_t inside = 0, total = 0;
  for (const auto& r : g_fig3.rows) {
    if (!r.envelope) continue;
    ++total;
    const double c = r.result.capacity;
    const bool ok = c + r.result.capacity_err_high >= r.envelope->low &&
                    c - r.result.capacity_err_low <= r.envelope->high;
    inside += ok;
    if (!ok)
      info(fmt("L=%d eps=%.3g C=%.5g (-%.2g +%.2g) envelope [%.5g, %.5g]", r.L, r.result.epsilon, c,
               r.result.capacity_err_low, r.result.capacity_err_high, r.envelope->low, r.envelope->high));
  }
  return {total > 0 && inside == total, fmt("%zu/%zu capacities within the envelopes", inside, total)};
}

// ---------------------------------------------------------------------------
// 8

Outcome antenna_gain() {
  auto spec = default_experiment(FigureId::fig2);
  spec.epsilons = {0.1};
  const auto curve = run_fig2(spec);
  std::vector<double> c;
  for (const auto& r : curve.rows) c.push_back(r.result.capacity);
  bool increasing = true, ratios_fall = true;
  std::string ratios;
  for (std::size_t i = 1; i < c.size(); ++i) {
    increasing = increasing && c[i] > c[i - 1];
    ratios += fmt("%.3f ", c[i] / c[i - 1]);
    if (i >= 2) ratios_fall = ratios_fall && c[i] / c[i - 1] < c[i - 1] / c[i - 2];
  }
  const double gain3 = c[2] / c[0];
  return {gain3 >= 4.0 && increasing && ratios_fall,
          fmt("C(3)/C(1) = %.3f, monotone %s, successive ratios %s", gain3, increasing ? "yes" : "no",
              ratios.c_str())};
}

// ---------------------------------------------------------------------------
// 9

Outcome special_functions() {
  QuadratureSpec tight;
  tight.relative_tolerance = 1e-13;
  tight.absolute_tolerance = 1e-300;
  tight.max_subdivisions = 20000;
  double worst_upper = 0.0, worst_lower = 0.0, worst_moment = 0.0;

  for (double a = -5.0; a <= 5.0 + 1e-12; a += 0.25) {
    for (double lx = -3.0; lx <= std::log10(20.0) + 1e-12; lx += 0.25) {
      const double x = std::pow(10.0, lx);
      // Gamma(a, x) = int_0^inf exp(a (ln x + s) - x e^s) ds
      double s_max = 1.0;
      while (x * std::exp(s_max) - a * s_max < 750.0 + std::abs(a * std::log(x))) s_max += 1.0;
      const auto q = integrate_finite(
          [&](double s) { return std::exp(a * (std::log(x) + s) - x * std::exp(s)); }, 0.0, s_max, tight);
      worst_upper = std::max(worst_upper, rel(upper_gamma_general(a, x), q.value));
    }
  }
  for (double a : {0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0}) {
    for (double x : {1e-3, 0.05, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0}) {
      // gamma(a, x) = (1/a) int_0^{x^a} exp(-u^{1/a}) du
      const auto q = integrate_finite([&](double u) { return std::exp(-std::pow(u, 1.0 / a)); }, 0.0,
                                      std::pow(x, a), tight);
      const double want = q.value / a / std::tgamma(a);
      worst_lower = std::max(worst_lower, rel(reg_lower_gamma(a, x), want));
    }
  }
  for (double beta : {0.01, 0.0513, 0.3})
    for (double alpha : {3.0, 4.0, 5.0})
      for (int L : {1, 2, 3, 4, 6}) {
        NetworkParams p = default_figure_params();
        p.alpha = alpha;
        p.beta = beta;
        p.L = L;
        p.theta = 1.5;
        p.d = 1.2;
        const auto k = derive_constants(p);
        const double scale = std::pow(p.d, alpha) * p.theta;
        for (double order : {k.delta * L, 2.0}) {
          const double floor = p.gain_floor();
          const auto q = integrate_semi_infinite(
              [&](double t) { return std::pow(floor + t, -order) * std::exp(-t); }, 0.0, tight);
          const double want = std::pow(scale, order) * q.value;
          worst_moment = std::max(worst_moment, rel(moment_w_neg(p, k, order), want));
        }
      }
  const bool ok = worst_upper <= 1e-9 && worst_lower <= 1e-9 && worst_moment <= 1e-8;
  return {ok, fmt("worst relative error: upper gamma %.2g, regularized lower gamma %.2g, "
                  "E[B^-s] moments %.2g",
                  worst_upper, worst_lower, worst_moment)};
}

// ---------------------------------------------------------------------------
// 10

double zf_ks_ratio(int L, std::uint64_t seed, double* worst_residual) {
  const auto p = defaults(0.01, L);
  RandomStream rng(seed);
  std::vector<double> gains;
  gains.reserve(3500000);
  for (int t = 0; t < 10000; ++t) {
    const auto trial = run_channel_trial(rng, p, 100.0 * p.d);
    if (worst_residual && trial.received_power > 0.0)
      *worst_residual = std::max(*worst_residual, trial.canceled_residual / trial.received_power);
    gains.insert(gains.end(), trial.residual_marks.begin(), trial.residual_marks.end());
  }
  const double ks = ks_statistic(gains, [](double x) { return x > 0.0 ? 1.0 - std::exp(-x) : 0.0; });
  return ks / ks_critical_value(gains.size(), 0.01);
}

Outcome zero_forcing() {
  double worst = 0.0;
  const double ratio = zf_ks_ratio(2, 2024, &worst);
  info(fmt("L=4 pooled-gain KS / 1%% critical value: %.3f", zf_ks_ratio(4, 2024, nullptr)));
  return {worst <= 1e-9 && ratio < 1.0,
          fmt("worst canceled residual / total %.2g, pooled-gain KS / 1%% critical value %.3f (L=2)", worst,
              ratio)};
}

// ---------------------------------------------------------------------------
// 11

Outcome determinism() {
  const std::string sim = "simulate --lambda 0.05 --L 2 --seed 77 --streams 4";
  const auto a = cli(sim + " --trials 20000"), b = cli(sim + " --trials 20000");
  const auto c = cli(sim + " --mode channel --trials 2000");
  const auto d = cli(sim + " --mode channel --trials 2000");
  const bool sim_ok = a.status == 0 && a.out == b.out && c.status == 0 && c.out == d.out && !a.out.empty();

  const fs::path cfg = g_tmp / "fig1.cfg";
  std::ofstream(cfg) << "lambdas = 0.02, 0.05, 0.1\nL_set = 2, 3\nmodes = effective, channel\n"
                        "trials = 2000\nmc_samples = 10000\nseed = 11\nstream_count = 3\n";
  bool fig_ok = true;
  for (const char* id : {"fig1", "fig2"}) {
    std::string extra = std::string(id) == "fig2" ? " --config " + (g_tmp / "fig2.cfg").string() : " --config " + cfg.string();
    if (std::string(id) == "fig2")
      std::ofstream(g_tmp / "fig2.cfg") << "L_set = 1, 2\nepsilons = 0.1\ntrials = 5000\nseed = 5\nstream_count = 2\n";
    const auto r1 = cli(std::string("figures --id ") + id + extra + " --out " + (g_tmp / "run1").string());
    const auto r2 = cli(std::string("figures --id ") + id + extra + " --out " + (g_tmp / "run2").string());
    const std::string csv = std::string(id) + ".csv";
    const std::string meta = csv + ".meta.json";
    const auto c1 = slurp(g_tmp / "run1" / csv), c2 = slurp(g_tmp / "run2" / csv);
    const bool same = r1.status == 0 && r2.status == 0 && !c1.empty() && c1 == c2 &&
                      slurp(g_tmp / "run1" / meta) == slurp(g_tmp / "run2" / meta);
    if (!same) info(fmt("figures --id %s differs between runs (status %d, %d)", id, r1.status, r2.status));
    fig_ok = fig_ok && same;
  }
  return {sim_ok && fig_ok, fmt("simulate %s, figures %s", sim_ok ? "identical" : "DIFFERENT",
                                fig_ok ? "identical" : "DIFFERENT")};
}

// ---------------------------------------------------------------------------
// 12

Json cli_json(const std::string& args) {
  const auto r = cli(args);
  if (r.status != 0) throw std::runtime_error("txcap " + args + " exited with " + std::to_string(r.status));
  return Json::parse(r.out);
}

Outcome scale_invariance() {
  const auto base = defaults(0.05, 2);
  const double s = 2.0;
  const double scaled_beta = base.beta * std::pow(s, -base.alpha);
  auto flags = [&](double d, double lambda, double beta) {
    return fmt(" --d %.17g --lambda %.17g --beta %.17g --L 2 --alpha 4 --seed 31", d, lambda, beta);
  };
  const std::string f1 = flags(1.0, base.lambda, base.beta);
  const std::string f2 = flags(s, base.lambda / (s * s), scaled_beta);

  double worst = 0.0;
  const auto b1 = cli_json("bounds" + f1), b2 = cli_json("bounds" + f2);
  for (const char* key : {"pout_lower", "pout_upper"})
    worst = std::max(worst, rel(b1[key].get<double>(), b2[key].get<double>()));
  for (const char* method : {"lower", "upper", "asymptotic"}) {
    const std::string q = std::string("capacity --epsilon 0.01 --method ") + method;
    const auto c1 = cli_json(q + f1)["result"], c2 = cli_json(q + f2)["result"];
    for (const char* key : {"lambda_eps", "capacity"})
      worst = std::max(worst, rel(c1[key].get<double>(), c2[key].get<double>() * s * s));
  }

  const std::string sim = "simulate --trials 40000 --streams 2";
  const auto s1 = cli_json(sim + f1 + " --radius 30")["estimate"];
  const auto s2 = cli_json(sim + f2 + " --radius 60")["estimate"];
  const double p1 = s1["p_hat"].get<double>(), p2 = s2["p_hat"].get<double>();
  const double half = 0.5 * (s1["ci_high"].get<double>() - s1["ci_low"].get<double>() +
                             s2["ci_high"].get<double>() - s2["ci_low"].get<double>());
  const bool sim_ok = std::abs(p1 - p2) <= half;

  const std::string capq = "capacity --method simulation --epsilon 0.1 --trials 20000 --streams 1";
  const auto r1 = cli_json(capq + f1)["result"], r2 = cli_json(capq + f2)["result"];
  const double x1 = r1["capacity"].get<double>(), x2 = r2["capacity"].get<double>() * s * s;
  const double bar = r1["capacity_err_low"].get<double>() + r1["capacity_err_high"].get<double>() +
                     (r2["capacity_err_low"].get<double>() + r2["capacity_err_high"].get<double>()) * s * s;
  const bool cap_ok = std::abs(x1 - x2) <= 0.5 * bar;

  return {worst <= 1e-9 && sim_ok && cap_ok,
          fmt("analytic worst relative change %.2g; simulated outage %.5g vs %.5g (CI half-width %.2g); "
              "simulated C d^2 %.5g vs %.5g (bar %.2g)",
              worst, p1, p2, half, x1, x2, 0.5 * bar)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <txcap cli> [criterion ...]\n", argv[0]);
    return 2;
  }
  g_cli = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));
  g_tmp = fs::temp_directory_path() / ("txcap_acceptance_" + std::to_string(getpid()));
  fs::create_directories(g_tmp);

  const std::vector<Criterion> criteria{
      {1, "bound sandwich", 300, sandwich},
      {2, "bound convergence", 300, convergence},
      {3, "Campbell moments", 60, campbell},
      {4, "primary-interference law", 120, primary_law},
      {5, "asymptotic coefficient", 10, kappa1_limit},
      {6, "capacity power law", 1200, capacity_slope},
      {7, "envelope containment", 1200, envelope},
      {8, "multi-antenna gain", 600, antenna_gain},
      {9, "special-function oracles", 10, special_functions},
      {10, "zero-forcing", 120, zero_forcing},
      {11, "determinism", 60, determinism},
      {12, "scale invariance", 600, scale_invariance},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // 2 and 7 reuse the runs of 1 and 6, so their time is the shared budget
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %-26s %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : fmt(", over the %.0f s budget", c.budget_s).c_str());
    std::fflush(stdout);
    if (c.id == 1) channel_effective_gap();
  }
  fs::remove_all(g_tmp);
  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
