// txcap: command-line front end for the outage bounds, simulator and figure datasets.
//
// exit codes: 0 ok, 1 a validation check failed, 2 usage or input error,
// 3 numerical non-convergence

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "txcap/config.hpp"
#include "txcap/output.hpp"
#include "txcap/validation.hpp"

using namespace txcap;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct Overrides {
  std::optional<double> lambda, d, alpha, theta, beta, epsilon, radius;
  std::optional<int> L;
  std::optional<std::size_t> trials, streams;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode, method, config, out, id;
  std::string format = "json";
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--lambda", o.lambda, "active transmitter density");
  sub->add_option("--d", o.d, "link length");
  sub->add_option("--alpha", o.alpha, "path-loss exponent (> 2)");
  sub->add_option("--theta", o.theta, "SIR threshold, linear");
  sub->add_option("--beta", o.beta, "activation threshold on the link gain");
  sub->add_option("--L", o.L, "antennas per node");
  sub->add_option("--epsilon", o.epsilon, "target outage probability");
  sub->add_option("--trials", o.trials, "Monte Carlo trials");
  sub->add_option("--seed", o.seed, "base seed");
  sub->add_option("--streams", o.streams, "substream count (pin for reproducibility)");
  sub->add_option("--radius", o.radius, "simulation region radius");
  sub->add_option("--mode", o.mode, "effective | channel");
  sub->add_option("--method", o.method, "lower | upper | simulation | asymptotic");
  sub->add_option("--config", o.config, "key = value config file");
  sub->add_option("--out", o.out, "output file (figures: directory)");
  sub->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
}

// Everything a subcommand needs after config and flags are merged.
struct Effective {
  ExperimentSpec spec;
  double epsilon = 0.01;
  std::string method = "lower";
  bool radius_given = false;
};

Effective resolve(const Overrides& o, std::optional<FigureId> figure) {
  ConfigMap cfg;
  if (o.config) cfg = load_config(*o.config);
  if (!figure) figure = config_figure_id(cfg);

  Effective e;
  e.spec = figure ? default_experiment(*figure) : ExperimentSpec{};
  if (!figure) {
    e.spec.base = default_figure_params();
    e.spec.sim.stream_count = std::max(1u, std::thread::hardware_concurrency());
  }
  apply_config(cfg, e.spec);
  e.radius_given = cfg.has("region_radius");
  if (cfg.has("epsilon")) e.epsilon = detail::parse_double("epsilon", cfg.at("epsilon"));
  if (cfg.has("method")) e.method = cfg.at("method");

  auto& p = e.spec.base;
  auto& s = e.spec.sim;
  if (o.lambda) p.lambda = *o.lambda;
  if (o.d) p.d = *o.d;
  if (o.alpha) p.alpha = *o.alpha;
  if (o.theta) p.theta = *o.theta;
  if (o.beta) p.beta = *o.beta;
  if (o.L) p.L = *o.L;
  if (o.trials) s.trials = *o.trials;
  if (o.seed) s.seed = *o.seed;
  if (o.streams) s.stream_count = *o.streams;
  if (o.mode) s.mode = parse_sim_mode(*o.mode);
  if (o.radius) {
    s.region_radius = *o.radius;
    e.radius_given = true;
  }
  if (!e.radius_given) s.region_radius = 100.0 * p.d;
  if (o.epsilon) e.epsilon = *o.epsilon;
  if (o.method) e.method = *o.method;
  if (o.out) e.spec.output = *o.out;
  if (figure) e.spec.figure_id = *figure;
  p.validate();
  return e;
}

// One CSV row of dotted keys for the scalar leaves of a JSON object.
void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else if (it->is_number_float()) {
      out.emplace_back(key, format_double(it->get<double>()));
    } else if (it->is_string()) {
      out.emplace_back(key, it->get<std::string>());
    } else if (it->is_null()) {
      out.emplace_back(key, "");
    } else {
      out.emplace_back(key, it->dump());
    }
  }
}

std::string render(const Json& j, const std::string& format) {
  if (format == "json") return j.dump(2) + "\n";
  std::vector<std::pair<std::string, std::string>> cells;
  flatten(j, "", cells);
  std::string header, row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    header += (i ? "," : "") + cells[i].first;
    row += (i ? "," : "") + cells[i].second;
  }
  return header + "\n" + row + "\n";
}

void emit(const Json& j, const Effective& e, const std::string& format) {
  const std::string text = render(j, format);
  if (e.spec.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(e.spec.output, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + e.spec.output + "'");
  os << text;
}

Json header(const char* command, const Effective& e) {
  Json j = provenance();
  j["command"] = command;
  j["params"] = to_json(e.spec.base);
  return j;
}

int cmd_bounds(const Effective& e, const std::string& format) {
  const auto& p = e.spec.base;
  const auto k = derive_constants(p);
  RandomStream rng(e.spec.sim.seed);
  const auto upper = outage_upper(p, k, e.spec.mc_samples, rng);
  Json j = header("bounds", e);
  j["seed"] = e.spec.sim.seed;
  j["mc_samples"] = e.spec.mc_samples;
  j["pout_lower"] = upper.lower;
  j["pout_upper"] = upper.value;
  j["pout_upper_stderr"] = upper.std_error;
  try {
    const auto kappas = asymptotic_constants(p, k);
    const Json kj = to_json(kappas);
    for (const auto& [key, v] : kj.items()) j[key] = v;
  } catch (const DivergenceError& ex) {
    j["kappa1"] = nullptr;
    j["kappa2"] = nullptr;
    j["kappa3"] = nullptr;
    j["kappa_note"] = ex.what();
  }
  j["derived"] = to_json(k);
  emit(j, e, format);
  return kOk;
}

int cmd_simulate(const Effective& e, const std::string& format) {
  const auto est = estimate_outage(e.spec.base, e.spec.sim);
  Json j = header("simulate", e);
  j["config"] = to_json(e.spec.sim);
  j["estimate"] = to_json(est);
  emit(j, e, format);
  return kOk;
}

int cmd_capacity(const Effective& e, const std::string& format) {
  const auto& p = e.spec.base;
  const double eps = e.epsilon;
  Json j = header("capacity", e);
  j["seed"] = e.spec.sim.seed;
  const int L = p.L;
  if (e.method == "lower") {
    j["result"] = to_json(solve_capacity(eps, lower_bound_curve(p, L), density_hint(p), CapacityMethod::lower_bound));
  } else if (e.method == "upper") {
    j["mc_samples"] = e.spec.mc_samples;
    const auto curve = upper_bound_curve(p, L, e.spec.mc_samples, e.spec.sim.seed);
    j["result"] = to_json(solve_capacity(eps, curve, density_hint(p), CapacityMethod::upper_bound));
  } else if (e.method == "simulation") {
    ExperimentSpec spec = e.spec;
    spec.L_set = {L};
    spec.modes = {spec.sim.mode};
    const auto grid = sweep_grid(spec, L, eps, eps);
    const auto sweep = run_sweep(spec, L, spec.sim.mode, grid, false);
    j["config"] = to_json(spec.sim);
    j["grid_points"] = sweep.size();
    j["result"] = to_json(invert_simulated_curve(to_simulated_points(sweep), eps));
  } else if (e.method == "asymptotic") {
    const auto kappas = asymptotic_constants(p, derive_constants(p));
    const auto env = asymptotic_capacity_envelope(p, kappas, eps);
    auto r = CapacityResult::make(eps, env.high / (1.0 - eps), CapacityMethod::asymptotic);
    j["result"] = to_json(r);
    j["envelope"] = Json{{"low", env.low}, {"high", env.high}};
    j["kappas"] = to_json(kappas);
  } else {
    throw CLI::ValidationError("--method", "expected lower, upper, simulation or asymptotic");
  }
  emit(j, e, format);
  return kOk;
}

int cmd_figures(const Effective& e, const std::string& format) {
  if (format != "csv") throw CLI::ValidationError("--format", "figures are written as csv");
  const std::filesystem::path dir = e.spec.output.empty() ? "." : e.spec.output;
  const auto files = write_figure_dataset(e.spec, dir);
  Json j = provenance();
  j["command"] = "figures";
  j["figure_id"] = to_string(e.spec.figure_id);
  j["csv"] = files.csv.string();
  j["metadata"] = files.meta.string();
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_validate(const Effective& e, const std::string& format) {
  const auto checks = run_validation(e.spec.base, e.spec.sim.seed);
  bool all = true;
  Json list = Json::array();
  for (const auto& c : checks) {
    all = all && c.pass;
    list.push_back(Json{{"name", c.name}, {"value", c.value}, {"threshold", c.threshold},
                        {"pass", c.pass}, {"detail", c.detail}});
    std::fprintf(stderr, "%s %-28s value=%.6g threshold=%.6g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                 c.value, c.threshold);
  }
  Json j = header("validate", e);
  j["seed"] = e.spec.sim.seed;
  j["checks"] = list;
  j["all_pass"] = all;
  if (format == "json") {
    emit(j, e, format);
  } else {
    std::ostringstream os;
    os << "name,value,threshold,pass\n";
    for (const auto& c : checks)
      os << c.name << ',' << format_double(c.value) << ',' << format_double(c.threshold) << ','
         << (c.pass ? "true" : "false") << '\n';
    if (e.spec.output.empty()) {
      std::cout << os.str();
    } else {
      std::ofstream(e.spec.output, std::ios::binary) << os.str();
    }
  }
  return all ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmission capacity of multi-antenna ad hoc networks: bounds, simulation, datasets"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  Overrides o;
  auto* bounds = app.add_subcommand("bounds", "outage bounds and small-density constants");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo outage estimate");
  auto* capacity = app.add_subcommand("capacity", "density meeting an outage target");
  auto* figures = app.add_subcommand("figures", "write a figure dataset as CSV");
  auto* validate = app.add_subcommand("validate", "run the self-check suite");
  for (auto* sub : {bounds, simulate, capacity, figures, validate}) add_common(sub, o);
  figures->add_option("--id", o.id, "fig1 | fig2 | fig3")->required()->check(CLI::IsMember({"fig1", "fig2", "fig3"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (figures->parsed()) {
      if (!figures->count("--format")) o.format = "csv";
      return cmd_figures(resolve(o, parse_figure_id(*o.id)), o.format);
    }
    const auto eff = resolve(o, std::nullopt);
    if (bounds->parsed()) return cmd_bounds(eff, o.format);
    if (simulate->parsed()) return cmd_simulate(eff, o.format);
    if (capacity->parsed()) return cmd_capacity(eff, o.format);
    if (validate->parsed()) return cmd_validate(eff, o.format);
  } catch (const NonConvergenceError& e) {
    std::cerr << "txcap: numerical non-convergence: " << e.what() << '\n';
    return kNumerical;
  } catch (const BracketError& e) {
    std::cerr << "txcap: root bracketing failed: " << e.what() << '\n';
    return kNumerical;
  } catch (const DivergenceError& e) {
    std::cerr << "txcap: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "txcap: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "txcap: " << e.what() << '\n';
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "txcap: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "txcap: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
