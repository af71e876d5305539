#pragma once

// JSON views of the library types and dataset writers. Key order is fixed
// (ordered_json) and nothing time-dependent is written, so identical inputs
// give byte-identical files.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "txcap/experiments.hpp"
#include "txcap/version.hpp"

namespace txcap {

using Json = nlohmann::ordered_json;

inline Json to_json(const NetworkParams& p) {
  return Json{{"lambda", p.lambda}, {"d", p.d},         {"alpha", p.alpha},
              {"theta", p.theta},   {"beta", p.beta},   {"L", p.L}};
}

inline Json to_json(const DerivedConstants& k) {
  return Json{{"delta", k.delta}, {"p_t", k.p_t}, {"c1", k.c1},
              {"c2", k.c2},       {"c3", k.c3},   {"c4", k.c4}};
}

inline Json to_json(const SimConfig& s) {
  return Json{{"mode", to_string(s.mode)},
              {"region_radius", s.region_radius},
              {"trials", s.trials},
              {"seed", s.seed},
              {"stream_count", s.stream_count}};
}

inline Json to_json(const OutageEstimate& e) {
  return Json{{"p_hat", e.p_hat},
              {"ci_low", e.ci_low},
              {"ci_high", e.ci_high},
              {"trials", e.trials},
              {"outages", e.outages},
              {"seed", e.seed},
              {"stream_count", e.stream_count},
              {"mode", to_string(e.mode)},
              {"region_radius", e.region_radius},
              {"truncation_warning", e.truncation_warning}};
}

inline Json to_json(const CapacityResult& r) {
  return Json{{"epsilon", r.epsilon},
              {"lambda_eps", r.lambda_eps},
              {"capacity", r.capacity},
              {"method", to_string(r.method)},
              {"capacity_err_low", r.capacity_err_low},
              {"capacity_err_high", r.capacity_err_high}};
}

inline Json to_json(const AsymptoticConstants& k) {
  Json j{{"kappa1", k.kappa1}, {"kappa2", k.kappa2}};
  j["kappa3"] = k.kappa3 ? Json(*k.kappa3) : Json(nullptr);
  j["regime"] = to_string(k.regime);
  return j;
}

inline Json to_json(const ExperimentSpec& s) {
  Json modes = Json::array();
  for (auto m : s.modes) modes.push_back(to_string(m));
  return Json{{"figure_id", to_string(s.figure_id)},
              {"base", to_json(s.base)},
              {"sim", to_json(s.sim)},
              {"radius_policy", to_string(s.radius_policy)},
              {"lambdas", s.lambdas},
              {"points_per_decade", s.points_per_decade},
              {"L_set", s.L_set},
              {"epsilons", s.epsilons},
              {"modes", modes},
              {"outage_min", s.outage_min},
              {"outage_max", s.outage_max},
              {"mc_samples", s.mc_samples},
              {"target_events", s.target_events},
              {"max_trials", s.max_trials}};
}

/// Header stamped into every emitted object.
inline Json provenance() {
  return Json{{"version", kVersion}, {"build_id", TXCAP_BUILD_ID}};
}

inline Json dataset_metadata(const ExperimentSpec& spec, const std::string& csv_name) {
  Json j = provenance();
  j["dataset"] = csv_name;
  j["experiment"] = to_json(spec);
  j["row_seed"] = "derive_seed(sim.seed, L, grid_index, mode_index + 1), mode_index: channel=0 effective=1";
  j["grid"] = "lambda = 10^(grid_index / points_per_decade) unless lambdas is given (then grid_index = position)";
  j["upper_bound_seed"] = "derive_seed(sim.seed, L, 176), shared by all lambda of one L";
  return j;
}

struct DatasetFiles {
  std::filesystem::path csv;
  std::filesystem::path meta;
};

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  return os;
}

}  // namespace detail

/// Runs the figure named in `spec` and writes <id>.csv plus <id>.csv.meta.json under `dir`.
inline DatasetFiles write_figure_dataset(const ExperimentSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string name = std::string(to_string(spec.figure_id)) + ".csv";
  DatasetFiles files{dir / name, dir / (name + ".meta.json")};
  std::ostringstream body;
  switch (spec.figure_id) {
    case FigureId::fig1:
      write_fig1_csv(body, run_fig1(spec));
      break;
    case FigureId::fig2:
      write_fig2_csv(body, run_fig2(spec));
      break;
    case FigureId::fig3:
      write_fig3_csv(body, run_fig3(spec));
      break;
    case FigureId::custom:
      throw std::invalid_argument("custom experiments have no dataset layout; pick fig1, fig2 or fig3");
  }
  {
    auto os = detail::open_for_write(files.csv);
    os << body.str();
  }
  {
    auto os = detail::open_for_write(files.meta);
    os << dataset_metadata(spec, name).dump(2) << '\n';
  }
  return files;
}

}  // namespace txcap
