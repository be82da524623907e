#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "laasim/case_io.hpp"
#include "laasim/catalog.hpp"
#include "laasim/cosim.hpp"
#include "laasim/errors.hpp"
#include "laasim/report.hpp"

namespace fs = std::filesystem;
using namespace laasim;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;
constexpr int kInvalidCase = 3;
constexpr int kConfig = 4;

fs::path default_out_dir() {
  if (const char* env = std::getenv("LAASIM_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "out";
}

struct ScenarioSource {
  std::string file;
  std::string catalog_id;
  std::optional<double> gain_iii;
  std::optional<double> gain_iv;
  std::optional<std::uint64_t> seed;

  void add_options(CLI::App* cmd) {
    cmd->add_option("scenario", file, "Scenario JSON file");
    cmd->add_option("--catalog", catalog_id, "Built-in scenario id, e.g. II.3");
    cmd->add_option("--gain-iii", gain_iii, "Explicit DLAA gain for catalog III (pu/Hz)");
    cmd->add_option("--gain-iv", gain_iv, "Explicit DLAA gain for catalog IV (pu/Hz)");
    cmd->add_option("--seed", seed, "Overrides every channel and excitation seed");
  }

  Scenario load() const {
    if (file.empty() == catalog_id.empty()) throw CLI::ValidationError("give either a scenario file or --catalog");
    Scenario s;
    if (!catalog_id.empty()) {
      CatalogOptions opt;
      opt.gain_iii = gain_iii;
      opt.gain_iv = gain_iv;
      s = catalog_scenario(catalog_id, opt);
    } else {
      if (!fs::exists(file)) throw Error(file + ": no such file");
      s = load_scenario(file);
    }
    if (seed) override_seeds(s, *seed);
    return s;
  }
};

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--values: '" + item + "' is not a number");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int cmd_validate(const std::string& path) {
  const GridCase c = load_case(resolve_case_path(path));
  const auto problems = validate(c);
  if (problems.empty()) {
    std::printf("valid: %s (%zu buses, %zu branches, %zu generators, %.2f pu load)\n", c.name.c_str(), c.buses.size(),
                c.branches.size(), c.generators.size(), total_nominal_load(c));
    return kOk;
  }
  for (const auto& p : problems) std::printf("invalid: %s\n", p.c_str());
  return kInvalidCase;
}

int cmd_run(const ScenarioSource& src, const fs::path& out_dir, bool plot) {
  const Scenario s = src.load();
  const auto start = std::chrono::steady_clock::now();
  const ScenarioResult r = run(s);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const OutputPaths p = write_outputs(s, r, out_dir, plot, wall);
  std::printf("%s: %s", s.id.c_str(), to_string(r.outcome));
  if (r.destabilized_at) std::printf(" at %.2f s (%s)", *r.destabilized_at, r.verdict.band.c_str());
  std::printf("; steady %.4f Hz, tail p-p %.4f Hz, UFLS stages %d", r.steady_dev_hz, r.tail_peak_to_peak_hz,
              r.ufls_stages);
  if (r.mdlaa) std::printf(", mdlaa %s after %d samples", r.mdlaa->status.c_str(), r.mdlaa->applied);
  std::printf("\n  trace %s\n", p.trace.string().c_str());
  return kOk;
}

int cmd_sweep(const ScenarioSource& src, const std::string& param, const std::string& values, int workers,
              const std::string& out_file) {
  const Scenario s = src.load();
  const SweepResult res = sweep(s, param, parse_values(values), workers);
  std::printf("%-12s %-20s %-14s %s\n", param.c_str(), "outcome", "violation_s", "ufls_stages");
  nlohmann::json points = nlohmann::json::array();
  for (const auto& pt : res.points) {
    const std::string at = pt.destabilized_at ? std::to_string(*pt.destabilized_at) : "-";
    std::printf("%-12g %-20s %-14s %d\n", pt.value, to_string(pt.outcome), at.c_str(), pt.ufls_stages);
    points.push_back({{"value", pt.value},
                      {"outcome", to_string(pt.outcome)},
                      {"destabilized_at_s", pt.destabilized_at ? nlohmann::json(*pt.destabilized_at) : nullptr},
                      {"ufls_stages", pt.ufls_stages}});
  }
  if (res.threshold) {
    std::printf("threshold: %g\n", *res.threshold);
  } else {
    std::printf("threshold: none\n");
  }
  std::printf("monotone: %s\n", res.monotone ? "yes" : "no");
  if (!out_file.empty()) {
    nlohmann::json j = {{"scenario", s.id},
                        {"path", param},
                        {"points", points},
                        {"threshold", res.threshold ? nlohmann::json(*res.threshold) : nullptr},
                        {"monotone", res.monotone}};
    std::ofstream f(out_file);
    if (!f || !(f << j.dump(2) << "\n")) throw Error("cannot write " + out_file);
  }
  return kOk;
}

int cmd_calibrate(const std::string& case_ref, const std::vector<int>& buses, double k_max, const std::string& out_file) {
  const GridCase c = load_case(resolve_case_path(case_ref));
  require_valid(c);
  const LinearPlant plant = build_plant(c, PlantOptions{true});
  const BusIndex idx = index_buses(c);
  std::vector<int> targets;
  for (int b : buses) {
    if (!idx.is_load_bus(b)) throw ConfigError("bus " + std::to_string(b) + " is not a load bus");
    targets.push_back(idx.load_of_bus.at(b));
  }
  const CriticalGain cg = predict_critical_gain(plant, targets, inertia_weights(c), k_max);
  if (cg.stable_throughout) {
    std::printf("stable for every gain up to %g pu/Hz\n", k_max);
  } else {
    std::printf("K_crit = %.4f pu/Hz (tolerance %g)\n", cg.k_crit, cg.tolerance);
  }
  std::printf("%14s  %s\n", "gain_pu_per_hz", "abscissa");
  for (const auto& [k, a] : cg.table) std::printf("%14.4f  %+.6e\n", k, a);
  if (!out_file.empty()) {
    std::ofstream f(out_file);
    if (!f || !(f << calibration_json(case_ref, buses, cg).dump(2) << "\n")) throw Error("cannot write " + out_file);
  }
  return kOk;
}

int cmd_catalog(bool run_all, const fs::path& out_dir, bool plot, const CatalogOptions& opt) {
  for (const auto& cs : scenario_catalog(opt)) {
    std::printf("%s  %s\n", cs.id.c_str(), cs.title.c_str());
    for (const auto& v : cs.variants) {
      if (!run_all) {
        std::printf("  %-6s %s\n", v.id.c_str(), v.title.c_str());
        continue;
      }
      const auto start = std::chrono::steady_clock::now();
      const ScenarioResult r = run(v);
      write_outputs(v, r, out_dir, plot, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      std::printf("  %-6s %-20s", v.id.c_str(), to_string(r.outcome));
      if (r.destabilized_at) std::printf(" at %7.2f s", *r.destabilized_at);
      std::printf("\n");
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load-altering attack co-simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string case_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a grid case file");
  validate_cmd->add_option("case", case_path, "Case JSON file or shipped case name")->required();

  ScenarioSource run_src;
  std::string out_dir_text;
  bool plot = false;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario and write trace, events and manifest");
  run_src.add_options(run_cmd);
  run_cmd->add_option("--out", out_dir_text, "Output directory (default $LAASIM_OUT_DIR or ./out)");
  run_cmd->add_flag("--plot", plot, "Also write an SVG frequency plot");

  ScenarioSource sweep_src;
  std::string param, values, sweep_out;
  int workers = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario over values of one numeric field");
  sweep_src.add_options(sweep_cmd);
  sweep_cmd->add_option("--param", param, "Dotted field path, e.g. network.controller.delay_ms")->required();
  sweep_cmd->add_option("--values", values, "Comma separated values")->required();
  sweep_cmd->add_option("--workers", workers, "Parallel runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--json", sweep_out, "Write the sweep as JSON");

  std::string cal_case = "ieee39", cal_out;
  std::vector<int> cal_buses = {4, 20};
  double k_max = 10.0;
  auto* cal_cmd = app.add_subcommand("calibrate", "Critical DLAA gain and abscissa-vs-gain table");
  cal_cmd->add_option("--case", cal_case, "Case file or shipped case name");
  cal_cmd->add_option("--buses", cal_buses, "Attacked load buses")->delimiter(',');
  cal_cmd->add_option("--k-max", k_max, "Upper end of the gain search (pu/Hz)")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--json", cal_out, "Write the report as JSON");

  bool run_all = false;
  CatalogOptions cat_opt;
  std::string cat_out;
  bool cat_plot = false;
  auto* cat_cmd = app.add_subcommand("catalog", "List (or run) the built-in scenarios");
  cat_cmd->add_flag("--run", run_all, "Run every variant and write outputs");
  cat_cmd->add_option("--out", cat_out, "Output directory for --run");
  cat_cmd->add_flag("--plot", cat_plot, "Write SVG plots with --run");
  cat_cmd->add_option("--gain-iii", cat_opt.gain_iii, "Explicit DLAA gain for III (pu/Hz)");
  cat_cmd->add_option("--gain-iv", cat_opt.gain_iv, "Explicit DLAA gain for IV (pu/Hz)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  auto out_dir = [](const std::string& text) { return text.empty() ? default_out_dir() : fs::path(text); };
  try {
    if (*validate_cmd) return cmd_validate(case_path);
    if (*run_cmd) return cmd_run(run_src, out_dir(out_dir_text), plot);
    if (*sweep_cmd) return cmd_sweep(sweep_src, param, values, workers, sweep_out);
    if (*cal_cmd) return cmd_calibrate(cal_case, cal_buses, k_max, cal_out);
    if (*cat_cmd) return cmd_catalog(run_all, out_dir(cat_out), cat_plot, cat_opt);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CaseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidCase;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
