#include "branchflow/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "branchflow/branching.hpp"
#include "branchflow/errors.hpp"
#include "branchflow/evolution.hpp"
#include "branchflow/model.hpp"
#include "branchflow/output.hpp"
#include "branchflow/rates.hpp"
#include "branchflow/trajectory.hpp"
#include "branchflow/verify.hpp"

namespace branchflow {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string scenario;
  std::string builtin;
  double omega = 1.0;
  std::vector<double> amplitudes{0.6, 0.8};
  double coupling = 1.0;
  std::string out_dir = ".";
  std::vector<std::string> formats{"csv", "json"};
  std::string dump_scenario;
  unsigned threads = 1;
  std::size_t points = 1000;
  std::size_t n_trajectories = 1000;
  std::uint64_t seed = 1;
  double dt_base = 1e-3;
  double tolerance = -1.0;  // negative: pick the default for the mode
  double substeps = 2000.0;
  bool no_rectify = false;
  std::size_t fuzz = 0;
  std::size_t fuzz_dim = 8;

  bool wants(const char* format) const { return std::find(formats.begin(), formats.end(), format) != formats.end(); }
};

Model resolve_model(const RunConfig& cfg) {
  if (!cfg.scenario.empty() && !cfg.builtin.empty()) throw ValidationError("use either --scenario or --builtin");
  if (!cfg.scenario.empty()) return load_model_file(cfg.scenario);
  if (cfg.builtin == "rabi") return built_in_rabi(cfg.omega);
  if (cfg.builtin == "measurement") {
    std::vector<Complex> c(cfg.amplitudes.begin(), cfg.amplitudes.end());
    return built_in_measurement(c, cfg.coupling);
  }
  if (cfg.builtin == "diagonal") return built_in_diagonal();
  if (cfg.builtin.empty()) throw ValidationError("no scenario given (use --scenario or --builtin)");
  throw ValidationError("unknown built-in scenario: " + cfg.builtin);
}

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

void maybe_dump(const RunConfig& cfg, const Model& model) {
  if (cfg.dump_scenario.empty()) return;
  std::ofstream f(cfg.dump_scenario, std::ios::binary);
  if (!f) throw Error("cannot write " + cfg.dump_scenario);
  f << serialize_model(model);
}

int cmd_evolve(const RunConfig& cfg, std::ostream& out) {
  const Model model = resolve_model(cfg);
  maybe_dump(cfg, model);
  const Evolver evolver(std::make_shared<const Model>(model));
  const std::vector<double> times = uniform_grid(model.t_max, cfg.points);
  std::vector<std::vector<double>> weights;
  weights.reserve(times.size());
  for (double t : times) weights.push_back(born_weights(evolver.state_at(t), model.basis));
  if (cfg.wants("csv")) {
    auto f = open_output(cfg, "weights.csv");
    write_weights_csv(f, model.labels, times, weights);
  }
  if (cfg.wants("json")) {
    auto f = open_output(cfg, "weights.json");
    nlohmann::json j = {{"model", model.name}, {"labels", model.labels}, {"times", times}, {"weights", weights}};
    f << j.dump() << '\n';
  }
  const std::vector<double> last = summary_weights(weights.back());
  out << "evolve " << model.name << ": " << times.size() << " grid points, final weights";
  for (std::size_t b = 0; b < last.size(); ++b) out << ' ' << model.labels[b] << '=' << format_number(last[b]);
  out << '\n';
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.n_trajectories < 1) throw ValidationError("--n must be >= 1");
  const Model model = resolve_model(cfg);
  maybe_dump(cfg, model);
  const TrajectorySimulator sim(std::make_shared<const Model>(model),
                                SimulationOptions{.dt_base = cfg.dt_base, .threads = cfg.threads});
  const EnsembleResult result = sim.run_ensemble(cfg.n_trajectories, cfg.seed, cfg.threads);
  {
    auto f = open_output(cfg, "trajectories.jsonl");
    for (const Trajectory& tr : result.trajectories) f << to_json(tr, model.labels).dump() << '\n';
  }
  if (cfg.wants("csv")) {
    auto f = open_output(cfg, "occupation.csv");
    write_occupation_csv(f, model.labels, result.stats);
  }
  std::size_t jumps = 0, diagnostics = 0;
  for (const Trajectory& tr : result.trajectories) {
    jumps += tr.jumps.size();
    diagnostics += tr.diagnostics.size();
  }
  out << "simulate " << model.name << ": " << cfg.n_trajectories << " trajectories, " << jumps << " jumps, "
      << diagnostics << " diagnostics, " << format_number(100.0 * result.stats.fraction_within(4.0))
      << "% of cells within 4 sigma of the Born weights\n";
  return kExitOk;
}

int cmd_rates(const RunConfig& cfg, std::ostream& out) {
  const Model model = resolve_model(cfg);
  maybe_dump(cfg, model);
  const RateField field(std::make_shared<const Model>(model));
  std::vector<RatePair> rates;
  for (double t : uniform_grid(model.t_max, cfg.points)) rates.push_back(field.at(t));
  auto f = open_output(cfg, "rates.csv");
  write_rates_csv(f, model.labels, rates);
  out << "rates " << model.name << ": " << rates.size() << " grid points\n";
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  MasterOptions options;
  options.substeps_per_unit = cfg.substeps;
  options.rule = cfg.no_rectify ? RateRule::unrectified : RateRule::rectified;

  if (cfg.fuzz > 0) {
    const double tol = cfg.tolerance > 0 ? cfg.tolerance : 1e-5;
    nlohmann::json entries = nlohmann::json::array();
    bool all = true;
    for (std::size_t i = 0; i < cfg.fuzz; ++i) {
      const Model model = random_model(cfg.seed + i, cfg.fuzz_dim, 10.0);
      const std::vector<double> grid = uniform_grid(model.t_max, cfg.points);
      const EquivarianceReport report = equivariance_report(model, grid, tol, options);
      all = all && report.pass;
      entries.push_back(to_json(report, false));
      out << model.name << ": max deviation " << format_number(report.max_abs_deviation)
          << (report.pass ? " pass\n" : " FAIL\n");
    }
    if (cfg.wants("json")) {
      auto f = open_output(cfg, "equivariance.json");
      f << nlohmann::json{{"pass", all}, {"tolerance", tol}, {"entries", entries}}.dump(2) << '\n';
    }
    return all ? kExitOk : kExitVerification;
  }

  const Model model = resolve_model(cfg);
  maybe_dump(cfg, model);
  const double tol = cfg.tolerance > 0 ? cfg.tolerance : 1e-6;
  const std::vector<double> grid = uniform_grid(model.t_max, cfg.points);
  const EquivarianceReport report = equivariance_report(model, grid, tol, options);
  if (cfg.wants("json")) {
    auto f = open_output(cfg, "equivariance.json");
    f << to_json(report).dump(2) << '\n';
  }
  if (cfg.wants("csv")) {
    auto f = open_output(cfg, "equivariance.csv");
    write_equivariance_csv(f, report);
  }
  out << "verify " << model.name << ": max deviation " << format_number(report.max_abs_deviation) << " (tolerance "
      << format_number(tol) << ") " << (report.pass ? "pass" : "FAIL") << '\n';
  return report.pass ? kExitOk : kExitVerification;
}

void add_scenario_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--scenario", cfg.scenario, "Scenario JSON file");
  cmd->add_option("--builtin", cfg.builtin, "Built-in scenario: rabi, measurement, diagonal");
  cmd->add_option("--omega", cfg.omega, "Rabi angular frequency");
  cmd->add_option("--c", cfg.amplitudes, "Measurement amplitudes (real), comma separated")->delimiter(',');
  cmd->add_option("--g", cfg.coupling, "Measurement coupling energy");
  cmd->add_option("--out", cfg.out_dir, "Output directory");
  cmd->add_option("--format", cfg.formats, "Output formats: csv, json")->delimiter(',');
  cmd->add_option("--dump-scenario", cfg.dump_scenario, "Write the resolved scenario as JSON");
  cmd->add_option("--threads", cfg.threads, "Worker threads (0 = hardware)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Branch-jump simulator: Schrodinger evolution plus stochastic experience-branch jumps", "branchflow"};
  app.require_subcommand(1);

  auto* evolve = app.add_subcommand("evolve", "Born weights of every branch on a uniform grid");
  add_scenario_options(evolve, cfg);
  evolve->add_option("--points", cfg.points, "Grid intervals");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble of jump trajectories");
  add_scenario_options(simulate, cfg);
  simulate->add_option("--n", cfg.n_trajectories, "Number of trajectories");
  simulate->add_option("--seed", cfg.seed, "Random seed");
  simulate->add_option("--dt", cfg.dt_base, "Base time step");

  auto* verify = app.add_subcommand("verify", "Master-equation check of Born-weight preservation");
  add_scenario_options(verify, cfg);
  verify->add_option("--points", cfg.points, "Grid intervals");
  verify->add_option("--tol", cfg.tolerance, "Max absolute deviation allowed (default 1e-6, fuzz 1e-5)");
  verify->add_option("--substeps", cfg.substeps, "RK4 steps per unit time");
  verify->add_flag("--no-rectify", cfg.no_rectify, "Debug: use J/w instead of max(J,0)/w");
  verify->add_option("--fuzz", cfg.fuzz, "Check this many random models instead of one scenario");
  verify->add_option("--dim", cfg.fuzz_dim, "Total dimension bound for --fuzz models");
  verify->add_option("--seed", cfg.seed, "First random-model seed for --fuzz");

  auto* rates = app.add_subcommand("rates", "Probability currents and jump rates on a uniform grid");
  add_scenario_options(rates, cfg);
  rates->add_option("--points", cfg.points, "Grid intervals");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (cfg.points == 0) throw ValidationError("--points must be >= 1");
    if (*evolve) return cmd_evolve(cfg, out);
    if (*simulate) return cmd_simulate(cfg, out);
    if (*verify) return cmd_verify(cfg, out);
    if (*rates) return cmd_rates(cfg, out);
  } catch (const RateCapError& e) {
    err << "simulation error at t = " << format_number(e.time()) << ": " << e.what() << '\n';
    return kExitSimulation;
  } catch (const NumericalError& e) {
    err << "simulation error: " << e.what() << '\n';
    return kExitSimulation;
  } catch (const IntegrationError& e) {
    err << "verification error at t = " << format_number(e.time()) << ": " << e.what() << '\n';
    return kExitVerification;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ValidationError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace branchflow
