#include "mflq/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "mflq/control_law.hpp"
#include "mflq/meanflow.hpp"
#include "mflq/model_io.hpp"
#include "mflq/oracle.hpp"
#include "mflq/philox.hpp"
#include "mflq/riccati.hpp"
#include "mflq/simulator.hpp"

namespace mflq {

namespace {

using nlohmann::json;

class CheckList {
 public:
  void add(std::string name, double value, double tolerance, bool passed) {
    checks_.push_back({{"name", std::move(name)},
                       {"value", value},
                       {"tolerance", tolerance},
                       {"passed", passed}});
    all_ = all_ && passed;
  }
  bool passed() const { return all_; }
  const json& items() const { return checks_; }

 private:
  json checks_ = json::array();
  bool all_ = true;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_json(const std::filesystem::path& path, json j, bool timestamp) {
  if (timestamp) j["timestamp"] = utc_timestamp();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

ModelSpec load_checked(const RunConfig& cfg, std::ostream& log) {
  std::vector<std::string> warnings;
  ModelSpec spec = load_model(cfg.model_path, &warnings);
  for (const auto& w : warnings) log << "warning: " << w << '\n';
  if (cfg.h) {
    const double steps = spec.T / *cfg.h;
    const int rounded = static_cast<int>(std::lround(steps));
    if (rounded < 1 || std::abs(steps - rounded) > 1e-9 * steps) {
      throw ModelError("--h must divide the horizon T into a whole number of steps");
    }
    regrid(spec, rounded);
  }
  return spec;
}

std::string validation_failure(const ValidationReport& report) {
  return report.valid() ? std::string{} : report.summary();
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const ModelSpec spec = load_checked(cfg, log);
  if (const auto msg = validation_failure(validate_model(spec)); !msg.empty()) {
    log << msg << '\n';
    return exit_code::invalid_input;
  }
  const RiccatiSolution sol = solve_riccati(spec);
  const FeedbackLaw gains = feedback_gains(spec, sol);
  auto csv = open_csv(cfg.out_dir / "riccati.csv");
  write_riccati_csv(csv, spec, sol, gains);
  const double value = optimal_value(sol, spec.x0);
  write_json(cfg.out_dir / "value.json",
             {{"value", value}, {"h", spec.h()}, {"n_steps", spec.n_steps}}, cfg.timestamp);
  log << "value " << std::setprecision(17) << value << '\n';
  return exit_code::ok;
}

struct OptimalRun {
  RiccatiSolution sol;
  ControlLaw law;
  PathEnsemble ensemble;
  CostEstimate cost;
  StationarityReport stationarity;
};

OptimalRun simulate_optimal(const ModelSpec& spec, const RunConfig& cfg) {
  RiccatiSolution sol = solve_riccati(spec);
  ControlLaw law = ControlLaw::feedback(feedback_gains(spec, sol));
  SimulationOptions opts;
  opts.workers = cfg.workers;
  PathEnsemble ens = simulate_paths(spec, law, cfg.M, cfg.seed, opts);
  const CostEstimate cost = estimate_cost(spec, ens);
  const StationarityReport st = stationarity_residual(spec, sol, ens);
  return {std::move(sol), std::move(law), std::move(ens), cost, st};
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const ModelSpec spec = load_checked(cfg, log);
  if (const auto msg = validation_failure(validate_model(spec)); !msg.empty()) {
    log << msg << '\n';
    return exit_code::invalid_input;
  }
  const OptimalRun r = simulate_optimal(spec, cfg);
  write_json(cfg.out_dir / "summary.json",
             {{"cost_mean", r.cost.mean},
              {"cost_stderr", r.cost.std_error},
              {"value", optimal_value(r.sol, spec.x0)},
              {"stationarity_residual", r.stationarity.relative()},
              {"M", cfg.M},
              {"h", spec.h()},
              {"seed", cfg.seed}},
             cfg.timestamp);
  {
    auto csv = open_csv(cfg.out_dir / "mean.csv");
    write_mean_csv(csv, MeanTrajectory{r.ensemble.mean_x, r.ensemble.mean_u}, spec.h());
  }
  if (cfg.save_paths > 0) {
    auto csv = open_csv(cfg.out_dir / "paths.csv");
    write_paths_csv(csv, r.ensemble, cfg.save_paths);
  }
  log << "cost " << std::setprecision(10) << r.cost.mean << " +- " << r.cost.std_error << '\n';
  return exit_code::ok;
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  const ModelSpec spec = load_checked(cfg, log);
  if (const auto msg = validation_failure(validate_model(spec)); !msg.empty()) {
    log << msg << '\n';
    return exit_code::invalid_input;
  }
  // Euler bias is first order: a rerun on the grid with every other node
  // estimates it, doubled to cover higher-order terms.
  const bool can_coarsen = spec.n_steps % 2 == 0 && spec.n_steps >= 4;
  const std::optional<ModelSpec> coarse =
      can_coarsen ? std::optional<ModelSpec>(coarsen(spec)) : std::nullopt;

  CheckList checks;
  const OptimalRun fine = simulate_optimal(spec, cfg);
  const double value = optimal_value(fine.sol, spec.x0);
  double value_bias = 0.0;
  if (coarse) value_bias = 2.0 * std::abs(fine.cost.mean - simulate_optimal(*coarse, cfg).cost.mean);
  checks.add("value", std::abs(fine.cost.mean - value), 3.0 * fine.cost.std_error + value_bias,
             std::abs(fine.cost.mean - value) <= 3.0 * fine.cost.std_error + value_bias);

  const double rel = fine.stationarity.relative();
  checks.add("stationarity", rel, 1e-2, rel <= 1e-2);

  SimulationOptions opts;
  opts.workers = cfg.workers;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto v = smooth_direction(spec, cfg.seed, k);
    const DirectionalDerivative dd =
        directional_derivative(spec, fine.law, v, cfg.eps, cfg.M, cfg.seed, opts);
    double bias = 0.0;
    if (coarse) {
      const ControlLaw coarse_law =
          ControlLaw::feedback(feedback_gains(*coarse, solve_riccati(*coarse)));
      bias = 2.0 * std::abs(dd.linear - directional_derivative(*coarse, coarse_law,
                                                         smooth_direction(*coarse, cfg.seed, k),
                                                         cfg.eps, cfg.M, cfg.seed, opts)
                                      .linear);
    }
    const std::string tag = "direction_" + std::to_string(k);
    const double tol = 3.0 * dd.linear_stderr + bias;
    checks.add(tag + "_linear", std::abs(dd.linear), tol, std::abs(dd.linear) <= tol);
    checks.add(tag + "_quadratic", dd.quadratic, 0.0, dd.quadratic > 0.0);
  }

  const json out{{"checks", checks.items()},
                 {"passed", checks.passed()},
                 {"M", cfg.M},
                 {"h", spec.h()},
                 {"seed", cfg.seed},
                 {"eps", cfg.eps}};
  write_json(cfg.out_dir / "verify.json", out, cfg.timestamp);
  for (const auto& c : checks.items()) {
    log << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << " "
        << c["value"].get<double>() << " (tol " << c["tolerance"].get<double>() << ")\n";
  }
  return checks.passed() ? exit_code::ok : exit_code::check_failed;
}

int cmd_certify(const RunConfig& cfg, std::ostream& log) {
  auto battery = default_certification_battery();
  if (!cfg.model_path.empty()) {
    const ModelSpec spec = load_checked(cfg, log);
    if (const auto msg = validation_failure(validate_model(spec)); !msg.empty()) {
      log << msg << '\n';
      return exit_code::invalid_input;
    }
    std::vector<int> depths;
    for (int k = std::max(1, cfg.steps - 2); k <= cfg.steps; ++k) depths.push_back(k);
    battery.push_back({cfg.model_path.stem().string(), spec, depths});
  }
  const CertificationReport report = certify_convention(battery);
  write_json(cfg.out_dir / "certify.json", to_json(report), cfg.timestamp);
  for (const auto& e : report.entries) {
    log << std::setw(16) << std::left << e.instance_id << " oracle " << std::setprecision(8)
        << e.oracle_cost << " normalized " << e.riccati_value << " literal " << e.literal_value
        << " -> " << e.matched << '\n';
  }
  return report.passed() ? exit_code::ok : exit_code::check_failed;
}

void check_config(const RunConfig& cfg) {
  if (cfg.command != Command::certify && cfg.model_path.empty()) {
    throw ModelError("--model is required");
  }
  if (cfg.M < 1) throw ModelError("--paths must be positive");
  if (cfg.steps < 1) throw ModelError("--steps must be positive");
  if (cfg.h && !(*cfg.h > 0.0)) throw ModelError("--h must be positive");
  if (cfg.eps.empty()) throw ModelError("--eps needs at least one value");
  for (double e : cfg.eps) {
    if (!(e > 0.0)) throw ModelError("--eps values must be positive");
  }
  if (cfg.workers < 1) throw ModelError("--workers must be positive");
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  if (name == "solve") return Command::solve;
  if (name == "simulate") return Command::simulate;
  if (name == "verify") return Command::verify;
  if (name == "certify") return Command::certify;
  return std::nullopt;
}

ModelSpec coarsen(const ModelSpec& spec) {
  if (spec.n_steps % 2 != 0) throw ModelError("coarsening needs an even number of steps");
  ModelSpec c = spec;
  c.n_steps = spec.n_steps / 2;
  auto thin = [](CoefficientTrack& t) {
    if (t.is_constant()) return;
    std::vector<Matrix> kept;
    for (std::size_t i = 0; i < t.length(); i += 2) kept.push_back(t.values()[i]);
    t = CoefficientTrack(std::move(kept));
  };
  for (auto* t : {&c.A, &c.Abar, &c.C, &c.Cbar, &c.Q, &c.Qbar, &c.B, &c.Bbar, &c.D, &c.Dbar, &c.N,
                  &c.Nbar}) {
    thin(*t);
  }
  for (auto* v : {&c.E, &c.Ebar, &c.F, &c.Fbar}) {
    for (auto& t : *v) thin(t);
  }
  return c;
}

std::vector<Vector> smooth_direction(const ModelSpec& spec, std::uint64_t seed, std::uint64_t index) {
  const CounterRng rng(seed ^ 0x5DEECE66DULL);
  std::vector<Vector> a(3, Vector(spec.m));
  for (std::uint32_t j = 0; j < 3; ++j) {
    for (int r = 0; r < spec.m; ++r) a[j](r) = rng.normal(index, j, static_cast<std::uint32_t>(r));
  }
  std::vector<Vector> out;
  for (int i = 0; i <= spec.n_steps; ++i) {
    const double t = spec.time(static_cast<std::size_t>(i)) / spec.T;
    Vector v = Vector::Zero(spec.m);
    for (int j = 0; j < 3; ++j) v += std::cos(j * std::numbers::pi * t) * a[static_cast<std::size_t>(j)];
    out.push_back(std::move(v));
  }
  return out;
}

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    check_config(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    switch (cfg.command) {
      case Command::solve: return cmd_solve(cfg, log);
      case Command::simulate: return cmd_simulate(cfg, log);
      case Command::verify: return cmd_verify(cfg, log);
      case Command::certify: return cmd_certify(cfg, log);
    }
  } catch (const ModelError& e) {
    log << "invalid input: " << e.what() << '\n';
    return exit_code::invalid_input;
  } catch (const nlohmann::json::exception& e) {
    log << "invalid input: " << e.what() << '\n';
    return exit_code::invalid_input;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << '\n';
    return exit_code::numerical_failure;
  } catch (const OracleError& e) {
    log << "oracle: " << e.what() << '\n';
    return exit_code::numerical_failure;
  }
  return exit_code::check_failed;
}

}  // namespace mflq
