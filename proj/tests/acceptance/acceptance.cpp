// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Usage: acceptance [ID ...]   (default: every criterion)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "instances.hpp"
#include "mflq/cli.hpp"
#include "mflq/meanflow.hpp"
#include "mflq/oracle.hpp"
#include "mflq/riccati.hpp"
#include "mflq/simulator.hpp"

using namespace mflq;
using namespace mflq::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// 20 bar-free and 20 mean-field random instances on h = 1e-3.
std::vector<ModelSpec> random_instances(bool mean_field) {
  InstanceGenerator gen(mean_field ? 4242 : 2121);
  std::vector<ModelSpec> out;
  for (int k = 0; k < 20; ++k) out.push_back(gen.next(mean_field, 1000));
  return out;
}

Outcome criterion_O1() {
  const auto t0 = std::chrono::steady_clock::now();
  const CertificationReport report = certify_convention(default_certification_battery());
  const double elapsed = seconds_since(t0);
  std::string detail;
  for (const auto& e : report.entries) {
    detail += fmt("%s=%s(|oracle-value|=%.1e,tol=%.1e) ", e.instance_id.c_str(), e.matched.c_str(),
                  std::abs(e.oracle_cost - e.riccati_value), e.tolerance);
  }
  detail += fmt("runtime=%.1fs", elapsed);
  return {report.passed() && elapsed < 30.0, detail};
}

Outcome criterion_R1() {
  const double p0 = solve_riccati(tanh_model(1000)).P[0](0, 0);
  const double err = std::abs(p0 - std::tanh(1.0));
  auto error_at = [](int steps) {
    return std::abs(solve_riccati(tanh_model(steps)).P[0](0, 0) - std::tanh(1.0));
  };
  const double ratio = error_at(10) / error_at(20);
  return {err <= 1e-8 && ratio >= 12.0 && ratio <= 20.0,
          fmt("|P(0)-tanh(1)|=%.2e (tol 1e-8), order ratio h=0.1->0.05: %.2f (want [12,20])", err, ratio)};
}

Outcome criterion_R2() {
  double worst = 0.0;
  for (const ModelSpec& s : random_instances(false)) {
    const RiccatiSolution sol = solve_riccati(s);
    for (std::size_t i = 0; i < sol.P.size(); ++i) worst = std::max(worst, max_abs(sol.Pi[i] - sol.P[i]));
  }
  return {worst <= 1e-10, fmt("max ||Pi-P||_inf over 20 instances = %.2e (tol 1e-10)", worst)};
}

Outcome criterion_R3() {
  double asym = 0.0, lambda = INFINITY;
  for (bool mf : {false, true}) {
    for (const ModelSpec& s : random_instances(mf)) {
      const RiccatiSolution sol = solve_riccati(s);
      for (std::size_t i = 0; i < sol.P.size(); ++i) {
        asym = std::max({asym, asymmetry(sol.P[i]), asymmetry(sol.Pi[i])});
        lambda = std::min({lambda, min_eigenvalue(sol.P[i]), min_eigenvalue(sol.Pi[i])});
      }
    }
  }
  return {asym <= 1e-10 && lambda >= -1e-8,
          fmt("40 instances: max asymmetry %.2e (tol 1e-10), min eigenvalue %.3e (tol -1e-8)", asym,
              lambda)};
}

// V1 and V2 share one run of the optimal law.
struct TanhRun {
  ModelSpec spec = noisy_tanh_model(1000);
  RiccatiSolution sol;
  ControlLaw law = ControlLaw::open_loop({Vector::Zero(1)});
  PathEnsemble ensemble;
  double elapsed = 0.0;

  TanhRun() {
    const auto t0 = std::chrono::steady_clock::now();
    sol = solve_riccati(spec);
    law = ControlLaw::feedback(feedback_gains(spec, sol));
    ensemble = simulate_paths(spec, law, 10000, 42);
    elapsed = seconds_since(t0);
  }
};

const TanhRun& tanh_run() {
  static const TanhRun run;
  return run;
}

Outcome criterion_V1() {
  const auto t0 = std::chrono::steady_clock::now();
  const TanhRun& r = tanh_run();
  const CostEstimate c = estimate_cost(r.spec, r.ensemble);
  const double value = optimal_value(r.sol, r.spec.x0);
  const double elapsed = seconds_since(t0) + r.elapsed;
  const double gap = std::abs(c.mean - value);

  // Reported only: without noise every path is identical, the standard error
  // is zero and the gap is pure Euler bias.
  const ModelSpec quiet = tanh_model(1000);
  const RiccatiSolution qsol = solve_riccati(quiet);
  const CostEstimate qc = estimate_cost(
      quiet, simulate_paths(quiet, ControlLaw::feedback(feedback_gains(quiet, qsol)), 100, 42));
  return {gap <= 3.0 * c.std_error && elapsed < 60.0,
          fmt("MC %.6f vs <Pi(0)x0,x0> %.6f: |diff|=%.2e, 3*stderr=%.2e, runtime %.1fs "
              "[noise-free variant: |diff|=%.2e, stderr=%.1e]",
              c.mean, value, gap, 3.0 * c.std_error, elapsed,
              std::abs(qc.mean - optimal_value(qsol, quiet.x0)), qc.std_error)};
}

Outcome criterion_V2() {
  const TanhRun& r = tanh_run();
  const StationarityReport opt = stationarity_residual(r.spec, r.sol, r.ensemble);
  const std::vector<Vector> dir(r.spec.n_steps + 1, Vector::Ones(1));
  const PathEnsemble pert = simulate_paths(r.spec, ControlLaw::perturbed(r.law, dir, 0.1), 10000, 42);
  const StationarityReport bad = stationarity_residual(r.spec, r.sol, pert);
  return {opt.relative() <= 1e-2 && bad.rms > 5.0 * opt.rms,
          fmt("relative residual %.2e (tol 1e-2); eps=0.1 perturbation: rms %.3e vs 5x optimal %.3e",
              opt.relative(), bad.rms, 5.0 * opt.rms)};
}

Outcome criterion_V3() {
  const TanhRun& r = tanh_run();
  bool pass = true;
  std::string detail;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto v = smooth_direction(r.spec, 42, k);
    const DirectionalDerivative dd =
        directional_derivative(r.spec, r.law, v, {0.2, 0.1, 0.05}, 10000, 42);
    const bool ok = std::abs(dd.linear) <= 3.0 * dd.linear_stderr && dd.quadratic > 0.0;
    pass = pass && ok;
    detail += fmt("v%d: lin %.1e (3se %.1e) quad %.3f; ", static_cast<int>(k), dd.linear,
                  3.0 * dd.linear_stderr, dd.quadratic);
  }
  return {pass, detail};
}

Outcome criterion_V4() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelSpec s = zero_model(1, 1, 1.0, 1000, 1);
  s.x0 = Vector::Ones(1);
  s.E[0] = scalar(1.0);
  const std::size_t M = 100000;
  const PathEnsemble e = simulate_paths(
      s, ControlLaw::open_loop(std::vector<Vector>(1001, Vector::Zero(1))), M, 42);
  double mean = 0.0, ss = 0.0;
  for (std::size_t p = 0; p < M; ++p) mean += e.state(p, e.n_steps)(0);
  mean /= static_cast<double>(M);
  for (std::size_t p = 0; p < M; ++p) {
    const double d = e.state(p, e.n_steps)(0) - mean;
    ss += d * d;
  }
  const double se = std::sqrt(ss / static_cast<double>(M - 1) / static_cast<double>(M));
  const double elapsed = seconds_since(t0);
  return {std::abs(mean - 1.0) <= 3.0 * se && elapsed < 60.0,
          fmt("mean X(T) %.5f vs x0 1: |diff|=%.2e, 3*stderr=%.2e, runtime %.1fs", mean,
              std::abs(mean - 1.0), 3.0 * se, elapsed)};
}

Outcome criterion_M1() {
  const ModelSpec s = scalar_mixed_model(1.0, 1000);
  const ControlLaw law = ControlLaw::feedback(feedback_gains(s, solve_riccati(s)));
  const std::size_t M = 10000;
  const PathEnsemble e = simulate_paths(s, law, M, 42);
  const MeanTrajectory ode = propagate_mean(s, law);
  double worst = 0.0;  // max |ensemble - ode| / stderr
  std::size_t worst_node = 0;
  for (std::size_t i = 1; i <= e.n_steps; ++i) {
    for (Eigen::Index j = 0; j < e.n; ++j) {
      double ss = 0.0;
      for (std::size_t p = 0; p < M; ++p) {
        const double d = e.state(p, i)(j) - e.mean_x[i](j);
        ss += d * d;
      }
      const double se = std::sqrt(ss / static_cast<double>(M - 1) / static_cast<double>(M));
      const double z = std::abs(e.mean_x[i](j) - ode.ex[i](j)) / se;
      if (z > worst) {
        worst = z;
        worst_node = i;
      }
    }
  }
  const bool start = (e.mean_x[0] - ode.ex[0]).norm() == 0.0;
  return {start && worst <= 3.0,
          fmt("max |ensemble mean - ODE| / stderr over %zu nodes = %.2f at node %zu (tol 3)",
              e.n_steps + 1, worst, worst_node)};
}

Outcome criterion_D1() {
  const ModelSpec s = scalar_mixed_model(1.0, 1000);
  const ControlLaw law = ControlLaw::feedback(feedback_gains(s, solve_riccati(s)));
  SimulationOptions one{1, MeanClosure::automatic}, four{4, MeanClosure::automatic};
  const CostEstimate a = estimate_cost(s, simulate_paths(s, law, 10000, 7, one));
  const CostEstimate b = estimate_cost(s, simulate_paths(s, law, 10000, 7, four));
  return {a.mean == b.mean && a.std_error == b.std_error,
          fmt("1 worker %.17g +- %.17g; 4 workers %.17g +- %.17g", a.mean, a.std_error, b.mean,
              b.std_error)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"O1", criterion_O1}, {"R1", criterion_R1}, {"R2", criterion_R2}, {"R3", criterion_R3},
      {"V1", criterion_V1}, {"V2", criterion_V2}, {"V3", criterion_V3}, {"V4", criterion_V4},
      {"M1", criterion_M1}, {"D1", criterion_D1}};
  std::set<std::string> only(argv + 1, argv + argc);
  bool all = true;
  for (const auto& [id, check] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s %s  %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
