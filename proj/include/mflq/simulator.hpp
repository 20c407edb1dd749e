#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mflq/control_law.hpp"
#include "mflq/model.hpp"
#include "mflq/riccati.hpp"

namespace mflq {

/// How the dynamics see E[X] and E[u].
enum class MeanClosure {
  automatic,  // exact for feedback laws, particle otherwise
  exact,      // closed mean ODE from propagate_mean
  particle,   // synchronous cross-particle averages at each step
};

struct SimulationOptions {
  unsigned workers = 1;
  MeanClosure closure = MeanClosure::automatic;
};

struct JumpEvent {
  std::uint32_t step;  // jump in (t_step, t_step+1]
  std::uint32_t atom;
};

/// M particles advanced in lockstep on the model grid.
struct PathEnsemble {
  std::size_t M = 0;
  std::size_t n_steps = 0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double h = 0.0;
  std::uint64_t seed = 0;
  MeanClosure closure = MeanClosure::exact;  // resolved, never automatic

  std::vector<double> X;  // M x (n_steps+1) x n, path-major
  std::vector<double> U;  // M x n_steps x m
  std::vector<std::vector<JumpEvent>> jump_log;
  /// Per-path running cost h*sum(<QX,X> + <Nu,u>) plus terminal <GX_T,X_T>.
  std::vector<double> costs;

  std::vector<Vector> mean_x;  // ensemble average of X at each node
  std::vector<Vector> mean_u;  // ensemble average of u at each interval
  std::vector<Vector> closure_x;  // E[X] used by the dynamics
  std::vector<Vector> closure_u;  // E[u] used by the dynamics

  Eigen::Map<const Vector> state(std::size_t path, std::size_t i) const {
    return Eigen::Map<const Vector>(&X[(path * (n_steps + 1) + i) * static_cast<std::size_t>(n)], n);
  }
  Eigen::Map<const Vector> control(std::size_t path, std::size_t i) const {
    return Eigen::Map<const Vector>(&U[(path * n_steps + i) * static_cast<std::size_t>(m)], m);
  }
};

/// Euler-Maruyama with compensated jumps. Deterministic in (seed, M, grid)
/// for any worker count. Throws NumericalError::non_finite_state.
PathEnsemble simulate_paths(const ModelSpec& spec, const ControlLaw& law, std::size_t M,
                            std::uint64_t seed, const SimulationOptions& options = {});

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Left-endpoint quadrature of the cost, with the mean-field weights applied
/// to ensemble averages. The standard error uses each path's influence on the
/// estimate (see path_influence).
CostEstimate estimate_cost(const ModelSpec& spec, const PathEnsemble& ensemble);

/// Per-path first-order contribution to the cost estimate: the path's own
/// cost plus the linearized mean-field terms. The estimate's sampling error is
/// the mean of these values' fluctuation.
std::vector<double> path_influence(const ModelSpec& spec, const PathEnsemble& ensemble);

struct AdjointTriple {
  std::vector<Vector> p;               // nodes 0..n_steps
  std::vector<Vector> q;               // nodes 0..n_steps-1
  std::vector<std::vector<Vector>> r;  // [atom][node], nodes 0..n_steps-1
};

/// Adjoint processes along one path from the decoupling relations, with the
/// ensemble average standing in for E[.]. Throws std::out_of_range.
AdjointTriple reconstruct_adjoint(const ModelSpec& spec, const RiccatiSolution& sol,
                                  const PathEnsemble& ensemble, std::size_t path_index);

struct StationarityReport {
  double rms = 0.0;            // RMS over paths and steps of the stationarity residual
  double reference_rms = 0.0;  // RMS of 2Nu over the same set
  double relative() const { return reference_rms > 0.0 ? rms / reference_rms : rms; }
};

StationarityReport stationarity_residual(const ModelSpec& spec, const RiccatiSolution& sol,
                                         const PathEnsemble& ensemble);

struct DirectionalDerivative {
  std::vector<double> eps;           // as requested
  std::vector<double> costs;         // J(base + eps v)
  double base_cost = 0.0;            // J(base)
  std::vector<double> finite_differences;  // (J(base + eps v) - J(base)) / eps
  // Least-squares parabola through (0, J(base)) and (eps, J(base + eps v)).
  double constant = 0.0;
  double linear = 0.0;
  double quadratic = 0.0;
  double linear_stderr = 0.0;
  double quadratic_stderr = 0.0;
};

/// Common-random-number finite differences of the cost along `direction`.
/// Every evaluation uses the mean closure resolved from `base`.
DirectionalDerivative directional_derivative(const ModelSpec& spec, const ControlLaw& base,
                                             const std::vector<Vector>& direction,
                                             const std::vector<double>& eps_list, std::size_t M,
                                             std::uint64_t seed,
                                             const SimulationOptions& options = {});

/// Columns path, t, X_0.., u_0.. (u is blank at the terminal node).
void write_paths_csv(std::ostream& out, const PathEnsemble& ensemble, std::size_t max_paths);

}  // namespace mflq
