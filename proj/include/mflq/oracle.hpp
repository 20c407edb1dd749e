#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mflq/model.hpp"
#include "mflq/riccati.hpp"

namespace mflq {

class OracleError : public std::runtime_error {
 public:
  enum class Kind { tree_too_large, jump_probability };
  OracleError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// One branch of the per-step noise: binary Brownian increment and a 0/1
/// jump indicator per atom.
struct NoiseOutcome {
  double dw = 0.0;
  std::vector<int> jumps;
  double prob = 1.0;
};

struct StepCoefficients {
  Matrix A, Abar, C, Cbar, Q, Qbar;
  Matrix B, Bbar, D, Dbar;
  Matrix N, Nbar;
  std::vector<Matrix> E, Ebar, F, Fbar;
};

/// Scenario-tree discretization of the state equation and cost. Node j of
/// slice s has global index slice_offset[s] + j and children j*b + o in
/// slice s+1, where b is the branching factor and o the outcome.
struct DiscreteLQ {
  int steps = 0;
  double h = 0.0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Vector x0;
  std::vector<double> nu;
  std::vector<NoiseOutcome> outcomes;
  std::vector<StepCoefficients> coefficients;  // one snapshot per step
  Matrix G, Gbar;

  std::vector<std::size_t> slice_offset;  // steps+2 entries; last = node count
  std::vector<double> prob;               // absolute probability per node
  std::vector<std::size_t> parent;        // per node; root points to itself

  std::size_t branching() const noexcept { return outcomes.size(); }
  std::size_t node_count() const noexcept { return slice_offset.back(); }
  std::size_t slice_size(int s) const { return slice_offset[s + 1] - slice_offset[s]; }
  /// Nodes that carry a control (all slices before the last).
  std::size_t control_nodes() const { return slice_offset[steps]; }
};

inline constexpr double kOracleBudget = 4e7;  // doubles held by the affine state maps

/// Builds the tree. The Brownian-free, jump-free case collapses to a single
/// branch. Throws OracleError for nu_k h >= 1 or an oversized tree.
DiscreteLQ build_discrete_problem(const ModelSpec& spec, int steps);

/// J(U) = U'HU + 2g'U + c over the stacked node controls.
struct QuadraticCost {
  Matrix H;
  Vector g;
  double c = 0.0;

  double operator()(const Vector& u) const { return u.dot(H * u) + 2.0 * g.dot(u) + c; }
  Vector gradient(const Vector& u) const { return 2.0 * (H * u + g); }
};

QuadraticCost assemble_discrete_cost(const DiscreteLQ& dlq);

/// Cost of a stacked control vector by forward evaluation over the tree.
double evaluate_discrete_cost(const DiscreteLQ& dlq, const Vector& controls);

struct DiscreteSolution {
  Vector controls;  // m entries per control node, global node order
  double cost = 0.0;
  double gradient_inf_norm = 0.0;

  Vector node_control(std::size_t node, Eigen::Index m) const {
    return controls.segment(static_cast<Eigen::Index>(node) * m, m);
  }
};

/// Minimizes the convex quadratic exactly. Throws
/// NumericalError::singular_hessian when the Hessian is not positive definite.
DiscreteSolution solve_discrete_exact(const DiscreteLQ& dlq);

struct CertificationInstance {
  std::string id;
  ModelSpec spec;
  std::vector<int> steps;  // tree depths used for extrapolation
};

struct CertificationEntry {
  std::string instance_id;
  std::vector<int> steps;
  std::vector<double> oracle_costs;  // per depth
  double oracle_cost = 0.0;          // extrapolated to h -> 0
  double oracle_control = 0.0;       // first root-control component, extrapolated
  double riccati_value = 0.0;
  double literal_value = 0.0;
  double riccati_control = 0.0;
  double literal_control = 0.0;
  double tolerance = 0.0;
  bool discriminating = true;
  std::string matched;  // normalized | literal | both | none
};

struct CertificationReport {
  std::vector<CertificationEntry> entries;
  bool passed() const;
};

/// Five small instances: bar-free, zero-cost, mean-field-only, jump-only, mixed.
std::vector<CertificationInstance> default_certification_battery();

/// Compares extrapolated oracle optima with the normalized and literal
/// Riccati conventions.
CertificationReport certify_convention(const std::vector<CertificationInstance>& battery);

nlohmann::json to_json(const CertificationReport& report);

}  // namespace mflq
