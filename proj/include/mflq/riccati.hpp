#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "mflq/model.hpp"

namespace mflq {

/// Factor convention for the Riccati pair.
///
/// `normalized` is the self-consistent scaling for a cost without a 1/2:
/// the adjoint is p = 2[P(X - E X) + Pi E X], both Riccati equations carry
/// +Q (resp. +(Q+Qbar)), Sigma1 = (N+Nbar) + ..., and the value is
/// <Pi(0)x, x>. `literal` mixes in the factors of a 1/2-weighted cost (+2Q,
/// +2(Q+Qbar), Sigma = 2(N+Nbar) + ... for the mean equation, value
/// 1/2 <Pi(0)x, x>) while keeping Sigma0 = N + ...; it is kept only as the
/// alternative the oracle must reject.
enum class Convention { normalized, literal };

struct RiccatiSolution {
  std::vector<Matrix> P;   // fluctuation Riccati, P[n_steps] = G
  std::vector<Matrix> Pi;  // mean Riccati, Pi[n_steps] = G + Gbar
  double h = 0.0;
  Convention convention = Convention::normalized;
};

/// Gains of u = K0 (X - E[X]) + K1 E[X]; the leading minus signs are folded in.
struct FeedbackLaw {
  std::vector<Matrix> K0;
  std::vector<Matrix> K1;
};

/// N + D'PD + sum_k nu_k F_k' P F_k at grid node i.
Matrix assemble_sigma0(const ModelSpec& spec, std::size_t i, const Matrix& P);

/// (N+Nbar) + (D+Dbar)'P(D+Dbar) + sum_k nu_k (F+Fbar)_k' P (F+Fbar)_k.
/// Under the literal convention the leading term is 2(N+Nbar).
Matrix assemble_sigma1(const ModelSpec& spec, std::size_t i, const Matrix& P,
                       Convention convention = Convention::normalized);

/// -dP/dt at node i. Throws NumericalError::singular_sigma when Sigma0 is not
/// uniformly positive.
Matrix riccati_rhs_P(const ModelSpec& spec, std::size_t i, const Matrix& P,
                     Convention convention = Convention::normalized);

/// -dPi/dt at node i, given the fluctuation solution P at the same time.
Matrix riccati_rhs_Pi(const ModelSpec& spec, std::size_t i, const Matrix& P, const Matrix& Pi,
                      Convention convention = Convention::normalized);

/// Backward RK4 sweep for (P, Pi) on the model grid, symmetrizing after every
/// step. Coefficients on [t_i, t_{i+1}) are the samples at node i.
/// Throws NumericalError::blow_up if an entry exceeds kBlowUpThreshold.
RiccatiSolution solve_riccati(const ModelSpec& spec,
                              Convention convention = Convention::normalized);

/// K0, K1 at every grid node 0..n_steps.
FeedbackLaw feedback_gains(const ModelSpec& spec, const RiccatiSolution& sol);

/// Minimal cost for initial state x0.
double optimal_value(const RiccatiSolution& sol, const Vector& x0);

inline constexpr double kBlowUpThreshold = 1e12;

/// One row per node: t, P_i_j..., Pi_i_j..., K0_i_j..., K1_i_j...
void write_riccati_csv(std::ostream& out, const ModelSpec& spec, const RiccatiSolution& sol,
                       const FeedbackLaw& law);

}  // namespace mflq
