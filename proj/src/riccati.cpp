#include "mflq/riccati.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace mflq {

namespace {

double cost_factor(Convention c) { return c == Convention::literal ? 2.0 : 1.0; }

std::ptrdiff_t idx(std::size_t i) { return static_cast<std::ptrdiff_t>(i); }

// Cross term P B + C'P D + sum_k nu_k E_k' P F_k (n x m).
Matrix fluctuation_cross(const ModelSpec& s, std::size_t i, const Matrix& P) {
  Matrix S = P * s.B.at(i) + s.C.at(i).transpose() * P * s.D.at(i);
  for (std::size_t k = 0; k < s.atoms(); ++k) {
    S.noalias() += s.nu(k) * s.E[k].at(i).transpose() * P * s.F[k].at(i);
  }
  return S;
}

// Pi (B+Bbar) + (C+Cbar)'P(D+Dbar) + sum_k nu_k (E+Ebar)_k' P (F+Fbar)_k.
Matrix mean_cross(const ModelSpec& s, std::size_t i, const Matrix& P, const Matrix& Pi) {
  const Matrix Cs = s.C.at(i) + s.Cbar.at(i);
  const Matrix Ds = s.D.at(i) + s.Dbar.at(i);
  Matrix S = Pi * (s.B.at(i) + s.Bbar.at(i)) + Cs.transpose() * P * Ds;
  for (std::size_t k = 0; k < s.atoms(); ++k) {
    const Matrix Es = s.E[k].at(i) + s.Ebar[k].at(i);
    const Matrix Fs = s.F[k].at(i) + s.Fbar[k].at(i);
    S.noalias() += s.nu(k) * Es.transpose() * P * Fs;
  }
  return S;
}

void check_blow_up(const Matrix& M, std::size_t i, const char* name) {
  const bool finite = M.allFinite();
  if (!finite || M.cwiseAbs().maxCoeff() > kBlowUpThreshold) {
    std::ostringstream os;
    os << "Riccati solution " << name << " escapes at grid index " << i;
    throw NumericalError(NumericalError::Kind::blow_up, os.str(), idx(i));
  }
}

}  // namespace

Matrix assemble_sigma0(const ModelSpec& s, std::size_t i, const Matrix& P) {
  const Matrix& D = s.D.at(i);
  Matrix sigma = s.N.at(i) + D.transpose() * P * D;
  for (std::size_t k = 0; k < s.atoms(); ++k) {
    const Matrix& F = s.F[k].at(i);
    sigma.noalias() += s.nu(k) * F.transpose() * P * F;
  }
  return symmetrized(sigma);
}

Matrix assemble_sigma1(const ModelSpec& s, std::size_t i, const Matrix& P, Convention c) {
  const Matrix Ds = s.D.at(i) + s.Dbar.at(i);
  Matrix sigma = cost_factor(c) * (s.N.at(i) + s.Nbar.at(i)) + Ds.transpose() * P * Ds;
  for (std::size_t k = 0; k < s.atoms(); ++k) {
    const Matrix Fs = s.F[k].at(i) + s.Fbar[k].at(i);
    sigma.noalias() += s.nu(k) * Fs.transpose() * P * Fs;
  }
  return symmetrized(sigma);
}

Matrix riccati_rhs_P(const ModelSpec& s, std::size_t i, const Matrix& P, Convention c) {
  const Matrix& A = s.A.at(i);
  const Matrix& C = s.C.at(i);
  Matrix lin = P * A + A.transpose() * P + C.transpose() * P * C + cost_factor(c) * s.Q.at(i);
  for (std::size_t k = 0; k < s.atoms(); ++k) {
    const Matrix& E = s.E[k].at(i);
    lin.noalias() += s.nu(k) * E.transpose() * P * E;
  }
  const Matrix S = fluctuation_cross(s, i, P);
  const SpdSolver sigma(assemble_sigma0(s, i, P), kSigmaTolerance, idx(i));
  return symmetrized(lin - S * sigma.solve(S.transpose()));
}

Matrix riccati_rhs_Pi(const ModelSpec& s, std::size_t i, const Matrix& P, const Matrix& Pi,
                      Convention c) {
  const Matrix As = s.A.at(i) + s.Abar.at(i);
  const Matrix Cs = s.C.at(i) + s.Cbar.at(i);
  Matrix lin = Pi * As + As.transpose() * Pi + Cs.transpose() * P * Cs +
               cost_factor(c) * (s.Q.at(i) + s.Qbar.at(i));
  for (std::size_t k = 0; k < s.atoms(); ++k) {
    const Matrix Es = s.E[k].at(i) + s.Ebar[k].at(i);
    lin.noalias() += s.nu(k) * Es.transpose() * P * Es;
  }
  const Matrix S = mean_cross(s, i, P, Pi);
  const SpdSolver sigma(assemble_sigma1(s, i, P, c), kSigmaTolerance, idx(i));
  return symmetrized(lin - S * sigma.solve(S.transpose()));
}

RiccatiSolution solve_riccati(const ModelSpec& s, Convention c) {
  const auto steps = static_cast<std::size_t>(s.n_steps);
  const double h = s.h();
  RiccatiSolution sol;
  sol.h = h;
  sol.convention = c;
  sol.P.resize(steps + 1);
  sol.Pi.resize(steps + 1);
  sol.P[steps] = symmetrized(s.G);
  sol.Pi[steps] = symmetrized(s.G + s.Gbar);

  // The pair is integrated jointly so the Pi stages see P at the same stage
  // times. P's update never reads Pi.
  for (std::size_t step = steps; step-- > 0;) {
    const Matrix& P = sol.P[step + 1];
    const Matrix& Pi = sol.Pi[step + 1];
    // Backward in time: d/ds of the state at s = T - t equals +rhs.
    const Matrix k1 = riccati_rhs_P(s, step, P, c);
    const Matrix l1 = riccati_rhs_Pi(s, step, P, Pi, c);
    const Matrix P2 = P + 0.5 * h * k1, Pi2 = Pi + 0.5 * h * l1;
    const Matrix k2 = riccati_rhs_P(s, step, P2, c);
    const Matrix l2 = riccati_rhs_Pi(s, step, P2, Pi2, c);
    const Matrix P3 = P + 0.5 * h * k2, Pi3 = Pi + 0.5 * h * l2;
    const Matrix k3 = riccati_rhs_P(s, step, P3, c);
    const Matrix l3 = riccati_rhs_Pi(s, step, P3, Pi3, c);
    const Matrix P4 = P + h * k3, Pi4 = Pi + h * l3;
    const Matrix k4 = riccati_rhs_P(s, step, P4, c);
    const Matrix l4 = riccati_rhs_Pi(s, step, P4, Pi4, c);
    sol.P[step] = symmetrized(P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    sol.Pi[step] = symmetrized(Pi + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4));
    check_blow_up(sol.P[step], step, "P");
    check_blow_up(sol.Pi[step], step, "Pi");
  }
  return sol;
}

FeedbackLaw feedback_gains(const ModelSpec& s, const RiccatiSolution& sol) {
  const auto nodes = sol.P.size();
  FeedbackLaw law;
  law.K0.resize(nodes);
  law.K1.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const Matrix& P = sol.P[i];
    const SpdSolver sigma0(assemble_sigma0(s, i, P), kSigmaTolerance, idx(i));
    law.K0[i] = -sigma0.solve(fluctuation_cross(s, i, P).transpose());
    const SpdSolver sigma1(assemble_sigma1(s, i, P, sol.convention), kSigmaTolerance, idx(i));
    law.K1[i] = -sigma1.solve(mean_cross(s, i, P, sol.Pi[i]).transpose());
  }
  return law;
}

double optimal_value(const RiccatiSolution& sol, const Vector& x0) {
  const double quad = x0.dot(sol.Pi.front() * x0);
  return sol.convention == Convention::literal ? 0.5 * quad : quad;
}

void write_riccati_csv(std::ostream& out, const ModelSpec& spec, const RiccatiSolution& sol,
                       const FeedbackLaw& law) {
  auto header = [&](const char* name, Eigen::Index rows, Eigen::Index cols) {
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) out << ',' << name << '_' << r << '_' << c;
  };
  auto row = [&](const Matrix& M) {
    for (Eigen::Index r = 0; r < M.rows(); ++r)
      for (Eigen::Index c = 0; c < M.cols(); ++c) out << ',' << M(r, c);
  };
  out << 't';
  header("P", spec.n, spec.n);
  header("Pi", spec.n, spec.n);
  header("K0", spec.m, spec.n);
  header("K1", spec.m, spec.n);
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < sol.P.size(); ++i) {
    out << spec.time(i);
    row(sol.P[i]);
    row(sol.Pi[i]);
    row(law.K0[i]);
    row(law.K1[i]);
    out << '\n';
  }
}

}  // namespace mflq
