#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mflq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Failure of a numerical routine: a control-space matrix that is not
/// uniformly positive, a Riccati solution escaping to infinity, a
/// non-finite state, or a singular oracle Hessian.
class NumericalError : public std::runtime_error {
 public:
  enum class Kind { singular_sigma, blow_up, non_finite_state, singular_hessian };

  NumericalError(Kind kind, std::string what, std::ptrdiff_t grid_index = -1)
      : std::runtime_error(std::move(what)), kind_(kind), grid_index_(grid_index) {}

  Kind kind() const noexcept { return kind_; }
  std::ptrdiff_t grid_index() const noexcept { return grid_index_; }

 private:
  Kind kind_;
  std::ptrdiff_t grid_index_;
};

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double asymmetry(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

/// Smallest eigenvalue of the symmetric part of a square matrix.
double min_eigenvalue(const Matrix& m);

bool all_finite(const Matrix& m);

/// Cholesky-backed solver for the control-space matrices. Throws
/// NumericalError::singular_sigma when the smallest eigenvalue falls below
/// `tolerance`.
class SpdSolver {
 public:
  SpdSolver(const Matrix& sigma, double tolerance, std::ptrdiff_t grid_index);

  Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }
  double min_eigenvalue() const noexcept { return lambda_min_; }

 private:
  Eigen::LLT<Matrix> llt_;
  double lambda_min_;
};

inline constexpr double kSigmaTolerance = 1e-10;

}  // namespace mflq
