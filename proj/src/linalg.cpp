#include "mflq/linalg.hpp"

#include <sstream>

namespace mflq {

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

SpdSolver::SpdSolver(const Matrix& sigma, double tolerance, std::ptrdiff_t grid_index)
    : lambda_min_(mflq::min_eigenvalue(sigma)) {
  if (!(lambda_min_ >= tolerance)) {
    std::ostringstream os;
    os << "control-space matrix not positive definite at grid index " << grid_index
       << " (lambda_min=" << lambda_min_ << ")";
    throw NumericalError(NumericalError::Kind::singular_sigma, os.str(), grid_index);
  }
  llt_.compute(symmetrized(sigma));
  if (llt_.info() != Eigen::Success) {
    throw NumericalError(NumericalError::Kind::singular_sigma,
                         "Cholesky factorization failed at grid index " +
                             std::to_string(grid_index),
                         grid_index);
  }
}

}  // namespace mflq
