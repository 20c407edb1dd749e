#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mflq/linalg.hpp"

namespace mflq {

/// Malformed problem instance: inconsistent shapes or non-finite entries.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct JumpAtom {
  std::string label;
  double nu = 0.0;  // intensity contribution, 1/time
};

/// Finite mark space: K weighted atoms. K = 0 means no jumps.
struct JumpMeasure {
  std::vector<JumpAtom> atoms;

  std::size_t size() const noexcept { return atoms.size(); }
  double total_intensity() const noexcept;
};

/// Piecewise-constant matrix coefficient on the uniform grid t_i = i*h.
/// The value on [t_i, t_{i+1}) is values[i]. A single stored matrix is
/// broadcast to every node.
class CoefficientTrack {
 public:
  CoefficientTrack() = default;
  CoefficientTrack(Matrix constant);  // NOLINT: implicit by intent
  explicit CoefficientTrack(std::vector<Matrix> values);

  static CoefficientTrack zero(Eigen::Index rows, Eigen::Index cols) {
    return CoefficientTrack(Matrix::Zero(rows, cols));
  }

  const Matrix& at(std::size_t i) const {
    return values_.size() == 1 ? values_.front() : values_.at(i);
  }
  bool is_constant() const noexcept { return values_.size() == 1; }
  std::size_t length() const noexcept { return values_.size(); }
  const std::vector<Matrix>& values() const noexcept { return values_; }
  std::vector<Matrix>& values() noexcept { return values_; }

  Eigen::Index rows() const { return values_.empty() ? 0 : values_.front().rows(); }
  Eigen::Index cols() const { return values_.empty() ? 0 : values_.front().cols(); }

 private:
  std::vector<Matrix> values_;
};

/// Full problem instance: state equation coefficients, cost weights, jump
/// measure, horizon and grid. Immutable once validated.
struct ModelSpec {
  int n = 0;
  int m = 0;
  double T = 1.0;
  int n_steps = 1;
  Vector x0;
  double delta = 0.0;

  CoefficientTrack A, Abar, C, Cbar, Q, Qbar;  // n x n
  CoefficientTrack B, Bbar, D, Dbar;           // n x m
  CoefficientTrack N, Nbar;                    // m x m
  std::vector<CoefficientTrack> E, Ebar;       // per atom, n x n
  std::vector<CoefficientTrack> F, Fbar;       // per atom, n x m
  Matrix G, Gbar;                              // n x n

  JumpMeasure jump;

  double h() const noexcept { return T / n_steps; }
  double time(std::size_t i) const noexcept { return static_cast<double>(i) * h(); }
  std::size_t atoms() const noexcept { return jump.size(); }
  double nu(std::size_t k) const { return jump.atoms.at(k).nu; }
};

/// All-zero instance of the given shape with N = N+Nbar = I. Starting point
/// for programmatic construction.
ModelSpec zero_model(int n, int m, double T, int n_steps, std::size_t atoms = 0);

struct Violation {
  std::string message;
  std::ptrdiff_t grid_index = -1;  // -1 when not tied to a node
  double eigenvalue = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const noexcept { return violations.empty(); }
  std::string summary() const;
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kAsymmetryWarning = 1e-9;

/// Checks the standing assumptions at every grid node. Throws ModelError for
/// shape inconsistencies and non-finite entries; every other breach is listed
/// in the report.
ValidationReport validate_model(const ModelSpec& spec);

double total_intensity(const ModelSpec& spec);

/// Replaces Q, Qbar, N, Nbar, G, Gbar by their symmetric parts. Returns one
/// warning per weight whose asymmetry exceeded kAsymmetryWarning.
std::vector<std::string> symmetrize_weights(ModelSpec& spec);

/// True when every track holds a single broadcast matrix.
bool has_constant_coefficients(const ModelSpec& spec);

/// Moves the grid to `n_steps` nodes; only allowed for constant coefficients.
void regrid(ModelSpec& spec, int n_steps);

}  // namespace mflq
