#include "mflq/model.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace mflq {

double JumpMeasure::total_intensity() const noexcept {
  double total = 0.0;
  for (const auto& atom : atoms) total += atom.nu;
  return total;
}

CoefficientTrack::CoefficientTrack(Matrix constant) { values_.push_back(std::move(constant)); }

CoefficientTrack::CoefficientTrack(std::vector<Matrix> values) : values_(std::move(values)) {}

ModelSpec zero_model(int n, int m, double T, int n_steps, std::size_t atoms) {
  ModelSpec s;
  s.n = n;
  s.m = m;
  s.T = T;
  s.n_steps = n_steps;
  s.x0 = Vector::Zero(n);
  s.delta = 1.0;
  for (auto* t : {&s.A, &s.Abar, &s.C, &s.Cbar, &s.Q, &s.Qbar}) *t = CoefficientTrack::zero(n, n);
  for (auto* t : {&s.B, &s.Bbar, &s.D, &s.Dbar}) *t = CoefficientTrack::zero(n, m);
  s.N = CoefficientTrack(Matrix(Matrix::Identity(m, m)));
  s.Nbar = CoefficientTrack::zero(m, m);
  s.E.assign(atoms, CoefficientTrack::zero(n, n));
  s.Ebar.assign(atoms, CoefficientTrack::zero(n, n));
  s.F.assign(atoms, CoefficientTrack::zero(n, m));
  s.Fbar.assign(atoms, CoefficientTrack::zero(n, m));
  s.G = Matrix::Zero(n, n);
  s.Gbar = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < atoms; ++k) {
    s.jump.atoms.push_back({"theta" + std::to_string(k + 1), 1.0});
  }
  return s;
}

std::string ValidationReport::summary() const {
  if (violations.empty()) return "valid";
  std::ostringstream os;
  for (const auto& v : violations) {
    os << v.message;
    if (v.grid_index >= 0) os << " (grid index " << v.grid_index << ", lambda_min=" << v.eigenvalue << ")";
    os << '\n';
  }
  return os.str();
}

namespace {

void check_shape(const CoefficientTrack& t, const std::string& name, Eigen::Index rows,
                 Eigen::Index cols, int n_steps) {
  if (t.length() == 0) throw ModelError("coefficient " + name + " is empty");
  if (t.length() != 1 && t.length() != static_cast<std::size_t>(n_steps) + 1) {
    throw ModelError("coefficient " + name + " has " + std::to_string(t.length()) +
                     " samples; expected 1 or n_steps+1 = " + std::to_string(n_steps + 1));
  }
  for (std::size_t i = 0; i < t.length(); ++i) {
    const Matrix& v = t.values()[i];
    if (v.rows() != rows || v.cols() != cols) {
      std::ostringstream os;
      os << "coefficient " << name << " sample " << i << " is " << v.rows() << "x" << v.cols()
         << "; expected " << rows << "x" << cols;
      throw ModelError(os.str());
    }
    if (!v.allFinite()) {
      throw ModelError("coefficient " + name + " sample " + std::to_string(i) +
                       " has a non-finite entry");
    }
  }
}

void check_atoms(const std::vector<CoefficientTrack>& ts, const std::string& name, std::size_t K,
                 Eigen::Index rows, Eigen::Index cols, int n_steps) {
  if (ts.size() != K) {
    throw ModelError("coefficient " + name + " has " + std::to_string(ts.size()) +
                     " atoms; jump measure has " + std::to_string(K));
  }
  for (std::size_t k = 0; k < K; ++k) {
    check_shape(ts[k], name + "[" + std::to_string(k) + "]", rows, cols, n_steps);
  }
}

// Lowest eigenvalue over all grid nodes of f(i); reports the worst node.
void check_lower_bound(ValidationReport& report, const std::string& message, int n_steps,
                       bool constant, double bound,
                       const std::function<Matrix(std::size_t)>& f) {
  const std::size_t last = constant ? 0 : static_cast<std::size_t>(n_steps);
  double worst = INFINITY;
  std::ptrdiff_t worst_index = -1;
  for (std::size_t i = 0; i <= last; ++i) {
    const double lambda = min_eigenvalue(f(i));
    if (lambda < worst) {
      worst = lambda;
      worst_index = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (worst < bound) report.violations.push_back({message, worst_index, worst});
}

void check_symmetric(ValidationReport& report, const std::string& name,
                     const CoefficientTrack& t) {
  for (std::size_t i = 0; i < t.length(); ++i) {
    const double a = asymmetry(t.values()[i]);
    if (a > kSymmetryTolerance) {
      report.violations.push_back({name + " not symmetric", static_cast<std::ptrdiff_t>(i), a});
      return;
    }
  }
}

}  // namespace

ValidationReport validate_model(const ModelSpec& s) {
  if (s.n < 1 || s.m < 1) throw ModelError("dimensions n and m must be positive");
  if (s.n_steps < 1) throw ModelError("n_steps must be at least 1");
  if (!std::isfinite(s.T) || !std::isfinite(s.delta)) throw ModelError("T and delta must be finite");
  if (s.x0.size() != s.n) throw ModelError("x0 has length " + std::to_string(s.x0.size()) +
                                           "; expected n = " + std::to_string(s.n));
  if (!s.x0.allFinite()) throw ModelError("x0 has a non-finite entry");

  const Eigen::Index n = s.n, m = s.m;
  check_shape(s.A, "A", n, n, s.n_steps);
  check_shape(s.Abar, "Abar", n, n, s.n_steps);
  check_shape(s.C, "C", n, n, s.n_steps);
  check_shape(s.Cbar, "Cbar", n, n, s.n_steps);
  check_shape(s.Q, "Q", n, n, s.n_steps);
  check_shape(s.Qbar, "Qbar", n, n, s.n_steps);
  check_shape(s.B, "B", n, m, s.n_steps);
  check_shape(s.Bbar, "Bbar", n, m, s.n_steps);
  check_shape(s.D, "D", n, m, s.n_steps);
  check_shape(s.Dbar, "Dbar", n, m, s.n_steps);
  check_shape(s.N, "N", m, m, s.n_steps);
  check_shape(s.Nbar, "Nbar", m, m, s.n_steps);
  const std::size_t K = s.atoms();
  check_atoms(s.E, "E", K, n, n, s.n_steps);
  check_atoms(s.Ebar, "Ebar", K, n, n, s.n_steps);
  check_atoms(s.F, "F", K, n, m, s.n_steps);
  check_atoms(s.Fbar, "Fbar", K, n, m, s.n_steps);
  check_shape(CoefficientTrack(s.G), "G", n, n, s.n_steps);
  check_shape(CoefficientTrack(s.Gbar), "Gbar", n, n, s.n_steps);
  for (const auto& atom : s.jump.atoms) {
    if (!std::isfinite(atom.nu)) throw ModelError("jump atom " + atom.label + " has non-finite weight");
  }

  ValidationReport report;
  if (!(s.T > 0.0)) report.violations.push_back({"horizon T not positive", -1, s.T});
  if (!(s.delta > 0.0)) report.violations.push_back({"delta not positive", -1, s.delta});
  for (const auto& atom : s.jump.atoms) {
    if (!(atom.nu > 0.0)) report.violations.push_back({"jump atom " + atom.label + " weight not positive", -1, atom.nu});
  }

  check_symmetric(report, "Q", s.Q);
  check_symmetric(report, "Qbar", s.Qbar);
  check_symmetric(report, "N", s.N);
  check_symmetric(report, "Nbar", s.Nbar);
  check_symmetric(report, "G", CoefficientTrack(s.G));
  check_symmetric(report, "Gbar", CoefficientTrack(s.Gbar));

  const double psd = -kPsdTolerance;
  const double pos = s.delta - kPsdTolerance;
  const bool q_const = s.Q.is_constant() && s.Qbar.is_constant();
  const bool n_const = s.N.is_constant() && s.Nbar.is_constant();
  check_lower_bound(report, "Q not PSD", s.n_steps, s.Q.is_constant(), psd,
                    [&](std::size_t i) { return s.Q.at(i); });
  check_lower_bound(report, "Q+Q̄ not PSD", s.n_steps, q_const, psd,
                    [&](std::size_t i) { return Matrix(s.Q.at(i) + s.Qbar.at(i)); });
  check_lower_bound(report, "N not ⪰ δI", s.n_steps, s.N.is_constant(), pos,
                    [&](std::size_t i) { return s.N.at(i); });
  check_lower_bound(report, "N+N̄ not ⪰ δI", s.n_steps, n_const, pos,
                    [&](std::size_t i) { return Matrix(s.N.at(i) + s.Nbar.at(i)); });
  check_lower_bound(report, "G not PSD", s.n_steps, true, psd,
                    [&](std::size_t) { return s.G; });
  check_lower_bound(report, "G+Ḡ not PSD", s.n_steps, true, psd,
                    [&](std::size_t) { return Matrix(s.G + s.Gbar); });
  return report;
}

double total_intensity(const ModelSpec& spec) { return spec.jump.total_intensity(); }

std::vector<std::string> symmetrize_weights(ModelSpec& spec) {
  std::vector<std::string> warnings;
  auto fix = [&](Matrix& v, const std::string& name) {
    const double a = asymmetry(v);
    if (a > kAsymmetryWarning) {
      std::ostringstream os;
      os << name << " asymmetric by " << a << "; replaced with its symmetric part";
      warnings.push_back(os.str());
    }
    v = symmetrized(v);
  };
  auto fix_track = [&](CoefficientTrack& t, const std::string& name) {
    for (auto& v : t.values()) {
      if (v.rows() == v.cols()) fix(v, name);
    }
  };
  fix_track(spec.Q, "Q");
  fix_track(spec.Qbar, "Qbar");
  fix_track(spec.N, "N");
  fix_track(spec.Nbar, "Nbar");
  if (spec.G.rows() == spec.G.cols()) fix(spec.G, "G");
  if (spec.Gbar.rows() == spec.Gbar.cols()) fix(spec.Gbar, "Gbar");
  return warnings;
}

bool has_constant_coefficients(const ModelSpec& s) {
  for (const auto* t : {&s.A, &s.Abar, &s.C, &s.Cbar, &s.Q, &s.Qbar, &s.B, &s.Bbar, &s.D, &s.Dbar,
                        &s.N, &s.Nbar}) {
    if (!t->is_constant()) return false;
  }
  for (const auto* ts : {&s.E, &s.Ebar, &s.F, &s.Fbar}) {
    for (const auto& t : *ts) {
      if (!t.is_constant()) return false;
    }
  }
  return true;
}

void regrid(ModelSpec& spec, int n_steps) {
  if (n_steps < 1) throw ModelError("n_steps must be at least 1");
  if (!has_constant_coefficients(spec)) {
    throw ModelError("cannot change the grid of a model with time-varying coefficients");
  }
  spec.n_steps = n_steps;
}

}  // namespace mflq
