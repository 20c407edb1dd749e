#include "mflq/oracle.hpp"

#include <cmath>
#include <sstream>

namespace mflq {

namespace {

bool is_zero(const Matrix& m) { return (m.array() == 0.0).all(); }

// State transition of one outcome: X' = Mx X + Mbar EX + L u + Lbar Eu.
struct Transition {
  Matrix Mx, Mbar, L, Lbar;
};

Transition transition(const DiscreteLQ& d, const StepCoefficients& c, const NoiseOutcome& o) {
  const double h = d.h;
  Transition t{Matrix::Identity(d.n, d.n) + h * c.A + o.dw * c.C, h * c.Abar + o.dw * c.Cbar,
               h * c.B + o.dw * c.D, h * c.Bbar + o.dw * c.Dbar};
  for (std::size_t k = 0; k < d.nu.size(); ++k) {
    const double w = static_cast<double>(o.jumps[k]) - d.nu[k] * h;
    t.Mx += w * c.E[k];
    t.Mbar += w * c.Ebar[k];
    t.L += w * c.F[k];
    t.Lbar += w * c.Fbar[k];
  }
  return t;
}

}  // namespace

DiscreteLQ build_discrete_problem(const ModelSpec& s, int steps) {
  if (steps < 1) throw std::invalid_argument("oracle needs at least one step");
  DiscreteLQ d;
  d.steps = steps;
  d.h = s.T / steps;
  d.n = s.n;
  d.m = s.m;
  d.x0 = s.x0;
  d.G = s.G;
  d.Gbar = s.Gbar;
  for (const auto& atom : s.jump.atoms) {
    if (!(atom.nu * d.h < 1.0)) {
      std::ostringstream os;
      os << "jump atom " << atom.label << " has nu*h = " << atom.nu * d.h << " >= 1";
      throw OracleError(OracleError::Kind::jump_probability, os.str());
    }
    d.nu.push_back(atom.nu);
  }

  bool deterministic = d.nu.empty();
  for (int st = 0; st < steps; ++st) {
    const auto i = static_cast<std::size_t>(st) * static_cast<std::size_t>(s.n_steps) /
                   static_cast<std::size_t>(steps);
    StepCoefficients c{s.A.at(i), s.Abar.at(i), s.C.at(i), s.Cbar.at(i), s.Q.at(i), s.Qbar.at(i),
                       s.B.at(i), s.Bbar.at(i), s.D.at(i), s.Dbar.at(i), s.N.at(i), s.Nbar.at(i),
                       {}, {}, {}, {}};
    for (std::size_t k = 0; k < s.atoms(); ++k) {
      c.E.push_back(s.E[k].at(i));
      c.Ebar.push_back(s.Ebar[k].at(i));
      c.F.push_back(s.F[k].at(i));
      c.Fbar.push_back(s.Fbar[k].at(i));
    }
    deterministic = deterministic && is_zero(c.C) && is_zero(c.Cbar) && is_zero(c.D) && is_zero(c.Dbar);
    d.coefficients.push_back(std::move(c));
  }

  if (deterministic) {
    d.outcomes.push_back({0.0, {}, 1.0});
  } else {
    const std::size_t K = d.nu.size();
    const double sh = std::sqrt(d.h);
    for (double dw : {sh, -sh}) {
      for (std::size_t mask = 0; mask < (std::size_t{1} << K); ++mask) {
        NoiseOutcome o{dw, std::vector<int>(K, 0), 0.5};
        for (std::size_t k = 0; k < K; ++k) {
          const bool jump = (mask >> k) & 1u;
          o.jumps[k] = jump ? 1 : 0;
          o.prob *= jump ? d.nu[k] * d.h : 1.0 - d.nu[k] * d.h;
        }
        d.outcomes.push_back(std::move(o));
      }
    }
  }

  const double b = static_cast<double>(d.branching());
  double nodes = 0.0, controls = 0.0;
  for (int st = 0; st <= steps; ++st) {
    const double size = std::pow(b, st);
    nodes += size;
    if (st < steps) controls += size;
  }
  if (nodes * static_cast<double>(d.n) * controls * static_cast<double>(d.m) > kOracleBudget) {
    std::ostringstream os;
    os << "scenario tree with " << nodes << " nodes exceeds the oracle budget";
    throw OracleError(OracleError::Kind::tree_too_large, os.str());
  }

  d.slice_offset.push_back(0);
  std::size_t size = 1;
  for (int st = 0; st <= steps; ++st) {
    d.slice_offset.push_back(d.slice_offset.back() + size);
    size *= d.branching();
  }
  d.prob.assign(d.node_count(), 0.0);
  d.parent.assign(d.node_count(), 0);
  d.prob[0] = 1.0;
  for (int st = 0; st < steps; ++st) {
    for (std::size_t j = 0; j < d.slice_size(st); ++j) {
      const std::size_t node = d.slice_offset[st] + j;
      for (std::size_t o = 0; o < d.branching(); ++o) {
        const std::size_t child = d.slice_offset[st + 1] + j * d.branching() + o;
        d.parent[child] = node;
        d.prob[child] = d.prob[node] * d.outcomes[o].prob;
      }
    }
  }
  return d;
}

QuadraticCost assemble_discrete_cost(const DiscreteLQ& d) {
  const Eigen::Index n = d.n, m = d.m;
  const auto dim = static_cast<Eigen::Index>(d.control_nodes()) * m;
  QuadraticCost qc{Matrix::Zero(dim, dim), Vector::Zero(dim), 0.0};

  // Affine maps X_j = a_j + Phi_j U for the nodes of the current slice,
  // stacked by node. Only the controls of earlier slices enter.
  Vector a = d.x0;
  Matrix Phi(n, 0);
  for (int s = 0; s <= d.steps; ++s) {
    const std::size_t Ns = d.slice_size(s);
    const std::size_t off = d.slice_offset[s];
    const Eigen::Index w = static_cast<Eigen::Index>(off) * m;
    const bool terminal = s == d.steps;
    const double wt = terminal ? 1.0 : d.h;
    const Matrix& Qs = terminal ? d.G : d.coefficients[s].Q;
    const Matrix& Qb = terminal ? d.Gbar : d.coefficients[s].Qbar;

    Vector ea = Vector::Zero(n);
    Matrix ePhi = Matrix::Zero(n, w);
    Matrix Y(n * static_cast<Eigen::Index>(Ns), w);
    Vector ya(n * static_cast<Eigen::Index>(Ns));
    for (std::size_t j = 0; j < Ns; ++j) {
      const double p = d.prob[off + j];
      const auto r = static_cast<Eigen::Index>(j) * n;
      ea += p * a.segment(r, n);
      ePhi += p * Phi.middleRows(r, n);
      Y.middleRows(r, n).noalias() = (p * Qs) * Phi.middleRows(r, n);
      ya.segment(r, n).noalias() = (p * Qs) * a.segment(r, n);
    }
    if (w > 0) {
      qc.H.topLeftCorner(w, w).noalias() += wt * (Phi.transpose() * Y);
      qc.H.topLeftCorner(w, w).noalias() += wt * (ePhi.transpose() * Qb * ePhi);
      qc.g.head(w).noalias() += wt * (Phi.transpose() * ya);
      qc.g.head(w).noalias() += wt * (ePhi.transpose() * (Qb * ea));
    }
    qc.c += wt * (a.dot(ya) + ea.dot(Qb * ea));
    if (terminal) break;

    const StepCoefficients& c = d.coefficients[s];
    const Eigen::Index wc = static_cast<Eigen::Index>(Ns) * m;  // controls of this slice
    Matrix Psi(m, wc);  // E u = Psi U_slice
    for (std::size_t j = 0; j < Ns; ++j) {
      const double p = d.prob[off + j];
      const Eigen::Index col = w + static_cast<Eigen::Index>(j) * m;
      qc.H.block(col, col, m, m) += d.h * p * c.N;
      Psi.middleCols(static_cast<Eigen::Index>(j) * m, m) = p * Matrix::Identity(m, m);
    }
    qc.H.block(w, w, wc, wc).noalias() += d.h * (Psi.transpose() * c.Nbar * Psi);

    const std::size_t b = d.branching();
    const Eigen::Index w_next = w + wc;
    Vector a_next(n * static_cast<Eigen::Index>(Ns * b));
    Matrix Phi_next(n * static_cast<Eigen::Index>(Ns * b), w_next);
    for (std::size_t o = 0; o < b; ++o) {
      const Transition t = transition(d, c, d.outcomes[o]);
      Matrix common(n, w_next);
      common.leftCols(w).noalias() = t.Mbar * ePhi;
      common.rightCols(wc).noalias() = t.Lbar * Psi;
      const Vector a_common = t.Mbar * ea;
      for (std::size_t j = 0; j < Ns; ++j) {
        const auto src = static_cast<Eigen::Index>(j) * n;
        const auto dst = static_cast<Eigen::Index>(j * b + o) * n;
        auto block = Phi_next.middleRows(dst, n);
        block = common;
        block.leftCols(w).noalias() += t.Mx * Phi.middleRows(src, n);
        block.middleCols(w + static_cast<Eigen::Index>(j) * m, m) += t.L;
        a_next.segment(dst, n).noalias() = t.Mx * a.segment(src, n) + a_common;
      }
    }
    a = std::move(a_next);
    Phi = std::move(Phi_next);
  }
  qc.H = symmetrized(qc.H);
  return qc;
}

double evaluate_discrete_cost(const DiscreteLQ& d, const Vector& controls) {
  const Eigen::Index m = d.m;
  if (controls.size() != static_cast<Eigen::Index>(d.control_nodes()) * m) {
    throw std::invalid_argument("control vector does not match the tree");
  }
  std::vector<Vector> x{d.x0};
  double cost = 0.0;
  for (int s = 0; s <= d.steps; ++s) {
    const std::size_t off = d.slice_offset[s];
    const bool terminal = s == d.steps;
    const double wt = terminal ? 1.0 : d.h;
    const Matrix& Qs = terminal ? d.G : d.coefficients[s].Q;
    const Matrix& Qb = terminal ? d.Gbar : d.coefficients[s].Qbar;
    Vector ex = Vector::Zero(d.n);
    double running = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double p = d.prob[off + j];
      ex += p * x[j];
      running += p * x[j].dot(Qs * x[j]);
    }
    cost += wt * (running + ex.dot(Qb * ex));
    if (terminal) break;

    const StepCoefficients& c = d.coefficients[s];
    std::vector<Vector> u(x.size());
    Vector eu = Vector::Zero(m);
    running = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double p = d.prob[off + j];
      u[j] = controls.segment(static_cast<Eigen::Index>(off + j) * m, m);
      eu += p * u[j];
      running += p * u[j].dot(c.N * u[j]);
    }
    cost += d.h * (running + eu.dot(c.Nbar * eu));

    std::vector<Vector> next;
    next.reserve(x.size() * d.branching());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const Vector drift = c.A * x[j] + c.Abar * ex + c.B * u[j] + c.Bbar * eu;
      const Vector diffusion = c.C * x[j] + c.Cbar * ex + c.D * u[j] + c.Dbar * eu;
      for (const auto& o : d.outcomes) {
        Vector y = x[j] + d.h * drift + o.dw * diffusion;
        for (std::size_t k = 0; k < d.nu.size(); ++k) {
          y += (o.jumps[k] - d.nu[k] * d.h) *
               (c.E[k] * x[j] + c.Ebar[k] * ex + c.F[k] * u[j] + c.Fbar[k] * eu);
        }
        next.push_back(std::move(y));
      }
    }
    x = std::move(next);
  }
  return cost;
}

DiscreteSolution solve_discrete_exact(const DiscreteLQ& d) {
  const QuadraticCost qc = assemble_discrete_cost(d);
  Eigen::LLT<Matrix> llt(qc.H);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(NumericalError::Kind::singular_hessian,
                         "oracle Hessian is not positive definite");
  }
  DiscreteSolution sol;
  sol.controls = -llt.solve(qc.g);
  sol.cost = qc(sol.controls);
  sol.gradient_inf_norm = sol.controls.size() ? qc.gradient(sol.controls).cwiseAbs().maxCoeff() : 0.0;
  return sol;
}

// ---------------------------------------------------------------------------
// Convention certification

bool CertificationReport::passed() const {
  for (const auto& e : entries) {
    if (e.matched != "normalized" && e.matched != "both") return false;
  }
  return !entries.empty();
}

namespace {

struct Extrapolation {
  double limit = 0.0;
  double error = 0.0;
};

// Polynomial fit in h evaluated at h = 0; the error estimate compares fits of
// neighbouring degree.
double fit_at_zero(const std::vector<double>& h, const std::vector<double>& y, int degree) {
  const auto k = static_cast<Eigen::Index>(h.size());
  Matrix V(k, degree + 1);
  Vector rhs(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    double p = 1.0;
    for (int c = 0; c <= degree; ++c, p *= h[static_cast<std::size_t>(r)]) V(r, c) = p;
    rhs(r) = y[static_cast<std::size_t>(r)];
  }
  return V.colPivHouseholderQr().solve(rhs)(0);
}

Extrapolation extrapolate(const std::vector<double>& h, const std::vector<double>& y) {
  const int k = static_cast<int>(h.size());
  if (k == 1) return {y[0], std::abs(y[0]) * 0.5};
  const int degree = std::min(2, k - 1);
  Extrapolation e;
  e.limit = fit_at_zero(h, y, degree);
  const std::vector<double> hf(h.begin() + 1, h.end()), yf(y.begin() + 1, y.end());
  const double alt = k >= 3 ? fit_at_zero(hf, yf, std::min(2, k - 2)) : y.back();
  e.error = std::abs(e.limit - alt);
  return e;
}

ModelSpec scalar_base(double T, int n_steps, std::size_t atoms) {
  ModelSpec s = zero_model(1, 1, T, n_steps, atoms);
  s.x0 = Vector::Constant(1, 1.0);
  s.delta = 0.5;
  return s;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

std::vector<CertificationInstance> default_certification_battery() {
  std::vector<CertificationInstance> out;

  {  // Brownian noise only, no mean-field coupling.
    ModelSpec s = scalar_base(1.0, 1000, 0);
    s.A = scalar(0.3);
    s.B = scalar(1.0);
    s.C = scalar(0.4);
    s.D = scalar(0.2);
    s.Q = scalar(1.0);
    s.N = scalar(1.0);
    s.G = scalar(0.5);
    out.push_back({"bar_free", s, {6, 7, 8, 9, 10}});
  }
  {  // Nothing to pay: both conventions give zero.
    ModelSpec s = scalar_base(1.0, 1000, 0);
    s.A = scalar(0.5);
    s.B = scalar(1.0);
    s.C = scalar(0.3);
    out.push_back({"zero_cost", s, {3, 4, 5, 6}});
  }
  {  // Deterministic; only the mean equation matters.
    ModelSpec s = scalar_base(1.0, 1000, 0);
    s.Abar = scalar(1.0);
    s.B = scalar(0.5);
    s.Bbar = scalar(0.5);
    s.Q = scalar(0.5);
    s.Qbar = scalar(0.5);
    s.N = scalar(1.0);
    s.Nbar = scalar(0.5);
    s.G = scalar(0.5);
    s.Gbar = scalar(0.5);
    out.push_back({"mean_field_only", s, {125, 250, 500}});
  }
  {  // Jumps only.
    ModelSpec s = scalar_base(1.0, 1000, 1);
    s.B = scalar(1.0);
    s.E[0] = scalar(0.5);
    s.F[0] = scalar(0.3);
    s.Q = scalar(1.0);
    s.N = scalar(1.0);
    s.G = scalar(1.0);
    s.jump.atoms[0].nu = 1.0;
    out.push_back({"jump_only", s, {3, 4, 5, 6}});
  }
  {  // Two-dimensional state with every kind of term.
    ModelSpec s = zero_model(2, 1, 0.5, 1000, 1);
    s.x0 = Vector(2);
    s.x0 << 1.0, -0.5;
    s.delta = 0.5;
    Matrix A(2, 2), Abar(2, 2), C(2, 2), Cbar(2, 2), E(2, 2), Ebar(2, 2);
    A << 0.1, 0.3, -0.2, 0.0;
    Abar << 0.2, 0.0, 0.1, -0.1;
    C << 0.2, 0.0, 0.0, 0.1;
    Cbar << 0.1, 0.1, 0.0, 0.0;
    E << 0.3, 0.0, 0.1, 0.2;
    Ebar << 0.0, 0.1, 0.0, 0.1;
    Matrix B(2, 1), Bbar(2, 1), D(2, 1), Dbar(2, 1), F(2, 1), Fbar(2, 1);
    B << 1.0, 0.5;
    Bbar << 0.2, 0.0;
    D << 0.1, 0.0;
    Dbar << 0.0, 0.1;
    F << 0.2, 0.1;
    Fbar << 0.0, 0.1;
    Matrix Q(2, 2), Qbar(2, 2), G(2, 2), Gbar(2, 2);
    Q << 1.0, 0.2, 0.2, 0.5;
    Qbar << 0.3, 0.0, 0.0, -0.2;
    G << 0.5, 0.0, 0.0, 0.5;
    Gbar << 0.2, 0.1, 0.1, 0.2;
    s.A = A;
    s.Abar = Abar;
    s.C = C;
    s.Cbar = Cbar;
    s.E[0] = E;
    s.Ebar[0] = Ebar;
    s.B = B;
    s.Bbar = Bbar;
    s.D = D;
    s.Dbar = Dbar;
    s.F[0] = F;
    s.Fbar[0] = Fbar;
    s.Q = Q;
    s.Qbar = Qbar;
    s.N = scalar(1.0);
    s.Nbar = scalar(0.4);
    s.G = G;
    s.Gbar = Gbar;
    s.jump.atoms[0].nu = 1.5;
    out.push_back({"mixed", s, {3, 4, 5, 6}});
  }
  return out;
}

CertificationReport certify_convention(const std::vector<CertificationInstance>& battery) {
  CertificationReport report;
  for (const auto& inst : battery) {
    CertificationEntry e;
    e.instance_id = inst.id;
    e.steps = inst.steps;
    std::vector<double> hs, controls;
    for (int steps : inst.steps) {
      const DiscreteLQ d = build_discrete_problem(inst.spec, steps);
      const DiscreteSolution sol = solve_discrete_exact(d);
      hs.push_back(d.h);
      e.oracle_costs.push_back(sol.cost);
      controls.push_back(sol.controls(0));
    }
    const Extrapolation cost = extrapolate(hs, e.oracle_costs);
    const Extrapolation ctrl = extrapolate(hs, controls);
    e.oracle_cost = cost.limit;
    e.oracle_control = ctrl.limit;

    const RiccatiSolution normalized = solve_riccati(inst.spec, Convention::normalized);
    const RiccatiSolution literal = solve_riccati(inst.spec, Convention::literal);
    e.riccati_value = optimal_value(normalized, inst.spec.x0);
    e.literal_value = optimal_value(literal, inst.spec.x0);
    e.riccati_control = (feedback_gains(inst.spec, normalized).K1[0] * inst.spec.x0)(0);
    e.literal_control = (feedback_gains(inst.spec, literal).K1[0] * inst.spec.x0)(0);

    const double scale = std::max(1.0, std::abs(cost.limit));
    e.tolerance = std::max(3.0 * cost.error, 2e-3 * scale);
    const double control_tol = std::max(3.0 * ctrl.error, 2e-3 * std::max(1.0, std::abs(ctrl.limit)));
    const bool norm_ok = std::abs(e.riccati_value - cost.limit) <= e.tolerance &&
                         std::abs(e.riccati_control - ctrl.limit) <= control_tol;
    const bool lit_ok = std::abs(e.literal_value - cost.limit) <= e.tolerance &&
                        std::abs(e.literal_control - ctrl.limit) <= control_tol;
    e.discriminating = std::abs(e.riccati_value - e.literal_value) > e.tolerance ||
                       std::abs(e.riccati_control - e.literal_control) > control_tol;
    e.matched = norm_ok ? (lit_ok ? "both" : "normalized") : (lit_ok ? "literal" : "none");
    report.entries.push_back(std::move(e));
  }
  return report;
}

nlohmann::json to_json(const CertificationReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"instance_id", e.instance_id},
                       {"steps", e.steps},
                       {"oracle_costs", e.oracle_costs},
                       {"oracle_cost", e.oracle_cost},
                       {"riccati_value", e.riccati_value},
                       {"literal_value", e.literal_value},
                       {"oracle_control", e.oracle_control},
                       {"riccati_control", e.riccati_control},
                       {"literal_control", e.literal_control},
                       {"tolerance", e.tolerance},
                       {"discriminating", e.discriminating},
                       {"matched", e.matched}});
  }
  return {{"instances", entries}, {"passed", report.passed()}};
}

}  // namespace mflq
