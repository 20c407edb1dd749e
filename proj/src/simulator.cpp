#include "mflq/simulator.hpp"

#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mflq/meanflow.hpp"
#include "mflq/philox.hpp"

namespace mflq {

namespace {

// Runs f(begin, end) over contiguous chunks of [0, count). Results must not
// depend on the chunking; callers only write per-index state.
template <class F>
void parallel_for(unsigned workers, std::size_t count, F&& f) {
  if (workers <= 1 || count < 2) {
    f(std::size_t{0}, count);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, count);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(chunks);
  threads.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = count * c / chunks;
    const std::size_t end = count * (c + 1) / chunks;
    threads.emplace_back([&, c, begin, end] {
      try {
        f(begin, end);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool is_zero(const Matrix& m) { return (m.array() == 0.0).all(); }

MeanClosure resolve(MeanClosure c, const ControlLaw& law) {
  if (c != MeanClosure::automatic) return c;
  return law.kind() == ControlLaw::Kind::feedback ? MeanClosure::exact : MeanClosure::particle;
}

// Path-independent pieces of one Euler step.
struct StepTerms {
  Vector drift;               // Abar E[X] + Bbar E[u]
  Vector diffusion;           // Cbar E[X] + Dbar E[u]
  std::vector<Vector> jumps;  // Ebar_k E[X] + Fbar_k E[u]
  bool diffusive = false;
};

StepTerms step_terms(const ModelSpec& s, std::size_t i, const Vector& ex, const Vector& eu) {
  StepTerms t;
  t.drift = s.Abar.at(i) * ex + s.Bbar.at(i) * eu;
  t.diffusion = s.Cbar.at(i) * ex + s.Dbar.at(i) * eu;
  t.diffusive = !(is_zero(s.C.at(i)) && is_zero(s.D.at(i)) && is_zero(t.diffusion));
  for (std::size_t k = 0; k < s.atoms(); ++k) {
    t.jumps.push_back(s.Ebar[k].at(i) * ex + s.Fbar[k].at(i) * eu);
  }
  return t;
}

std::vector<Vector> ensemble_average(const std::vector<double>& data, std::size_t M,
                                     std::size_t nodes, Eigen::Index dim) {
  std::vector<Vector> avg(nodes, Vector::Zero(dim));
  const auto d = static_cast<std::size_t>(dim);
  for (std::size_t p = 0; p < M; ++p) {
    for (std::size_t i = 0; i < nodes; ++i) {
      avg[i] += Eigen::Map<const Vector>(&data[(p * nodes + i) * d], dim);
    }
  }
  for (auto& v : avg) v /= static_cast<double>(M);
  return avg;
}

double sample_std_error(const std::vector<double>& values) {
  const std::size_t M = values.size();
  if (M < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(M);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(M - 1) / static_cast<double>(M));
}

}  // namespace

PathEnsemble simulate_paths(const ModelSpec& s, const ControlLaw& law, std::size_t M,
                            std::uint64_t seed, const SimulationOptions& options) {
  if (M < 1) throw std::invalid_argument("simulate_paths needs at least one path");
  const auto S = static_cast<std::size_t>(s.n_steps);
  if (law.nodes() != S + 1) {
    throw std::invalid_argument("control law has " + std::to_string(law.nodes()) +
                                " nodes; the model grid has " + std::to_string(S + 1));
  }
  const Eigen::Index n = s.n, m = s.m;
  const auto nz = static_cast<std::size_t>(n), mz = static_cast<std::size_t>(m);
  const double h = s.h();
  const double sqrt_h = std::sqrt(h);
  const CounterRng rng(seed);

  PathEnsemble e;
  e.M = M;
  e.n_steps = S;
  e.n = n;
  e.m = m;
  e.h = h;
  e.seed = seed;
  e.closure = resolve(options.closure, law);
  e.X.assign(M * (S + 1) * nz, 0.0);
  e.U.assign(M * S * mz, 0.0);
  e.jump_log.assign(M, {});
  e.costs.assign(M, 0.0);

  auto state = [&](std::size_t p, std::size_t i) {
    return Eigen::Map<Vector>(&e.X[(p * (S + 1) + i) * nz], n);
  };
  auto control = [&](std::size_t p, std::size_t i) {
    return Eigen::Map<Vector>(&e.U[(p * S + i) * mz], m);
  };
  for (std::size_t p = 0; p < M; ++p) state(p, 0) = s.x0;

  MeanTrajectory exact;
  if (e.closure == MeanClosure::exact) exact = propagate_mean(s, law);

  for (std::size_t i = 0; i < S; ++i) {
    Vector ex;
    if (e.closure == MeanClosure::exact) {
      ex = exact.ex[i];
    } else {
      ex = Vector::Zero(n);
      for (std::size_t p = 0; p < M; ++p) ex += state(p, i);
      ex /= static_cast<double>(M);
    }

    parallel_for(options.workers, M, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) law.control(i, state(p, i), ex, control(p, i));
    });

    Vector eu;
    if (e.closure == MeanClosure::exact) {
      eu = exact.eu[i];
    } else {
      eu = Vector::Zero(m);
      for (std::size_t p = 0; p < M; ++p) eu += control(p, i);
      eu /= static_cast<double>(M);
    }
    e.closure_x.push_back(ex);
    e.closure_u.push_back(eu);

    const StepTerms terms = step_terms(s, i, ex, eu);
    const Matrix& A = s.A.at(i);
    const Matrix& B = s.B.at(i);
    const Matrix& C = s.C.at(i);
    const Matrix& D = s.D.at(i);
    const auto step = static_cast<std::uint32_t>(i);

    parallel_for(options.workers, M, [&](std::size_t begin, std::size_t end) {
      Vector tmp(n);
      for (std::size_t p = begin; p < end; ++p) {
        const auto x = state(p, i);
        const auto u = control(p, i);
        auto next = state(p, i + 1);
        tmp.noalias() = A * x;
        tmp.noalias() += B * u;
        tmp += terms.drift;
        next = x + h * tmp;
        if (terms.diffusive) {
          const double dw = sqrt_h * rng.normal(p, step, CounterRng::brownian);
          tmp.noalias() = C * x;
          tmp.noalias() += D * u;
          tmp += terms.diffusion;
          next += dw * tmp;
        }
        for (std::size_t k = 0; k < s.atoms(); ++k) {
          const double mean_count = s.nu(k) * h;
          const unsigned count =
              rng.poisson(p, step, CounterRng::jump_base + static_cast<std::uint32_t>(k), mean_count);
          for (unsigned c = 0; c < count; ++c) {
            e.jump_log[p].push_back({step, static_cast<std::uint32_t>(k)});
          }
          tmp.noalias() = s.E[k].at(i) * x;
          tmp.noalias() += s.F[k].at(i) * u;
          tmp += terms.jumps[k];
          next += (static_cast<double>(count) - mean_count) * tmp;
        }
        if (!next.allFinite()) {
          std::ostringstream os;
          os << "non-finite state on path " << p << " at grid index " << i + 1;
          throw NumericalError(NumericalError::Kind::non_finite_state, os.str(),
                               static_cast<std::ptrdiff_t>(i + 1));
        }
      }
    });
  }

  e.mean_x = ensemble_average(e.X, M, S + 1, n);
  e.mean_u = ensemble_average(e.U, M, S, m);

  parallel_for(options.workers, M, [&](std::size_t begin, std::size_t end) {
    Vector qx(n), nu(m);
    for (std::size_t p = begin; p < end; ++p) {
      double running = 0.0;
      for (std::size_t i = 0; i < S; ++i) {
        const auto x = state(p, i);
        const auto u = control(p, i);
        qx.noalias() = s.Q.at(i) * x;
        nu.noalias() = s.N.at(i) * u;
        running += x.dot(qx) + u.dot(nu);
      }
      const auto xT = state(p, S);
      qx.noalias() = s.G * xT;
      e.costs[p] = h * running + xT.dot(qx);
    }
  });
  return e;
}

namespace {

double mean_field_cost(const ModelSpec& s, const PathEnsemble& e) {
  double running = 0.0;
  for (std::size_t i = 0; i < e.n_steps; ++i) {
    running += e.mean_x[i].dot(s.Qbar.at(i) * e.mean_x[i]) + e.mean_u[i].dot(s.Nbar.at(i) * e.mean_u[i]);
  }
  return e.h * running + e.mean_x.back().dot(s.Gbar * e.mean_x.back());
}

}  // namespace

std::vector<double> path_influence(const ModelSpec& s, const PathEnsemble& e) {
  const std::size_t S = e.n_steps;
  // Gradients of the mean-field terms with respect to the ensemble averages.
  std::vector<Vector> gx(S), gu(S);
  for (std::size_t i = 0; i < S; ++i) {
    gx[i] = 2.0 * e.h * (s.Qbar.at(i) * e.mean_x[i]);
    gu[i] = 2.0 * e.h * (s.Nbar.at(i) * e.mean_u[i]);
  }
  const Vector gT = 2.0 * (s.Gbar * e.mean_x.back());
  std::vector<double> out(e.M);
  for (std::size_t p = 0; p < e.M; ++p) {
    double v = e.costs[p];
    for (std::size_t i = 0; i < S; ++i) v += gx[i].dot(e.state(p, i)) + gu[i].dot(e.control(p, i));
    out[p] = v + gT.dot(e.state(p, S));
  }
  return out;
}

CostEstimate estimate_cost(const ModelSpec& s, const PathEnsemble& e) {
  double total = 0.0;
  for (double c : e.costs) total += c;
  CostEstimate est;
  est.mean = total / static_cast<double>(e.M) + mean_field_cost(s, e);
  est.std_error = sample_std_error(path_influence(s, e));
  return est;
}

namespace {

double adjoint_scale(const RiccatiSolution& sol) {
  return sol.convention == Convention::normalized ? 2.0 : 1.0;
}

// q and r along one path at node i. dx = X - E X, du = u - E u.
void adjoint_qr(const ModelSpec& s, const RiccatiSolution& sol, std::size_t i, const Vector& dx,
                const Vector& du, const Vector& ex, const Vector& eu, Vector& q,
                std::vector<Vector>& r) {
  const double c = adjoint_scale(sol);
  const Matrix& P = sol.P[i];
  q = c * (P * (s.C.at(i) * dx + (s.C.at(i) + s.Cbar.at(i)) * ex + s.D.at(i) * du +
                (s.D.at(i) + s.Dbar.at(i)) * eu));
  r.resize(s.atoms());
  for (std::size_t k = 0; k < s.atoms(); ++k) {
    r[k] = c * (P * (s.E[k].at(i) * dx + (s.E[k].at(i) + s.Ebar[k].at(i)) * ex +
                     s.F[k].at(i) * du + (s.F[k].at(i) + s.Fbar[k].at(i)) * eu));
  }
}

}  // namespace

AdjointTriple reconstruct_adjoint(const ModelSpec& s, const RiccatiSolution& sol,
                                  const PathEnsemble& e, std::size_t path_index) {
  if (path_index >= e.M) {
    throw std::out_of_range("path index " + std::to_string(path_index) + " out of range for " +
                            std::to_string(e.M) + " paths");
  }
  const double c = adjoint_scale(sol);
  AdjointTriple out;
  out.r.assign(s.atoms(), {});
  for (std::size_t i = 0; i <= e.n_steps; ++i) {
    const Vector x = e.state(path_index, i);
    const Vector& ex = e.mean_x[i];
    out.p.push_back(c * (sol.P[i] * (x - ex) + sol.Pi[i] * ex));
    if (i == e.n_steps) break;
    const Vector u = e.control(path_index, i);
    Vector q;
    std::vector<Vector> r;
    adjoint_qr(s, sol, i, x - ex, u - e.mean_u[i], ex, e.mean_u[i], q, r);
    out.q.push_back(std::move(q));
    for (std::size_t k = 0; k < s.atoms(); ++k) out.r[k].push_back(std::move(r[k]));
  }
  return out;
}

StationarityReport stationarity_residual(const ModelSpec& s, const RiccatiSolution& sol,
                                         const PathEnsemble& e) {
  const double c = adjoint_scale(sol);
  const Eigen::Index n = e.n, m = e.m;
  const std::size_t S = e.n_steps;
  const Vector zero_dx = Vector::Zero(n), zero_du = Vector::Zero(m);

  // Per node the residual is affine in (dx, du) = (X - E X, u - E u):
  // res = r0 + Rx dx + Ru du + 2Nu.
  std::vector<Matrix> Rx(S), Ru(S), two_N(S);
  std::vector<Vector> r0(S);
  for (std::size_t i = 0; i < S; ++i) {
    const Vector& ex = e.mean_x[i];
    const Vector& eu = e.mean_u[i];
    // Ensemble averages of p, q, r: the fluctuation parts average to zero.
    const Vector mean_p = c * (sol.Pi[i] * ex);
    Vector mean_q;
    std::vector<Vector> mean_r;
    adjoint_qr(s, sol, i, zero_dx, zero_du, ex, eu, mean_q, mean_r);

    Vector common = 2.0 * (s.Nbar.at(i) * eu) + s.Bbar.at(i).transpose() * mean_p +
                    s.Dbar.at(i).transpose() * mean_q;
    for (std::size_t k = 0; k < s.atoms(); ++k) {
      common += s.nu(k) * (s.Fbar[k].at(i).transpose() * mean_r[k]);
    }
    const Matrix cP = c * sol.P[i];
    const Matrix& C = s.C.at(i);
    const Matrix& D = s.D.at(i);
    const Matrix DtP = D.transpose() * cP;
    Rx[i] = s.B.at(i).transpose() * cP + DtP * C;
    Ru[i] = DtP * D;
    r0[i] = common + s.B.at(i).transpose() * mean_p +
            DtP * ((C + s.Cbar.at(i)) * ex + (D + s.Dbar.at(i)) * eu);
    for (std::size_t k = 0; k < s.atoms(); ++k) {
      const Matrix& E = s.E[k].at(i);
      const Matrix& F = s.F[k].at(i);
      const Matrix FtP = s.nu(k) * (F.transpose() * cP);
      Rx[i] += FtP * E;
      Ru[i] += FtP * F;
      r0[i] += FtP * ((E + s.Ebar[k].at(i)) * ex + (F + s.Fbar[k].at(i)) * eu);
    }
    two_N[i] = 2.0 * s.N.at(i);
  }

  double sum_res = 0.0, sum_ref = 0.0;
  Vector dx(n), du(m), two_nu(m), res(m);
  for (std::size_t p = 0; p < e.M; ++p) {
    for (std::size_t i = 0; i < S; ++i) {
      dx = e.state(p, i) - e.mean_x[i];
      const auto u = e.control(p, i);
      du = u - e.mean_u[i];
      two_nu.noalias() = two_N[i] * u;
      res = r0[i] + two_nu;
      res.noalias() += Rx[i] * dx;
      res.noalias() += Ru[i] * du;
      sum_res += res.squaredNorm();
      sum_ref += two_nu.squaredNorm();
    }
  }
  const double count = static_cast<double>(e.M * S);
  return {std::sqrt(sum_res / count), std::sqrt(sum_ref / count)};
}

DirectionalDerivative directional_derivative(const ModelSpec& s, const ControlLaw& base,
                                             const std::vector<Vector>& direction,
                                             const std::vector<double>& eps_list, std::size_t M,
                                             std::uint64_t seed, const SimulationOptions& options) {
  if (eps_list.empty()) throw std::invalid_argument("directional_derivative needs at least one eps");
  SimulationOptions opts = options;
  opts.closure = resolve(options.closure, base);

  const std::size_t points = eps_list.size() + 1;
  std::vector<double> eps{0.0};
  eps.insert(eps.end(), eps_list.begin(), eps_list.end());
  std::vector<double> J(points);
  Matrix influence(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(points));
  for (std::size_t j = 0; j < points; ++j) {
    const PathEnsemble e =
        j == 0 ? simulate_paths(s, base, M, seed, opts)
               : simulate_paths(s, ControlLaw::perturbed(base, direction, eps[j]), M, seed, opts);
    J[j] = estimate_cost(s, e).mean;
    const auto infl = path_influence(s, e);
    influence.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector>(infl.data(), infl.size());
  }

  DirectionalDerivative out;
  out.eps = eps_list;
  out.base_cost = J[0];
  out.costs.assign(J.begin() + 1, J.end());
  for (std::size_t j = 1; j < points; ++j) out.finite_differences.push_back((J[j] - J[0]) / eps[j]);

  // Least-squares parabola; exact when J is quadratic in eps.
  Matrix V(static_cast<Eigen::Index>(points), 3);
  for (std::size_t j = 0; j < points; ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    V(r, 0) = 1.0;
    V(r, 1) = eps[j];
    V(r, 2) = eps[j] * eps[j];
  }
  const Matrix fit = V.completeOrthogonalDecomposition().pseudoInverse();  // 3 x points
  const Vector coef = fit * Eigen::Map<const Vector>(J.data(), static_cast<Eigen::Index>(points));
  out.constant = coef(0);
  out.linear = coef(1);
  out.quadratic = coef(2);

  const Matrix per_path = influence * fit.transpose();  // M x 3
  auto column_error = [&](Eigen::Index c) {
    std::vector<double> v(M);
    for (std::size_t p = 0; p < M; ++p) v[p] = per_path(static_cast<Eigen::Index>(p), c);
    return sample_std_error(v);
  };
  out.linear_stderr = column_error(1);
  out.quadratic_stderr = column_error(2);
  return out;
}

void write_paths_csv(std::ostream& out, const PathEnsemble& e, std::size_t max_paths) {
  out << "path,t";
  for (Eigen::Index j = 0; j < e.n; ++j) out << ",X_" << j;
  for (Eigen::Index j = 0; j < e.m; ++j) out << ",u_" << j;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  const std::size_t paths = std::min(max_paths, e.M);
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t i = 0; i <= e.n_steps; ++i) {
      out << p << ',' << static_cast<double>(i) * e.h;
      const auto x = e.state(p, i);
      for (Eigen::Index j = 0; j < e.n; ++j) out << ',' << x(j);
      if (i < e.n_steps) {
        const auto u = e.control(p, i);
        for (Eigen::Index j = 0; j < e.m; ++j) out << ',' << u(j);
      } else {
        for (Eigen::Index j = 0; j < e.m; ++j) out << ',';
      }
      out << '\n';
    }
  }
}

}  // namespace mflq
