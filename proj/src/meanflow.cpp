#include "mflq/meanflow.hpp"

#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace mflq {

MeanTrajectory propagate_mean(const ModelSpec& spec, const ControlLaw& law) {
  return propagate_mean(spec, law, spec.x0);
}

MeanTrajectory propagate_mean(const ModelSpec& s, const ControlLaw& law, const Vector& x0) {
  const auto steps = static_cast<std::size_t>(s.n_steps);
  if (law.nodes() != steps + 1) {
    throw std::invalid_argument("control law has " + std::to_string(law.nodes()) +
                                " nodes; the model grid has " + std::to_string(steps + 1));
  }
  const double h = s.h();
  MeanTrajectory out;
  out.ex.reserve(steps + 1);
  out.eu.reserve(steps + 1);
  out.ex.push_back(x0);
  for (std::size_t i = 0; i < steps; ++i) {
    const Matrix As = s.A.at(i) + s.Abar.at(i);
    const Matrix Bs = s.B.at(i) + s.Bbar.at(i);
    auto rhs = [&](const Vector& y) -> Vector { return As * y + Bs * law.mean_control(i, y); };
    const Vector& y = out.ex.back();
    const Vector k1 = rhs(y);
    const Vector k2 = rhs(y + 0.5 * h * k1);
    const Vector k3 = rhs(y + 0.5 * h * k2);
    const Vector k4 = rhs(y + h * k3);
    Vector next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
      throw NumericalError(NumericalError::Kind::non_finite_state,
                           "mean flow non-finite at grid index " + std::to_string(i + 1),
                           static_cast<std::ptrdiff_t>(i + 1));
    }
    out.eu.push_back(law.mean_control(i, y));
    out.ex.push_back(std::move(next));
  }
  out.eu.push_back(law.mean_control(steps, out.ex.back()));
  return out;
}

void write_mean_csv(std::ostream& out, const MeanTrajectory& mean, double h) {
  out << 't';
  for (Eigen::Index j = 0; j < mean.ex.front().size(); ++j) out << ",ex_" << j;
  for (Eigen::Index j = 0; j < mean.eu.front().size(); ++j) out << ",eu_" << j;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < mean.ex.size(); ++i) {
    out << static_cast<double>(i) * h;
    for (Eigen::Index j = 0; j < mean.ex[i].size(); ++j) out << ',' << mean.ex[i](j);
    const Eigen::Index m = mean.eu.front().size();
    for (Eigen::Index j = 0; j < m; ++j) {
      out << ',';
      if (i < mean.eu.size()) out << mean.eu[i](j);
    }
    out << '\n';
  }
}

}  // namespace mflq
