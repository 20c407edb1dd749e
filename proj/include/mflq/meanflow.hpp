#pragma once

#include <iosfwd>
#include <vector>

#include "mflq/control_law.hpp"
#include "mflq/model.hpp"

namespace mflq {

struct MeanTrajectory {
  std::vector<Vector> ex;  // E[X](t_i), ex[0] = x0
  std::vector<Vector> eu;  // E[u](t_i)
};

/// Integrates dE[X]/dt = (A+Abar)E[X] + (B+Bbar)E[u] forward with RK4 on the
/// model grid. E[u] is the law's exact mean control, so the flow is closed
/// for feedback, open-loop and perturbed laws alike.
MeanTrajectory propagate_mean(const ModelSpec& spec, const ControlLaw& law);

/// Same, from an arbitrary initial mean.
MeanTrajectory propagate_mean(const ModelSpec& spec, const ControlLaw& law, const Vector& x0);

/// Columns t, ex_0.., eu_0.. An eu track one node shorter (ensemble
/// averages) leaves the last row's eu cells blank.
void write_mean_csv(std::ostream& out, const MeanTrajectory& mean, double h);

}  // namespace mflq
