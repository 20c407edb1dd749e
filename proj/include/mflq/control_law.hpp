#pragma once

#include <cstddef>
#include <memory>
#include <variant>
#include <vector>

#include "mflq/riccati.hpp"

namespace mflq {

/// Admissible control: a mean-field feedback law, a deterministic open-loop
/// control, or a base law shifted pathwise by eps * direction.
class ControlLaw {
 public:
  enum class Kind { feedback, open_loop, perturbed };

  static ControlLaw feedback(FeedbackLaw gains);
  /// One control vector per grid node.
  static ControlLaw open_loop(std::vector<Vector> u);
  static ControlLaw perturbed(ControlLaw base, std::vector<Vector> direction, double eps);

  Kind kind() const noexcept;

  /// Control at node i for state x when the mean state is mean_x.
  void control(std::size_t i, const Eigen::Ref<const Vector>& x, const Vector& mean_x,
               Eigen::Ref<Vector> out) const;
  Vector control(std::size_t i, const Vector& x, const Vector& mean_x) const;

  /// E[u] at node i given E[X] = mean_x. Exact for every variant since the
  /// feedback part averages to K1 E[X] and directions are deterministic.
  Vector mean_control(std::size_t i, const Vector& mean_x) const;

  /// Number of grid nodes the law is defined on.
  std::size_t nodes() const noexcept;
  Eigen::Index control_dim() const noexcept;

  /// Innermost non-perturbed law.
  const ControlLaw& root() const noexcept;

 private:
  struct OpenLoop {
    std::vector<Vector> u;
  };
  struct Perturbation {
    std::shared_ptr<const ControlLaw> base;
    std::vector<Vector> direction;
    double eps = 0.0;
  };

  explicit ControlLaw(std::variant<FeedbackLaw, OpenLoop, Perturbation> v) : law_(std::move(v)) {}

  std::variant<FeedbackLaw, OpenLoop, Perturbation> law_;
};

}  // namespace mflq
