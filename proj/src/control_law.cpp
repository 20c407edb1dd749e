#include "mflq/control_law.hpp"

#include <stdexcept>

namespace mflq {

ControlLaw ControlLaw::feedback(FeedbackLaw gains) {
  if (gains.K0.empty() || gains.K0.size() != gains.K1.size()) {
    throw std::invalid_argument("feedback law needs matching, non-empty K0 and K1 tracks");
  }
  return ControlLaw(std::move(gains));
}

ControlLaw ControlLaw::open_loop(std::vector<Vector> u) {
  if (u.empty()) throw std::invalid_argument("open-loop control needs at least one node");
  return ControlLaw(OpenLoop{std::move(u)});
}

ControlLaw ControlLaw::perturbed(ControlLaw base, std::vector<Vector> direction, double eps) {
  if (direction.size() < base.nodes()) {
    throw std::invalid_argument("perturbation direction shorter than the base law");
  }
  return ControlLaw(Perturbation{std::make_shared<const ControlLaw>(std::move(base)),
                                 std::move(direction), eps});
}

ControlLaw::Kind ControlLaw::kind() const noexcept {
  switch (law_.index()) {
    case 0: return Kind::feedback;
    case 1: return Kind::open_loop;
    default: return Kind::perturbed;
  }
}

void ControlLaw::control(std::size_t i, const Eigen::Ref<const Vector>& x, const Vector& mean_x,
                         Eigen::Ref<Vector> out) const {
  if (const auto* fb = std::get_if<FeedbackLaw>(&law_)) {
    out.noalias() = fb->K0[i] * x;
    out.noalias() -= fb->K0[i] * mean_x;
    out.noalias() += fb->K1[i] * mean_x;
  } else if (const auto* ol = std::get_if<OpenLoop>(&law_)) {
    out = ol->u[i];
  } else {
    const auto& p = std::get<Perturbation>(law_);
    p.base->control(i, x, mean_x, out);
    out += p.eps * p.direction[i];
  }
}

Vector ControlLaw::control(std::size_t i, const Vector& x, const Vector& mean_x) const {
  Vector out(control_dim());
  control(i, x, mean_x, out);
  return out;
}

Vector ControlLaw::mean_control(std::size_t i, const Vector& mean_x) const {
  if (const auto* fb = std::get_if<FeedbackLaw>(&law_)) return fb->K1[i] * mean_x;
  if (const auto* ol = std::get_if<OpenLoop>(&law_)) return ol->u[i];
  const auto& p = std::get<Perturbation>(law_);
  return p.base->mean_control(i, mean_x) + p.eps * p.direction[i];
}

std::size_t ControlLaw::nodes() const noexcept {
  if (const auto* fb = std::get_if<FeedbackLaw>(&law_)) return fb->K0.size();
  if (const auto* ol = std::get_if<OpenLoop>(&law_)) return ol->u.size();
  return std::get<Perturbation>(law_).base->nodes();
}

Eigen::Index ControlLaw::control_dim() const noexcept {
  if (const auto* fb = std::get_if<FeedbackLaw>(&law_)) return fb->K0.front().rows();
  if (const auto* ol = std::get_if<OpenLoop>(&law_)) return ol->u.front().size();
  return std::get<Perturbation>(law_).base->control_dim();
}

const ControlLaw& ControlLaw::root() const noexcept {
  if (const auto* p = std::get_if<Perturbation>(&law_)) return p->base->root();
  return *this;
}

}  // namespace mflq
