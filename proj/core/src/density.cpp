#include "msvi/density.hpp"

#include <cmath>
#include <sstream>

namespace msvi {

Eigen::Matrix<double, 6, 1> BeamParameters::inertia_diagonal() const {
  Eigen::Matrix<double, 6, 1> d;
  d << rho * inertia1(), rho * inertia2(), rho * polar(), rho * area(), rho * area(), rho * area();
  return d;
}

Eigen::Matrix<double, 6, 1> BeamParameters::stiffness_diagonal() const {
  const double E = youngs_modulus, G = shear_modulus(), A = area();
  Eigen::Matrix<double, 6, 1> d;
  d << E * inertia1(), E * inertia2(), G * polar(), G * A, G * A, E * A;
  return d;
}

void BeamParameters::validate() const {
  auto reject = [](const char* name, double v) {
    std::ostringstream os;
    os << "beam parameter " << name << " must be strictly positive, got " << v;
    throw InvalidParameterError(os.str());
  };
  if (!(side > 0)) reject("side", side);
  if (!(rho > 0)) reject("rho", rho);
  if (!(youngs_modulus > 0)) reject("youngs_modulus", youngs_modulus);
  if (!(shear_modulus() > 0) || !std::isfinite(shear_modulus()))
    reject("shear modulus G = E/(2(1+nu))", shear_modulus());
}

Eigen::Matrix<double, 6, 1> beam_reference_strain() {
  Eigen::Matrix<double, 6, 1> e6;
  e6 << 0, 0, 0, 0, 0, 1;
  return e6;
}

namespace {

class BeamDensity final : public DensityModel {
public:
  BeamDensity(const BeamParameters& params, double dt, double ds, std::optional<Potential> pot)
      : DensityModel(dt, ds),
        J_(params.inertia_diagonal()),
        C_(params.stiffness_diagonal()),
        e6_(beam_reference_strain()),
        potential_(std::move(pot)),
        symmetry_(potential_ ? SymmetryDeclaration::none() : SymmetryDeclaration::full_group()) {}

  GroupKind group_kind() const override { return GroupKind::SE3; }
  int algebra_dim() const override { return 6; }

  double evaluate(const GroupElement& g, const AlgebraVector& xi,
                  const AlgebraVector& eta) const override {
    const Eigen::Matrix<double, 6, 1> x = xi.coords;
    const Eigen::Matrix<double, 6, 1> d = eta.coords - e6_;
    double density = 0.5 * x.dot(J_.cwiseProduct(x)) - 0.5 * d.dot(C_.cwiseProduct(d));
    if (potential_) density -= potential_->value(g);
    return dt() * ds() * density;
  }

  CoAlgebraVector d_xi(const GroupElement&, const AlgebraVector& xi,
                       const AlgebraVector&) const override {
    return {GroupKind::SE3, dt() * ds() * J_.cwiseProduct(xi.coords)};
  }

  CoAlgebraVector d_eta(const GroupElement&, const AlgebraVector&,
                        const AlgebraVector& eta) const override {
    return {GroupKind::SE3, -dt() * ds() * C_.cwiseProduct(eta.coords - e6_)};
  }

  CoAlgebraVector d_g(const GroupElement& g, const AlgebraVector&,
                      const AlgebraVector&) const override {
    if (!potential_) return CoAlgebraVector::zero(GroupKind::SE3);
    return {GroupKind::SE3, -dt() * ds() * potential_->d_trivialized(g)};
  }

  const SymmetryDeclaration& symmetry() const override { return symmetry_; }

private:
  Eigen::Matrix<double, 6, 1> J_, C_, e6_;
  std::optional<Potential> potential_;
  SymmetryDeclaration symmetry_;
};

class ScalarWaveDensity final : public DensityModel {
public:
  ScalarWaveDensity(double c, double dt, double ds) : DensityModel(dt, ds), c2_(c * c) {}

  GroupKind group_kind() const override { return GroupKind::AbelianRn; }
  int algebra_dim() const override { return 1; }

  double evaluate(const GroupElement&, const AlgebraVector& xi,
                  const AlgebraVector& eta) const override {
    return dt() * ds() * (0.5 * xi.coords(0) * xi.coords(0) - 0.5 * c2_ * eta.coords(0) * eta.coords(0));
  }

  CoAlgebraVector d_xi(const GroupElement&, const AlgebraVector& xi,
                       const AlgebraVector&) const override {
    return {GroupKind::AbelianRn, dt() * ds() * xi.coords};
  }

  CoAlgebraVector d_eta(const GroupElement&, const AlgebraVector&,
                        const AlgebraVector& eta) const override {
    return {GroupKind::AbelianRn, -dt() * ds() * c2_ * eta.coords};
  }

  CoAlgebraVector d_g(const GroupElement&, const AlgebraVector&,
                      const AlgebraVector&) const override {
    return CoAlgebraVector::zero(GroupKind::AbelianRn, 1);
  }

  const SymmetryDeclaration& symmetry() const override { return symmetry_; }

private:
  double c2_;
  SymmetryDeclaration symmetry_ = SymmetryDeclaration::full_group();
};

}  // namespace

std::unique_ptr<DensityModel> beam_density(const BeamParameters& params, double dt, double ds,
                                           std::optional<Potential> potential) {
  params.validate();
  if (!(dt > 0) || !(ds > 0)) throw InvalidParameterError("beam_density: dt and ds must be positive");
  return std::make_unique<BeamDensity>(params, dt, ds, std::move(potential));
}

std::unique_ptr<DensityModel> scalar_wave_density(double wave_speed, double dt, double ds) {
  if (!(wave_speed > 0)) throw InvalidParameterError("scalar_wave_density: wave speed must be positive");
  if (!(dt > 0) || !(ds > 0))
    throw InvalidParameterError("scalar_wave_density: dt and ds must be positive");
  return std::make_unique<ScalarWaveDensity>(wave_speed, dt, ds);
}

CoAlgebraVector discrete_momentum_mu(const DensityModel& model, const Retraction& ret,
                                     const GroupElement& g, const AlgebraVector& xi,
                                     const AlgebraVector& eta) {
  AlgebraVector scaled{xi.kind, model.dt() * xi.coords};
  return ret.dtauR_inv_star(scaled, model.d_xi(g, xi, eta));
}

CoAlgebraVector discrete_momentum_lambda(const DensityModel& model, const Retraction& ret,
                                         const GroupElement& g, const AlgebraVector& xi,
                                         const AlgebraVector& eta) {
  AlgebraVector scaled{eta.kind, model.ds() * eta.coords};
  return ret.dtauR_inv_star(scaled, model.d_eta(g, xi, eta));
}

std::pair<CoAlgebraVector, CoAlgebraVector> discrete_momenta(const DensityModel& model,
                                                             const Retraction& ret,
                                                             const GroupElement& g,
                                                             const AlgebraVector& xi,
                                                             const AlgebraVector& eta) {
  return {discrete_momentum_mu(model, ret, g, xi, eta),
          discrete_momentum_lambda(model, ret, g, xi, eta)};
}

}  // namespace msvi
