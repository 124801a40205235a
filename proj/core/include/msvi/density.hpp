#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>

#include "msvi/group.hpp"
#include "msvi/retraction.hpp"

namespace msvi {

/// Symmetry declaration of a density: invariance under the full fiber group,
/// a subgroup H given by an inclusion matrix (columns = generators of h in
/// algebra coordinates), or none.
struct SymmetryDeclaration {
  enum class Type { FullGroup, Subgroup, None };
  Type type = Type::FullGroup;
  Eigen::MatrixXd inclusion;  // dim x k, only for Subgroup

  static SymmetryDeclaration full_group() { return {}; }
  static SymmetryDeclaration none() { return {Type::None, {}}; }
  static SymmetryDeclaration subgroup(Eigen::MatrixXd incl) {
    return {Type::Subgroup, std::move(incl)};
  }

  /// Dimension of h* (equals the algebra dimension unless a proper subgroup).
  int subgroup_dim(int algebra_dim) const {
    return type == Type::Subgroup ? static_cast<int>(inclusion.cols()) : algebra_dim;
  }
  /// i*: g* -> h*, the transpose of the inclusion.
  Eigen::VectorXd project(const Eigen::VectorXd& m) const {
    return type == Type::Subgroup ? Eigen::VectorXd(inclusion.transpose() * m) : m;
  }
};

/// Optional configuration-dependent potential term Pi(g) with its
/// left-trivialized derivative g^{-1} D_g Pi.
struct Potential {
  std::function<double(const GroupElement&)> value;
  std::function<Eigen::VectorXd(const GroupElement&)> d_trivialized;
};

/// Discrete Lagrangian density on one triangle. evaluate() returns the
/// action contribution of the cell, i.e. the density already multiplied by
/// dt*ds. Partials are exact and covectors are trivialized. Models are
/// immutable after construction and all evaluations are pure.
class DensityModel {
public:
  DensityModel(double dt, double ds) : dt_(dt), ds_(ds) {}
  virtual ~DensityModel() = default;

  virtual GroupKind group_kind() const = 0;
  virtual int algebra_dim() const = 0;
  double dt() const { return dt_; }
  double ds() const { return ds_; }

  virtual double evaluate(const GroupElement& g, const AlgebraVector& xi,
                          const AlgebraVector& eta) const = 0;
  virtual CoAlgebraVector d_xi(const GroupElement& g, const AlgebraVector& xi,
                               const AlgebraVector& eta) const = 0;
  virtual CoAlgebraVector d_eta(const GroupElement& g, const AlgebraVector& xi,
                                const AlgebraVector& eta) const = 0;
  /// g^{-1} D_g of the cell action (zero for invariant densities).
  virtual CoAlgebraVector d_g(const GroupElement& g, const AlgebraVector& xi,
                              const AlgebraVector& eta) const = 0;
  virtual const SymmetryDeclaration& symmetry() const = 0;

private:
  double dt_, ds_;
};

/// Geometrically exact beam section/material data. Derived quantities follow
/// a square cross-section of side `side`.
struct BeamParameters {
  double side = 0.01;            // m
  double rho = 0.01;             // kg/m^3
  double youngs_modulus = 25.0;  // Pa
  double poisson = 0.35;

  double area() const { return side * side; }
  double inertia1() const { return side * side * side * side / 12.0; }
  double inertia2() const { return inertia1(); }
  double polar() const { return inertia1() + inertia2(); }
  double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson)); }

  /// diag(rho I1, rho I2, rho Jp, rho A, rho A, rho A)
  Eigen::Matrix<double, 6, 1> inertia_diagonal() const;
  /// diag(E I1, E I2, G Jp, G A, G A, E A)
  Eigen::Matrix<double, 6, 1> stiffness_diagonal() const;

  /// Throws InvalidParameterError unless all physical parameters are
  /// strictly positive (poisson must also keep G positive and finite).
  void validate() const;
};

/// Reference strain of the undeformed beam (axial direction last).
Eigen::Matrix<double, 6, 1> beam_reference_strain();

/// Beam density dt*ds*[K(xi) - Phi(eta) - Pi(g)] on SE(3) with
/// K(xi) = 1/2 <J xi, xi> and Phi(eta) = 1/2 <C (eta - E6), (eta - E6)>.
/// Without a potential the density is fully SE(3)-invariant.
std::unique_ptr<DensityModel> beam_density(const BeamParameters& params, double dt, double ds,
                                           std::optional<Potential> potential = std::nullopt);

/// Abelian scalar-wave density dt*ds*[xi^2/2 - c^2 eta^2/2] on R.
std::unique_ptr<DensityModel> scalar_wave_density(double wave_speed, double dt, double ds);

/// Discrete momenta of one triangle:
///   mu     = (d^R tau^{-1}_{dt xi})^*  D_xi
///   lambda = (d^R tau^{-1}_{ds eta})^* D_eta
std::pair<CoAlgebraVector, CoAlgebraVector> discrete_momenta(const DensityModel& model,
                                                             const Retraction& ret,
                                                             const GroupElement& g,
                                                             const AlgebraVector& xi,
                                                             const AlgebraVector& eta);

CoAlgebraVector discrete_momentum_mu(const DensityModel& model, const Retraction& ret,
                                     const GroupElement& g, const AlgebraVector& xi,
                                     const AlgebraVector& eta);
CoAlgebraVector discrete_momentum_lambda(const DensityModel& model, const Retraction& ret,
                                         const GroupElement& g, const AlgebraVector& xi,
                                         const AlgebraVector& eta);

}  // namespace msvi
