#pragma once

#include <string_view>

#include "msvi/group.hpp"

namespace msvi {

enum class RetractionKind { Cayley, Exponential, Identity };

/// Local diffeomorphism tau: g -> G with tau(0) = e, used to encode discrete
/// displacements in the algebra, together with its right-trivialized
/// derivative d^R tau and the dual/inverse maps.
///
/// On SE(3) the Cayley transform acts in the homogeneous 4x4 block form,
/// cay(X) = (I - X/2)^{-1} (I + X/2). On the abelian variant every kind
/// degenerates to the identity retraction tau(x) = x.
class Retraction {
public:
  explicit Retraction(RetractionKind kind) : kind_(kind) {}

  /// Accepts "cayley", "exp" ("exponential"), or "identity".
  static Retraction from_name(std::string_view name);

  RetractionKind kind() const { return kind_; }
  const char* name() const;

  /// Rotation-angle bound inside which tau_inv is accepted (pi - 0.1 for the
  /// rotational kinds, +inf for abelian inputs).
  double validity_radius() const { return validity_radius_; }

  GroupElement tau(const AlgebraVector& x) const;

  /// Inverse retraction. Throws RetractionDomainError when the rotation angle
  /// of g is at or beyond the validity radius (the singular configuration is
  /// named in the message).
  AlgebraVector tau_inv(const GroupElement& g) const;

  /// d^R tau_x(y) = (T_x tau (y)) tau(x)^{-1}, expressed in algebra coords.
  AlgebraVector dtauR(const AlgebraVector& x, const AlgebraVector& y) const;
  /// Inverse operator: dtauR_inv(x, dtauR(x, y)) = y.
  AlgebraVector dtauR_inv(const AlgebraVector& x, const AlgebraVector& y) const;
  /// Duals: <dtauR_star(x, m), y> = <m, dtauR(x, y)>.
  CoAlgebraVector dtauR_star(const AlgebraVector& x, const CoAlgebraVector& m) const;
  CoAlgebraVector dtauR_inv_star(const AlgebraVector& x, const CoAlgebraVector& m) const;

  /// Coordinate matrix of dtauR(x, .) (dim x dim).
  Eigen::MatrixXd dtauR_matrix(const AlgebraVector& x) const;

private:
  RetractionKind kind_;
  double validity_radius_ = 3.14159265358979323846 - 0.1;
};

/// Rotation angle of a group element (0 for abelian).
double rotation_angle(const GroupElement& g);

}  // namespace msvi
