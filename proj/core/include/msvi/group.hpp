#pragma once

#include <Eigen/Core>

#include "msvi/errors.hpp"

namespace msvi {

enum class GroupKind { SE3, SO3, AbelianRn };

const char* to_string(GroupKind kind);

/// Configuration value at one grid node: an element of SE(3), SO(3) or the
/// abelian group (R^n, +).
///
/// Rotations are stored as full 3x3 matrices. No reorthonormalization is ever
/// applied; use validate() to measure drift.
class GroupElement {
public:
  /// Defaults to the abelian zero element of R^1.
  GroupElement()
      : kind_(GroupKind::AbelianRn),
        R_(Eigen::Matrix3d::Identity()),
        r_(Eigen::Vector3d::Zero()),
        value_(Eigen::VectorXd::Zero(1)) {}

  static GroupElement se3(const Eigen::Matrix3d& R, const Eigen::Vector3d& r);
  static GroupElement so3(const Eigen::Matrix3d& R);
  static GroupElement abelian(Eigen::VectorXd value);
  static GroupElement identity(GroupKind kind, int abelian_dim = 1);

  GroupKind kind() const { return kind_; }
  /// Dimension of the associated Lie algebra (6, 3, or n).
  int algebra_dim() const;

  const Eigen::Matrix3d& rotation() const;
  const Eigen::Vector3d& translation() const;
  const Eigen::VectorXd& value() const;

  /// Homogeneous matrix form: 4x4 for SE3, 3x3 for SO3, (n+1)x(n+1) for
  /// AbelianRn (translation block form).
  Eigen::MatrixXd matrix() const;

private:
  GroupKind kind_;
  Eigen::Matrix3d R_;
  Eigen::Vector3d r_;
  Eigen::VectorXd value_;
};

/// Element of the Lie algebra in the ordered coordinate basis.
/// se(3): (Omega_1, Omega_2, Omega_3, Gamma_1, Gamma_2, Gamma_3) —
/// angular part first, linear part second, axial direction last.
struct AlgebraVector {
  GroupKind kind;
  Eigen::VectorXd coords;

  static AlgebraVector zero(GroupKind kind, int abelian_dim = 1);
  int dim() const { return static_cast<int>(coords.size()); }
};

/// Element of the dual algebra; the pairing with AlgebraVector is the
/// Euclidean dot product in these coordinates.
struct CoAlgebraVector {
  GroupKind kind;
  Eigen::VectorXd coords;

  static CoAlgebraVector zero(GroupKind kind, int abelian_dim = 1);
  int dim() const { return static_cast<int>(coords.size()); }
};

double pairing(const CoAlgebraVector& m, const AlgebraVector& x);

GroupElement compose(const GroupElement& g, const GroupElement& h);
GroupElement inverse(const GroupElement& g);

/// hat: coordinates -> matrix form of the algebra element.
Eigen::MatrixXd hat(const AlgebraVector& x);

/// vee: matrix form -> coordinates. The matrix must lie in the algebra's
/// image within `tol` (Frobenius norm of the defect), else NotInAlgebraError.
AlgebraVector vee(GroupKind kind, const Eigen::MatrixXd& M, double tol = 1e-12);

AlgebraVector Ad(const GroupElement& g, const AlgebraVector& x);
CoAlgebraVector Ad_star(const GroupElement& g, const CoAlgebraVector& m);
CoAlgebraVector ad_star(const AlgebraVector& x, const CoAlgebraVector& m);
AlgebraVector bracket(const AlgebraVector& x, const AlgebraVector& y);

/// Coordinate matrices of the adjoint actions (dim x dim).
Eigen::MatrixXd Ad_matrix(const GroupElement& g);
Eigen::MatrixXd ad_matrix(const AlgebraVector& x);

struct ValidationReport {
  double orthogonality_defect = 0.0;  // ||R^T R - I||_F
  double det = 1.0;
  bool ok = true;
};

/// Measures group-invariant drift. Reports, never repairs.
ValidationReport validate(const GroupElement& g, double tol = 1e-10);

/// Frobenius/Euclidean distance between two elements of the same variant.
double distance(const GroupElement& g, const GroupElement& h);

namespace detail {
Eigen::Matrix3d hat3(const Eigen::Vector3d& w);
void require_same_kind(const GroupElement& g, const GroupElement& h, const char* op);
}  // namespace detail

}  // namespace msvi
