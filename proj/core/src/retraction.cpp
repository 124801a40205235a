#include "msvi/retraction.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace msvi {

using detail::hat3;

namespace {

// (I - S)^{-1} for skew S = hat3(s): I + (S + S^2) / (1 + |s|^2).
Eigen::Matrix3d inv_identity_minus_skew(const Eigen::Vector3d& s) {
  const Eigen::Matrix3d S = hat3(s);
  return Eigen::Matrix3d::Identity() + (S + S * S) / (1.0 + s.squaredNorm());
}

Eigen::Matrix3d cay_so3(const Eigen::Vector3d& w) {
  const Eigen::Vector3d s = 0.5 * w;
  return inv_identity_minus_skew(s) * (Eigen::Matrix3d::Identity() + hat3(s));
}

Eigen::Vector3d cay_inv_so3(const Eigen::Matrix3d& R) {
  // Singular at trace(R) = -1 (rotation by pi); callers gate on the angle.
  const double c = 2.0 / (1.0 + R.trace());
  return c * Eigen::Vector3d(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double th = w.norm();
  const Eigen::Matrix3d W = hat3(w);
  double a, b;
  if (th < 1e-8) {
    a = 1.0 - th * th / 6.0;
    b = 0.5 - th * th / 24.0;
  } else {
    a = std::sin(th) / th;
    b = (1.0 - std::cos(th)) / (th * th);
  }
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double cos_th = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double sin_th = 0.5 * axis.norm();
  const double th = std::atan2(sin_th, cos_th);
  if (th < 1e-8) return 0.5 * axis;  // log R ~ (R - R^T)/2 near identity
  return (th / (2.0 * std::sin(th))) * axis;
}

// V(w) with exp(w, v) = (exp_so3(w), V(w) v).
Eigen::Matrix3d exp_se3_V(const Eigen::Vector3d& w) {
  const double th = w.norm();
  const Eigen::Matrix3d W = hat3(w);
  double b, c;
  if (th < 1e-8) {
    b = 0.5 - th * th / 24.0;
    c = 1.0 / 6.0 - th * th / 120.0;
  } else {
    b = (1.0 - std::cos(th)) / (th * th);
    c = (th - std::sin(th)) / (th * th * th);
  }
  return Eigen::Matrix3d::Identity() + b * W + c * W * W;
}

}  // namespace

Retraction Retraction::from_name(std::string_view name) {
  if (name == "cayley" || name == "cay") return Retraction(RetractionKind::Cayley);
  if (name == "exp" || name == "exponential") return Retraction(RetractionKind::Exponential);
  if (name == "identity") return Retraction(RetractionKind::Identity);
  throw InvalidParameterError("unknown retraction kind: " + std::string(name));
}

const char* Retraction::name() const {
  switch (kind_) {
    case RetractionKind::Cayley: return "cayley";
    case RetractionKind::Exponential: return "exp";
    case RetractionKind::Identity: return "identity";
  }
  return "?";
}

double rotation_angle(const GroupElement& g) {
  if (g.kind() == GroupKind::AbelianRn) return 0.0;
  const Eigen::Matrix3d& R = g.rotation();
  const Eigen::Vector3d axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * axis.norm(), std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0));
}

GroupElement Retraction::tau(const AlgebraVector& x) const {
  switch (x.kind) {
    case GroupKind::AbelianRn:
      return GroupElement::abelian(x.coords);
    case GroupKind::SO3: {
      if (kind_ == RetractionKind::Identity)
        throw InvalidParameterError("identity retraction is only defined on the abelian variant");
      const Eigen::Vector3d w = x.coords.head<3>();
      return GroupElement::so3(kind_ == RetractionKind::Cayley ? cay_so3(w) : exp_so3(w));
    }
    case GroupKind::SE3: {
      if (kind_ == RetractionKind::Identity)
        throw InvalidParameterError("identity retraction is only defined on the abelian variant");
      const Eigen::Vector3d w = x.coords.head<3>();
      const Eigen::Vector3d v = x.coords.tail<3>();
      if (kind_ == RetractionKind::Cayley) {
        return GroupElement::se3(cay_so3(w), inv_identity_minus_skew(0.5 * w) * v);
      }
      return GroupElement::se3(exp_so3(w), exp_se3_V(w) * v);
    }
  }
  throw Error("tau: unknown kind");
}

AlgebraVector Retraction::tau_inv(const GroupElement& g) const {
  if (g.kind() == GroupKind::AbelianRn) return {GroupKind::AbelianRn, g.value()};
  if (kind_ == RetractionKind::Identity)
    throw InvalidParameterError("identity retraction is only defined on the abelian variant");

  const double angle = rotation_angle(g);
  if (angle > validity_radius_) {
    std::ostringstream os;
    os << "tau_inv (" << name() << "): rotation angle " << angle
       << " exceeds the validity radius " << validity_radius_
       << " (singular at angle pi)";
    throw RetractionDomainError(os.str());
  }

  AlgebraVector x;
  x.kind = g.kind();
  if (kind_ == RetractionKind::Cayley) {
    const Eigen::Vector3d w = cay_inv_so3(g.rotation());
    if (g.kind() == GroupKind::SO3) {
      x.coords = w;
    } else {
      x.coords.resize(6);
      x.coords.head<3>() = w;
      x.coords.tail<3>() = (Eigen::Matrix3d::Identity() - 0.5 * hat3(w)) * g.translation();
    }
  } else {
    const Eigen::Vector3d w = log_so3(g.rotation());
    if (g.kind() == GroupKind::SO3) {
      x.coords = w;
    } else {
      x.coords.resize(6);
      x.coords.head<3>() = w;
      x.coords.tail<3>() = exp_se3_V(w).partialPivLu().solve(g.translation());
    }
  }
  return x;
}

AlgebraVector Retraction::dtauR(const AlgebraVector& x, const AlgebraVector& y) const {
  if (x.kind != y.kind) throw VariantMismatchError("dtauR: variant mismatch");
  if (x.kind == GroupKind::AbelianRn) return y;
  if (kind_ == RetractionKind::Identity)
    throw InvalidParameterError("identity retraction is only defined on the abelian variant");

  if (kind_ == RetractionKind::Cayley) {
    // d^R cay_X(Y) = (I - X/2)^{-1} Y (I + X/2)^{-1} in matrix form.
    const Eigen::MatrixXd X = hat(x);
    const Eigen::MatrixXd Y = hat(y);
    const int n = static_cast<int>(X.rows());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd M =
        (I - 0.5 * X).partialPivLu().solve(Y) * (I + 0.5 * X).partialPivLu().inverse();
    return vee(x.kind, M, 1e-9);
  }

  // Exponential: d^R exp_x = sum_k ad_x^k / (k+1)! applied to y.
  const Eigen::MatrixXd adx = ad_matrix(x);
  Eigen::VectorXd term = y.coords;
  Eigen::VectorXd sum = term;
  for (int k = 1; k <= 64; ++k) {
    term = (adx * term) / (k + 1.0);
    sum += term;
    if (term.norm() <= 1e-17 * sum.norm()) break;
  }
  return {x.kind, sum};
}

AlgebraVector Retraction::dtauR_inv(const AlgebraVector& x, const AlgebraVector& y) const {
  if (x.kind != y.kind) throw VariantMismatchError("dtauR_inv: variant mismatch");
  if (x.kind == GroupKind::AbelianRn) return y;
  if (kind_ == RetractionKind::Identity)
    throw InvalidParameterError("identity retraction is only defined on the abelian variant");

  if (kind_ == RetractionKind::Cayley) {
    // (d^R cay_X)^{-1}(Z) = (I - X/2) Z (I + X/2).
    const Eigen::MatrixXd X = hat(x);
    const Eigen::MatrixXd Z = hat(y);
    const int n = static_cast<int>(X.rows());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    return vee(x.kind, (I - 0.5 * X) * Z * (I + 0.5 * X), 1e-9);
  }

  return {x.kind, dtauR_matrix(x).partialPivLu().solve(y.coords)};
}

Eigen::MatrixXd Retraction::dtauR_matrix(const AlgebraVector& x) const {
  const int d = x.dim();
  Eigen::MatrixXd M(d, d);
  AlgebraVector e{x.kind, Eigen::VectorXd::Zero(d)};
  for (int i = 0; i < d; ++i) {
    e.coords.setZero();
    e.coords(i) = 1.0;
    M.col(i) = dtauR(x, e).coords;
  }
  return M;
}

CoAlgebraVector Retraction::dtauR_star(const AlgebraVector& x, const CoAlgebraVector& m) const {
  if (x.kind != m.kind) throw VariantMismatchError("dtauR_star: variant mismatch");
  if (x.kind == GroupKind::AbelianRn) return m;
  return {x.kind, dtauR_matrix(x).transpose() * m.coords};
}

CoAlgebraVector Retraction::dtauR_inv_star(const AlgebraVector& x, const CoAlgebraVector& m) const {
  if (x.kind != m.kind) throw VariantMismatchError("dtauR_inv_star: variant mismatch");
  if (x.kind == GroupKind::AbelianRn) return m;
  if (kind_ == RetractionKind::Cayley) {
    // Transpose of the closed-form inverse sandwich, applied column-wise.
    const int d = x.dim();
    Eigen::MatrixXd Minv(d, d);
    AlgebraVector e{x.kind, Eigen::VectorXd::Zero(d)};
    for (int i = 0; i < d; ++i) {
      e.coords.setZero();
      e.coords(i) = 1.0;
      Minv.col(i) = dtauR_inv(x, e).coords;
    }
    return {x.kind, Minv.transpose() * m.coords};
  }
  return {x.kind, dtauR_matrix(x).transpose().partialPivLu().solve(m.coords)};
}

}  // namespace msvi
