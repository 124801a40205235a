#include "msvi/group.hpp"

#include <Eigen/Dense>
#include <sstream>

namespace msvi {

const char* to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::SE3: return "SE3";
    case GroupKind::SO3: return "SO3";
    case GroupKind::AbelianRn: return "AbelianRn";
  }
  return "?";
}

namespace detail {

Eigen::Matrix3d hat3(const Eigen::Vector3d& w) {
  Eigen::Matrix3d W;
  W << 0, -w.z(), w.y(),
       w.z(), 0, -w.x(),
       -w.y(), w.x(), 0;
  return W;
}

void require_same_kind(const GroupElement& g, const GroupElement& h, const char* op) {
  if (g.kind() != h.kind() || g.algebra_dim() != h.algebra_dim()) {
    std::ostringstream os;
    os << op << ": variant mismatch (" << to_string(g.kind()) << " dim " << g.algebra_dim()
       << " vs " << to_string(h.kind()) << " dim " << h.algebra_dim() << ")";
    throw VariantMismatchError(os.str());
  }
}

}  // namespace detail

using detail::hat3;

GroupElement GroupElement::se3(const Eigen::Matrix3d& R, const Eigen::Vector3d& r) {
  GroupElement g;
  g.kind_ = GroupKind::SE3;
  g.R_ = R;
  g.r_ = r;
  g.value_.resize(0);
  return g;
}

GroupElement GroupElement::so3(const Eigen::Matrix3d& R) {
  GroupElement g;
  g.kind_ = GroupKind::SO3;
  g.R_ = R;
  g.r_.setZero();
  g.value_.resize(0);
  return g;
}

GroupElement GroupElement::abelian(Eigen::VectorXd value) {
  GroupElement g;
  g.kind_ = GroupKind::AbelianRn;
  g.R_.setIdentity();
  g.r_.setZero();
  g.value_ = std::move(value);
  return g;
}

GroupElement GroupElement::identity(GroupKind kind, int abelian_dim) {
  switch (kind) {
    case GroupKind::SE3: return se3(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
    case GroupKind::SO3: return so3(Eigen::Matrix3d::Identity());
    case GroupKind::AbelianRn: return abelian(Eigen::VectorXd::Zero(abelian_dim));
  }
  throw Error("identity: unknown kind");
}

int GroupElement::algebra_dim() const {
  switch (kind_) {
    case GroupKind::SE3: return 6;
    case GroupKind::SO3: return 3;
    case GroupKind::AbelianRn: return static_cast<int>(value_.size());
  }
  return 0;
}

const Eigen::Matrix3d& GroupElement::rotation() const {
  if (kind_ == GroupKind::AbelianRn) throw VariantMismatchError("rotation(): abelian element");
  return R_;
}

const Eigen::Vector3d& GroupElement::translation() const {
  if (kind_ != GroupKind::SE3) throw VariantMismatchError("translation(): not an SE3 element");
  return r_;
}

const Eigen::VectorXd& GroupElement::value() const {
  if (kind_ != GroupKind::AbelianRn) throw VariantMismatchError("value(): not an abelian element");
  return value_;
}

Eigen::MatrixXd GroupElement::matrix() const {
  switch (kind_) {
    case GroupKind::SO3:
      return R_;
    case GroupKind::SE3: {
      Eigen::Matrix4d M = Eigen::Matrix4d::Identity();
      M.topLeftCorner<3, 3>() = R_;
      M.topRightCorner<3, 1>() = r_;
      return M;
    }
    case GroupKind::AbelianRn: {
      const int n = static_cast<int>(value_.size());
      Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n + 1, n + 1);
      M.topRightCorner(n, 1) = value_;
      return M;
    }
  }
  throw Error("matrix(): unknown kind");
}

AlgebraVector AlgebraVector::zero(GroupKind kind, int abelian_dim) {
  int d = kind == GroupKind::SE3 ? 6 : kind == GroupKind::SO3 ? 3 : abelian_dim;
  return {kind, Eigen::VectorXd::Zero(d)};
}

CoAlgebraVector CoAlgebraVector::zero(GroupKind kind, int abelian_dim) {
  int d = kind == GroupKind::SE3 ? 6 : kind == GroupKind::SO3 ? 3 : abelian_dim;
  return {kind, Eigen::VectorXd::Zero(d)};
}

double pairing(const CoAlgebraVector& m, const AlgebraVector& x) {
  return m.coords.dot(x.coords);
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  detail::require_same_kind(g, h, "compose");
  switch (g.kind()) {
    case GroupKind::SO3:
      return GroupElement::so3(g.rotation() * h.rotation());
    case GroupKind::SE3:
      return GroupElement::se3(g.rotation() * h.rotation(),
                               g.rotation() * h.translation() + g.translation());
    case GroupKind::AbelianRn:
      return GroupElement::abelian(g.value() + h.value());
  }
  throw Error("compose: unknown kind");
}

GroupElement inverse(const GroupElement& g) {
  switch (g.kind()) {
    case GroupKind::SO3:
      return GroupElement::so3(g.rotation().transpose());
    case GroupKind::SE3:
      return GroupElement::se3(g.rotation().transpose(),
                               -(g.rotation().transpose() * g.translation()));
    case GroupKind::AbelianRn:
      return GroupElement::abelian(-g.value());
  }
  throw Error("inverse: unknown kind");
}

Eigen::MatrixXd hat(const AlgebraVector& x) {
  switch (x.kind) {
    case GroupKind::SO3:
      return hat3(x.coords.head<3>());
    case GroupKind::SE3: {
      Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
      M.topLeftCorner<3, 3>() = hat3(x.coords.head<3>());
      M.topRightCorner<3, 1>() = x.coords.tail<3>();
      return M;
    }
    case GroupKind::AbelianRn: {
      const int n = x.dim();
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
      M.topRightCorner(n, 1) = x.coords;
      return M;
    }
  }
  throw Error("hat: unknown kind");
}

AlgebraVector vee(GroupKind kind, const Eigen::MatrixXd& M, double tol) {
  AlgebraVector x;
  x.kind = kind;
  switch (kind) {
    case GroupKind::SO3: {
      if (M.rows() != 3 || M.cols() != 3) throw NotInAlgebraError("vee: so(3) expects 3x3", -1);
      x.coords.resize(3);
      x.coords << M(2, 1), M(0, 2), M(1, 0);
      break;
    }
    case GroupKind::SE3: {
      if (M.rows() != 4 || M.cols() != 4) throw NotInAlgebraError("vee: se(3) expects 4x4", -1);
      x.coords.resize(6);
      x.coords << M(2, 1), M(0, 2), M(1, 0), M(0, 3), M(1, 3), M(2, 3);
      break;
    }
    case GroupKind::AbelianRn: {
      const int n = static_cast<int>(M.rows()) - 1;
      if (n < 1 || M.cols() != M.rows()) throw NotInAlgebraError("vee: abelian expects (n+1)x(n+1)", -1);
      x.coords = M.topRightCorner(n, 1);
      break;
    }
  }
  const double defect = (hat(x) - M).norm();
  if (!(defect <= tol)) {
    std::ostringstream os;
    os << "vee: matrix is not in the algebra image, defect " << defect;
    throw NotInAlgebraError(os.str(), defect);
  }
  return x;
}

Eigen::MatrixXd Ad_matrix(const GroupElement& g) {
  switch (g.kind()) {
    case GroupKind::SO3:
      return g.rotation();
    case GroupKind::SE3: {
      Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
      M.topLeftCorner<3, 3>() = g.rotation();
      M.bottomLeftCorner<3, 3>() = hat3(g.translation()) * g.rotation();
      M.bottomRightCorner<3, 3>() = g.rotation();
      return M;
    }
    case GroupKind::AbelianRn:
      return Eigen::MatrixXd::Identity(g.algebra_dim(), g.algebra_dim());
  }
  throw Error("Ad_matrix: unknown kind");
}

Eigen::MatrixXd ad_matrix(const AlgebraVector& x) {
  switch (x.kind) {
    case GroupKind::SO3:
      return hat3(x.coords.head<3>());
    case GroupKind::SE3: {
      Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
      M.topLeftCorner<3, 3>() = hat3(x.coords.head<3>());
      M.bottomLeftCorner<3, 3>() = hat3(x.coords.tail<3>());
      M.bottomRightCorner<3, 3>() = hat3(x.coords.head<3>());
      return M;
    }
    case GroupKind::AbelianRn:
      return Eigen::MatrixXd::Zero(x.dim(), x.dim());
  }
  throw Error("ad_matrix: unknown kind");
}

AlgebraVector Ad(const GroupElement& g, const AlgebraVector& x) {
  if (g.kind() != x.kind) throw VariantMismatchError("Ad: variant mismatch");
  if (g.kind() == GroupKind::AbelianRn) return x;
  AlgebraVector y;
  y.kind = x.kind;
  if (x.kind == GroupKind::SO3) {
    y.coords = g.rotation() * x.coords;
  } else {
    y.coords.resize(6);
    const Eigen::Vector3d w = g.rotation() * x.coords.head<3>();
    y.coords.head<3>() = w;
    y.coords.tail<3>() = g.translation().cross(w) + g.rotation() * x.coords.tail<3>();
  }
  return y;
}

CoAlgebraVector Ad_star(const GroupElement& g, const CoAlgebraVector& m) {
  if (g.kind() != m.kind) throw VariantMismatchError("Ad_star: variant mismatch");
  if (g.kind() == GroupKind::AbelianRn) return m;
  CoAlgebraVector out;
  out.kind = m.kind;
  out.coords = Ad_matrix(g).transpose() * m.coords;
  return out;
}

CoAlgebraVector ad_star(const AlgebraVector& x, const CoAlgebraVector& m) {
  if (x.kind != m.kind) throw VariantMismatchError("ad_star: variant mismatch");
  CoAlgebraVector out;
  out.kind = m.kind;
  if (x.kind == GroupKind::AbelianRn) {
    out.coords = Eigen::VectorXd::Zero(m.dim());
  } else {
    out.coords = ad_matrix(x).transpose() * m.coords;
  }
  return out;
}

AlgebraVector bracket(const AlgebraVector& x, const AlgebraVector& y) {
  if (x.kind != y.kind) throw VariantMismatchError("bracket: variant mismatch");
  AlgebraVector z;
  z.kind = x.kind;
  z.coords = ad_matrix(x) * y.coords;
  return z;
}

ValidationReport validate(const GroupElement& g, double tol) {
  ValidationReport rep;
  if (g.kind() == GroupKind::AbelianRn) {
    rep.ok = g.value().allFinite();
    return rep;
  }
  const Eigen::Matrix3d& R = g.rotation();
  rep.orthogonality_defect = (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
  rep.det = R.determinant();
  rep.ok = rep.orthogonality_defect <= tol && rep.det > 0 && R.allFinite();
  if (g.kind() == GroupKind::SE3 && !g.translation().allFinite()) rep.ok = false;
  return rep;
}

double distance(const GroupElement& g, const GroupElement& h) {
  detail::require_same_kind(g, h, "distance");
  switch (g.kind()) {
    case GroupKind::SO3:
      return (g.rotation() - h.rotation()).norm();
    case GroupKind::SE3:
      return std::sqrt((g.rotation() - h.rotation()).squaredNorm() +
                       (g.translation() - h.translation()).squaredNorm());
    case GroupKind::AbelianRn:
      return (g.value() - h.value()).norm();
  }
  throw Error("distance: unknown kind");
}

}  // namespace msvi
