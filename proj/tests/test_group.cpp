#include <doctest.h>

#include "oracles.hpp"

using namespace msvi;

TEST_CASE("identity and inverse") {
  for (int i = 0; i < 50; ++i) {
    GroupElement g = oracle::random_se3();
    GroupElement e = GroupElement::identity(GroupKind::SE3);
    CHECK(distance(compose(e, g), g) == 0.0);
    CHECK(distance(compose(g, inverse(g)), e) <= 1e-12);
  }
}

TEST_CASE("composition follows the homogeneous-matrix product") {
  // (Rx(pi/2), 0) * (I, e3) = (Rx(pi/2), (0,-1,0)); value checked against an
  // independent 4x4 product.
  Eigen::Matrix3d Rx;
  Rx << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  GroupElement g = GroupElement::se3(Rx, Eigen::Vector3d::Zero());
  GroupElement h = GroupElement::se3(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, 1));
  GroupElement gh = compose(g, h);
  CHECK((gh.rotation() - Rx).norm() == 0.0);
  CHECK((gh.translation() - Eigen::Vector3d(0, -1, 0)).norm() <= 1e-15);
}

TEST_CASE("variant mismatch is rejected") {
  GroupElement g = oracle::random_se3();
  GroupElement h = GroupElement::abelian(Eigen::VectorXd::Zero(3));
  CHECK_THROWS_AS(compose(g, h), VariantMismatchError);
  CHECK_THROWS_AS((void)distance(g, h), VariantMismatchError);
}

TEST_CASE("hat and vee") {
  CHECK(hat(AlgebraVector::zero(GroupKind::SE3)).norm() == 0.0);

  AlgebraVector x{GroupKind::SE3, Eigen::VectorXd(6)};
  x.coords << 1, 2, 3, 4, 5, 6;
  AlgebraVector back = vee(GroupKind::SE3, hat(x));
  CHECK((back.coords - x.coords).norm() == 0.0);

  // skew convention fixed by hat(w) v = w x v
  AlgebraVector e1{GroupKind::SE3, Eigen::VectorXd::Zero(6)};
  e1.coords(0) = 1;
  Eigen::Matrix3d expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK((hat(e1).topLeftCorner(3, 3) - expected).norm() == 0.0);
  for (int i = 0; i < 20; ++i) {
    Eigen::Vector3d w = oracle::random_vector(3), v = oracle::random_vector(3);
    CHECK((detail::hat3(w) * v - w.cross(v)).norm() <= 1e-15);
  }

  Eigen::MatrixXd bad = hat(x);
  bad(0, 0) = 0.5;  // breaks skew-symmetry
  CHECK_THROWS_AS(vee(GroupKind::SE3, bad), NotInAlgebraError);
  try {
    vee(GroupKind::SE3, bad);
  } catch (const NotInAlgebraError& e) {
    CHECK(e.defect() > 0.4);
  }
}

TEST_CASE("adjoint actions") {
  GroupElement e = GroupElement::identity(GroupKind::SE3);
  AlgebraVector x = oracle::random_algebra(GroupKind::SE3);
  CoAlgebraVector m = oracle::random_coalgebra(GroupKind::SE3);
  CHECK((Ad(e, x).coords - x.coords).norm() == 0.0);
  CHECK((Ad_star(e, m).coords - m.coords).norm() == 0.0);

  SUBCASE("duality of Ad and Ad*") {
    for (int i = 0; i < 1000; ++i) {
      GroupElement g = oracle::random_se3();
      AlgebraVector xi = oracle::random_algebra(GroupKind::SE3);
      CoAlgebraVector mu = oracle::random_coalgebra(GroupKind::SE3);
      CHECK(std::abs(pairing(Ad_star(g, mu), xi) - pairing(mu, Ad(g, xi))) <= 1e-12);
    }
  }

  SUBCASE("ad* pairs with the bracket") {
    for (int i = 0; i < 200; ++i) {
      AlgebraVector a = oracle::random_algebra(GroupKind::SE3);
      AlgebraVector b = oracle::random_algebra(GroupKind::SE3);
      CoAlgebraVector mm = oracle::random_coalgebra(GroupKind::SE3);
      CHECK(std::abs(pairing(ad_star(a, mm), b) - pairing(mm, bracket(a, b))) <= 1e-13);
    }
  }

  SUBCASE("coadjoint commutator consistency") {
    // With <ad*_x m, y> = <m, [x,y]> the map x -> ad*_x is an
    // anti-homomorphism: ad*_x ad*_y - ad*_y ad*_x = -ad*_{[x,y]}.
    for (int i = 0; i < 200; ++i) {
      AlgebraVector a = oracle::random_algebra(GroupKind::SE3);
      AlgebraVector b = oracle::random_algebra(GroupKind::SE3);
      CoAlgebraVector mm = oracle::random_coalgebra(GroupKind::SE3);
      Eigen::VectorXd lhs =
          ad_star(a, ad_star(b, mm)).coords - ad_star(b, ad_star(a, mm)).coords;
      Eigen::VectorXd rhs = -ad_star(bracket(a, b), mm).coords;
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }

  SUBCASE("abelian variant degenerates") {
    GroupElement g = GroupElement::abelian(oracle::random_vector(4));
    AlgebraVector x4{GroupKind::AbelianRn, oracle::random_vector(4)};
    CoAlgebraVector m4{GroupKind::AbelianRn, oracle::random_vector(4)};
    CHECK((Ad(g, x4).coords - x4.coords).norm() == 0.0);
    CHECK((Ad_star(g, m4).coords - m4.coords).norm() == 0.0);
    CHECK(ad_star(x4, m4).coords.norm() == 0.0);
  }
}

TEST_CASE("associativity over random pairs") {
  for (int i = 0; i < 1000; ++i) {
    GroupElement g = oracle::random_se3(), h = oracle::random_se3(), k = oracle::random_se3();
    CHECK(distance(compose(compose(g, h), k), compose(g, compose(h, k))) <= 1e-12);
  }
}

TEST_CASE("validation reports drift without repairing") {
  GroupElement good = oracle::random_se3();
  CHECK(validate(good).ok);

  Eigen::Matrix3d R = oracle::random_rotation();
  R(0, 1) += 1e-6;
  GroupElement drifted = GroupElement::se3(R, Eigen::Vector3d::Zero());
  ValidationReport rep = validate(drifted);
  CHECK_FALSE(rep.ok);
  CHECK(rep.orthogonality_defect > 1e-7);
  CHECK(drifted.rotation()(0, 1) == R(0, 1));  // unrepaired

  Eigen::Matrix3d flipped = oracle::random_rotation();
  flipped.col(0) *= -1.0;
  CHECK_FALSE(validate(GroupElement::so3(flipped)).ok);
}
