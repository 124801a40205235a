#pragma once

#include <iosfwd>
#include <vector>

#include "msvi/engine.hpp"

namespace msvi {

// All diagnostics are pure functions over immutable field snapshots.

enum class EvolutionMode { Time, Space };

/// The three discrete covariant momentum maps of one triangle, projected to
/// the declared symmetry subalgebra h* (i* = identity for full invariance):
///   J1 = i* Ad*_{g^{-1}} (g^{-1}D_g Lbar - mu/dt - lambda/ds)
///   J2 = i* (1/dt) Ad*_{g^{-1}} mu
///   J3 = i* (1/ds) Ad*_{g^{-1}} lambda
/// With forces, Fbar^k joins at the vertex the force is attached to and
/// outside the 1/dt, 1/ds scaling:
///   J2^F = J2 + i* Ad*_{g2^{-1}} Fbar^2,   g2 = g tau(dt xi),
///   J3^F = J3 + i* Ad*_{g3^{-1}} Fbar^3,   g3 = g tau(ds eta).
/// This is the grouping under which the forced Noether sums vanish on forced
/// solutions with orthogonal forces.
struct MomentumTriple {
  Eigen::VectorXd J1, J2, J3;
};

MomentumTriple covariant_momentum_maps(const TriangleJet& jet, const DensityModel& model,
                                       const Retraction& ret,
                                       const DiscreteForces* forces = nullptr);

/// Rectangle Noether sum over the subdomain B<=a<=C, K<=j<=L (triangle
/// lower-left corners). Zero on DCEL solutions of invariant densities.
/// Bounds: 0 <= B < C <= A-1 and 0 <= K < L <= N-1, else IndexError.
Eigen::VectorXd covariant_noether_sum(const DiscreteField& field, const DensityModel& model,
                                      const Retraction& ret, int B, int C, int K, int L,
                                      const DiscreteForces* forces = nullptr);

struct EvolutionaryMomenta {
  Eigen::VectorXd plus, minus;
};

/// Momentum maps of the evolutionary descriptions. Time mode, slice j:
///   plus = sum_a J2(tri_a^j),  minus = -sum_a (J1 + J3)(tri_a^j).
/// Space mode, strip a:
///   plus = sum_j J3(tri_a^j),  minus = -sum_j (J1 + J2)(tri_a^j).
EvolutionaryMomenta evolutionary_momentum_maps(const DiscreteField& field,
                                               const DensityModel& model, const Retraction& ret,
                                               int slice, EvolutionMode mode);

/// Discrete energies, one-point quadrature:
///   Time mode (slice j):  E_L = (1/dt) sum_a [<D_xi, xi> - Lbar_cell]
///   Space mode (strip a): E_N = (1/ds) sum_j [<D_eta, eta> - Lbar_cell]
double energy(const DiscreteField& field, const DensityModel& model, const Retraction& ret,
              int slice, EvolutionMode mode);

/// Discrete covariant Legendre transforms of one triangle (covector parts;
/// base points are the triangle's three vertices):
///   F1 = g^{-1}D_g - mu/dt - lambda/ds
///   F2 = (1/dt) Ad*_{tau(dt xi)} mu
///   F3 = (1/ds) Ad*_{tau(ds eta)} lambda
/// Node-wise, F1(tri_a^j) + F2(tri_a^{j-1}) + F3(tri_{a-1}^j) equals the
/// negative of interior_residual.
struct LegendreTriple {
  CoAlgebraVector F1, F2, F3;
};

LegendreTriple legendre_transforms(const TriangleJet& jet, const DensityModel& model,
                                   const Retraction& ret);

/// A variation of one triangle: zeta_k = g_k^{-1} delta g_k at the three
/// vertices (lower-left, time neighbor, space neighbor).
struct TriangleVariation {
  AlgebraVector zeta1, zeta2, zeta3;
};

struct CartanEvaluation {
  double theta1, theta2, theta3;
  double sum() const { return theta1 + theta2 + theta3; }
};

/// The discrete Cartan one-forms evaluated on a variation; their sum is the
/// directional derivative of the cell action along the induced variation.
CartanEvaluation cartan_one_forms(const TriangleJet& jet, const DensityModel& model,
                                  const Retraction& ret, const TriangleVariation& var);

/// Tangent data for a pair of consecutive slices (a point of the
/// evolutionary state space together with a tangent vector).
struct PairTangent {
  SliceTangent first, second;
};

/// Propagates two first variations through the solved run with the
/// linearized stepper and evaluates the discrete Lagrangian two-form
/// Omega = d Theta^+ on the pair at every step (second-order finite
/// differences of the one-form, step `omega_fd_step`). The returned sequence
/// is constant on symplectic flows.
std::vector<double> symplecticity_probe(const DiscreteField& solved, const DensityModel& model,
                                        const Retraction& ret, const BoundaryRegime& regime,
                                        EvolutionMode mode, const PairTangent& V,
                                        const PairTangent& W, double omega_fd_step = 1e-5,
                                        const DiscreteForces* forces = nullptr);

/// Tangent over the whole grid, indexed j*(A+1)+a.
using FieldTangent = std::vector<AlgebraVector>;

/// Boundary sum of the discrete multisymplectic form formula: contributions
/// i_{j1 V} i_{j1 W} Omega^k of boundary-touching triangle vertices. Vanishes
/// on solutions when V and W are first variations. `scale` receives the sum
/// of absolute contribution magnitudes.
double multisymplectic_form_defect(const DiscreteField& field, const DensityModel& model,
                                   const Retraction& ret, const FieldTangent& V,
                                   const FieldTangent& W, double* scale = nullptr,
                                   double omega_fd_step = 1e-5);

/// Per-run record of the conserved/diagnostic quantities.
struct NoetherLedger {
  int time_cells = 0, space_cells = 0;
  int symmetry_dim = 0;
  std::vector<Eigen::VectorXd> JL_plus, JL_minus;  // per time slice j = 0..N-1
  std::vector<Eigen::VectorXd> JN_plus, JN_minus;  // per strip a = 0..A-1
  std::vector<double> energy_L;                    // per time slice
  std::vector<double> energy_N;                    // per strip
  double local_noether_max = 0.0;                  // max |J1+J2+J3| over triangles
  Eigen::VectorXd full_rectangle;                  // J_{0,A-1}^{0,N-1}
  struct RectangleSample {
    int B, C, K, L;
    double norm;
  };
  std::vector<RectangleSample> rectangles;
  struct TriangleMaps {
    int j, a;
    Eigen::VectorXd J1, J2, J3;
  };
  std::vector<TriangleMaps> triangles;  // filled on request only

  void write_csv(std::ostream& os) const;
};

/// Computes the full ledger; `rectangle_samples` random interior rectangles
/// are drawn deterministically from `seed`. `per_triangle` additionally
/// records the three momentum maps of every triangle.
NoetherLedger build_ledger(const DiscreteField& field, const DensityModel& model,
                           const Retraction& ret, int rectangle_samples = 0,
                           unsigned long seed = 0, bool per_triangle = false);

}  // namespace msvi
