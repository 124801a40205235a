#pragma once

#include <functional>
#include <optional>

#include "msvi/density.hpp"
#include "msvi/field.hpp"

namespace msvi {

/// First-jet data of one triangle: the value at the lower-left node and the
/// two discrete legs.
struct TriangleJet {
  GroupElement g;
  AlgebraVector xi;
  AlgebraVector eta;
};

/// Jet of triangle (j, a); requires j <= N-1 and a <= A-1. Retraction-domain
/// failures are rethrown with the triangle identified.
TriangleJet jet_at(const DiscreteField& field, int j, int a, const Retraction& ret);

/// Discrete forces, trivialized: Fbar^k maps a triangle jet to a covector
/// attached to vertex k of the triangle.
struct DiscreteForces {
  using ForceMap = std::function<CoAlgebraVector(const TriangleJet&)>;
  ForceMap f1, f2, f3;
  bool declared_orthogonal = false;
};

/// Defect of the force-orthogonality condition
///   Ad*_{g1^{-1}} F1 + Ad*_{g2^{-1}} F2 + Ad*_{g3^{-1}} F3  |_h  =  0
/// as the largest pairing with the declared subgroup generators.
double forces_orthogonality_defect(const DiscreteForces& forces, const SymmetryDeclaration& sym,
                                   const DensityModel& model, const Retraction& ret,
                                   const TriangleJet& jet);

struct SolverSettings {
  double tolerance = 1e-12;  // residual inf-norm
  int max_iterations = 50;
  double fd_step = 1e-7;  // Lie-algebra perturbation for the Jacobian

  void validate() const;
};

struct NewtonStats {
  int iterations = 0;
  double final_norm = 0.0;
  std::vector<double> residual_norms;  // after each iteration
};

/// Residual of the trivialized Lie-group DCEL at interior node (j, a),
/// oriented as
///   (1/dt)(mu_a^j - Ad*_{tau(dt xi_a^{j-1})} mu_a^{j-1})
/// + (1/ds)(lambda_a^j - Ad*_{tau(ds eta_{a-1}^j)} lambda_{a-1}^j)
/// - g^{-1} D_g Lbar_a^j  - (force terms),
/// which is the negative of the D1+D2+D3 grouping of the covariant form.
/// Requires 1 <= j <= N-1 and 1 <= a <= A-1.
CoAlgebraVector interior_residual(const DiscreteField& field, const DensityModel& model,
                                  const Retraction& ret, int j, int a,
                                  const DiscreteForces* forces = nullptr);

struct BoundaryResidual {
  int j, a;
  const char* condition;  // "zero_traction_edge", "zero_traction_tip", ...
  CoAlgebraVector value;
};

/// All natural boundary equations of the regime, each as a residual covector.
/// SpaceTime has none. TimeOnly yields the zero-traction conditions at a = 0
/// and a = A; SpaceOnly and SpaceEvolutionBVP yield the zero-momentum
/// conditions at j = 0 and the terminal momentum condition at j = N-1.
std::vector<BoundaryResidual> boundary_residuals(const DiscreteField& field,
                                                 const DensityModel& model, const Retraction& ret,
                                                 const BoundaryRegime& regime,
                                                 const DiscreteForces* forces = nullptr);

/// Prescribed values for the two edge nodes of a newly solved slice.
struct PrescribedEnds {
  GroupElement first, last;
};

struct StepResult {
  Slice next;
  NewtonStats stats;
};

// Stepping is sequential in the evolution index; residual evaluation and
// Jacobian columns are pure functions of immutable slices, and accepted
// slices can be handed to diagnostics on other threads.

/// Advances one time level: given slices g^{j-1}, g^j, solves the stacked
/// interior + spatial-boundary rows for g^{j+1}.
///  - SpaceTime: ends of the new slice are prescribed (`ends` required).
///  - SpaceOnly: ends are prescribed and time-independent (defaults to the
///    current slice's ends when `ends` is absent).
///  - TimeOnly: the whole slice is unknown; zero-traction rows close it.
StepResult step_time(const Slice& prev, const Slice& curr, const DensityModel& model,
                     const Retraction& ret, const BoundaryRegime& regime,
                     const SolverSettings& settings,
                     const std::optional<PrescribedEnds>& ends = std::nullopt,
                     const DiscreteForces* forces = nullptr);

/// Advances one space strip: given strips g_{a-1}, g_a, solves for g_{a+1}.
///  - SpaceTime / TimeOnly: time-boundary nodes of the new strip prescribed.
///  - SpaceOnly / SpaceEvolutionBVP: the whole strip is unknown; the stacked
///    system holds the zero-momentum row at j = 0, the interior rows, and the
///    terminal momentum condition transported to the new strip.
StepResult step_space(const Slice& prev, const Slice& curr, const DensityModel& model,
                      const Retraction& ret, const BoundaryRegime& regime,
                      const SolverSettings& settings,
                      const std::optional<PrescribedEnds>& ends = std::nullopt,
                      const DiscreteForces* forces = nullptr);

/// The discrete curve g_{k+1} = g_k tau(step * x_k) generated by successive
/// retraction steps.
Slice reconstruct_initial_data(const GroupElement& g0, const std::vector<AlgebraVector>& increments,
                               const Retraction& ret, double step);

/// Tangent to a slice: one algebra vector per node (zeta = g^{-1} delta g).
using SliceTangent = std::vector<AlgebraVector>;

/// Propagates a first variation through one converged time step by solving
/// the linearized stacked system with the step's own Jacobian (rebuilt here
/// with a fourth-order stencil, since propagation errors compound). Under
/// prescribed-end regimes the input tangents must vanish at the ends.
SliceTangent linearized_step_time(const Slice& prev, const Slice& curr, const Slice& next,
                                  const SliceTangent& dprev, const SliceTangent& dcurr,
                                  const DensityModel& model, const Retraction& ret,
                                  const BoundaryRegime& regime,
                                  const DiscreteForces* forces = nullptr);

SliceTangent linearized_step_space(const Slice& prev, const Slice& curr, const Slice& next,
                                   const SliceTangent& dprev, const SliceTangent& dcurr,
                                   const DensityModel& model, const Retraction& ret,
                                   const BoundaryRegime& regime,
                                   const DiscreteForces* forces = nullptr);

}  // namespace msvi
