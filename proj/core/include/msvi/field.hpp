#pragma once

#include <string_view>
#include <vector>

#include "msvi/group.hpp"
#include "msvi/retraction.hpp"

namespace msvi {

/// A time slice (g_a for a = 0..A) or space slice (g^j for j = 0..N).
using Slice = std::vector<GroupElement>;

/// The (N+1) x (A+1) array of configuration values on the triangle grid,
/// with grid metadata. j indexes time nodes (0..N), a space nodes (0..A).
/// Triangles carry the lower-left node: xi(j,a) is the time leg of triangle
/// (j,a) for j <= N-1, eta(j,a) the space leg for a <= A-1.
class DiscreteField {
public:
  /// Grids with fewer than 2 cells per direction are rejected.
  DiscreteField(GroupKind kind, int time_cells, int space_cells, double dt, double ds,
                int abelian_dim = 1);

  GroupKind kind() const { return kind_; }
  int time_cells() const { return N_; }
  int space_cells() const { return A_; }
  double dt() const { return dt_; }
  double ds() const { return ds_; }
  int abelian_dim() const { return abelian_dim_; }

  const GroupElement& at(int j, int a) const;
  void set(int j, int a, GroupElement g);

  /// xi_a^j = tau^{-1}((g_a^j)^{-1} g_a^{j+1}) / dt, requires 0 <= j <= N-1.
  AlgebraVector xi(int j, int a, const Retraction& ret) const;
  /// eta_a^j = tau^{-1}((g_a^j)^{-1} g_{a+1}^j) / ds, requires 0 <= a <= A-1.
  AlgebraVector eta(int j, int a, const Retraction& ret) const;

  Slice time_slice(int j) const;   // (g_0^j, ..., g_A^j)
  Slice space_slice(int a) const;  // (g_a^0, ..., g_a^N)
  void set_time_slice(int j, const Slice& s);
  void set_space_slice(int a, const Slice& s);

  /// Largest orthogonality defect over all nodes (group-drift monitor).
  double max_orthogonality_defect() const;

private:
  int index(int j, int a) const { return j * (A_ + 1) + a; }
  void check(int j, int a) const;

  GroupKind kind_;
  int N_, A_;
  double dt_, ds_;
  int abelian_dim_;
  std::vector<GroupElement> g_;
};

/// Boundary-condition regime of a run.
///  - SpaceTime:         configuration prescribed on the whole spacetime boundary.
///  - TimeOnly:          prescribed at j = 0 and j = N; discrete zero-traction
///                       conditions emerge at a = 0 and a = A.
///  - SpaceOnly:         prescribed at a = 0 and a = A; discrete zero-momentum
///                       conditions emerge at j = 0 and j = N-1.
///  - SpaceEvolutionBVP: configuration and strain history prescribed at a = 0;
///                       zero-momentum conditions at j = 0 and the terminal
///                       momentum condition at j = N-1 close each strip.
enum class RegimeKind { SpaceTime, TimeOnly, SpaceOnly, SpaceEvolutionBVP };

struct BoundaryRegime {
  RegimeKind kind = RegimeKind::SpaceTime;

  static BoundaryRegime from_name(std::string_view name);
  const char* name() const;
};

}  // namespace msvi
