#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "msvi/conservation.hpp"

namespace msvi {

enum class ModelType { Beam, ScalarWave };
enum class RunMode { TimeEvolution, SpaceEvolution, Reconstruction, Verify };

struct GridSpec {
  double T = 0, L = 0, dt = 0, ds = 0;
  int N = 0, A = 0;  // derived cell counts

  /// Derives N = round(T/dt), A = round(L/ds) and rejects grids where the
  /// rounding is not exact within 1e-9 relative.
  void resolve();
};

/// Prescribed boundary/initial data for the space-evolution BVP, given as
/// two constant-velocity generating curves.
struct BvpCurves {
  GroupElement g0_start, g1_start;
  Eigen::VectorXd xi0, xi1;  // constant convective velocities of the curves
};

struct RunConfig {
  ModelType model = ModelType::Beam;
  BeamParameters beam;
  double wave_speed = 1.0;

  GridSpec grid;
  std::string retraction_name = "cayley";
  BoundaryRegime regime;
  RunMode mode = RunMode::SpaceEvolution;

  // data: inline curves, a data file with slices, or a generator name
  std::string data_file;          // CSV slices (row blocks of length per slice)
  std::string initial_generator;  // "traveling_wave" for the scalar wave
  BvpCurves curves;
  bool has_curves = false;

  SolverSettings solver;
  std::string output_dir = "out";
  std::string input_run;  // for Reconstruction / Verify modes
  std::vector<std::string> diagnostics = {"momentum_maps", "noether", "energies", "local_noether"};
  unsigned long seed = 0;
  int noether_rectangles = 20;

  static RunConfig load(const std::string& path);
  void save(std::ostream& os) const;

  /// Output directory after applying the MSVI_OUTPUT_DIR override.
  std::filesystem::path resolved_output_dir() const;
};

/// Exit statuses mirrored by the CLI.
enum class RunStatus : int { Ok = 0, SolverFailure = 2, InvariantViolation = 3 };

/// Executes the configured mode; writes trajectory CSV, ledger CSV, and a run
/// manifest into the output directory. Solver failures flush partial outputs
/// with a failure marker in the manifest.
RunStatus run_simulation(const RunConfig& config);

/// Re-checks all ledger invariants of a completed run directory.
RunStatus verify_run(const std::filesystem::path& run_dir);

/// Reorders a space-evolution trajectory into time slices g^0..g^N.
RunStatus reconstruct_run(const std::filesystem::path& run_dir);

// --- file formats -----------------------------------------------------------

/// Writes `field` as CSV rows "j,a,<element>"; SE3 elements are the 9
/// rotation entries (row-major) followed by the 3 translation entries.
/// `space_major` orders rows strips-first (the space-evolution layout).
void write_trajectory_csv(std::ostream& os, const DiscreteField& field, bool space_major);

DiscreteField read_trajectory_csv(std::istream& is, GroupKind kind, const GridSpec& grid,
                                  int abelian_dim = 1);

/// Parses slices of group elements from CSV (one element per row; SE3 rows
/// are 12 numbers, abelian rows `abelian_dim` numbers). The row count must be
/// a multiple of `slice_len`; rotation rows with orthogonality defect beyond
/// 1e-8 or non-positive determinant are rejected with their row number.
std::vector<Slice> load_prescribed_data(const std::filesystem::path& path, GroupKind kind,
                                        int slice_len, int abelian_dim = 1);

void save_prescribed_data(std::ostream& os, const std::vector<Slice>& slices);

/// Builds the density model configured in `config`.
std::unique_ptr<DensityModel> make_model(const RunConfig& config);

/// Invariant checks shared by `run` and `verify`.
struct VerifyReport {
  bool ok = true;
  std::vector<std::string> violations;
};

VerifyReport check_run_invariants(const DiscreteField& field, const DensityModel& model,
                                  const Retraction& ret, const BoundaryRegime& regime,
                                  const SolverSettings& solver, unsigned long seed,
                                  int noether_rectangles);

}  // namespace msvi
