#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msvi/sim.hpp"
#include "text_io.hpp"

namespace msvi {

namespace {

namespace fs = std::filesystem;

// Pinned invariant thresholds (shared by run post-checks and `verify`).
constexpr double kLocalNoetherTol = 1e-11;
constexpr double kNoetherRectTol = 1e-9;
constexpr double kMomentumDriftRelTol = 1e-9;
constexpr double kPlusMinusRelTol = 1e-11;

void write_element(std::ostream& os, const GroupElement& g) {
  if (g.kind() == GroupKind::AbelianRn) {
    for (int i = 0; i < g.value().size(); ++i)
      os << (i ? "," : "") << text::to_shortest(g.value()(i));
    return;
  }
  const Eigen::Matrix3d& R = g.rotation();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) os << (i + k ? "," : "") << text::to_shortest(R(i, k));
  if (g.kind() == GroupKind::SE3) {
    const Eigen::Vector3d& r = g.translation();
    for (int i = 0; i < 3; ++i) os << ',' << text::to_shortest(r(i));
  }
}

GroupElement parse_element(const std::vector<std::string_view>& fields, size_t offset,
                           GroupKind kind, int abelian_dim, int row) {
  auto bad = [row](const std::string& msg) {
    throw DataFormatError("row " + std::to_string(row) + ": " + msg);
  };
  if (kind == GroupKind::AbelianRn) {
    if (fields.size() != offset + static_cast<size_t>(abelian_dim))
      bad("expected " + std::to_string(abelian_dim) + " value column(s)");
    Eigen::VectorXd v(abelian_dim);
    for (int i = 0; i < abelian_dim; ++i) v(i) = text::parse_double(fields[offset + i], "value");
    return GroupElement::abelian(v);
  }
  const size_t want = offset + (kind == GroupKind::SE3 ? 12 : 9);
  if (fields.size() != want) bad("expected " + std::to_string(want - offset) + " element columns");
  Eigen::Matrix3d R;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) R(i, k) = text::parse_double(fields[offset + 3 * i + k], "R");
  const double defect = (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
  if (defect > 1e-8) bad("rotation is not orthogonal (defect " + text::to_shortest(defect) + ")");
  if (!(R.determinant() > 0)) bad("rotation has non-positive determinant");
  if (kind == GroupKind::SO3) return GroupElement::so3(R);
  Eigen::Vector3d r(text::parse_double(fields[offset + 9], "r"),
                    text::parse_double(fields[offset + 10], "r"),
                    text::parse_double(fields[offset + 11], "r"));
  return GroupElement::se3(R, r);
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const DiscreteField& field, bool space_major) {
  const int N = field.time_cells(), A = field.space_cells();
  os << "# trajectory: one row per node\n";
  if (field.kind() == GroupKind::AbelianRn)
    os << "j,a,value\n";
  else if (field.kind() == GroupKind::SE3)
    os << "j,a,R00,R01,R02,R10,R11,R12,R20,R21,R22,r0,r1,r2\n";
  else
    os << "j,a,R00,R01,R02,R10,R11,R12,R20,R21,R22\n";
  auto row = [&](int j, int a) {
    os << j << ',' << a << ',';
    write_element(os, field.at(j, a));
    os << '\n';
  };
  if (space_major) {
    for (int a = 0; a <= A; ++a)
      for (int j = 0; j <= N; ++j) row(j, a);
  } else {
    for (int j = 0; j <= N; ++j)
      for (int a = 0; a <= A; ++a) row(j, a);
  }
}

DiscreteField read_trajectory_csv(std::istream& is, GroupKind kind, const GridSpec& grid,
                                  int abelian_dim) {
  DiscreteField field(kind, grid.N, grid.A, grid.dt, grid.ds, abelian_dim);
  std::vector<bool> seen(static_cast<size_t>((grid.N + 1) * (grid.A + 1)), false);
  std::string line;
  int row = 0;
  while (std::getline(is, line)) {
    ++row;
    std::string_view s = text::trim(line);
    if (s.empty() || s.front() == '#' || s.front() == 'j') continue;
    auto fields = text::split(s, ',');
    if (fields.size() < 3) throw DataFormatError("trajectory row " + std::to_string(row) + ": too short");
    std::vector<std::string_view> f(fields.begin(), fields.end());
    const int j = static_cast<int>(text::parse_long(f[0], "j"));
    const int a = static_cast<int>(text::parse_long(f[1], "a"));
    field.set(j, a, parse_element(f, 2, kind, abelian_dim, row));
    seen[static_cast<size_t>(j * (grid.A + 1) + a)] = true;
  }
  for (bool b : seen)
    if (!b) throw DataFormatError("trajectory: missing node rows");
  return field;
}

std::vector<Slice> load_prescribed_data(const fs::path& path, GroupKind kind, int slice_len,
                                        int abelian_dim) {
  std::ifstream is(path);
  if (!is) throw DataFormatError("cannot open data file " + path.string());
  std::vector<GroupElement> elements;
  std::string line;
  int row = 0;
  while (std::getline(is, line)) {
    ++row;
    std::string_view s = text::trim(line);
    if (s.empty() || s.front() == '#') continue;
    elements.push_back(parse_element(text::split(s, ','), 0, kind, abelian_dim, row));
  }
  if (elements.empty() || elements.size() % static_cast<size_t>(slice_len) != 0)
    throw DataFormatError(path.string() + ": row count " + std::to_string(elements.size()) +
                          " is not a multiple of the slice length " + std::to_string(slice_len));
  std::vector<Slice> slices;
  for (size_t i = 0; i < elements.size(); i += static_cast<size_t>(slice_len))
    slices.emplace_back(elements.begin() + static_cast<long>(i),
                        elements.begin() + static_cast<long>(i + static_cast<size_t>(slice_len)));
  return slices;
}

void save_prescribed_data(std::ostream& os, const std::vector<Slice>& slices) {
  for (const auto& slice : slices)
    for (const auto& g : slice) {
      write_element(os, g);
      os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Invariant checks
// ---------------------------------------------------------------------------

VerifyReport check_run_invariants(const DiscreteField& field, const DensityModel& model,
                                  const Retraction& ret, const BoundaryRegime& regime,
                                  const SolverSettings& solver, unsigned long seed,
                                  int noether_rectangles) {
  VerifyReport report;
  auto violation = [&report](const std::string& msg) {
    report.ok = false;
    report.violations.push_back(msg);
  };
  const int N = field.time_cells(), A = field.space_cells();
  const double residual_tol = 2.0 * solver.tolerance;

  double max_res = 0.0;
  for (int j = 1; j <= N - 1; ++j)
    for (int a = 1; a <= A - 1; ++a)
      max_res = std::max(max_res,
                         interior_residual(field, model, ret, j, a).coords.cwiseAbs().maxCoeff());
  if (max_res > residual_tol)
    violation("interior DCEL residual " + text::to_shortest(max_res) + " exceeds " +
              text::to_shortest(residual_tol));

  double max_bres = 0.0;
  for (const auto& b : boundary_residuals(field, model, ret, regime))
    max_bres = std::max(max_bres, b.value.coords.cwiseAbs().maxCoeff());
  if (max_bres > residual_tol)
    violation("boundary residual " + text::to_shortest(max_bres) + " exceeds " +
              text::to_shortest(residual_tol));

  const bool invariant = model.symmetry().type != SymmetryDeclaration::Type::None;
  if (invariant) {
    NoetherLedger ledger = build_ledger(field, model, ret, noether_rectangles, seed);
    if (ledger.local_noether_max > kLocalNoetherTol)
      violation("local Noether identity defect " + text::to_shortest(ledger.local_noether_max));
    if (ledger.full_rectangle.cwiseAbs().maxCoeff() > kNoetherRectTol)
      violation("covariant Noether sum over the full rectangle: " +
                text::to_shortest(ledger.full_rectangle.cwiseAbs().maxCoeff()));
    for (const auto& r : ledger.rectangles)
      if (r.norm > kNoetherRectTol)
        violation("covariant Noether sum over rectangle B=" + std::to_string(r.B) +
                  ",C=" + std::to_string(r.C) + ",K=" + std::to_string(r.K) +
                  ",L=" + std::to_string(r.L) + ": " + text::to_shortest(r.norm));

    auto drift = [](const std::vector<Eigen::VectorXd>& series) {
      double scale = series.front().cwiseAbs().maxCoeff();
      double worst = 0.0;
      for (const auto& v : series)
        worst = std::max(worst, (v - series.front()).cwiseAbs().maxCoeff());
      return worst / std::max(scale, 1e-300);
    };
    auto plus_minus_gap = [](const std::vector<Eigen::VectorXd>& plus,
                             const std::vector<Eigen::VectorXd>& minus) {
      double worst = 0.0, scale = 1e-300;
      for (size_t i = 0; i < plus.size(); ++i) {
        worst = std::max(worst, (plus[i] - minus[i]).cwiseAbs().maxCoeff());
        scale = std::max(scale, plus[i].cwiseAbs().maxCoeff());
      }
      return worst / scale;
    };
    if (plus_minus_gap(ledger.JN_plus, ledger.JN_minus) > kPlusMinusRelTol ||
        plus_minus_gap(ledger.JL_plus, ledger.JL_minus) > kPlusMinusRelTol)
      violation("J+ and J- of an invariant density disagree");

    if (regime.kind == RegimeKind::SpaceOnly || regime.kind == RegimeKind::SpaceEvolutionBVP) {
      const double d = drift(ledger.JN_plus);
      if (d > kMomentumDriftRelTol)
        violation("J_N momentum map drifts by relative " + text::to_shortest(d));
    } else if (regime.kind == RegimeKind::TimeOnly) {
      const double d = drift(ledger.JL_plus);
      if (d > kMomentumDriftRelTol)
        violation("J_L momentum map drifts by relative " + text::to_shortest(d));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Run orchestration
// ---------------------------------------------------------------------------

namespace {

struct StepRecord {
  int index;
  int iterations;
  double residual;
};

struct RunState {
  RunConfig config;
  std::unique_ptr<DensityModel> model;
  Retraction ret{RetractionKind::Cayley};
  std::vector<StepRecord> steps;
  std::string failure;
  int failed_at = -1;
  double data_adjustment = 0.0;
  double wall_time_s = 0.0;
};

// Solves the terminal momentum condition of the data strip pair for the top
// node of strip 1, so the prescribed history enters the scheme consistently.
double enforce_terminal_momentum(Slice& strip1, const Slice& strip0, const DensityModel& model,
                                 const Retraction& ret, const SolverSettings& settings) {
  const int N = static_cast<int>(strip1.size()) - 1;
  const int d = model.algebra_dim();
  const double dt = model.dt(), ds = model.ds();
  const GroupElement original = strip1[static_cast<size_t>(N)];

  AlgebraVector eta_sur = ret.tau_inv(compose(inverse(strip0[N - 1]), strip1[N - 1]));
  eta_sur.coords /= ds;

  auto residual = [&](const GroupElement& gtop) {
    AlgebraVector xi = ret.tau_inv(compose(inverse(strip1[N - 1]), gtop));
    xi.coords /= dt;
    CoAlgebraVector mu = discrete_momentum_mu(model, ret, strip1[N - 1], xi, eta_sur);
    AlgebraVector dt_xi{xi.kind, dt * xi.coords};
    return Eigen::VectorXd(Ad_star(ret.tau(dt_xi), mu).coords / dt);
  };

  GroupElement gtop = strip1[N - 1];  // zero-velocity predictor
  Eigen::VectorXd res = residual(gtop);
  for (int it = 0; it < settings.max_iterations && res.cwiseAbs().maxCoeff() > settings.tolerance;
       ++it) {
    Eigen::MatrixXd J(d, d);
    for (int i = 0; i < d; ++i) {
      AlgebraVector step = AlgebraVector::zero(gtop.kind(), d);
      step.coords(i) = settings.fd_step;
      J.col(i) = (residual(compose(gtop, ret.tau(step))) - res) / settings.fd_step;
    }
    Eigen::VectorXd delta = J.partialPivLu().solve(-res);
    AlgebraVector step{gtop.kind(), delta};
    gtop = compose(gtop, ret.tau(step));
    res = residual(gtop);
  }
  if (res.cwiseAbs().maxCoeff() > settings.tolerance)
    throw NewtonDivergenceError("terminal momentum condition of the data strip did not converge",
                                {res.cwiseAbs().maxCoeff()});
  strip1[static_cast<size_t>(N)] = gtop;
  return distance(original, gtop);
}

void write_manifest(const fs::path& dir, const RunState& state, const char* status,
                    const DiscreteField* field) {
  std::ofstream os(dir / "manifest.txt");
  os << "status = " << status << "\n";
  os << "steps = " << state.steps.size() << "\n";
  if (!state.failure.empty()) {
    os << "failure = " << state.failure << "\n";
    os << "failed_at_step = " << state.failed_at << "\n";
  }
  double max_res = 0.0;
  int max_iters = 0;
  for (const auto& s : state.steps) {
    max_res = std::max(max_res, s.residual);
    max_iters = std::max(max_iters, s.iterations);
  }
  os << "max_step_residual = " << text::to_shortest(max_res) << "\n";
  os << "max_newton_iterations = " << max_iters << "\n";
  os << "newton_tolerance = " << text::to_shortest(state.config.solver.tolerance) << "\n";
  os << "wall_time_s = " << text::to_shortest(state.wall_time_s) << "\n";
  os << "data_adjustment = " << text::to_shortest(state.data_adjustment) << "\n";
  if (field)
    os << "max_orthogonality_defect = " << text::to_shortest(field->max_orthogonality_defect())
       << "\n";
  for (const auto& s : state.steps)
    os << "residual_" << s.index << " = " << text::to_shortest(s.residual) << " iterations "
       << s.iterations << "\n";
}

void write_outputs(const fs::path& dir, const RunState& state, const DiscreteField& field,
                   const char* status) {
  {
    std::ofstream os(dir / "trajectory.csv");
    write_trajectory_csv(os, field, state.config.mode == RunMode::SpaceEvolution);
  }
  {
    std::ofstream os(dir / "config.resolved.cfg");
    state.config.save(os);
  }

  const auto& diag = state.config.diagnostics;
  auto wants = [&diag](const char* name) {
    for (const auto& d : diag)
      if (d == name || d == "all") return true;
    return false;
  };
  // Partial fields of failed runs can hold unsolved strips whose jets leave
  // the retraction domain; the trajectory and manifest must still flush.
  try {
    const int rects = wants("noether") ? state.config.noether_rectangles : 0;
    NoetherLedger ledger = build_ledger(field, *state.model, state.ret, rects, state.config.seed,
                                        wants("triangle_maps"));
    if (!wants("momentum_maps")) {
      ledger.JL_plus.clear();
      ledger.JL_minus.clear();
      ledger.JN_plus.clear();
      ledger.JN_minus.clear();
    }
    if (!wants("energies")) {
      ledger.energy_L.clear();
      ledger.energy_N.clear();
    }
    std::ofstream os(dir / "ledger.csv");
    ledger.write_csv(os);
  } catch (const Error& e) {
    std::ofstream os(dir / "ledger.csv");
    os << "# ledger unavailable: " << e.what() << "\n";
  }
  write_manifest(dir, state, status, &field);
}

RunStatus finish_run(const fs::path& dir, RunState& state, DiscreteField& field) {
  VerifyReport report =
      check_run_invariants(field, *state.model, state.ret, state.config.regime,
                           state.config.solver, state.config.seed, state.config.noether_rectangles);
  write_outputs(dir, state, field, report.ok ? "ok" : "invariant_violation");
  if (!report.ok) {
    std::ofstream os(dir / "violations.txt");
    for (const auto& v : report.violations) os << v << "\n";
    return RunStatus::InvariantViolation;
  }
  return RunStatus::Ok;
}

RunStatus run_space_evolution(RunState& state, const fs::path& dir) {
  const RunConfig& cfg = state.config;
  const int N = cfg.grid.N, A = cfg.grid.A;
  DiscreteField field(state.model->group_kind(), N, A, cfg.grid.dt, cfg.grid.ds,
                      state.model->algebra_dim());

  Slice strip0, strip1;
  if (cfg.has_curves) {
    const GroupKind kind = state.model->group_kind();
    std::vector<AlgebraVector> inc0(static_cast<size_t>(N), AlgebraVector{kind, cfg.curves.xi0});
    std::vector<AlgebraVector> inc1(static_cast<size_t>(N), AlgebraVector{kind, cfg.curves.xi1});
    strip0 = reconstruct_initial_data(cfg.curves.g0_start, inc0, state.ret, cfg.grid.dt);
    strip1 = reconstruct_initial_data(cfg.curves.g1_start, inc1, state.ret, cfg.grid.dt);
  } else if (!cfg.data_file.empty()) {
    auto slices = load_prescribed_data(cfg.data_file, state.model->group_kind(), N + 1,
                                       state.model->algebra_dim());
    if (slices.size() != 2)
      throw DataFormatError("space evolution needs exactly two data strips, got " +
                            std::to_string(slices.size()));
    strip0 = slices[0];
    strip1 = slices[1];
  } else {
    throw ConfigError("space evolution requires boundary curves (xi0/xi1) or a data_file");
  }

  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.regime.kind == RegimeKind::SpaceEvolutionBVP) {
    try {
      state.data_adjustment =
          enforce_terminal_momentum(strip1, strip0, *state.model, state.ret, cfg.solver);
    } catch (const Error& e) {
      state.failure = e.what();
      state.failed_at = 0;
      field.set_space_slice(0, strip0);
      field.set_space_slice(1, strip1);
      write_outputs(dir, state, field, "solver_failure");
      return RunStatus::SolverFailure;
    }
  }

  field.set_space_slice(0, strip0);
  field.set_space_slice(1, strip1);

  for (int a = 1; a <= A - 1; ++a) {
    try {
      StepResult step = step_space(field.space_slice(a - 1), field.space_slice(a), *state.model,
                                   state.ret, cfg.regime, cfg.solver);
      field.set_space_slice(a + 1, step.next);
      state.steps.push_back({a, step.stats.iterations, step.stats.final_norm});
    } catch (const Error& e) {
      state.failure = e.what();
      state.failed_at = a;
      state.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_outputs(dir, state, field, "solver_failure");
      return RunStatus::SolverFailure;
    }
  }
  state.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish_run(dir, state, field);
}

RunStatus run_time_evolution(RunState& state, const fs::path& dir) {
  const RunConfig& cfg = state.config;
  const int N = cfg.grid.N, A = cfg.grid.A;
  DiscreteField field(state.model->group_kind(), N, A, cfg.grid.dt, cfg.grid.ds,
                      state.model->algebra_dim());

  const bool wave_exact = cfg.initial_generator == "traveling_wave";
  auto exact_wave = [&](int j, int a) {
    Eigen::VectorXd v(1);
    v(0) = std::sin(a * cfg.grid.ds - cfg.wave_speed * j * cfg.grid.dt);
    return GroupElement::abelian(v);
  };

  if (wave_exact) {
    if (cfg.model != ModelType::ScalarWave)
      throw ConfigError("initial = traveling_wave applies to the scalar wave model");
    for (int a = 0; a <= A; ++a) {
      field.set(0, a, exact_wave(0, a));
      field.set(1, a, exact_wave(1, a));
    }
  } else if (!cfg.data_file.empty()) {
    auto slices = load_prescribed_data(cfg.data_file, state.model->group_kind(), A + 1,
                                       state.model->algebra_dim());
    if (slices.size() != 2)
      throw DataFormatError("time evolution needs exactly two initial slices, got " +
                            std::to_string(slices.size()));
    field.set_time_slice(0, slices[0]);
    field.set_time_slice(1, slices[1]);
  } else {
    throw ConfigError("time evolution requires a data_file or initial = traveling_wave");
  }

  const auto t0 = std::chrono::steady_clock::now();
  for (int j = 1; j <= N - 1; ++j) {
    try {
      std::optional<PrescribedEnds> ends;
      if (cfg.regime.kind == RegimeKind::SpaceTime) {
        if (!wave_exact)
          throw ConfigError("spacetime regime needs generated boundary data (traveling_wave)");
        ends = PrescribedEnds{exact_wave(j + 1, 0), exact_wave(j + 1, A)};
      }
      StepResult step = step_time(field.time_slice(j - 1), field.time_slice(j), *state.model,
                                  state.ret, cfg.regime, cfg.solver, ends);
      field.set_time_slice(j + 1, step.next);
      state.steps.push_back({j, step.stats.iterations, step.stats.final_norm});
    } catch (const Error& e) {
      state.failure = e.what();
      state.failed_at = j;
      state.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_outputs(dir, state, field, "solver_failure");
      return RunStatus::SolverFailure;
    }
  }
  state.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish_run(dir, state, field);
}

}  // namespace

RunStatus run_simulation(const RunConfig& config) {
  if (config.mode == RunMode::Verify) return verify_run(config.input_run);
  if (config.mode == RunMode::Reconstruction) return reconstruct_run(config.input_run);

  RunState state;
  state.config = config;
  state.model = make_model(config);
  state.ret = Retraction::from_name(config.retraction_name);

  const fs::path dir = config.resolved_output_dir();
  fs::create_directories(dir);

  if (config.mode == RunMode::SpaceEvolution) return run_space_evolution(state, dir);
  return run_time_evolution(state, dir);
}

RunStatus verify_run(const fs::path& run_dir) {
  RunConfig cfg = RunConfig::load((run_dir / "config.resolved.cfg").string());
  auto model = make_model(cfg);
  Retraction ret = Retraction::from_name(cfg.retraction_name);

  std::ifstream is(run_dir / "trajectory.csv");
  if (!is) throw DataFormatError("verify: missing trajectory.csv in " + run_dir.string());
  DiscreteField field = read_trajectory_csv(is, model->group_kind(), cfg.grid, model->algebra_dim());

  VerifyReport report = check_run_invariants(field, *model, ret, cfg.regime, cfg.solver, cfg.seed,
                                             cfg.noether_rectangles);
  if (!report.ok) {
    std::ofstream os(run_dir / "violations.txt");
    for (const auto& v : report.violations) os << v << "\n";
    return RunStatus::InvariantViolation;
  }
  return RunStatus::Ok;
}

RunStatus reconstruct_run(const fs::path& run_dir) {
  RunConfig cfg = RunConfig::load((run_dir / "config.resolved.cfg").string());
  auto model = make_model(cfg);
  std::ifstream is(run_dir / "trajectory.csv");
  if (!is) throw DataFormatError("reconstruct: missing trajectory.csv in " + run_dir.string());
  DiscreteField field = read_trajectory_csv(is, model->group_kind(), cfg.grid, model->algebra_dim());
  std::ofstream os(run_dir / "reconstruction.csv");
  write_trajectory_csv(os, field, /*space_major=*/false);  // reordered into time slices
  return RunStatus::Ok;
}

}  // namespace msvi
