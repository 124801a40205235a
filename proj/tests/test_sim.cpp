#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "reference_case.hpp"

using namespace msvi;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("msvi_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string small_beam_cfg(const fs::path& out_dir) {
  std::ostringstream os;
  os << "[model]\n"
        "type = beam\nrho = 0.01\nyoungs_modulus = 25\npoisson = 0.35\nside = 1.0\n"
        "[grid]\nT = 0.4\nL = 0.16\ndt = 0.04\nds = 0.02\n"
        "[retraction]\nkind = cayley\n"
        "[boundary]\nregime = space_evolution_bvp\n"
        "xi0 = 0,-0.85,0,0,-0.1,0\n"
        "xi1 = 0.06,-0.849,-0.04,-0.03,-0.1,0\n"
        "[solver]\ntolerance = 1e-13\n"
        "[run]\nmode = space_evolution\nseed = 3\nnoether_rectangles = 5\n"
        "[output]\ndirectory = "
     << out_dir.string() << "\n";
  return os.str();
}

fs::path write_cfg(const fs::path& dir, const std::string& body) {
  fs::path p = dir / "run.cfg";
  std::ofstream os(p);
  os << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("grid resolution accepts exact cell counts only") {
  GridSpec g{2.0, 0.8, 0.04, 0.02};
  g.resolve();
  CHECK(g.N == 50);
  CHECK(g.A == 40);

  GridSpec bad{2.0, 0.8, 0.03, 0.02};
  CHECK_THROWS_AS(bad.resolve(), ConfigError);
  GridSpec tiny{0.04, 0.8, 0.04, 0.02};
  CHECK_THROWS_AS(tiny.resolve(), ConfigError);
}

TEST_CASE("configuration parsing") {
  fs::path dir = temp_dir("cfg");

  SUBCASE("load, resolve, and round-trip through save") {
    fs::path p = write_cfg(dir, small_beam_cfg(dir / "out"));
    RunConfig cfg = RunConfig::load(p.string());
    CHECK(cfg.model == ModelType::Beam);
    CHECK(cfg.grid.N == 10);
    CHECK(cfg.grid.A == 8);
    CHECK(cfg.regime.kind == RegimeKind::SpaceEvolutionBVP);
    CHECK(cfg.has_curves);
    CHECK(cfg.curves.xi1(0) == 0.06);
    CHECK(distance(cfg.curves.g1_start,
                   GroupElement::se3(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, 0.02))) ==
          0.0);

    std::ofstream os(dir / "resaved.cfg");
    cfg.save(os);
    os.close();
    RunConfig again = RunConfig::load((dir / "resaved.cfg").string());
    CHECK(again.grid.N == cfg.grid.N);
    CHECK(again.solver.tolerance == cfg.solver.tolerance);
    CHECK(again.curves.xi0 == cfg.curves.xi0);
  }

  SUBCASE("unknown keys are rejected") {
    fs::path p = write_cfg(dir, small_beam_cfg(dir / "out") + "\n[solver]\ntollerance = 1e-9\n");
    CHECK_THROWS_AS(RunConfig::load(p.string()), ConfigError);
  }

  SUBCASE("malformed lines are rejected") {
    fs::path p = write_cfg(dir, "[model\ntype = beam\n");
    CHECK_THROWS_AS(RunConfig::load(p.string()), ConfigError);
  }
}

TEST_CASE("prescribed data files") {
  fs::path dir = temp_dir("data");

  SUBCASE("identity rows and round trip") {
    refcase::Setup s = refcase::make_setup(6, 5);
    {
      std::ofstream os(dir / "curves.csv");
      save_prescribed_data(os, {s.strip0, s.strip1});
    }
    auto slices = load_prescribed_data(dir / "curves.csv", GroupKind::SE3, s.N + 1);
    REQUIRE(slices.size() == 2);
    for (int j = 0; j <= s.N; ++j) {
      // shortest round-trip decimals reload bit-identically
      CHECK(distance(slices[0][j], s.strip0[j]) == 0.0);
      CHECK(distance(slices[1][j], s.strip1[j]) == 0.0);
    }
  }

  SUBCASE("non-rotation rows are rejected with their row number") {
    std::ofstream os(dir / "bad.csv");
    os << "1,0,0,0,1,0,0,0,1,0,0,0\n";
    os << "-1,0,0,0,1,0,0,0,1,0,0,0\n";  // det < 0
    os.close();
    try {
      load_prescribed_data(dir / "bad.csv", GroupKind::SE3, 1);
      FAIL("expected DataFormatError");
    } catch (const DataFormatError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }

  SUBCASE("shape mismatches are rejected") {
    std::ofstream os(dir / "short.csv");
    for (int i = 0; i < 3; ++i) os << "1,0,0,0,1,0,0,0,1,0,0,0\n";
    os.close();
    CHECK_THROWS_AS(load_prescribed_data(dir / "short.csv", GroupKind::SE3, 2),
                    DataFormatError);
  }
}

TEST_CASE("trajectory csv round trip") {
  refcase::Setup s = refcase::make_setup(6, 5);
  refcase::MarchResult run = refcase::march(s);
  std::stringstream buffer;
  write_trajectory_csv(buffer, run.field, true);
  GridSpec grid;
  grid.T = s.N * s.dt;
  grid.L = s.A * s.ds;
  grid.dt = s.dt;
  grid.ds = s.ds;
  grid.resolve();
  DiscreteField back = read_trajectory_csv(buffer, GroupKind::SE3, grid);
  for (int j = 0; j <= s.N; ++j)
    for (int a = 0; a <= s.A; ++a) CHECK(distance(back.at(j, a), run.field.at(j, a)) == 0.0);
}

TEST_CASE("end-to-end run, verify, reconstruct") {
  fs::path dir = temp_dir("run");
  fs::path out = dir / "out";
  fs::path cfg_path = write_cfg(dir, small_beam_cfg(out));
  RunConfig cfg = RunConfig::load(cfg_path.string());

  REQUIRE(run_simulation(cfg) == RunStatus::Ok);
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "ledger.csv"));
  CHECK(fs::exists(out / "manifest.txt"));
  CHECK(fs::exists(out / "config.resolved.cfg"));
  const std::string manifest = slurp(out / "manifest.txt");
  CHECK(manifest.find("status = ok") != std::string::npos);

  SUBCASE("determinism: identical config gives bit-identical outputs") {
    fs::path out2 = dir / "out2";
    RunConfig cfg2 = cfg;
    cfg2.output_dir = out2.string();
    REQUIRE(run_simulation(cfg2) == RunStatus::Ok);
    CHECK(slurp(out / "trajectory.csv") == slurp(out2 / "trajectory.csv"));
    CHECK(slurp(out / "ledger.csv") == slurp(out2 / "ledger.csv"));
  }

  SUBCASE("verify passes on the artifacts and is idempotent") {
    CHECK(verify_run(out) == RunStatus::Ok);
    CHECK(verify_run(out) == RunStatus::Ok);
  }

  SUBCASE("verify flags a corrupted trajectory") {
    std::string csv = slurp(out / "trajectory.csv");
    // corrupt one translation entry of an interior node
    auto pos = csv.find("\n3,3,");
    REQUIRE(pos != std::string::npos);
    auto line_end = csv.find('\n', pos + 1);
    std::string line = csv.substr(pos + 1, line_end - pos - 1);
    auto last_comma = line.rfind(',');
    line = line.substr(0, last_comma + 1) + "0.25";
    csv = csv.substr(0, pos + 1) + line + csv.substr(line_end);
    std::ofstream os(out / "trajectory.csv");
    os << csv;
    os.close();
    CHECK(verify_run(out) == RunStatus::InvariantViolation);
    CHECK(fs::exists(out / "violations.txt"));
  }

  SUBCASE("reconstruction reorders into time slices") {
    REQUIRE(reconstruct_run(out) == RunStatus::Ok);
    std::ifstream is(out / "reconstruction.csv");
    std::string line;
    int last_j = -1;
    bool ordered = true;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#' || line[0] == 'j') continue;
      const int j = std::stoi(line.substr(0, line.find(',')));
      if (j < last_j) ordered = false;
      last_j = j;
    }
    CHECK(ordered);
    CHECK(last_j == 10);
  }
}

TEST_CASE("output directory override") {
  fs::path dir = temp_dir("envdir");
  fs::path out = dir / "from_env";
  fs::path cfg_path = write_cfg(dir, small_beam_cfg(dir / "ignored"));
  RunConfig cfg = RunConfig::load(cfg_path.string());
  setenv("MSVI_OUTPUT_DIR", out.string().c_str(), 1);
  const RunStatus status = run_simulation(cfg);
  unsetenv("MSVI_OUTPUT_DIR");
  REQUIRE(status == RunStatus::Ok);
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK_FALSE(fs::exists(dir / "ignored"));
}

TEST_CASE("scalar wave time-evolution run") {
  fs::path dir = temp_dir("wave");
  std::ostringstream body;
  body << "[model]\ntype = scalar_wave\nwave_speed = 1\n"
          "[grid]\nT = 0.5\nL = 2.0\ndt = 0.05\nds = 0.1\n"
          "[retraction]\nkind = identity\n"
          "[boundary]\nregime = spacetime\ninitial = traveling_wave\n"
          "[solver]\ntolerance = 1e-13\n"
          "[run]\nmode = time_evolution\nnoether_rectangles = 4\n"
          "[output]\ndirectory = "
       << (dir / "out").string() << "\n";
  RunConfig cfg = RunConfig::load(write_cfg(dir, body.str()).string());
  REQUIRE(run_simulation(cfg) == RunStatus::Ok);
  CHECK(verify_run(dir / "out") == RunStatus::Ok);
}

TEST_CASE("solver failure flushes partial outputs with a marker") {
  fs::path dir = temp_dir("fail");
  std::string body = small_beam_cfg(dir / "out");
  body += "\n[solver]\ntolerance = 1e-30\nmax_iterations = 2\n";
  RunConfig cfg = RunConfig::load(write_cfg(dir, body).string());
  CHECK(run_simulation(cfg) == RunStatus::SolverFailure);
  const std::string manifest = slurp(dir / "out" / "manifest.txt");
  CHECK(manifest.find("status = solver_failure") != std::string::npos);
  CHECK(manifest.find("failed_at_step") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "trajectory.csv"));
}

TEST_CASE("identity data rows load as identity elements") {
  fs::path dir = temp_dir("ident");
  std::ofstream os(dir / "ident.csv");
  for (int i = 0; i < 4; ++i) os << "1,0,0,0,1,0,0,0,1,0,0,0\n";
  os.close();
  auto slices = load_prescribed_data(dir / "ident.csv", GroupKind::SE3, 2);
  REQUIRE(slices.size() == 2);
  for (const auto& slice : slices)
    for (const auto& g : slice)
      CHECK(distance(g, GroupElement::identity(GroupKind::SE3)) == 0.0);
}

TEST_CASE("config-driven verify and reconstruction modes") {
  fs::path dir = temp_dir("modes");
  fs::path out = dir / "out";
  RunConfig cfg = RunConfig::load(write_cfg(dir, small_beam_cfg(out)).string());
  REQUIRE(run_simulation(cfg) == RunStatus::Ok);

  RunConfig verify_cfg = cfg;
  verify_cfg.mode = RunMode::Verify;
  verify_cfg.input_run = out.string();
  CHECK(run_simulation(verify_cfg) == RunStatus::Ok);

  RunConfig rec_cfg = cfg;
  rec_cfg.mode = RunMode::Reconstruction;
  rec_cfg.input_run = out.string();
  CHECK(run_simulation(rec_cfg) == RunStatus::Ok);
  CHECK(fs::exists(out / "reconstruction.csv"));
}

TEST_CASE("triangle momentum maps appear in the ledger on request") {
  fs::path dir = temp_dir("trimaps");
  fs::path out = dir / "out";
  std::string body = small_beam_cfg(out);
  body += "\n[output]\ndirectory = " + out.string() +
          "\ndiagnostics = momentum_maps,noether,energies,triangle_maps\n";
  RunConfig cfg = RunConfig::load(write_cfg(dir, body).string());
  REQUIRE(run_simulation(cfg) == RunStatus::Ok);
  CHECK(slurp(out / "ledger.csv").find("triangle_J2") != std::string::npos);
}

TEST_CASE("manifest residual norms satisfy the configured tolerance") {
  fs::path dir = temp_dir("manifest");
  fs::path out = dir / "out";
  RunConfig cfg = RunConfig::load(write_cfg(dir, small_beam_cfg(out)).string());
  REQUIRE(run_simulation(cfg) == RunStatus::Ok);
  std::ifstream is(out / "manifest.txt");
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.rfind("residual_", 0) != 0) continue;
    const size_t eq = line.find('=');
    const size_t it = line.find(" iterations");
    const double res = std::stod(line.substr(eq + 1, it - eq - 1));
    CHECK(res <= cfg.solver.tolerance);
    ++rows;
  }
  CHECK(rows == cfg.grid.A - 1);
}
