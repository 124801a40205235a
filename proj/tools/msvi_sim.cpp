// Command-line driver: run a configured simulation, verify a completed run
// directory, or reorder a space-evolution trajectory into time slices.
//
// Exit codes: 0 success, 1 usage/configuration/data error, 2 solver failure,
// 3 invariant violation.

#include <CLI11.hpp>
#include <iostream>

#include "msvi/sim.hpp"

namespace {

int status_code(msvi::RunStatus s) { return static_cast<int>(s); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multisymplectic variational integrator for Lie-group field theories"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "execute the mode configured in <config>");
  run->add_option("config", config_path, "configuration file")->required();

  std::string verify_dir;
  CLI::App* verify = app.add_subcommand("verify", "re-check all ledger invariants of a run");
  verify->add_option("run-dir", verify_dir, "completed run directory")->required();

  std::string reconstruct_dir;
  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "reorder a space-evolution run into time slices");
  reconstruct->add_option("run-dir", reconstruct_dir, "completed run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      msvi::RunConfig config = msvi::RunConfig::load(config_path);
      msvi::RunStatus status = msvi::run_simulation(config);
      if (status == msvi::RunStatus::SolverFailure)
        std::cerr << "solver failure; see manifest.txt in the output directory\n";
      if (status == msvi::RunStatus::InvariantViolation)
        std::cerr << "invariant violation; see violations.txt in the output directory\n";
      return status_code(status);
    }
    if (verify->parsed()) {
      msvi::RunStatus status = msvi::verify_run(verify_dir);
      if (status == msvi::RunStatus::InvariantViolation)
        std::cerr << "invariant violation; see violations.txt in the run directory\n";
      else
        std::cout << "all ledger invariants verified\n";
      return status_code(status);
    }
    msvi::RunStatus status = msvi::reconstruct_run(reconstruct_dir);
    if (status == msvi::RunStatus::Ok) std::cout << "wrote reconstruction.csv\n";
    return status_code(status);
  } catch (const msvi::NewtonDivergenceError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const msvi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
