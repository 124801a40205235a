// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cstdio>
#include <string>

#include "oracles.hpp"
#include "reference_case.hpp"

using namespace msvi;

namespace {

int g_failures = 0;

void criterion(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s  (%s)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  if (!ok) ++g_failures;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

const Retraction kId{RetractionKind::Identity};

DiscreteField solved_wave(double c, int N, int A, double dt, double ds) {
  auto model = scalar_wave_density(c, dt, ds);
  SolverSettings st;
  st.tolerance = 1e-13;
  DiscreteField f(GroupKind::AbelianRn, N, A, dt, ds, 1);
  auto exact = [&](int j, int a) {
    Eigen::VectorXd v(1);
    v(0) = std::sin(a * ds - c * j * dt);
    return GroupElement::abelian(v);
  };
  for (int a = 0; a <= A; ++a) {
    f.set(0, a, exact(0, a));
    f.set(1, a, exact(1, a));
  }
  for (int j = 1; j <= N - 1; ++j) {
    StepResult step = step_time(f.time_slice(j - 1), f.time_slice(j), *model, kId,
                                BoundaryRegime{RegimeKind::SpaceTime}, st,
                                PrescribedEnds{exact(j + 1, 0), exact(j + 1, A)});
    f.set_time_slice(j + 1, step.next);
  }
  return f;
}

PairTangent random_pair(int nodes, GroupKind kind, int dim, bool zero_ends) {
  PairTangent t;
  for (int k = 0; k < nodes; ++k) {
    AlgebraVector a{kind, oracle::random_vector(dim)};
    AlgebraVector b{kind, oracle::random_vector(dim)};
    if (zero_ends && (k == 0 || k == nodes - 1)) {
      a.coords.setZero();
      b.coords.setZero();
    }
    t.first.push_back(a);
    t.second.push_back(b);
  }
  return t;
}

double sequence_drift(const std::vector<double>& w) {
  double worst = 0.0;
  for (double v : w) worst = std::max(worst, std::abs(v - w.front()));
  return worst / std::abs(w.front());
}

// --- criteria ---------------------------------------------------------------

struct BeamRun {
  refcase::Setup setup = refcase::make_setup();
  refcase::MarchResult result{DiscreteField(GroupKind::SE3, 2, 2, 1, 1)};
  double wall_s = 0.0;
};

BeamRun beam_space_evolution_run() {
  BeamRun run;
  const auto t0 = std::chrono::steady_clock::now();
  run.result = refcase::march(run.setup);
  run.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

void check_beam_run(const BeamRun& run) {
  criterion("beam space-evolution run completes on the reference grid",
            run.result.max_iterations <= 50 && run.wall_s < 120.0,
            "max Newton iterations " + std::to_string(run.result.max_iterations) + ", wall " +
                num(run.wall_s) + " s, max residual " + num(run.result.max_residual));
}

void check_momentum_conservation(const BeamRun& run) {
  const auto& s = run.setup;
  Eigen::VectorXd J0 =
      evolutionary_momentum_maps(run.result.field, *s.model, s.ret, 0, EvolutionMode::Space).plus;
  double drift = 0.0;
  for (int a = 0; a <= s.A - 1; ++a) {
    Eigen::VectorXd Ja =
        evolutionary_momentum_maps(run.result.field, *s.model, s.ret, a, EvolutionMode::Space).plus;
    drift = std::max(drift, (Ja - J0).cwiseAbs().maxCoeff());
  }
  const double rel = drift / J0.cwiseAbs().maxCoeff();
  criterion("discrete momentum map J_N constant across all strips (rel <= 1e-9)", rel <= 1e-9,
            "relative drift " + num(rel));
}

void check_covariant_noether(const BeamRun& run) {
  const auto& s = run.setup;
  const double full = covariant_noether_sum(run.result.field, *s.model, s.ret, 0, s.A - 1, 0,
                                            s.N - 1)
                          .cwiseAbs()
                          .maxCoeff();
  criterion("covariant Noether sum over the full rectangle (<= 1e-9)", full <= 1e-9, num(full));

  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::uniform_int_distribution<int> Bd(0, s.A - 2), Kd(0, s.N - 2);
    const int B = Bd(rng), K = Kd(rng);
    std::uniform_int_distribution<int> Cd(B + 1, s.A - 1), Ld(K + 1, s.N - 1);
    const int C = Cd(rng), L = Ld(rng);
    worst = std::max(worst, covariant_noether_sum(run.result.field, *s.model, s.ret, B, C, K, L)
                                .cwiseAbs()
                                .maxCoeff());
  }
  criterion("covariant Noether sum over 20 random rectangles (<= 1e-9)", worst <= 1e-9,
            "worst " + num(worst));
}

void check_energy_behavior(const BeamRun& run) {
  const auto& s = run.setup;
  std::vector<double> EN;
  for (int a = 0; a <= s.A - 1; ++a)
    EN.push_back(energy(run.result.field, *s.model, s.ret, a, EvolutionMode::Space));

  double dev_half = 0.0, dev_full = 0.0, full_min = EN[0], full_max = EN[0];
  for (size_t a = 0; a < EN.size(); ++a) {
    const double d = std::abs(EN[a] - EN[0]);
    if (a < EN.size() / 2) dev_half = std::max(dev_half, d);
    dev_full = std::max(dev_full, d);
    full_min = std::min(full_min, EN[a]);
    full_max = std::max(full_max, EN[a]);
  }
  const double amplitude = full_max - full_min;
  // No secular drift: the full-run excursion stays close to the half-run
  // excursion (a linear drift would double it), so the trace is a bounded
  // oscillation rather than a trend.
  criterion("energy E_N oscillates with no secular drift",
            dev_half > 0 && dev_full <= 1.4 * dev_half,
            "full-run excursion " + num(dev_full) + ", half-run " + num(dev_half));
  // regression pin of the observed oscillation amplitude (not a reference value)
  criterion("energy E_N oscillation amplitude matches the pinned regression value",
            amplitude > 0.5 * 0.00186 && amplitude < 2.0 * 0.00186,
            "amplitude " + num(amplitude) + ", pinned 0.00186");
}

void check_local_noether() {
  auto model = beam_density(refcase::material(), 0.04, 0.02);
  const Retraction cay(RetractionKind::Cayley);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    MomentumTriple m = covariant_momentum_maps(oracle::random_beam_jet(), *model, cay);
    worst = std::max(worst, (m.J1 + m.J2 + m.J3).cwiseAbs().maxCoeff());
  }
  criterion("local Noether identity J1+J2+J3 = 0 on 1000 random jets (<= 1e-11)", worst <= 1e-11,
            "worst " + num(worst));
}

void check_abelian_reduction() {
  const double c = 1.7;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int N = 2 + static_cast<int>(oracle::uniform(0, 2.999));
    const int A = 2 + static_cast<int>(oracle::uniform(0, 2.999));
    const double dt = oracle::uniform(0.05, 0.2), ds = oracle::uniform(0.05, 0.2);
    DiscreteField f = oracle::random_wave_field(N, A, dt, ds);
    auto model = scalar_wave_density(c, dt, ds);
    for (int j = 1; j <= N - 1; ++j)
      for (int a = 1; a <= A - 1; ++a)
        worst = std::max(worst, std::abs(interior_residual(f, *model, kId, j, a).coords(0) -
                                         oracle::brute_force_wave_dcel(f, c, j, a)));
  }
  criterion("abelian reduction equals brute-force DCEL on random grids (<= 1e-10)",
            worst <= 1e-10, "worst " + num(worst));
}

void check_symplecticity(const BeamRun& run) {
  SolverSettings st;
  st.tolerance = 1e-13;

  {  // time mode, abelian wave, 50 steps
    const double c = 1.0, dt = 0.02, ds = 0.04;
    const int N = 50, A = 25;
    DiscreteField f = solved_wave(c, N, A, dt, ds);
    auto model = scalar_wave_density(c, dt, ds);
    PairTangent V = random_pair(A + 1, GroupKind::AbelianRn, 1, true);
    PairTangent W = random_pair(A + 1, GroupKind::AbelianRn, 1, true);
    std::vector<double> w = symplecticity_probe(f, *model, kId,
                                                BoundaryRegime{RegimeKind::SpaceTime},
                                                EvolutionMode::Time, V, W);
    const double drift = sequence_drift(w);
    criterion("two-form constant over 50 time steps, abelian wave (rel <= 1e-6)", drift <= 1e-6,
              "relative drift " + num(drift));
  }

  {  // space mode, beam run
    const auto& s = run.setup;
    const int nodes = s.N + 1;
    PairTangent V = random_pair(nodes, GroupKind::SE3, 6, false);
    PairTangent W = random_pair(nodes, GroupKind::SE3, 6, false);
    // tangents must respect the terminal momentum condition of the data pair
    V.second[nodes - 1] = V.second[nodes - 2];
    W.second[nodes - 1] = W.second[nodes - 2];
    std::vector<double> w =
        symplecticity_probe(run.result.field, *s.model, s.ret, s.regime, EvolutionMode::Space, V,
                            W);
    const double drift = sequence_drift(w);
    criterion("two-form constant over all strips, beam space mode (rel <= 1e-6)", drift <= 1e-6,
              "relative drift " + num(drift));
  }

  {  // multisymplectic form formula
    const double c = 0.9, dt = 0.05, ds = 0.1;
    const int N = 12, A = 8;
    DiscreteField f = solved_wave(c, N, A, dt, ds);
    auto model = scalar_wave_density(c, dt, ds);
    BoundaryRegime regime{RegimeKind::SpaceTime};

    PairTangent V0 = random_pair(A + 1, GroupKind::AbelianRn, 1, true);
    PairTangent W0 = random_pair(A + 1, GroupKind::AbelianRn, 1, true);
    FieldTangent V(static_cast<size_t>((N + 1) * (A + 1)),
                   AlgebraVector::zero(GroupKind::AbelianRn, 1));
    FieldTangent W = V;
    auto put = [&](FieldTangent& t, int j, const SliceTangent& sl) {
      for (int a = 0; a <= A; ++a) t[static_cast<size_t>(j * (A + 1) + a)] = sl[a];
    };
    PairTangent tv = V0, tw = W0;
    put(V, 0, tv.first);
    put(V, 1, tv.second);
    put(W, 0, tw.first);
    put(W, 1, tw.second);
    for (int j = 1; j <= N - 1; ++j) {
      SliceTangent nv = linearized_step_time(f.time_slice(j - 1), f.time_slice(j),
                                             f.time_slice(j + 1), tv.first, tv.second, *model,
                                             kId, regime);
      SliceTangent nw = linearized_step_time(f.time_slice(j - 1), f.time_slice(j),
                                             f.time_slice(j + 1), tw.first, tw.second, *model,
                                             kId, regime);
      put(V, j + 1, nv);
      put(W, j + 1, nw);
      tv = {tv.second, nv};
      tw = {tw.second, nw};
    }
    double scale = 0.0;
    const double defect = multisymplectic_form_defect(f, *model, kId, V, W, &scale);
    criterion("multisymplectic boundary defect vanishes on solutions (<= 1e-7 scale)",
              std::abs(defect) <= 1e-7 * scale,
              "defect " + num(defect) + ", scale " + num(scale));

    FieldTangent R;
    for (int k = 0; k < (N + 1) * (A + 1); ++k)
      R.push_back(AlgebraVector{GroupKind::AbelianRn, oracle::random_vector(1)});
    double rscale = 0.0;
    const double rdefect = multisymplectic_form_defect(f, *model, kId, V, R, &rscale);
    criterion("multisymplectic boundary defect detects non-variations (>= 1e-3 scale)",
              std::abs(rdefect) >= 1e-3 * rscale,
              "defect " + num(rdefect) + ", scale " + num(rscale));
  }
}

void check_retraction_suite() {
  for (RetractionKind kind : {RetractionKind::Cayley, RetractionKind::Exponential}) {
    const Retraction ret(kind);
    const std::string name = ret.name();

    bool tau0 = distance(ret.tau(AlgebraVector::zero(GroupKind::SE3)),
                         GroupElement::identity(GroupKind::SE3)) == 0.0;
    criterion("retraction " + name + ": tau(0) = e", tau0, "exact");

    double worst_inv = 0.0, worst_op = 0.0, worst_fd = 0.0;
    for (int i = 0; i < 300; ++i) {
      AlgebraVector x = oracle::random_algebra(GroupKind::SE3, 0.9);
      AlgebraVector y = oracle::random_algebra(GroupKind::SE3);
      worst_inv = std::max(
          worst_inv, (ret.tau_inv(ret.tau(x)).coords - x.coords).cwiseAbs().maxCoeff());
      worst_op = std::max(worst_op, (ret.dtauR_inv(x, ret.dtauR(x, y)).coords - y.coords)
                                        .cwiseAbs()
                                        .maxCoeff());
      const double eps = 1e-6;
      auto shifted = [&](double sgn) {
        AlgebraVector xs{x.kind, x.coords + sgn * eps * y.coords};
        return compose(ret.tau(xs), inverse(ret.tau(x))).matrix();
      };
      Eigen::MatrixXd fd = (shifted(1.0) - shifted(-1.0)) / (2 * eps);
      worst_fd = std::max(worst_fd, (fd - hat(ret.dtauR(x, y))).cwiseAbs().maxCoeff());
    }
    criterion("retraction " + name + ": tau_inv(tau(x)) = x (<= 1e-11)", worst_inv <= 1e-11,
              "worst " + num(worst_inv));
    criterion("retraction " + name + ": d_tau_inv inverts d_tau (<= 1e-11)", worst_op <= 1e-11,
              "worst " + num(worst_op));
    criterion("retraction " + name + ": d_tau matches finite differences (<= 1e-6)",
              worst_fd <= 1e-6, "worst " + num(worst_fd));
  }
}

void check_wave_convergence() {
  const double c = 0.5;
  SolverSettings st;
  st.tolerance = 1e-13;
  std::vector<double> errors;
  for (int level = 0; level < 3; ++level) {
    const int N = 10 << level, A = 20 << level;
    const double dt = 0.1 / (1 << level), ds = 0.1 / (1 << level);
    DiscreteField f = solved_wave(c, N, A, dt, ds);
    double err = 0.0;
    for (int a = 0; a <= A; ++a)
      err = std::max(err, std::abs(f.at(N, a).value()(0) - std::sin(a * ds - c * N * dt)));
    errors.push_back(err);
  }
  const bool monotone = errors[1] < errors[0] && errors[2] < errors[1];
  const double order = std::log2(errors[1] / errors[2]);
  criterion("scalar-wave error decreases under simultaneous grid refinement", monotone,
            num(errors[0]) + " -> " + num(errors[1]) + " -> " + num(errors[2]));
  // regression pin of the observed order (the reference makes no order claim)
  criterion("scalar-wave observed convergence order matches the pinned regression value",
            order > 1.8 && order < 2.2, "order " + num(order) + ", pinned 2.0");
}

void check_gradients() {
  const Retraction cay(RetractionKind::Cayley);
  double worst = 0.0;
  auto check_model = [&](const DensityModel& model, const GroupElement& g) {
    const int d = model.algebra_dim();
    for (int i = 0; i < 100; ++i) {
      AlgebraVector xi = oracle::random_algebra(model.group_kind(), 1.0, d);
      AlgebraVector eta = oracle::random_algebra(model.group_kind(), 1.0, d);
      Eigen::VectorXd dir = oracle::random_vector(d);
      dir /= dir.cwiseAbs().maxCoeff();
      const double dxi = oracle::d5([&](double h) {
        AlgebraVector p{xi.kind, xi.coords + h * dir};
        return model.evaluate(g, p, eta);
      });
      const double deta = oracle::d5([&](double h) {
        AlgebraVector p{eta.kind, eta.coords + h * dir};
        return model.evaluate(g, xi, p);
      });
      const double exi = std::abs(dxi - model.d_xi(g, xi, eta).coords.dot(dir));
      const double eeta = std::abs(deta - model.d_eta(g, xi, eta).coords.dot(dir));
      worst = std::max(worst, exi / std::max(1.0, std::abs(dxi)));
      worst = std::max(worst, eeta / std::max(1.0, std::abs(deta)));
      if (g.kind() == GroupKind::SE3) {
        const double dg = oracle::d5([&](double h) {
          AlgebraVector step{g.kind(), h * dir};
          return model.evaluate(compose(g, cay.tau(step)), xi, eta);
        });
        worst = std::max(worst,
                         std::abs(dg - model.d_g(g, xi, eta).coords.dot(dir)) /
                             std::max(1.0, std::abs(dg)));
      }
    }
  };
  auto beam = beam_density(refcase::material(), 0.04, 0.02);
  check_model(*beam, oracle::random_se3());
  Potential pot;
  pot.value = [](const GroupElement& g) { return 2.0 * g.translation().y(); };
  pot.d_trivialized = [](const GroupElement& g) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(6);
    out.tail<3>() = 2.0 * g.rotation().row(1).transpose();
    return out;
  };
  auto heavy = beam_density(refcase::material(), 0.04, 0.02, pot);
  check_model(*heavy, oracle::random_se3());
  auto wave = scalar_wave_density(1.3, 0.05, 0.1);
  check_model(*wave, GroupElement::abelian(oracle::random_vector(1)));
  criterion("all density partials match 5-point central differences (rel <= 1e-6)",
            worst <= 1e-6, "worst " + num(worst));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n================\n");
  try {
    BeamRun run = beam_space_evolution_run();
    check_beam_run(run);
    check_momentum_conservation(run);
    check_covariant_noether(run);
    check_energy_behavior(run);
    check_local_noether();
    check_abelian_reduction();
    check_symplecticity(run);
    check_retraction_suite();
    check_wave_convergence();
    check_gradients();
  } catch (const std::exception& e) {
    criterion("suite completed without exceptions", false, e.what());
  }
  std::printf("================\n%s (%d failure%s)\n", g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
