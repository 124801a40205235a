#include <benchmark/benchmark.h>

#include "msvi/conservation.hpp"

using namespace msvi;

namespace {

BeamParameters bench_material() {
  BeamParameters p;
  p.side = 1.0;
  p.rho = 0.01;
  p.youngs_modulus = 25.0;
  p.poisson = 0.35;
  return p;
}

Slice constant_velocity_curve(const GroupElement& g0, const Eigen::VectorXd& xi, int steps,
                              double dt, const Retraction& ret) {
  std::vector<AlgebraVector> inc(static_cast<size_t>(steps), AlgebraVector{GroupKind::SE3, xi});
  return reconstruct_initial_data(g0, inc, ret, dt);
}

struct BeamStrips {
  std::unique_ptr<DensityModel> model;
  Retraction ret{RetractionKind::Cayley};
  Slice strip0, strip1;
};

BeamStrips make_strips(int N) {
  BeamStrips s;
  const double dt = 0.04, ds = 0.02;
  s.model = beam_density(bench_material(), dt, ds);
  Eigen::VectorXd xi0(6), xi1(6);
  xi0 << 0, -0.85, 0, 0, -0.1, 0;
  xi1 << 0.06, -0.849, -0.04, -0.03, -0.1, 0;
  s.strip0 = constant_velocity_curve(GroupElement::identity(GroupKind::SE3), xi0, N, dt, s.ret);
  s.strip1 = constant_velocity_curve(
      GroupElement::se3(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, ds)), xi1, N, dt,
      s.ret);
  s.strip1.back() = s.strip1[static_cast<size_t>(N - 1)];
  return s;
}

void BM_CayleyRetraction(benchmark::State& state) {
  const Retraction cay(RetractionKind::Cayley);
  AlgebraVector x{GroupKind::SE3, Eigen::VectorXd(6)};
  x.coords << 0.1, -0.3, 0.2, 0.4, -0.1, 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cay.tau_inv(cay.tau(x)));
  }
}
BENCHMARK(BM_CayleyRetraction);

void BM_DiscreteMomenta(benchmark::State& state) {
  const Retraction cay(RetractionKind::Cayley);
  auto model = beam_density(bench_material(), 0.04, 0.02);
  GroupElement g = GroupElement::identity(GroupKind::SE3);
  AlgebraVector xi{GroupKind::SE3, Eigen::VectorXd(6)}, eta{GroupKind::SE3, Eigen::VectorXd(6)};
  xi.coords << 0, -0.85, 0, 0, -0.1, 0;
  eta.coords << 0.3, 0.1, -0.2, 0.05, 0, 1.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(discrete_momenta(*model, cay, g, xi, eta));
  }
}
BENCHMARK(BM_DiscreteMomenta);

void BM_SpaceStrip(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  BeamStrips s = make_strips(N);
  SolverSettings st;
  st.tolerance = 1e-13;
  BoundaryRegime regime{RegimeKind::SpaceEvolutionBVP};
  for (auto _ : state) {
    benchmark::DoNotOptimize(step_space(s.strip0, s.strip1, *s.model, s.ret, regime, st));
  }
}
BENCHMARK(BM_SpaceStrip)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_NoetherRectangle(benchmark::State& state) {
  BeamStrips s = make_strips(12);
  DiscreteField f(GroupKind::SE3, 12, 8, 0.04, 0.02);
  f.set_space_slice(0, s.strip0);
  f.set_space_slice(1, s.strip1);
  SolverSettings st;
  st.tolerance = 1e-13;
  BoundaryRegime regime{RegimeKind::SpaceEvolutionBVP};
  for (int a = 1; a <= 7; ++a)
    f.set_space_slice(a + 1, step_space(f.space_slice(a - 1), f.space_slice(a), *s.model, s.ret,
                                        regime, st)
                                 .next);
  for (auto _ : state) {
    benchmark::DoNotOptimize(covariant_noether_sum(f, *s.model, s.ret, 0, 7, 0, 11));
  }
}
BENCHMARK(BM_NoetherRectangle);

}  // namespace

BENCHMARK_MAIN();
