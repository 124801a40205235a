#include "msvi/conservation.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace msvi {

namespace {

Eigen::VectorXd project(const DensityModel& model, const Eigen::VectorXd& m) {
  return model.symmetry().project(m);
}

struct RawMaps {
  Eigen::VectorXd J1, J2, J3;  // unprojected, in g*
};

RawMaps raw_momentum_maps(const TriangleJet& jet, const DensityModel& model, const Retraction& ret,
                          const DiscreteForces* forces) {
  const double dt = model.dt(), ds = model.ds();
  auto [mu, lambda] = discrete_momenta(model, ret, jet.g, jet.xi, jet.eta);
  const CoAlgebraVector dg = model.d_g(jet.g, jet.xi, jet.eta);
  const GroupElement ginv = inverse(jet.g);
  const GroupKind kind = jet.g.kind();

  Eigen::VectorXd b1 = dg.coords - mu.coords / dt - lambda.coords / ds;
  if (forces && forces->f1) b1 += forces->f1(jet).coords;

  RawMaps out;
  out.J1 = Ad_star(ginv, {kind, b1}).coords;
  out.J2 = Ad_star(ginv, {kind, mu.coords}).coords / dt;
  out.J3 = Ad_star(ginv, {kind, lambda.coords}).coords / ds;
  // Each force term joins at its own vertex, outside the grid-step scaling:
  // this keeps the per-triangle sum equal to the orthogonality pairing and
  // the node-wise grouping equal to the forced DCEL, so the forced Noether
  // theorem holds exactly.
  if (forces && forces->f2) {
    const GroupElement g2 = compose(jet.g, ret.tau({kind, dt * jet.xi.coords}));
    out.J2 += Ad_star(inverse(g2), forces->f2(jet)).coords;
  }
  if (forces && forces->f3) {
    const GroupElement g3 = compose(jet.g, ret.tau({kind, ds * jet.eta.coords}));
    out.J3 += Ad_star(inverse(g3), forces->f3(jet)).coords;
  }
  return out;
}

}  // namespace

MomentumTriple covariant_momentum_maps(const TriangleJet& jet, const DensityModel& model,
                                       const Retraction& ret, const DiscreteForces* forces) {
  RawMaps raw = raw_momentum_maps(jet, model, ret, forces);
  return {project(model, raw.J1), project(model, raw.J2), project(model, raw.J3)};
}

Eigen::VectorXd covariant_noether_sum(const DiscreteField& field, const DensityModel& model,
                                      const Retraction& ret, int B, int C, int K, int L,
                                      const DiscreteForces* forces) {
  const int N = field.time_cells(), A = field.space_cells();
  if (!(0 <= B && B < C && C <= A - 1) || !(0 <= K && K < L && L <= N - 1)) {
    std::ostringstream os;
    os << "covariant_noether_sum: rectangle B=" << B << " C=" << C << " K=" << K << " L=" << L
       << " violates 0<=B<C<=" << A - 1 << ", 0<=K<L<=" << N - 1;
    throw IndexError(os.str());
  }

  auto J = [&](int j, int a) {
    return covariant_momentum_maps(jet_at(field, j, a, ret), model, ret, forces);
  };

  const int dim = model.symmetry().subgroup_dim(model.algebra_dim());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (int j = K + 1; j <= L; ++j) {
    sum += J(j, B).J1;
    sum += J(j - 1, B).J2;
    sum += J(j, C).J3;
  }
  for (int a = B + 1; a <= C; ++a) {
    sum += J(K, a).J1;
    sum += J(L, a).J2;
    sum += J(K, a - 1).J3;
  }
  sum += J(K, B).J1;
  sum += J(L, B).J2;
  sum += J(K, C).J3;
  return sum;
}

EvolutionaryMomenta evolutionary_momentum_maps(const DiscreteField& field,
                                               const DensityModel& model, const Retraction& ret,
                                               int slice, EvolutionMode mode) {
  const int N = field.time_cells(), A = field.space_cells();
  const int dim = model.symmetry().subgroup_dim(model.algebra_dim());
  EvolutionaryMomenta out{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};

  if (mode == EvolutionMode::Time) {
    if (slice < 0 || slice > N - 1) throw IndexError("evolutionary_momentum_maps: bad time slice");
    for (int a = 0; a < A; ++a) {
      MomentumTriple m = covariant_momentum_maps(jet_at(field, slice, a, ret), model, ret);
      out.plus += m.J2;
      out.minus -= m.J1 + m.J3;
    }
  } else {
    if (slice < 0 || slice > A - 1) throw IndexError("evolutionary_momentum_maps: bad strip index");
    for (int j = 0; j < N; ++j) {
      MomentumTriple m = covariant_momentum_maps(jet_at(field, j, slice, ret), model, ret);
      out.plus += m.J3;
      out.minus -= m.J1 + m.J2;
    }
  }
  return out;
}

double energy(const DiscreteField& field, const DensityModel& model, const Retraction& ret,
              int slice, EvolutionMode mode) {
  const int N = field.time_cells(), A = field.space_cells();
  double sum = 0.0;
  if (mode == EvolutionMode::Time) {
    if (slice < 0 || slice > N - 1) throw IndexError("energy: bad time slice");
    for (int a = 0; a < A; ++a) {
      TriangleJet jet = jet_at(field, slice, a, ret);
      sum += pairing(model.d_xi(jet.g, jet.xi, jet.eta), jet.xi) -
             model.evaluate(jet.g, jet.xi, jet.eta);
    }
    return sum / field.dt();
  }
  if (slice < 0 || slice > A - 1) throw IndexError("energy: bad strip index");
  for (int j = 0; j < N; ++j) {
    TriangleJet jet = jet_at(field, j, slice, ret);
    sum += pairing(model.d_eta(jet.g, jet.xi, jet.eta), jet.eta) -
           model.evaluate(jet.g, jet.xi, jet.eta);
  }
  return sum / field.ds();
}

LegendreTriple legendre_transforms(const TriangleJet& jet, const DensityModel& model,
                                   const Retraction& ret) {
  const double dt = model.dt(), ds = model.ds();
  auto [mu, lambda] = discrete_momenta(model, ret, jet.g, jet.xi, jet.eta);
  const CoAlgebraVector dg = model.d_g(jet.g, jet.xi, jet.eta);
  const GroupKind kind = jet.g.kind();

  LegendreTriple out;
  out.F1 = {kind, dg.coords - mu.coords / dt - lambda.coords / ds};
  AlgebraVector dt_xi{kind, dt * jet.xi.coords};
  AlgebraVector ds_eta{kind, ds * jet.eta.coords};
  out.F2 = {kind, Ad_star(ret.tau(dt_xi), mu).coords / dt};
  out.F3 = {kind, Ad_star(ret.tau(ds_eta), lambda).coords / ds};
  return out;
}

CartanEvaluation cartan_one_forms(const TriangleJet& jet, const DensityModel& model,
                                  const Retraction& ret, const TriangleVariation& var) {
  LegendreTriple F = legendre_transforms(jet, model, ret);
  return {pairing(F.F1, var.zeta1), pairing(F.F2, var.zeta2), pairing(F.F3, var.zeta3)};
}

// ---------------------------------------------------------------------------
// Symplecticity probes
// ---------------------------------------------------------------------------

namespace {

Slice perturb_slice(const Slice& s, const SliceTangent& t, double eps, const Retraction& ret) {
  Slice out = s;
  for (size_t k = 0; k < s.size(); ++k) {
    AlgebraVector step{t[k].kind, eps * t[k].coords};
    out[k] = compose(s[k], ret.tau(step));
  }
  return out;
}

double tangent_sup(const PairTangent& t) {
  double m = 0.0;
  for (const auto& z : t.first) m = std::max(m, z.coords.cwiseAbs().maxCoeff());
  for (const auto& z : t.second) m = std::max(m, z.coords.cwiseAbs().maxCoeff());
  return m;
}

// Theta^+ of the evolutionary description, paired against the second-slice
// components of a tangent.
double theta_plus(const Slice& y, const Slice& z, const SliceTangent& t_second,
                  const DensityModel& model, const Retraction& ret, EvolutionMode mode) {
  const double dt = model.dt(), ds = model.ds();
  double sum = 0.0;
  const int n = static_cast<int>(y.size()) - 1;
  for (int k = 0; k < n; ++k) {
    if (mode == EvolutionMode::Time) {
      // triangle (j, a=k): time leg into z, space leg within y
      AlgebraVector xi = ret.tau_inv(compose(inverse(y[k]), z[k]));
      xi.coords /= dt;
      AlgebraVector eta = ret.tau_inv(compose(inverse(y[k]), y[k + 1]));
      eta.coords /= ds;
      CoAlgebraVector mu = discrete_momentum_mu(model, ret, y[k], xi, eta);
      AlgebraVector dt_xi{xi.kind, dt * xi.coords};
      sum += Ad_star(ret.tau(dt_xi), mu).coords.dot(t_second[k].coords) / dt;
    } else {
      // triangle (j=k, a): time leg within y, space leg into z
      AlgebraVector xi = ret.tau_inv(compose(inverse(y[k]), y[k + 1]));
      xi.coords /= dt;
      AlgebraVector eta = ret.tau_inv(compose(inverse(y[k]), z[k]));
      eta.coords /= ds;
      CoAlgebraVector lambda = discrete_momentum_lambda(model, ret, y[k], xi, eta);
      AlgebraVector ds_eta{eta.kind, ds * eta.coords};
      sum += Ad_star(ret.tau(ds_eta), lambda).coords.dot(t_second[k].coords) / ds;
    }
  }
  return sum;
}

// Omega = d Theta^+ evaluated on (V, W) by central differences of the
// one-form. Tangents are extended per node as left-invariant fields (their
// trivialized components held constant), so the exterior-derivative formula
// carries the commutator term:
//   d Theta(V, W) = V(Theta(W)) - W(Theta(V)) - Theta([V, W]).
double two_form(const Slice& y, const Slice& z, const PairTangent& V, const PairTangent& W,
                const DensityModel& model, const Retraction& ret, EvolutionMode mode,
                double fd_step) {
  auto directional = [&](const PairTangent& along, const PairTangent& arg) {
    const double eps = fd_step / std::max(1.0, tangent_sup(along));
    const double fp = theta_plus(perturb_slice(y, along.first, eps, ret),
                                 perturb_slice(z, along.second, eps, ret), arg.second, model, ret,
                                 mode);
    const double fm = theta_plus(perturb_slice(y, along.first, -eps, ret),
                                 perturb_slice(z, along.second, -eps, ret), arg.second, model, ret,
                                 mode);
    return (fp - fm) / (2.0 * eps);
  };
  SliceTangent commutator;
  commutator.reserve(z.size());
  for (size_t k = 0; k < z.size(); ++k)
    commutator.push_back(bracket(V.second[k], W.second[k]));
  return directional(V, W) - directional(W, V) -
         theta_plus(y, z, commutator, model, ret, mode);
}

}  // namespace

std::vector<double> symplecticity_probe(const DiscreteField& solved, const DensityModel& model,
                                        const Retraction& ret, const BoundaryRegime& regime,
                                        EvolutionMode mode, const PairTangent& V0,
                                        const PairTangent& W0, double omega_fd_step,
                                        const DiscreteForces* forces) {
  const int steps = mode == EvolutionMode::Time ? solved.time_cells() : solved.space_cells();
  auto slice = [&](int i) {
    return mode == EvolutionMode::Time ? solved.time_slice(i) : solved.space_slice(i);
  };

  PairTangent V = V0, W = W0;
  std::vector<double> omegas;
  omegas.reserve(static_cast<size_t>(steps));
  omegas.push_back(two_form(slice(0), slice(1), V, W, model, ret, mode, omega_fd_step));

  for (int i = 1; i <= steps - 1; ++i) {
    const Slice prev = slice(i - 1), curr = slice(i), next = slice(i + 1);
    SliceTangent dV, dW;
    if (mode == EvolutionMode::Time) {
      dV = linearized_step_time(prev, curr, next, V.first, V.second, model, ret, regime, forces);
      dW = linearized_step_time(prev, curr, next, W.first, W.second, model, ret, regime, forces);
    } else {
      dV = linearized_step_space(prev, curr, next, V.first, V.second, model, ret, regime, forces);
      dW = linearized_step_space(prev, curr, next, W.first, W.second, model, ret, regime, forces);
    }
    V = {V.second, dV};
    W = {W.second, dW};
    omegas.push_back(two_form(curr, next, V, W, model, ret, mode, omega_fd_step));
  }
  return omegas;
}

// ---------------------------------------------------------------------------
// Multisymplectic form formula
// ---------------------------------------------------------------------------

namespace {

struct TriangleNodes {
  GroupElement g1, g2, g3;
};

// theta^k of the triangle rebuilt from (possibly perturbed) vertex values,
// paired against the constant tangent components (t1, t2, t3).
double theta_k(int k, const TriangleNodes& nodes, const AlgebraVector& t1, const AlgebraVector& t2,
               const AlgebraVector& t3, const DensityModel& model, const Retraction& ret) {
  const double dt = model.dt(), ds = model.ds();
  AlgebraVector xi = ret.tau_inv(compose(inverse(nodes.g1), nodes.g2));
  xi.coords /= dt;
  AlgebraVector eta = ret.tau_inv(compose(inverse(nodes.g1), nodes.g3));
  eta.coords /= ds;
  TriangleJet jet{nodes.g1, xi, eta};
  LegendreTriple F = legendre_transforms(jet, model, ret);
  switch (k) {
    case 1: return pairing(F.F1, t1);
    case 2: return pairing(F.F2, t2);
    default: return pairing(F.F3, t3);
  }
}

}  // namespace

double multisymplectic_form_defect(const DiscreteField& field, const DensityModel& model,
                                   const Retraction& ret, const FieldTangent& V,
                                   const FieldTangent& W, double* scale, double omega_fd_step) {
  const int N = field.time_cells(), A = field.space_cells();
  if (static_cast<int>(V.size()) != (N + 1) * (A + 1) || V.size() != W.size())
    throw InvalidParameterError("multisymplectic_form_defect: tangent size mismatch");

  auto node = [&](int j, int a) { return j * (A + 1) + a; };
  auto on_boundary = [&](int j, int a) { return j == 0 || j == N || a == 0 || a == A; };

  double defect = 0.0, abs_sum = 0.0;
  for (int j = 0; j < N; ++j) {
    for (int a = 0; a < A; ++a) {
      const int nodes_ja[3][2] = {{j, a}, {j + 1, a}, {j, a + 1}};
      bool touches = false;
      for (auto& nd : nodes_ja) touches = touches || on_boundary(nd[0], nd[1]);
      if (!touches) continue;

      TriangleNodes tri{field.at(j, a), field.at(j + 1, a), field.at(j, a + 1)};
      const AlgebraVector* Vt[3] = {&V[node(j, a)], &V[node(j + 1, a)], &V[node(j, a + 1)]};
      const AlgebraVector* Wt[3] = {&W[node(j, a)], &W[node(j + 1, a)], &W[node(j, a + 1)]};

      auto sup3 = [](const AlgebraVector* t[3]) {
        double m = 0;
        for (int i = 0; i < 3; ++i) m = std::max(m, t[i]->coords.cwiseAbs().maxCoeff());
        return m;
      };
      auto perturbed = [&](const AlgebraVector* t[3], double eps) {
        TriangleNodes out = tri;
        AlgebraVector s1{t[0]->kind, eps * t[0]->coords};
        AlgebraVector s2{t[1]->kind, eps * t[1]->coords};
        AlgebraVector s3{t[2]->kind, eps * t[2]->coords};
        out.g1 = compose(tri.g1, ret.tau(s1));
        out.g2 = compose(tri.g2, ret.tau(s2));
        out.g3 = compose(tri.g3, ret.tau(s3));
        return out;
      };

      for (int k = 1; k <= 3; ++k) {
        const int vj = nodes_ja[k - 1][0], va = nodes_ja[k - 1][1];
        if (!on_boundary(vj, va)) continue;
        // Omega^k = -d theta^k on left-invariant extensions:
        //   Omega^k(V, W) = -( D_V theta^k(W) - D_W theta^k(V) - theta^k([V, W]) )
        const double epsV = omega_fd_step / std::max(1.0, sup3(Vt));
        const double epsW = omega_fd_step / std::max(1.0, sup3(Wt));
        const double dV = (theta_k(k, perturbed(Vt, epsV), *Wt[0], *Wt[1], *Wt[2], model, ret) -
                           theta_k(k, perturbed(Vt, -epsV), *Wt[0], *Wt[1], *Wt[2], model, ret)) /
                          (2 * epsV);
        const double dW = (theta_k(k, perturbed(Wt, epsW), *Vt[0], *Vt[1], *Vt[2], model, ret) -
                           theta_k(k, perturbed(Wt, -epsW), *Vt[0], *Vt[1], *Vt[2], model, ret)) /
                          (2 * epsW);
        const double commutator =
            theta_k(k, tri, bracket(*Vt[0], *Wt[0]), bracket(*Vt[1], *Wt[1]),
                    bracket(*Vt[2], *Wt[2]), model, ret);
        const double contribution = -(dV - dW - commutator);
        defect += contribution;
        abs_sum += std::abs(contribution);
      }
    }
  }
  if (scale) *scale = abs_sum;
  return defect;
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

NoetherLedger build_ledger(const DiscreteField& field, const DensityModel& model,
                           const Retraction& ret, int rectangle_samples, unsigned long seed,
                           bool per_triangle) {
  NoetherLedger ledger;
  const int N = field.time_cells(), A = field.space_cells();
  ledger.time_cells = N;
  ledger.space_cells = A;
  ledger.symmetry_dim = model.symmetry().subgroup_dim(model.algebra_dim());

  for (int j = 0; j < N; ++j) {
    EvolutionaryMomenta m = evolutionary_momentum_maps(field, model, ret, j, EvolutionMode::Time);
    ledger.JL_plus.push_back(m.plus);
    ledger.JL_minus.push_back(m.minus);
    ledger.energy_L.push_back(energy(field, model, ret, j, EvolutionMode::Time));
  }
  for (int a = 0; a < A; ++a) {
    EvolutionaryMomenta m = evolutionary_momentum_maps(field, model, ret, a, EvolutionMode::Space);
    ledger.JN_plus.push_back(m.plus);
    ledger.JN_minus.push_back(m.minus);
    ledger.energy_N.push_back(energy(field, model, ret, a, EvolutionMode::Space));
  }

  for (int j = 0; j < N; ++j) {
    for (int a = 0; a < A; ++a) {
      MomentumTriple m = covariant_momentum_maps(jet_at(field, j, a, ret), model, ret);
      const double local = (m.J1 + m.J2 + m.J3).cwiseAbs().maxCoeff();
      ledger.local_noether_max = std::max(ledger.local_noether_max, local);
      if (per_triangle) ledger.triangles.push_back({j, a, m.J1, m.J2, m.J3});
    }
  }

  ledger.full_rectangle = covariant_noether_sum(field, model, ret, 0, A - 1, 0, N - 1);

  std::mt19937_64 rng(seed);
  for (int s = 0; s < rectangle_samples; ++s) {
    std::uniform_int_distribution<int> Bd(0, A - 2), Kd(0, N - 2);
    const int B = Bd(rng);
    const int K = Kd(rng);
    std::uniform_int_distribution<int> Cd(B + 1, A - 1), Ld(K + 1, N - 1);
    const int C = Cd(rng);
    const int L = Ld(rng);
    const double norm =
        covariant_noether_sum(field, model, ret, B, C, K, L).cwiseAbs().maxCoeff();
    ledger.rectangles.push_back({B, C, K, L, norm});
  }
  return ledger;
}

}  // namespace msvi
