#include "msvi/engine.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

namespace msvi {

void SolverSettings::validate() const {
  if (!(tolerance > 0)) throw InvalidParameterError("SolverSettings: tolerance must be > 0");
  if (max_iterations < 1) throw InvalidParameterError("SolverSettings: max_iterations must be >= 1");
  if (!(fd_step > 0)) throw InvalidParameterError("SolverSettings: fd_step must be > 0");
}

TriangleJet jet_at(const DiscreteField& field, int j, int a, const Retraction& ret) {
  try {
    return TriangleJet{field.at(j, a), field.xi(j, a, ret), field.eta(j, a, ret)};
  } catch (const RetractionDomainError& e) {
    std::ostringstream os;
    os << "triangle (j=" << j << ", a=" << a << "): " << e.what();
    throw RetractionDomainError(os.str());
  }
}

double forces_orthogonality_defect(const DiscreteForces& forces, const SymmetryDeclaration& sym,
                                   const DensityModel& model, const Retraction& ret,
                                   const TriangleJet& jet) {
  const GroupElement& g1 = jet.g;
  AlgebraVector dtxi{jet.xi.kind, model.dt() * jet.xi.coords};
  AlgebraVector dseta{jet.eta.kind, model.ds() * jet.eta.coords};
  const GroupElement g2 = compose(g1, ret.tau(dtxi));
  const GroupElement g3 = compose(g1, ret.tau(dseta));

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(jet.xi.dim());
  if (forces.f1) sum += Ad_star(inverse(g1), forces.f1(jet)).coords;
  if (forces.f2) sum += Ad_star(inverse(g2), forces.f2(jet)).coords;
  if (forces.f3) sum += Ad_star(inverse(g3), forces.f3(jet)).coords;
  return sym.project(sum).cwiseAbs().maxCoeff();
}

namespace {

CoAlgebraVector ad_star_transport(const Retraction& ret, const AlgebraVector& scaled_leg,
                                  const CoAlgebraVector& m) {
  return Ad_star(ret.tau(scaled_leg), m);
}

struct Cell {
  TriangleJet jet;
  CoAlgebraVector mu, lambda;
  AlgebraVector dt_xi, ds_eta;  // scaled legs for the Ad* transports
};

Cell make_cell(const DensityModel& model, const Retraction& ret, TriangleJet jet) {
  Cell c{std::move(jet), {}, {}, {}, {}};
  c.mu = discrete_momentum_mu(model, ret, c.jet.g, c.jet.xi, c.jet.eta);
  c.lambda = discrete_momentum_lambda(model, ret, c.jet.g, c.jet.xi, c.jet.eta);
  c.dt_xi = AlgebraVector{c.jet.xi.kind, model.dt() * c.jet.xi.coords};
  c.ds_eta = AlgebraVector{c.jet.eta.kind, model.ds() * c.jet.eta.coords};
  return c;
}

TriangleJet jet_from(const Retraction& ret, const GroupElement& g, const GroupElement& g_time,
                     const GroupElement& g_space, double dt, double ds) {
  AlgebraVector xi = ret.tau_inv(compose(inverse(g), g_time));
  xi.coords /= dt;
  AlgebraVector eta = ret.tau_inv(compose(inverse(g), g_space));
  eta.coords /= ds;
  return {g, xi, eta};
}

// Interior DCEL residual from the four participating cells.
Eigen::VectorXd interior_from_cells(const DensityModel& model, const Retraction& ret,
                                    const Cell& here, const Cell& below_time,
                                    const Cell& below_space, const DiscreteForces* forces) {
  const double dt = model.dt(), ds = model.ds();
  Eigen::VectorXd r = (here.mu.coords -
                       ad_star_transport(ret, below_time.dt_xi, below_time.mu).coords) /
                          dt +
                      (here.lambda.coords -
                       ad_star_transport(ret, below_space.ds_eta, below_space.lambda).coords) /
                          ds;
  r -= model.d_g(here.jet.g, here.jet.xi, here.jet.eta).coords;
  if (forces) {
    if (forces->f1) r -= forces->f1(here.jet).coords;
    if (forces->f2) r -= forces->f2(below_time.jet).coords;
    if (forces->f3) r -= forces->f3(below_space.jet).coords;
  }
  return r;
}

void check_slice_kind(const Slice& s, const char* what) {
  if (s.empty()) throw InvalidParameterError(std::string(what) + ": empty slice");
  for (const auto& g : s)
    if (g.kind() != s.front().kind() || g.algebra_dim() != s.front().algebra_dim())
      throw VariantMismatchError(std::string(what) + ": mixed variants in slice");
}

// ---------------------------------------------------------------------------
// Stacked Newton solve over a slice of group unknowns.
// ---------------------------------------------------------------------------

struct StackedSystem {
  std::function<Eigen::VectorXd(const Slice&)> residual;
  int algebra_dim = 0;
};

Slice apply_update(const Slice& unknowns, const Eigen::VectorXd& delta, const Retraction& ret,
                   double scale, GroupKind kind) {
  const int d = delta.size() / static_cast<int>(unknowns.size());
  Slice out = unknowns;
  for (size_t k = 0; k < unknowns.size(); ++k) {
    AlgebraVector step{kind, scale * delta.segment(static_cast<int>(k) * d, d)};
    out[k] = compose(unknowns[k], ret.tau(step));
  }
  return out;
}

NewtonStats newton_solve(Slice& unknowns, const StackedSystem& sys, const Retraction& ret,
                         const SolverSettings& settings, const char* what) {
  settings.validate();
  const GroupKind kind = unknowns.front().kind();
  const int d = sys.algebra_dim;
  const int n = static_cast<int>(unknowns.size()) * d;

  NewtonStats stats;
  Eigen::VectorXd res = sys.residual(unknowns);
  double norm = res.cwiseAbs().maxCoeff();
  if (!std::isfinite(norm))
    throw NewtonDivergenceError(std::string(what) + ": non-finite residual at the initial guess", {});

  for (int it = 0; it < settings.max_iterations; ++it) {
    if (norm <= settings.tolerance) {
      stats.final_norm = norm;
      return stats;
    }
    // Forward-difference Jacobian in Lie-algebra perturbation coordinates.
    Eigen::MatrixXd J(n, n);
    for (int k = 0; k < static_cast<int>(unknowns.size()); ++k) {
      for (int i = 0; i < d; ++i) {
        Slice pert = unknowns;
        AlgebraVector step{kind, Eigen::VectorXd::Zero(d)};
        step.coords(i) = settings.fd_step;
        pert[static_cast<size_t>(k)] = compose(unknowns[static_cast<size_t>(k)], ret.tau(step));
        J.col(k * d + i) = (sys.residual(pert) - res) / settings.fd_step;
      }
    }
    Eigen::VectorXd delta = J.partialPivLu().solve(-res);

    // Backtrack if the full step does not reduce the residual norm. Trial
    // steps that leave the retraction domain count as rejected candidates.
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 12; ++bt) {
      Slice cand = apply_update(unknowns, delta, ret, t, kind);
      double cnorm = std::numeric_limits<double>::infinity();
      Eigen::VectorXd cres;
      try {
        cres = sys.residual(cand);
        cnorm = cres.cwiseAbs().maxCoeff();
      } catch (const RetractionDomainError&) {
      }
      if (std::isfinite(cnorm) && (cnorm < norm || cnorm <= settings.tolerance)) {
        unknowns = std::move(cand);
        res = std::move(cres);
        norm = cnorm;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    stats.iterations = it + 1;
    stats.residual_norms.push_back(norm);
    if (!accepted) {
      std::ostringstream os;
      os << what << ": Newton stalled at residual " << norm << " after " << stats.iterations
         << " iterations";
      throw NewtonDivergenceError(os.str(), stats.residual_norms);
    }
  }
  if (norm <= settings.tolerance) {
    stats.final_norm = norm;
    return stats;
  }
  std::ostringstream os;
  os << what << ": no convergence to " << settings.tolerance << " within "
     << settings.max_iterations << " iterations (residual " << norm << ")";
  throw NewtonDivergenceError(os.str(), stats.residual_norms);
}

// ---------------------------------------------------------------------------
// Time step: rows at time level j over the unknown slice g^{j+1}.
// ---------------------------------------------------------------------------

struct TimeStepSystem {
  const DensityModel& model;
  const Retraction& ret;
  RegimeKind regime;
  const DiscreteForces* forces;
  const Slice& prev;
  const Slice& curr;
  std::optional<PrescribedEnds> ends;  // set iff edges prescribed
  int A;

  std::vector<Cell> below;  // cells of triangles (j-1, a), a = 0..A-1

  TimeStepSystem(const DensityModel& m, const Retraction& r, RegimeKind reg,
                 const DiscreteForces* f, const Slice& p, const Slice& c,
                 std::optional<PrescribedEnds> e)
      : model(m), ret(r), regime(reg), forces(f), prev(p), curr(c), ends(std::move(e)),
        A(static_cast<int>(c.size()) - 1) {
    below.reserve(static_cast<size_t>(A));
    for (int a = 0; a < A; ++a) {
      below.push_back(make_cell(
          model, ret,
          jet_from(ret, prev[a], curr[a], prev[a + 1], model.dt(), model.ds())));
    }
  }

  bool whole_slice_unknown() const { return regime == RegimeKind::TimeOnly; }

  Slice assemble(const Slice& unknowns) const {
    if (whole_slice_unknown()) return unknowns;
    Slice full;
    full.reserve(static_cast<size_t>(A + 1));
    full.push_back(ends->first);
    full.insert(full.end(), unknowns.begin(), unknowns.end());
    full.push_back(ends->last);
    return full;
  }

  Eigen::VectorXd residual(const Slice& unknowns) const {
    const Slice next = assemble(unknowns);
    const double dt = model.dt(), ds = model.ds();
    const int d = model.algebra_dim();

    // Level-j cells (triangles (j, a)); their time leg reaches into `next`.
    std::vector<Cell> level;
    level.reserve(static_cast<size_t>(A));
    for (int a = 0; a < A; ++a)
      level.push_back(make_cell(model, ret,
                                jet_from(ret, curr[a], next[a], curr[a + 1], dt, ds)));

    const int a_lo = whole_slice_unknown() ? 0 : 1;
    const int rows = whole_slice_unknown() ? A + 1 : A - 1;
    Eigen::VectorXd r(rows * d);
    int row = 0;

    for (int a = a_lo; a <= A - 1; ++a) {
      if (a == 0) {
        // zero-traction edge: no (j, a-1) triangle
        Eigen::VectorXd v =
            (level[0].mu.coords - ad_star_transport(ret, below[0].dt_xi, below[0].mu).coords) / dt +
            level[0].lambda.coords / ds -
            model.d_g(level[0].jet.g, level[0].jet.xi, level[0].jet.eta).coords;
        if (forces) {
          if (forces->f1) v -= forces->f1(level[0].jet).coords;
          if (forces->f2) v -= forces->f2(below[0].jet).coords;
        }
        r.segment(row * d, d) = v;
      } else {
        r.segment(row * d, d) =
            interior_from_cells(model, ret, level[a], below[a], level[a - 1], forces);
      }
      ++row;
    }

    if (whole_slice_unknown()) {
      // zero-traction tip transported to the new slice:
      //   (1/ds) Ad*_{tau(ds eta_{A-1}^{j+1})} lambda_{A-1}^{j+1} = 0.
      // The jet's time leg would need slice j+2; the previous cell's velocity
      // stands in for it (exact whenever D_eta does not depend on xi).
      AlgebraVector xi_sur = ret.tau_inv(compose(inverse(curr[A - 1]), next[A - 1]));
      xi_sur.coords /= dt;
      AlgebraVector eta_new = ret.tau_inv(compose(inverse(next[A - 1]), next[A]));
      eta_new.coords /= ds;
      TriangleJet tip{next[A - 1], xi_sur, eta_new};
      CoAlgebraVector lam = discrete_momentum_lambda(model, ret, tip.g, tip.xi, tip.eta);
      AlgebraVector ds_eta{eta_new.kind, ds * eta_new.coords};
      Eigen::VectorXd v = ad_star_transport(ret, ds_eta, lam).coords / ds;
      if (forces && forces->f3) v += forces->f3(tip).coords;
      r.segment(row * d, d) = v;
      ++row;
    }
    return r;
  }

  Slice initial_guess() const {
    Slice guess;
    guess.reserve(static_cast<size_t>(whole_slice_unknown() ? A + 1 : A - 1));
    const int a_lo = whole_slice_unknown() ? 0 : 1;
    const int a_hi = whole_slice_unknown() ? A : A - 1;
    for (int a = a_lo; a <= a_hi; ++a) {
      // constant-velocity predictor: advance by the previous increment
      AlgebraVector inc = ret.tau_inv(compose(inverse(prev[a]), curr[a]));
      guess.push_back(compose(curr[a], ret.tau(inc)));
    }
    return guess;
  }
};

// ---------------------------------------------------------------------------
// Space step: rows at strip a over the unknown strip g_{a+1}.
// ---------------------------------------------------------------------------

struct SpaceStepSystem {
  const DensityModel& model;
  const Retraction& ret;
  RegimeKind regime;
  const DiscreteForces* forces;
  const Slice& prev;  // strip a-1, indexed by j = 0..N
  const Slice& curr;  // strip a
  std::optional<PrescribedEnds> ends;
  int N;

  std::vector<Cell> beside;          // cells of triangles (j, a-1), j = 0..N-1
  std::vector<AlgebraVector> xi_cur; // xi_a^j within the current strip

  SpaceStepSystem(const DensityModel& m, const Retraction& r, RegimeKind reg,
                  const DiscreteForces* f, const Slice& p, const Slice& c,
                  std::optional<PrescribedEnds> e)
      : model(m), ret(r), regime(reg), forces(f), prev(p), curr(c), ends(std::move(e)),
        N(static_cast<int>(c.size()) - 1) {
    beside.reserve(static_cast<size_t>(N));
    xi_cur.reserve(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) {
      beside.push_back(make_cell(
          model, ret, jet_from(ret, prev[j], prev[j + 1], curr[j], model.dt(), model.ds())));
      AlgebraVector xi = ret.tau_inv(compose(inverse(curr[j]), curr[j + 1]));
      xi.coords /= model.dt();
      xi_cur.push_back(xi);
    }
  }

  bool whole_slice_unknown() const {
    return regime == RegimeKind::SpaceOnly || regime == RegimeKind::SpaceEvolutionBVP;
  }

  Slice assemble(const Slice& unknowns) const {
    if (whole_slice_unknown()) return unknowns;
    Slice full;
    full.reserve(static_cast<size_t>(N + 1));
    full.push_back(ends->first);
    full.insert(full.end(), unknowns.begin(), unknowns.end());
    full.push_back(ends->last);
    return full;
  }

  Eigen::VectorXd residual(const Slice& unknowns) const {
    const Slice next = assemble(unknowns);
    const double dt = model.dt(), ds = model.ds();
    const int d = model.algebra_dim();

    // Strip-a cells (triangles (j, a)); their space leg reaches into `next`.
    std::vector<Cell> level;
    level.reserve(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) {
      AlgebraVector eta = ret.tau_inv(compose(inverse(curr[j]), next[j]));
      eta.coords /= ds;
      level.push_back(make_cell(model, ret, TriangleJet{curr[j], xi_cur[j], eta}));
    }

    const int j_lo = whole_slice_unknown() ? 0 : 1;
    const int rows = whole_slice_unknown() ? N + 1 : N - 1;
    Eigen::VectorXd r(rows * d);
    int row = 0;

    for (int j = j_lo; j <= N - 1; ++j) {
      if (j == 0) {
        // zero-momentum row at j = 0: no (j-1, a) triangle
        Eigen::VectorXd v =
            level[0].mu.coords / dt +
            (level[0].lambda.coords -
             ad_star_transport(ret, beside[0].ds_eta, beside[0].lambda).coords) /
                ds -
            model.d_g(level[0].jet.g, level[0].jet.xi, level[0].jet.eta).coords;
        if (forces) {
          if (forces->f1) v -= forces->f1(level[0].jet).coords;
          if (forces->f3) v -= forces->f3(beside[0].jet).coords;
        }
        r.segment(row * d, d) = v;
      } else {
        r.segment(row * d, d) =
            interior_from_cells(model, ret, level[j], level[j - 1], beside[j], forces);
      }
      ++row;
    }

    if (whole_slice_unknown()) {
      // terminal momentum condition transported to the new strip:
      //   (1/dt) Ad*_{tau(dt xi_{a+1}^{N-1})} mu_{a+1}^{N-1} = 0.
      // The jet's space leg would need strip a+2; the previous strip's strain
      // stands in for it (exact whenever D_xi does not depend on eta).
      AlgebraVector xi_new = ret.tau_inv(compose(inverse(next[N - 1]), next[N]));
      xi_new.coords /= dt;
      AlgebraVector eta_sur = level[N - 1].jet.eta;
      TriangleJet top{next[N - 1], xi_new, eta_sur};
      CoAlgebraVector mu = discrete_momentum_mu(model, ret, top.g, top.xi, top.eta);
      AlgebraVector dt_xi{xi_new.kind, dt * xi_new.coords};
      Eigen::VectorXd v = ad_star_transport(ret, dt_xi, mu).coords / dt;
      if (forces && forces->f2) v += forces->f2(top).coords;
      r.segment(row * d, d) = v;
      ++row;
    }
    return r;
  }

  Slice initial_guess() const {
    Slice guess;
    const int j_lo = whole_slice_unknown() ? 0 : 1;
    const int j_hi = whole_slice_unknown() ? N : N - 1;
    for (int j = j_lo; j <= j_hi; ++j) {
      // advance by the previous spatial increment
      AlgebraVector inc = ret.tau_inv(compose(inverse(prev[j]), curr[j]));
      guess.push_back(compose(curr[j], ret.tau(inc)));
    }
    return guess;
  }
};

}  // namespace

CoAlgebraVector interior_residual(const DiscreteField& field, const DensityModel& model,
                                  const Retraction& ret, int j, int a,
                                  const DiscreteForces* forces) {
  if (j < 1 || j > field.time_cells() - 1 || a < 1 || a > field.space_cells() - 1) {
    std::ostringstream os;
    os << "interior_residual: node (" << j << "," << a << ") is not interior";
    throw IndexError(os.str());
  }
  Cell here = make_cell(model, ret, jet_at(field, j, a, ret));
  Cell below_time = make_cell(model, ret, jet_at(field, j - 1, a, ret));
  Cell below_space = make_cell(model, ret, jet_at(field, j, a - 1, ret));
  return {field.kind(), interior_from_cells(model, ret, here, below_time, below_space, forces)};
}

std::vector<BoundaryResidual> boundary_residuals(const DiscreteField& field,
                                                 const DensityModel& model, const Retraction& ret,
                                                 const BoundaryRegime& regime,
                                                 const DiscreteForces* forces) {
  std::vector<BoundaryResidual> out;
  const int N = field.time_cells(), A = field.space_cells();
  const double dt = field.dt(), ds = field.ds();
  const GroupKind kind = field.kind();

  if (regime.kind == RegimeKind::SpaceTime) return out;

  if (regime.kind == RegimeKind::TimeOnly) {
    for (int j = 1; j <= N - 1; ++j) {
      Cell edge = make_cell(model, ret, jet_at(field, j, 0, ret));
      Cell below = make_cell(model, ret, jet_at(field, j - 1, 0, ret));
      Eigen::VectorXd v =
          (edge.mu.coords - ad_star_transport(ret, below.dt_xi, below.mu).coords) / dt +
          edge.lambda.coords / ds - model.d_g(edge.jet.g, edge.jet.xi, edge.jet.eta).coords;
      if (forces) {
        if (forces->f1) v -= forces->f1(edge.jet).coords;
        if (forces->f2) v -= forces->f2(below.jet).coords;
      }
      out.push_back({j, 0, "zero_traction_edge", {kind, v}});

      Cell tip = make_cell(model, ret, jet_at(field, j, A - 1, ret));
      Eigen::VectorXd w = ad_star_transport(ret, tip.ds_eta, tip.lambda).coords / ds;
      if (forces && forces->f3) w += forces->f3(tip.jet).coords;
      out.push_back({j, A, "zero_traction_tip", {kind, w}});
    }
    return out;
  }

  // SpaceOnly and SpaceEvolutionBVP share the zero-momentum conditions.
  for (int a = 1; a <= A - 1; ++a) {
    Cell first = make_cell(model, ret, jet_at(field, 0, a, ret));
    Cell left = make_cell(model, ret, jet_at(field, 0, a - 1, ret));
    Eigen::VectorXd v =
        first.mu.coords / dt +
        (first.lambda.coords - ad_star_transport(ret, left.ds_eta, left.lambda).coords) / ds -
        model.d_g(first.jet.g, first.jet.xi, first.jet.eta).coords;
    if (forces) {
      if (forces->f1) v -= forces->f1(first.jet).coords;
      if (forces->f3) v -= forces->f3(left.jet).coords;
    }
    out.push_back({0, a, "zero_momentum_initial", {kind, v}});

    Cell last = make_cell(model, ret, jet_at(field, N - 1, a, ret));
    Eigen::VectorXd w = ad_star_transport(ret, last.dt_xi, last.mu).coords / dt;
    if (forces && forces->f2) w += forces->f2(last.jet).coords;
    out.push_back({N, a, "zero_momentum_terminal", {kind, w}});
  }
  return out;
}

StepResult step_time(const Slice& prev, const Slice& curr, const DensityModel& model,
                     const Retraction& ret, const BoundaryRegime& regime,
                     const SolverSettings& settings, const std::optional<PrescribedEnds>& ends,
                     const DiscreteForces* forces) {
  check_slice_kind(prev, "step_time");
  check_slice_kind(curr, "step_time");
  if (prev.size() != curr.size()) throw InvalidParameterError("step_time: slice sizes differ");
  if (regime.kind == RegimeKind::SpaceEvolutionBVP)
    throw InvalidParameterError("step_time: SpaceEvolutionBVP is a space-evolution regime");

  std::optional<PrescribedEnds> resolved = ends;
  if (regime.kind == RegimeKind::TimeOnly) {
    if (ends) throw InvalidParameterError("step_time: TimeOnly regime takes no prescribed ends");
  } else if (!resolved) {
    if (regime.kind == RegimeKind::SpaceTime)
      throw InvalidParameterError("step_time: SpaceTime regime requires prescribed ends");
    resolved = PrescribedEnds{curr.front(), curr.back()};  // SpaceOnly: time-independent ends
  }

  TimeStepSystem sys(model, ret, regime.kind, forces, prev, curr, resolved);
  Slice unknowns = sys.initial_guess();
  StackedSystem stacked{[&sys](const Slice& u) { return sys.residual(u); }, model.algebra_dim()};
  NewtonStats stats = newton_solve(unknowns, stacked, ret, settings, "step_time");
  return {sys.assemble(unknowns), stats};
}

StepResult step_space(const Slice& prev, const Slice& curr, const DensityModel& model,
                      const Retraction& ret, const BoundaryRegime& regime,
                      const SolverSettings& settings, const std::optional<PrescribedEnds>& ends,
                      const DiscreteForces* forces) {
  check_slice_kind(prev, "step_space");
  check_slice_kind(curr, "step_space");
  if (prev.size() != curr.size()) throw InvalidParameterError("step_space: slice sizes differ");

  std::optional<PrescribedEnds> resolved = ends;
  const bool prescribed = regime.kind == RegimeKind::SpaceTime || regime.kind == RegimeKind::TimeOnly;
  if (prescribed) {
    if (!resolved)
      throw InvalidParameterError("step_space: this regime requires prescribed time-boundary nodes");
  } else if (ends) {
    throw InvalidParameterError("step_space: zero-momentum regimes take no prescribed ends");
  }

  SpaceStepSystem sys(model, ret, regime.kind, forces, prev, curr, resolved);
  Slice unknowns = sys.initial_guess();
  StackedSystem stacked{[&sys](const Slice& u) { return sys.residual(u); }, model.algebra_dim()};
  NewtonStats stats = newton_solve(unknowns, stacked, ret, settings, "step_space");
  return {sys.assemble(unknowns), stats};
}

Slice reconstruct_initial_data(const GroupElement& g0, const std::vector<AlgebraVector>& increments,
                               const Retraction& ret, double step) {
  Slice out;
  out.reserve(increments.size() + 1);
  out.push_back(g0);
  for (const auto& x : increments) {
    AlgebraVector scaled{x.kind, step * x.coords};
    out.push_back(compose(out.back(), ret.tau(scaled)));
  }
  return out;
}

namespace {

template <typename System>
SliceTangent linearized_step(System& sys, const Slice& prev, const Slice& curr, const Slice& next,
                             const SliceTangent& dprev, const SliceTangent& dcurr,
                             const DensityModel& model, const Retraction& ret, const char* what,
                             const std::function<System(const Slice&, const Slice&)>& rebuild) {
  const int d = model.algebra_dim();
  const GroupKind kind = next.front().kind();
  const bool whole = sys.whole_slice_unknown();
  const size_t n_nodes = next.size();

  // unknown part of `next`
  Slice unknowns;
  if (whole) {
    unknowns = next;
  } else {
    unknowns.assign(next.begin() + 1, next.end() - 1);
  }
  const int n = static_cast<int>(unknowns.size()) * d;

  // Jacobian of the step's stacked system w.r.t. the unknown slice. Tangent
  // propagation errors are re-amplified by the marching, so a fourth-order
  // stencil is used here (the Newton path keeps its cheap forward scheme).
  const double h = 1e-4;
  auto at = [&](size_t k, int i, double step_size) {
    AlgebraVector step{kind, Eigen::VectorXd::Zero(d)};
    step.coords(i) = step_size;
    Slice pert = unknowns;
    pert[k] = compose(unknowns[k], ret.tau(step));
    return sys.residual(pert);
  };
  Eigen::MatrixXd J(n, n);
  for (size_t k = 0; k < unknowns.size(); ++k) {
    for (int i = 0; i < d; ++i) {
      J.col(static_cast<int>(k) * d + i) =
          (-at(k, i, 2 * h) + 8 * at(k, i, h) - 8 * at(k, i, -h) + at(k, i, -2 * h)) / (12 * h);
    }
  }

  // Directional derivative w.r.t. (prev, curr) along (dprev, dcurr), with the
  // same fourth-order stencil.
  double scale = 0.0;
  for (const auto& z : dprev) scale = std::max(scale, z.coords.cwiseAbs().maxCoeff());
  for (const auto& z : dcurr) scale = std::max(scale, z.coords.cwiseAbs().maxCoeff());
  const double eps = 1e-4 / std::max(1.0, scale);

  auto shifted = [&](double t) {
    Slice p = prev, c = curr;
    for (size_t k = 0; k < p.size(); ++k) {
      AlgebraVector sp{kind, t * dprev[k].coords};
      AlgebraVector sc{kind, t * dcurr[k].coords};
      p[k] = compose(prev[k], ret.tau(sp));
      c[k] = compose(curr[k], ret.tau(sc));
    }
    System s = rebuild(p, c);
    return s.residual(unknowns);
  };
  Eigen::VectorXd b = (-shifted(2 * eps) + 8 * shifted(eps) - 8 * shifted(-eps) +
                       shifted(-2 * eps)) /
                      (12 * eps);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
  if (!lu.isInvertible())
    throw SingularJacobianError(std::string(what) + ": singular step Jacobian");
  Eigen::VectorXd delta = lu.solve(-b);

  SliceTangent out(n_nodes, AlgebraVector::zero(kind, d));
  const size_t off = whole ? 0 : 1;
  for (size_t k = 0; k < unknowns.size(); ++k)
    out[k + off].coords = delta.segment(static_cast<int>(k) * d, d);
  return out;
}

}  // namespace

SliceTangent linearized_step_time(const Slice& prev, const Slice& curr, const Slice& next,
                                  const SliceTangent& dprev, const SliceTangent& dcurr,
                                  const DensityModel& model, const Retraction& ret,
                                  const BoundaryRegime& regime, const DiscreteForces* forces) {
  std::optional<PrescribedEnds> ends;
  if (regime.kind != RegimeKind::TimeOnly) ends = PrescribedEnds{next.front(), next.back()};
  TimeStepSystem sys(model, ret, regime.kind, forces, prev, curr, ends);
  std::function<TimeStepSystem(const Slice&, const Slice&)> rebuild =
      [&](const Slice& p, const Slice& c) {
        return TimeStepSystem(model, ret, regime.kind, forces, p, c, ends);
      };
  return linearized_step<TimeStepSystem>(sys, prev, curr, next, dprev, dcurr, model, ret,
                                         "linearized_step_time", rebuild);
}

SliceTangent linearized_step_space(const Slice& prev, const Slice& curr, const Slice& next,
                                   const SliceTangent& dprev, const SliceTangent& dcurr,
                                   const DensityModel& model, const Retraction& ret,
                                   const BoundaryRegime& regime, const DiscreteForces* forces) {
  std::optional<PrescribedEnds> ends;
  const bool prescribed = regime.kind == RegimeKind::SpaceTime || regime.kind == RegimeKind::TimeOnly;
  if (prescribed) ends = PrescribedEnds{next.front(), next.back()};
  SpaceStepSystem sys(model, ret, regime.kind, forces, prev, curr, ends);
  std::function<SpaceStepSystem(const Slice&, const Slice&)> rebuild =
      [&](const Slice& p, const Slice& c) {
        return SpaceStepSystem(model, ret, regime.kind, forces, p, c, ends);
      };
  return linearized_step<SpaceStepSystem>(sys, prev, curr, next, dprev, dcurr, model, ret,
                                          "linearized_step_space", rebuild);
}

}  // namespace msvi
