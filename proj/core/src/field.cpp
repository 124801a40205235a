#include "msvi/field.hpp"

#include <sstream>

namespace msvi {

DiscreteField::DiscreteField(GroupKind kind, int time_cells, int space_cells, double dt, double ds,
                             int abelian_dim)
    : kind_(kind), N_(time_cells), A_(space_cells), dt_(dt), ds_(ds), abelian_dim_(abelian_dim) {
  if (N_ < 2 || A_ < 2) {
    std::ostringstream os;
    os << "DiscreteField: degenerate grid N=" << N_ << " A=" << A_ << " (need N>=2 and A>=2)";
    throw InvalidParameterError(os.str());
  }
  if (!(dt_ > 0) || !(ds_ > 0)) throw InvalidParameterError("DiscreteField: dt and ds must be positive");
  g_.assign(static_cast<size_t>((N_ + 1) * (A_ + 1)), GroupElement::identity(kind_, abelian_dim_));
}

void DiscreteField::check(int j, int a) const {
  if (j < 0 || j > N_ || a < 0 || a > A_) {
    std::ostringstream os;
    os << "DiscreteField: node (" << j << "," << a << ") out of range [0," << N_ << "]x[0," << A_ << "]";
    throw IndexError(os.str());
  }
}

const GroupElement& DiscreteField::at(int j, int a) const {
  check(j, a);
  return g_[static_cast<size_t>(index(j, a))];
}

void DiscreteField::set(int j, int a, GroupElement g) {
  check(j, a);
  if (g.kind() != kind_ || g.algebra_dim() != (kind_ == GroupKind::AbelianRn ? abelian_dim_ : g.algebra_dim()))
    throw VariantMismatchError("DiscreteField::set: element variant does not match the field");
  g_[static_cast<size_t>(index(j, a))] = std::move(g);
}

AlgebraVector DiscreteField::xi(int j, int a, const Retraction& ret) const {
  if (j < 0 || j > N_ - 1) throw IndexError("xi: time index out of range");
  AlgebraVector x = ret.tau_inv(compose(inverse(at(j, a)), at(j + 1, a)));
  x.coords /= dt_;
  return x;
}

AlgebraVector DiscreteField::eta(int j, int a, const Retraction& ret) const {
  if (a < 0 || a > A_ - 1) throw IndexError("eta: space index out of range");
  AlgebraVector x = ret.tau_inv(compose(inverse(at(j, a)), at(j, a + 1)));
  x.coords /= ds_;
  return x;
}

Slice DiscreteField::time_slice(int j) const {
  Slice s;
  s.reserve(A_ + 1);
  for (int a = 0; a <= A_; ++a) s.push_back(at(j, a));
  return s;
}

Slice DiscreteField::space_slice(int a) const {
  Slice s;
  s.reserve(N_ + 1);
  for (int j = 0; j <= N_; ++j) s.push_back(at(j, a));
  return s;
}

void DiscreteField::set_time_slice(int j, const Slice& s) {
  if (static_cast<int>(s.size()) != A_ + 1)
    throw IndexError("set_time_slice: slice length does not match A+1");
  for (int a = 0; a <= A_; ++a) set(j, a, s[static_cast<size_t>(a)]);
}

void DiscreteField::set_space_slice(int a, const Slice& s) {
  if (static_cast<int>(s.size()) != N_ + 1)
    throw IndexError("set_space_slice: slice length does not match N+1");
  for (int j = 0; j <= N_; ++j) set(j, a, s[static_cast<size_t>(j)]);
}

double DiscreteField::max_orthogonality_defect() const {
  double worst = 0.0;
  for (const auto& g : g_) {
    if (g.kind() == GroupKind::AbelianRn) continue;
    worst = std::max(worst, validate(g).orthogonality_defect);
  }
  return worst;
}

BoundaryRegime BoundaryRegime::from_name(std::string_view name) {
  if (name == "spacetime") return {RegimeKind::SpaceTime};
  if (name == "time_only") return {RegimeKind::TimeOnly};
  if (name == "space_only") return {RegimeKind::SpaceOnly};
  if (name == "space_evolution_bvp") return {RegimeKind::SpaceEvolutionBVP};
  throw InvalidParameterError("unknown boundary regime: " + std::string(name));
}

const char* BoundaryRegime::name() const {
  switch (kind) {
    case RegimeKind::SpaceTime: return "spacetime";
    case RegimeKind::TimeOnly: return "time_only";
    case RegimeKind::SpaceOnly: return "space_only";
    case RegimeKind::SpaceEvolutionBVP: return "space_evolution_bvp";
  }
  return "?";
}

}  // namespace msvi
