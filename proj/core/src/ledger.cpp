#include <ostream>

#include "msvi/conservation.hpp"
#include "text_io.hpp"

namespace msvi {

namespace {

void write_vector_row(std::ostream& os, const char* quantity, int i1, const Eigen::VectorXd& v,
                      int width) {
  os << quantity << ',' << i1 << ",,,,";
  for (int i = 0; i < width; ++i) {
    os << ',';
    if (i < v.size()) os << text::to_shortest(v(i));
  }
  os << '\n';
}

void write_scalar_row(std::ostream& os, const char* quantity, int i1, double v, int width) {
  os << quantity << ',' << i1 << ",,,," << ',' << text::to_shortest(v);
  for (int i = 1; i < width; ++i) os << ',';
  os << '\n';
}

}  // namespace

void NoetherLedger::write_csv(std::ostream& os) const {
  const int w = symmetry_dim;
  os << "# noether ledger: one row per slice/rectangle quantity\n";
  os << "# quantity: JL_plus/JL_minus (per time slice j), JN_plus/JN_minus (per strip a),\n";
  os << "#           energy_L (per time slice), energy_N (per strip),\n";
  os << "#           rect_J (indices B,C,K,L; v0 = inf-norm), local_noether_max (v0),\n";
  os << "#           triangle_J1/J2/J3 (i1 = j, B column reused for a; on request)\n";
  os << "# columns:  quantity,i1,B,C,K,L then v0..v" << w - 1 << " (momentum components)\n";
  os << "quantity,i1,B,C,K,L";
  for (int i = 0; i < w; ++i) os << ",v" << i;
  os << '\n';

  for (size_t j = 0; j < JL_plus.size(); ++j) {
    write_vector_row(os, "JL_plus", static_cast<int>(j), JL_plus[j], w);
    write_vector_row(os, "JL_minus", static_cast<int>(j), JL_minus[j], w);
  }
  for (size_t a = 0; a < JN_plus.size(); ++a) {
    write_vector_row(os, "JN_plus", static_cast<int>(a), JN_plus[a], w);
    write_vector_row(os, "JN_minus", static_cast<int>(a), JN_minus[a], w);
  }
  for (size_t j = 0; j < energy_L.size(); ++j)
    write_scalar_row(os, "energy_L", static_cast<int>(j), energy_L[j], w);
  for (size_t a = 0; a < energy_N.size(); ++a)
    write_scalar_row(os, "energy_N", static_cast<int>(a), energy_N[a], w);

  for (const auto& t : triangles) {
    for (const auto& [name, v] :
         {std::pair<const char*, const Eigen::VectorXd*>{"triangle_J1", &t.J1},
          {"triangle_J2", &t.J2},
          {"triangle_J3", &t.J3}}) {
      os << name << ',' << t.j << ',' << t.a << ",,,";
      for (int i = 0; i < w; ++i) {
        os << ',';
        if (i < v->size()) os << text::to_shortest((*v)(i));
      }
      os << '\n';
    }
  }
  write_scalar_row(os, "local_noether_max", 0, local_noether_max, w);
  write_vector_row(os, "rect_J_full", 0, full_rectangle, w);
  for (const auto& r : rectangles) {
    os << "rect_J,0," << r.B << ',' << r.C << ',' << r.K << ',' << r.L << ','
       << text::to_shortest(r.norm);
    for (int i = 1; i < w; ++i) os << ',';
    os << '\n';
  }
}

}  // namespace msvi
