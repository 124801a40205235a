#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "msvi/sim.hpp"
#include "text_io.hpp"

namespace msvi {

namespace {

struct Ini {
  std::map<std::string, std::map<std::string, std::string>> sections;
  mutable std::set<std::string> consumed;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    return s != sections.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& sec, const std::string& key) const {
    consumed.insert(sec + "." + key);
    return sections.at(sec).at(key);
  }

  std::string get_or(const std::string& sec, const std::string& key, const std::string& dflt) const {
    if (!has(sec, key)) return dflt;
    return get(sec, key);
  }

  double num(const std::string& sec, const std::string& key) const {
    return text::parse_double(get(sec, key), (sec + "." + key).c_str());
  }

  double num_or(const std::string& sec, const std::string& key, double dflt) const {
    if (!has(sec, key)) return dflt;
    return num(sec, key);
  }

  long int_or(const std::string& sec, const std::string& key, long dflt) const {
    if (!has(sec, key)) return dflt;
    return text::parse_long(get(sec, key), (sec + "." + key).c_str());
  }

  void reject_unknown() const {
    for (const auto& [sec, kv] : sections)
      for (const auto& [key, value] : kv)
        if (!consumed.count(sec + "." + key))
          throw ConfigError("unknown configuration key [" + sec + "] " + key);
  }
};

Ini parse_ini(std::istream& is, const std::string& origin) {
  Ini ini;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view s = text::trim(line);
    if (s.empty() || s.front() == '#' || s.front() == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = std::string(text::trim(s.substr(1, s.size() - 2)));
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key(text::trim(s.substr(0, eq)));
    std::string value(text::trim(s.substr(eq + 1)));
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any section");
    ini.sections[section][key] = value;
  }
  return ini;
}

Eigen::VectorXd parse_numbers(const std::string& s, const char* context) {
  auto parts = text::split(s, ',');
  Eigen::VectorXd v(static_cast<int>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i)
    v(static_cast<int>(i)) = text::parse_double(parts[i], context);
  return v;
}

GroupElement parse_se3(const std::string& s, const char* context) {
  if (s == "identity") return GroupElement::identity(GroupKind::SE3);
  Eigen::VectorXd v = parse_numbers(s, context);
  if (v.size() == 3)
    return GroupElement::se3(Eigen::Matrix3d::Identity(), Eigen::Vector3d(v(0), v(1), v(2)));
  if (v.size() == 12) {
    Eigen::Matrix3d R;
    R << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    return GroupElement::se3(R, Eigen::Vector3d(v(9), v(10), v(11)));
  }
  throw ConfigError(std::string(context) +
                    ": expected 'identity', 3 numbers (translation) or 12 numbers (R row-major + r)");
}

std::string format_se3(const GroupElement& g) {
  const Eigen::Matrix3d& R = g.rotation();
  std::ostringstream os;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) os << text::to_shortest(R(i, k)) << ',';
  const Eigen::Vector3d& r = g.translation();
  os << text::to_shortest(r(0)) << ',' << text::to_shortest(r(1)) << ',' << text::to_shortest(r(2));
  return os.str();
}

}  // namespace

void GridSpec::resolve() {
  if (!(T > 0) || !(L > 0) || !(dt > 0) || !(ds > 0))
    throw ConfigError("grid: T, L, dt, ds must all be positive");
  const double n = T / dt, a = L / ds;
  N = static_cast<int>(std::llround(n));
  A = static_cast<int>(std::llround(a));
  if (std::abs(n - N) > 1e-9 * std::max(1.0, n))
    throw ConfigError("grid: T/dt = " + text::to_shortest(n) + " is not an integer cell count");
  if (std::abs(a - A) > 1e-9 * std::max(1.0, a))
    throw ConfigError("grid: L/ds = " + text::to_shortest(a) + " is not an integer cell count");
  if (N < 2 || A < 2) throw ConfigError("grid: need at least 2 cells in each direction");
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open configuration file " + path);
  Ini ini = parse_ini(is, path);
  RunConfig cfg;

  const std::string model = ini.get_or("model", "type", "beam");
  if (model == "beam") {
    cfg.model = ModelType::Beam;
    cfg.beam.rho = ini.num_or("model", "rho", cfg.beam.rho);
    cfg.beam.youngs_modulus = ini.num_or("model", "youngs_modulus", cfg.beam.youngs_modulus);
    cfg.beam.poisson = ini.num_or("model", "poisson", cfg.beam.poisson);
    cfg.beam.side = ini.num_or("model", "side", cfg.beam.side);
  } else if (model == "scalar_wave" || model == "scalar-wave") {
    cfg.model = ModelType::ScalarWave;
    cfg.wave_speed = ini.num_or("model", "wave_speed", 1.0);
  } else {
    throw ConfigError("model.type must be 'beam' or 'scalar_wave', got '" + model + "'");
  }

  cfg.grid.T = ini.num("grid", "T");
  cfg.grid.L = ini.num("grid", "L");
  cfg.grid.dt = ini.num("grid", "dt");
  cfg.grid.ds = ini.num("grid", "ds");
  cfg.grid.resolve();

  cfg.retraction_name = ini.get_or("retraction", "kind", "cayley");
  Retraction::from_name(cfg.retraction_name);  // validate early

  cfg.regime = BoundaryRegime::from_name(ini.get_or("boundary", "regime", "space_evolution_bvp"));
  cfg.data_file = ini.get_or("boundary", "data_file", "");
  cfg.initial_generator = ini.get_or("boundary", "initial", "");
  if (ini.has("boundary", "xi0")) {
    cfg.has_curves = true;
    cfg.curves.xi0 = parse_numbers(ini.get("boundary", "xi0"), "boundary.xi0");
    cfg.curves.xi1 = parse_numbers(ini.get("boundary", "xi1"), "boundary.xi1");
    if (cfg.curves.xi0.size() != 6 || cfg.curves.xi1.size() != 6)
      throw ConfigError("boundary.xi0/xi1 must have 6 components");
    cfg.curves.g0_start = parse_se3(ini.get_or("boundary", "g0_start", "identity"), "boundary.g0_start");
    const std::string g1_default = "0,0," + text::to_shortest(cfg.grid.ds);
    cfg.curves.g1_start = parse_se3(ini.get_or("boundary", "g1_start", g1_default), "boundary.g1_start");
  }

  cfg.solver.tolerance = ini.num_or("solver", "tolerance", cfg.solver.tolerance);
  cfg.solver.max_iterations = static_cast<int>(ini.int_or("solver", "max_iterations", 50));
  cfg.solver.fd_step = ini.num_or("solver", "fd_step", cfg.solver.fd_step);
  cfg.solver.validate();

  cfg.output_dir = ini.get_or("output", "directory", "out");
  if (ini.has("output", "diagnostics")) {
    cfg.diagnostics.clear();
    for (auto part : text::split(ini.get("output", "diagnostics"), ','))
      cfg.diagnostics.emplace_back(part);
  }

  const std::string mode = ini.get_or("run", "mode", "space_evolution");
  if (mode == "time_evolution" || mode == "time-evolution") cfg.mode = RunMode::TimeEvolution;
  else if (mode == "space_evolution" || mode == "space-evolution") cfg.mode = RunMode::SpaceEvolution;
  else if (mode == "reconstruction") cfg.mode = RunMode::Reconstruction;
  else if (mode == "verify") cfg.mode = RunMode::Verify;
  else throw ConfigError("run.mode must be time_evolution | space_evolution | reconstruction | verify");
  cfg.seed = static_cast<unsigned long>(ini.int_or("run", "seed", 0));
  cfg.noether_rectangles = static_cast<int>(ini.int_or("run", "noether_rectangles", 20));
  cfg.input_run = ini.get_or("run", "input_run", "");

  ini.reject_unknown();
  return cfg;
}

void RunConfig::save(std::ostream& os) const {
  os << "[model]\n";
  if (model == ModelType::Beam) {
    os << "type = beam\n";
    os << "rho = " << text::to_shortest(beam.rho) << "\n";
    os << "youngs_modulus = " << text::to_shortest(beam.youngs_modulus) << "\n";
    os << "poisson = " << text::to_shortest(beam.poisson) << "\n";
    os << "side = " << text::to_shortest(beam.side) << "\n";
  } else {
    os << "type = scalar_wave\n";
    os << "wave_speed = " << text::to_shortest(wave_speed) << "\n";
  }
  os << "\n[grid]\n";
  os << "T = " << text::to_shortest(grid.T) << "\n";
  os << "L = " << text::to_shortest(grid.L) << "\n";
  os << "dt = " << text::to_shortest(grid.dt) << "\n";
  os << "ds = " << text::to_shortest(grid.ds) << "\n";
  os << "# derived: N = " << grid.N << " time cells, A = " << grid.A << " space cells\n";
  os << "\n[retraction]\nkind = " << retraction_name << "\n";
  os << "\n[boundary]\nregime = " << regime.name() << "\n";
  if (!data_file.empty()) os << "data_file = " << data_file << "\n";
  if (!initial_generator.empty()) os << "initial = " << initial_generator << "\n";
  if (has_curves) {
    auto xi = [](const Eigen::VectorXd& v) {
      std::string s;
      for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + text::to_shortest(v(i));
      return s;
    };
    os << "xi0 = " << xi(curves.xi0) << "\n";
    os << "xi1 = " << xi(curves.xi1) << "\n";
    os << "g0_start = " << format_se3(curves.g0_start) << "\n";
    os << "g1_start = " << format_se3(curves.g1_start) << "\n";
  }
  os << "\n[solver]\n";
  os << "tolerance = " << text::to_shortest(solver.tolerance) << "\n";
  os << "max_iterations = " << solver.max_iterations << "\n";
  os << "fd_step = " << text::to_shortest(solver.fd_step) << "\n";
  os << "\n[output]\ndirectory = " << output_dir << "\n";
  os << "diagnostics = ";
  for (size_t i = 0; i < diagnostics.size(); ++i) os << (i ? "," : "") << diagnostics[i];
  os << "\n";
  os << "\n[run]\n";
  switch (mode) {
    case RunMode::TimeEvolution: os << "mode = time_evolution\n"; break;
    case RunMode::SpaceEvolution: os << "mode = space_evolution\n"; break;
    case RunMode::Reconstruction: os << "mode = reconstruction\n"; break;
    case RunMode::Verify: os << "mode = verify\n"; break;
  }
  os << "seed = " << seed << "\n";
  os << "noether_rectangles = " << noether_rectangles << "\n";
  if (!input_run.empty()) os << "input_run = " << input_run << "\n";
}

std::filesystem::path RunConfig::resolved_output_dir() const {
  if (const char* env = std::getenv("MSVI_OUTPUT_DIR")) return std::filesystem::path(env);
  return std::filesystem::path(output_dir);
}

std::unique_ptr<DensityModel> make_model(const RunConfig& config) {
  if (config.model == ModelType::Beam)
    return beam_density(config.beam, config.grid.dt, config.grid.ds);
  return scalar_wave_density(config.wave_speed, config.grid.dt, config.grid.ds);
}

}  // namespace msvi
