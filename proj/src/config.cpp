#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "geofock/cli.hpp"

namespace geofock {

namespace {

enum class Kind { integer, real, choice, int_list, real_list, path };

struct KeySpec {
  Kind kind;
  std::string fallback;
  std::vector<std::string> choices;  // for Kind::choice
};

const std::map<std::string, KeySpec>& schema() {
  static const std::map<std::string, KeySpec> s = {
      {"scenario", {Kind::choice, "exact",
                    {"exact", "hf", "rank", "pekar", "hvz", "scan", "escaping", "hartree",
                     "hf_escaping", "free_evolution"}}},
      {"dim", {Kind::integer, "1", {}}},
      {"points", {Kind::integer, "8", {}}},
      {"box", {Kind::real, "0", {}}},  // 0: one unit per site
      {"boundary", {Kind::choice, "dirichlet", {"dirichlet", "periodic"}}},
      {"particles.statistics", {Kind::choice, "fermion", {"fermion", "boson"}}},
      {"particles.n", {Kind::integer, "2", {}}},
      {"orbitals.rank", {Kind::integer, "0", {}}},  // 0: rank = N
      // params are "charge, softening" and "strength, softening"; softening 0
      // selects the lattice spacing
      {"potential.kind", {Kind::choice, "none", {"none", "soft_coulomb_well"}}},
      {"potential.params", {Kind::real_list, "1,0", {}}},
      {"interaction.kind", {Kind::choice, "soft_coulomb", {"soft_coulomb", "none"}}},
      {"interaction.params", {Kind::real_list, "1,0", {}}},
      {"solver.restarts", {Kind::integer, "8", {}}},
      {"solver.seed", {Kind::integer, "1", {}}},
      {"solver.gradient_tol", {Kind::real, "1e-7", {}}},
      {"solver.max_iterations", {Kind::integer, "2000", {}}},
      {"solver.scf_tol", {Kind::real, "1e-10", {}}},
      {"solver.dense_limit", {Kind::integer, "2000", {}}},
      {"pekar.alpha", {Kind::real, "1", {}}},
      {"pekar.u", {Kind::real, "1", {}}},
      {"pekar.theta", {Kind::real, "0.5", {}}},
      {"pekar.tol", {Kind::real, "1e-8", {}}},
      {"pekar.max_halvings", {Kind::integer, "4", {}}},
      {"scan.alphas", {Kind::real_list, "0,0.5,1,1.5,2,2.5,3,3.5", {}}},
      {"sequence.n_values", {Kind::int_list, "0,8,16,24,32", {}}},
      {"sequence.phi_center", {Kind::integer, "8", {}}},
      {"sequence.phi_width", {Kind::integer, "4", {}}},
      {"sequence.phi_weight", {Kind::real, "1", {}}},
      {"sequence.escaping_center", {Kind::integer, "12", {}}},
      {"sequence.escaping_width", {Kind::integer, "4", {}}},
      {"sequence.test_centers", {Kind::int_list, "6,10,16", {}}},
      {"sequence.test_width", {Kind::integer, "4", {}}},
      {"sequence.times", {Kind::real_list, "0,2,4,8", {}}},
      {"sequence.radii", {Kind::real_list, "2,4", {}}},
      {"sequence.trace_distance_cap", {Kind::integer, "0", {}}},
      {"output.dir", {Kind::path, "out", {}}},
  };
  return s;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x))
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  return x;
}

void check_value(const std::string& key, const std::string& value) {
  auto it = schema().find(key);
  if (it == schema().end()) throw ConfigError(key, "unknown key");
  const KeySpec& spec = it->second;
  switch (spec.kind) {
    case Kind::integer:
      parse_int(key, value);
      break;
    case Kind::real:
      parse_real(key, value);
      break;
    case Kind::choice:
      if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
        std::string all;
        for (const auto& c : spec.choices) all += (all.empty() ? "" : "|") + c;
        throw ConfigError(key, "expected one of " + all + ", got '" + value + "'");
      }
      break;
    case Kind::int_list:
      if (value.empty()) throw ConfigError(key, "empty list");
      for (const auto& item : split_list(value)) parse_int(key, item);
      break;
    case Kind::real_list:
      if (value.empty()) throw ConfigError(key, "empty list");
      for (const auto& item : split_list(value)) parse_real(key, item);
      break;
    case Kind::path:
      if (value.empty()) throw ConfigError(key, "empty path");
      break;
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& [key, spec] : schema()) values_[key] = spec.fallback;
}

std::vector<std::string> RunConfig::known_keys() {
  std::vector<std::string> out;
  for (const auto& kv : schema()) out.push_back(kv.first);
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  check_value(key, value);
  values_[key] = value;
  explicit_[key] = true;
}

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "missing key");
    if (cfg.is_set(key)) throw ConfigError(key, "duplicate key");
    cfg.set(key, value);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config", "cannot open " + file.string());
  return parse(in);
}

int RunConfig::integer(const std::string& key) const {
  long v = parse_int(key, values_.at(key));
  if (v < -1000000000L || v > 1000000000L) throw ConfigError(key, "integer out of range");
  return static_cast<int>(v);
}
double RunConfig::real(const std::string& key) const { return parse_real(key, values_.at(key)); }
const std::string& RunConfig::text(const std::string& key) const { return values_.at(key); }

std::vector<int> RunConfig::integers(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_list(values_.at(key))) out.push_back(static_cast<int>(parse_int(key, item)));
  return out;
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(values_.at(key))) out.push_back(parse_real(key, item));
  return out;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError(key, msg); };
  const std::string scenario = text("scenario");
  const int dim = integer("dim");
  const int points = integer("points");
  if (dim < 1 || dim > 3) fail("dim", "must be 1, 2 or 3");
  if (points < 2) fail("points", "must be at least 2");
  long modes = 1;
  for (int i = 0; i < dim; ++i) modes *= points;
  if (modes > OneBodySpace::default_mode_cap)
    fail("points", "points^dim exceeds the mode cap of " +
                             std::to_string(OneBodySpace::default_mode_cap));
  if (real("box") < 0.0) fail("box", "must be positive (0 selects one unit per site)");
  const bool fermion = text("particles.statistics") == "fermion";
  const int n = integer("particles.n");
  if (n < 0) fail("particles.n", "must be nonnegative");
  if (fermion && n > modes) fail("particles.n", "more fermions than modes");
  auto params = [&](const std::string& key) {
    auto p = reals(key);
    if (p.size() != 2) fail(key, "expected two values");
    if (p[1] < 0.0) fail(key, "softening must be nonnegative");
  };
  params("potential.params");
  params("interaction.params");
  if (reals("interaction.params")[0] < 0.0) fail("interaction.params", "strength must be nonnegative");
  if (integer("solver.restarts") < 1) fail("solver.restarts", "must be at least 1");
  if (integer("solver.seed") < 0) fail("solver.seed", "must be nonnegative");
  if (integer("solver.max_iterations") < 1) fail("solver.max_iterations", "must be at least 1");
  if (real("solver.gradient_tol") <= 0.0) fail("solver.gradient_tol", "must be positive");
  if (real("solver.scf_tol") <= 0.0) fail("solver.scf_tol", "must be positive");

  if (scenario == "exact" || scenario == "hvz" || scenario == "hf" || scenario == "rank") {
    if (n < 1) fail("particles.n", "must be at least 1");
  }
  if (scenario == "hf" && !fermion) fail("particles.statistics", "hf requires fermions");
  if (scenario == "rank") {
    int rank = integer("orbitals.rank");
    if (rank == 0) rank = fermion ? n : 1;
    if (rank < 1 || rank > modes) fail("orbitals.rank", "must lie in [1, modes]");
    if (fermion && rank < n) fail("orbitals.rank", "fermions need rank >= N");
  }
  if (scenario == "pekar" || scenario == "scan") {
    if (dim != 1) fail("dim", "the polaron model is one-dimensional");
    if (real("pekar.alpha") < 0.0) fail("pekar.alpha", "must be nonnegative");
    if (real("pekar.u") < 0.0) fail("pekar.u", "must be nonnegative");
    double theta = real("pekar.theta");
    if (theta <= 0.0 || theta > 1.0) fail("pekar.theta", "must lie in (0, 1]");
    if (real("pekar.tol") <= 0.0) fail("pekar.tol", "must be positive");
    if (integer("pekar.max_halvings") < 0) fail("pekar.max_halvings", "must be nonnegative");
    if (n < 1 || n > 3) fail("particles.n", "sector diagonalization supports 1 <= N <= 3");
  }
  if (scenario == "scan") {
    if (n < 2) fail("particles.n", "a binding scan needs N >= 2");
    auto alphas = reals("scan.alphas");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (alphas[i] < 0.0) fail("scan.alphas", "couplings must be nonnegative");
      if (i > 0 && alphas[i] <= alphas[i - 1]) fail("scan.alphas", "grid must ascend");
    }
  }
  const bool sequence = scenario == "escaping" || scenario == "hartree" ||
                        scenario == "hf_escaping" || scenario == "free_evolution";
  if (sequence) {
    if (dim != 1) fail("dim", "sequence scenarios are one-dimensional");
    auto inside = [&](const std::string& key, int center, int width) {
      if (width < 1) fail(key, "width must be at least 1");
      if (center - width + 1 < 0 || center + width - 1 >= points) fail(key, "bump leaves the box");
    };
    inside("sequence.phi_center", integer("sequence.phi_center"), integer("sequence.phi_width"));
    inside("sequence.escaping_center", integer("sequence.escaping_center"),
           integer("sequence.escaping_width"));
    for (int c : integers("sequence.test_centers"))
      inside("sequence.test_centers", c, integer("sequence.test_width"));
    auto ns = integers("sequence.n_values");
    for (std::size_t i = 0; i < ns.size(); ++i)
      if (ns[i] < 0 || (i > 0 && ns[i] <= ns[i - 1]))
        fail("sequence.n_values", "must be nonnegative and ascending");
    if (scenario != "free_evolution" &&
        integer("sequence.escaping_center") + ns.back() + integer("sequence.escaping_width") - 1 >= points)
      fail("sequence.n_values", "the escaping bump leaves the box at the largest n");
    double w = real("sequence.phi_weight");
    if (w < 0.0 || w > 1.0) fail("sequence.phi_weight", "must lie in [0, 1]");
    if (integer("sequence.trace_distance_cap") < 0)
      fail("sequence.trace_distance_cap", "must be nonnegative");
    for (double r : reals("sequence.radii"))
      if (r <= 0.0) fail("sequence.radii", "radii must be positive");
    if (scenario == "hf_escaping" &&
        std::abs(integer("sequence.phi_center") - integer("sequence.escaping_center")) <
            integer("sequence.phi_width") + integer("sequence.escaping_width") - 1)
      fail("sequence.escaping_center", "kept and escaping bumps must not overlap");
    if (scenario == "hartree" && fermion) fail("particles.statistics", "Hartree sequences are bosonic");
    if (scenario == "free_evolution") {
      if (n < 1 || n > 2) fail("particles.n", "free evolution runs with 1 or 2 particles");
      for (double t : reals("sequence.times"))
        if (t < 0.0) fail("sequence.times", "times must be nonnegative");
    }
    if (scenario == "hartree" && (n < 1 || n > 3)) fail("particles.n", "Hartree sequences use 1 <= N <= 3");
  }
}

}  // namespace geofock
