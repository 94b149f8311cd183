#include <cstdio>
#include <fstream>
#include <sstream>

#include "geofock/cli.hpp"
#include "geofock/parallel.hpp"

namespace geofock {

namespace {

constexpr const char* kVersion = "1.0.0";

struct Output {
  std::string file;
  std::string producer;
  std::vector<std::string> columns;
};

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
      : out_(path), columns_(std::move(columns)) {
    if (!out_) throw ComputationError("cannot write " + path.string());
    row(columns_);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
};

std::string fmt(double x) { return format_real(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "1" : "0"; }

struct Context {
  const RunConfig& cfg;
  std::filesystem::path dir;
  std::vector<Output> outputs;
  ScenarioOutcome outcome;

  CsvWriter csv(const std::string& file, const std::string& producer,
                const std::vector<std::string>& columns) {
    outputs.push_back({file, producer, columns});
    outcome.files.push_back(file);
    return CsvWriter(dir / file, columns);
  }
};

OneBodySpace make_space(const RunConfig& c) {
  const int points = c.integer("points");
  double box = c.real("box");
  if (box == 0.0) box = points;
  Boundary bc = c.text("boundary") == "periodic" ? Boundary::periodic : Boundary::dirichlet;
  return build_lattice_space(c.integer("dim"), points, box, bc);
}

Statistics make_stats(const RunConfig& c) {
  return c.text("particles.statistics") == "fermion" ? Statistics::fermion : Statistics::boson;
}

OneBodyOperator make_hv(const RunConfig& c, const OneBodySpace& space) {
  auto t = kinetic_operator(space);
  if (c.text("potential.kind") == "none") return t;
  auto p = c.reals("potential.params");
  auto v = potential_operator(space, soft_coulomb_well(space, p[0], p[1]));
  return {t.matrix + v.matrix, "kinetic+well"};
}

TwoBodyKernel make_w(const RunConfig& c, const OneBodySpace& space, Statistics stats) {
  if (c.text("interaction.kind") == "none") return TwoBodyKernel(space.modes(), stats);
  auto p = c.reals("interaction.params");
  return two_body_kernel(space, soft_coulomb_pair(space, p[1]), stats).scaled(p[0]);
}

void write_profile(Context& ctx, const std::string& producer, const DensityProfile& p) {
  auto csv = ctx.csv("profile.csv", producer, {"site", "rho"});
  for (std::size_t s = 0; s < p.rho.size(); ++s) csv.row({fmt(static_cast<int>(s)), fmt(p.rho[s])});
}

void write_restarts(Context& ctx, const std::string& producer, const std::vector<double>& e) {
  auto csv = ctx.csv("restarts.csv", producer, {"run", "energy"});
  for (std::size_t i = 0; i < e.size(); ++i) csv.row({fmt(static_cast<int>(i)), fmt(e[i])});
}

// Solvers -------------------------------------------------------------------

void scenario_exact(Context& ctx) {
  const auto& c = ctx.cfg;
  auto space = make_space(c);
  auto stats = make_stats(c);
  const int n = c.integer("particles.n");
  FockBasis basis(space.modes(), n, stats);
  auto h = assemble_hamiltonian(basis, make_hv(c, space), make_w(c, space, stats));
  std::vector<SpectralResult> res(n + 1);
  const int dense = c.integer("solver.dense_limit");
  parallel_for(n + 1, [&](int k) { res[k] = exact_ground_state(h, k, dense); });
  auto csv = ctx.csv("energies.csv", "exact_ground_state",
                     {"sector", "energy", "gap", "residual", "degenerate", "method"});
  for (int k = 0; k <= n; ++k) {
    csv.row({fmt(k), fmt(res[k].energy), fmt(res[k].gap), fmt(res[k].residual),
             fmt(res[k].degenerate), res[k].method});
    ctx.outcome.converged = ctx.outcome.converged && res[k].converged;
  }
  write_profile(ctx, "exact_ground_state", density_profile(basis, n, res[n].ground_vector, space));
  ctx.outcome.summary = {{"energy", res[n].energy}, {"gap", res[n].gap},
                         {"degenerate", res[n].degenerate}, {"residual", res[n].residual}};
}

void scenario_hvz(Context& ctx) {
  const auto& c = ctx.cfg;
  auto space = make_space(c);
  auto stats = make_stats(c);
  const int n = c.integer("particles.n");
  FockBasis basis(space.modes(), n, stats);
  auto tab = hvz_table(basis, make_hv(c, space), kinetic_operator(space), make_w(c, space, stats));
  {
    auto csv = ctx.csv("energies.csv", "hvz_table", {"k", "e_v", "e_0"});
    for (int k = 0; k <= n; ++k) csv.row({fmt(k), fmt(tab.e_v[k]), fmt(tab.e_0[k])});
  }
  auto csv = ctx.csv("margins.csv", "hvz_table", {"k", "margin"});
  for (int k = 0; k <= n; ++k) csv.row({fmt(k), fmt(tab.margins[k])});
  ctx.outcome.summary = {{"binding", tab.binding},
                         {"monotone", tab.monotone},
                         {"finite_size_excess", tab.excess},
                         {"finite_size_caveat", tab.finite_size_caveat}};
}

void scenario_rank(Context& ctx, bool hf) {
  const auto& c = ctx.cfg;
  auto space = make_space(c);
  auto stats = make_stats(c);
  const int n = c.integer("particles.n");
  FockBasis basis(space.modes(), n, stats);
  auto h = make_hv(c, space);
  auto w = make_w(c, space, stats);
  FiniteRankResult res;
  std::string producer;
  if (hf) {
    HartreeFockOptions o;
    o.restarts = c.integer("solver.restarts");
    o.seed = static_cast<std::uint64_t>(c.integer("solver.seed"));
    o.max_iterations = c.integer("solver.max_iterations");
    o.tol = c.real("solver.scf_tol");
    res = hartree_fock_scf(basis, h, w, n, o);
    producer = "hartree_fock_scf";
  } else {
    FiniteRankOptions o;
    o.restarts = c.integer("solver.restarts");
    o.seed = static_cast<std::uint64_t>(c.integer("solver.seed"));
    o.max_iterations = c.integer("solver.max_iterations");
    o.gradient_tol = c.real("solver.gradient_tol");
    int rank = c.integer("orbitals.rank");
    if (rank == 0) rank = basis.is_fermionic() ? n : 1;
    res = finite_rank_minimize(basis, h, w, n, rank, o);
    producer = "finite_rank_minimize";
  }
  auto csv = ctx.csv("energies.csv", producer,
                     {"n", "rank", "energy", "converged", "iterations", "gradient_norm",
                      "commutator_residual", "polish_gain"});
  csv.row({fmt(n), fmt(res.rank), fmt(res.energy), fmt(res.converged), fmt(res.iterations),
           fmt(res.gradient_norm), fmt(res.commutator_residual), fmt(res.polish_gain)});
  write_restarts(ctx, producer, res.restart_energies);
  write_profile(ctx, producer, density_profile(basis, n, res.vector, space));
  ctx.outcome.converged = res.converged;
  ctx.outcome.summary = {{"energy", res.energy}, {"rank", res.rank}, {"converged", res.converged}};
}

PekarModel make_model(const RunConfig& c, const OneBodySpace& space) {
  return make_pekar_model(space, make_stats(c), c.real("pekar.alpha"), c.real("pekar.u"),
                          c.reals("interaction.params")[1]);
}

PekarOptions make_pekar_options(const RunConfig& c) {
  PekarOptions o;
  o.theta = c.real("pekar.theta");
  o.tol = c.real("pekar.tol");
  o.max_halvings = c.integer("pekar.max_halvings");
  o.max_iterations = c.integer("solver.max_iterations");
  return o;
}

void scenario_pekar(Context& ctx) {
  const auto& c = ctx.cfg;
  auto space = make_space(c);
  const int n = c.integer("particles.n");
  auto model = make_model(c, space);
  auto r = pekar_minimize(model, n, make_pekar_options(c));
  auto csv = ctx.csv("energies.csv", "pekar_minimize",
                     {"n", "alpha", "u", "energy", "mu", "scf_residual", "converged", "iterations",
                      "theta", "seed"});
  csv.row({fmt(n), fmt(r.alpha), fmt(r.coupling_u), fmt(r.energy), fmt(r.mu), fmt(r.scf_residual),
           fmt(r.converged), fmt(r.iterations), fmt(r.theta), r.seed});
  write_restarts(ctx, "pekar_minimize", r.restart_energies);
  FockBasis basis(space.modes(), n, model.stats);
  write_profile(ctx, "pekar_minimize", density_profile(basis, n, r.wavefunction, space));
  ctx.outcome.converged = r.converged;
  ctx.outcome.summary = {{"energy", r.energy}, {"mu", r.mu}, {"scf_residual", r.scf_residual},
                         {"monotone", r.monotone}};
}

void scenario_scan(Context& ctx) {
  const auto& c = ctx.cfg;
  auto space = make_space(c);
  const int n = c.integer("particles.n");
  auto curve = binding_scan(make_model(c, space), n, c.reals("scan.alphas"), make_pekar_options(c));
  {
    std::vector<std::string> cols{"alpha"};
    for (int k = 1; k <= n; ++k) cols.push_back("E" + std::to_string(k));
    for (std::string s : {"binding_energy", "converged", "max_residual"}) cols.push_back(s);
    auto csv = ctx.csv("binding_curve.csv", "binding_scan", cols);
    for (const auto& p : curve.points) {
      std::vector<std::string> row{fmt(p.alpha)};
      for (int k = 1; k <= n; ++k) row.push_back(fmt(p.energies[k]));
      row.push_back(fmt(p.binding_energy));
      row.push_back(fmt(p.converged));
      row.push_back(fmt(p.max_residual));
      csv.row(row);
      ctx.outcome.converged = ctx.outcome.converged && p.converged;
    }
  }
  auto csv = ctx.csv("margins.csv", "binding_scan", {"alpha", "k", "margin"});
  for (const auto& p : curve.points)
    for (std::size_t k = 0; k < p.margins.size(); ++k)
      csv.row({fmt(p.alpha), fmt(static_cast<int>(k + 1)), fmt(p.margins[k])});
  nlohmann::json s;
  s["threshold"] = curve.threshold ? nlohmann::json(*curve.threshold) : nlohmann::json(nullptr);
  s["nondecreasing"] = curve.nondecreasing;
  s["convex"] = curve.convex;
  s["monotonicity_violation"] = curve.monotonicity_violation;
  s["convexity_violation"] = curve.convexity_violation;
  s["continuum_reference"] = {{"tau_c_2", 0.87},
                              {"reproduced", false},
                              {"note", "continuum Coulomb literature value; the lattice soft-Coulomb "
                                       "threshold is kernel dependent and not comparable"}};
  ctx.outcome.summary = s;
  ctx.outcome.curve = curve;
}

// Sequences -----------------------------------------------------------------

std::vector<CVec> test_vectors(const RunConfig& c, const OneBodySpace& space) {
  std::vector<CVec> out;
  for (int center : c.integers("sequence.test_centers"))
    out.push_back(bump_orbital(space, center, c.integer("sequence.test_width")));
  return out;
}

void report_sequence(Context& ctx, const StateSequence& seq, const std::vector<int>& n_values,
                     const std::string& producer) {
  const auto& c = ctx.cfg;
  auto space = make_space(c);
  auto rep = geometric_convergence_report(seq, test_vectors(c, space), n_values,
                                          c.integer("sequence.trace_distance_cap"));
  {
    ctx.outputs.push_back({"convergence.csv", "geometric_convergence_report", {"n", "p", "q", "deviation"}});
    ctx.outcome.files.push_back("convergence.csv");
    std::ofstream out(ctx.dir / "convergence.csv");
    write_convergence_csv(rep, out);
  }
  {
    ctx.outputs.push_back({"convergence_summary.json", "geometric_convergence_report", {}});
    ctx.outcome.files.push_back("convergence_summary.json");
    std::ofstream out(ctx.dir / "convergence_summary.json");
    write_convergence_summary(rep, seq.description, out);
  }
  {
    auto csv = ctx.csv("particle_number.csv", producer,
                       {"n", "particle_number", "max_deviation", "trace_distance"});
    for (std::size_t i = 0; i < rep.n_values.size(); ++i)
      csv.row({fmt(rep.n_values[i]), fmt(rep.particle_number[i]), fmt(rep.max_deviation[i]),
               i < rep.trace_distance.size() ? fmt(rep.trace_distance[i]) : std::string("nan")});
  }
  std::vector<DensityProfile> profiles(n_values.size());
  parallel_for(static_cast<int>(n_values.size()),
               [&](int i) { profiles[i] = density_profile(seq.at(n_values[i]), space); });
  auto radii = c.reals("sequence.radii");
  auto conc = concentration_report(profiles, n_values, space, radii);
  auto csv = ctx.csv("concentration.csv", "concentration_report", {"n", "radius", "value"});
  for (std::size_t i = 0; i < conc.n_values.size(); ++i)
    for (std::size_t j = 0; j < conc.radii.size(); ++j)
      csv.row({fmt(conc.n_values[i]), fmt(conc.radii[j]), fmt(conc.values[i][j])});
  ctx.outcome.summary = {{"description", seq.description},
                         {"final_deviation", rep.final_deviation},
                         {"trend", rep.trend},
                         {"lower_semicontinuous", rep.lower_semicontinuous},
                         {"limit_particle_number", rep.limit_particle_number},
                         {"concentration_trend", conc.trend}};
  ctx.outcome.convergence = rep;
}

void scenario_sequence(Context& ctx, const std::string& kind) {
  const auto& c = ctx.cfg;
  auto space = make_space(c);
  auto stats = make_stats(c);
  const int n = c.integer("particles.n");
  CVec phi = bump_orbital(space, c.integer("sequence.phi_center"), c.integer("sequence.phi_width"));
  CVec esc = bump_orbital(space, c.integer("sequence.escaping_center"),
                          c.integer("sequence.escaping_width"));
  auto n_values = c.integers("sequence.n_values");
  if (kind == "escaping") {
    report_sequence(ctx, escaping_product_sequence(space, phi, esc, stats), n_values,
                    "escaping_product_sequence");
  } else if (kind == "hartree") {
    CVec weak = std::sqrt(c.real("sequence.phi_weight")) * phi;
    FockBasis basis(space.modes(), n, Statistics::boson);
    report_sequence(ctx, hartree_sequence(basis, splitting_family(space, weak, esc), weak), n_values,
                    "hartree_sequence");
  } else if (kind == "hf_escaping") {
    CMat kept(space.modes(), 1), gone(space.modes(), 1);
    kept.col(0) = phi;
    gone.col(0) = esc;
    auto seq = hf_escaping_sequence(space, kept, gone);
    report_sequence(ctx, seq.sequence, n_values, "hf_escaping_sequence");
    ctx.outcome.summary["limit_kind"] = to_string(seq.kind);
  } else {
    FockBasis basis(space.modes(), n, stats);
    CVec psi = n == 1 ? phi : product_state(basis, {phi, esc});
    psi.normalize();
    auto times = c.reals("sequence.times");
    std::vector<int> idx(times.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    report_sequence(ctx, free_evolution_sequence(space, pure_sector_state(basis, n, psi), times), idx,
                    "free_evolution_sequence");
  }
}

void write_manifest(const Context& ctx, const std::string& command) {
  const auto& c = ctx.cfg;
  nlohmann::json m;
  m["tool"] = "geofock";
  m["version"] = kVersion;
  m["versions"] = {{"geofock", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                 "." + std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  m["command"] = command;
  m["scenario"] = c.text("scenario");
  m["config"] = c.values();
  m["seed"] = c.integer("solver.seed");
  m["tolerances"] = {{"spectral_residual", 1e-8},
                     {"gradient_tol", c.real("solver.gradient_tol")},
                     {"scf_tol", c.real("solver.scf_tol")},
                     {"pekar_tol", c.real("pekar.tol")},
                     {"pekar_theta", c.real("pekar.theta")},
                     {"degeneracy_gap", 1e-10},
                     {"trend_floor", 1e-10}};
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : ctx.outputs)
    outs.push_back({{"file", o.file}, {"producer", o.producer}, {"columns", o.columns}});
  m["outputs"] = outs;
  m["converged"] = ctx.outcome.converged;
  m["summary"] = ctx.outcome.summary;
  std::ofstream out(ctx.dir / "manifest.json");
  out << m.dump(2) << '\n';
}

}  // namespace

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string error_record(const std::string& kind, const std::string& key,
                         const std::string& message) {
  nlohmann::json j = {{"status", "error"}, {"kind", kind}, {"key", key}, {"message", message}};
  return j.dump();
}

ScenarioOutcome run_scenario(const RunConfig& config, const std::filesystem::path& out_dir,
                             const std::string& command) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  Context ctx{config, out_dir, {}, {}};
  const std::string s = config.text("scenario");
  if (s == "exact") scenario_exact(ctx);
  else if (s == "hvz") scenario_hvz(ctx);
  else if (s == "hf") scenario_rank(ctx, true);
  else if (s == "rank") scenario_rank(ctx, false);
  else if (s == "pekar") scenario_pekar(ctx);
  else if (s == "scan") scenario_scan(ctx);
  else scenario_sequence(ctx, s);
  ctx.outputs.push_back({"manifest.json", "run_scenario", {}});
  ctx.outcome.files.push_back("manifest.json");
  write_manifest(ctx, command);
  return ctx.outcome;
}

}  // namespace geofock
