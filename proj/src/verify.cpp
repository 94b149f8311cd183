#include <Eigen/QR>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>

#include "geofock/cli.hpp"
#include "geofock/localization.hpp"
#include "geofock/parallel.hpp"

namespace geofock {

namespace {

using Rng = std::mt19937_64;

CVec random_unit(Rng& rng, int n) {
  std::normal_distribution<double> g;
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

CMat random_matrix(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  CMat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

CMat random_unitary(Rng& rng, int n) {
  Eigen::HouseholderQR<CMat> qr(random_matrix(rng, n, n));
  return qr.householderQ() * CMat::Identity(n, n);
}

LocalizationOperator random_contraction(Rng& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RVec s(n);
  for (int i = 0; i < n; ++i) s(i) = u(rng);
  return LocalizationOperator(random_unitary(rng, n) * s.cast<cplx>().asDiagonal() *
                              random_unitary(rng, n));
}

MixedState random_state(Rng& rng, const FockBasis& basis) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const double w = u(rng) / 2.0;
  return mixture({w, 1.0 - w}, {pure_state(basis, random_unit(rng, basis.dimension())),
                                pure_state(basis, random_unit(rng, basis.dimension()))});
}

struct ChainProblem {
  FockBasis basis;
  OneBodyOperator h;
  TwoBodyKernel w;
  int n;
};

// Six-site repulsive fermion chain.
ChainProblem chain_problem(int n) {
  const auto s = build_lattice_space(1, 6, 6.0);
  return {FockBasis(6, n, Statistics::fermion), kinetic_operator(s),
          two_body_kernel(s, soft_coulomb_pair(s), Statistics::fermion), n};
}

Statistics alternate(int t) { return t % 2 ? Statistics::boson : Statistics::fermion; }

struct Check {
  std::string identity;
  int quick_cases;
  int full_cases;
  double tolerance;
  bool full_only;
  // Returns the residual of case t.
  std::function<double(Rng&, int)> run;
};

std::vector<Check> battery() {
  std::vector<Check> c;
  c.push_back({"car r=6 N=3", 50, 50, 1e-12, false, [](Rng& rng, int) {
                 const FockBasis b(6, 3, Statistics::fermion);
                 return car_ccr_residual(b, random_unit(rng, 6), random_unit(rng, 6));
               }});
  c.push_back({"ccr r=3 N=6", 50, 50, 1e-12, false, [](Rng& rng, int) {
                 const FockBasis b(3, 6, Statistics::boson);
                 return car_ccr_residual(b, random_unit(rng, 3), random_unit(rng, 3));
               }});
  c.push_back({"density matrix roundtrip", 50, 200, 1e-10, false, [](Rng& rng, int t) {
                 const FockBasis b(3 + t % 3, 1 + (t / 2) % 3, alternate(t));
                 const auto g = random_state(rng, b);
                 return blocks_from_density_matrices(density_table(g), b).distance(g);
               }});
  c.push_back({"trace law", 16, 64, 1e-10, false, [](Rng& rng, int t) {
                 const auto stats = alternate(t);
                 const int n = 1 + (t / 2) % 4;
                 const FockBasis b(stats == Statistics::fermion ? 5 : 3, n, stats);
                 const auto g = pure_sector_state(b, n, random_unit(rng, b.sector_size(n)));
                 double worst = 0.0;
                 for (int p = 0; p <= n; ++p)
                   worst = std::max(worst, std::abs(density_matrix(g, p, p).matrix.trace().real() -
                                                    binomial(n, p)));
                 return worst;
               }});
  c.push_back({"localization formula vs n-body", 20, 100, 1e-10, false, [](Rng& rng, int t) {
                 const FockBasis b(4, 1 + t % 3, alternate(t / 3));
                 const int n = b.max_particles();
                 const CVec psi = random_unit(rng, b.sector_size(n));
                 const auto loc = random_contraction(rng, 4);
                 return localize_nbody(b, psi, loc).result.distance(
                     localize_via_formula(pure_sector_state(b, n, psi), loc));
               }});
  c.push_back({"localization formula vs doubling", 0, 100, 1e-9, true, [](Rng& rng, int t) {
                 const FockBasis b(3 + t % 2, 1 + (t / 2) % 3, alternate(t / 6));
                 const auto g = random_state(rng, b);
                 const auto loc = random_contraction(rng, b.modes());
                 const auto f = localize_via_formula(g, loc);
                 return std::max(f.distance(localize_via_doubling(g, loc)),
                                 std::max(0.0, -f.min_eigenvalue()));
               }});
  c.push_back({"trace complementarity", 100, 100, 1e-10, false, [](Rng& rng, int t) {
                 const FockBasis b(4, 1 + t % 3, alternate(t / 3));
                 const int n = b.max_particles();
                 return trace_complementarity_check(b, random_unit(rng, b.sector_size(n)),
                                                    random_contraction(rng, 4));
               }});
  c.push_back({"localization composition", 20, 100, 1e-10, false, [](Rng& rng, int t) {
                 const FockBasis b(3 + t % 2, 1 + t % 3, alternate(t / 2));
                 const auto g = random_state(rng, b);
                 const auto b1 = random_contraction(rng, b.modes());
                 return composition_check(g, b1, random_contraction(rng, b.modes()));
               }});
  c.push_back({"IMS double commutator", 100, 100, 1e-10, false, [](Rng& rng, int) {
                 const auto s = build_lattice_space(1, 12, 12.0);
                 std::uniform_real_distribution<double> u(0.0, 1.0);
                 std::vector<double> chi(12), eta(12);
                 for (int i = 0; i < 12; ++i) {
                   chi[i] = u(rng);
                   eta[i] = std::sqrt(1.0 - chi[i] * chi[i]);
                 }
                 const CMat a = random_matrix(rng, 12, 12);
                 const OneBodyOperator h{0.5 * (a + a.adjoint()), "random"};
                 return ims_identity_check(h, window_localizer(s, chi), window_localizer(s, eta));
               }});
  c.push_back({"Hartree binomial weights", 20, 40, 1e-10, false, [](Rng& rng, int t) {
                 const int n = 1 + t % 4;
                 const FockBasis b(3, n, Statistics::boson);
                 const CVec phi = random_unit(rng, 3);
                 const auto loc = random_contraction(rng, 3);
                 const double s = (loc.B() * phi).squaredNorm();
                 const auto dec = localize_nbody(b, tensor_power(b, phi, n), loc);
                 double worst = 0.0;
                 for (int k = 0; k <= n; ++k)
                   worst = std::max(worst, std::abs(dec.sector_weights[k] - binomial(n, k) *
                                                                           std::pow(1.0 - s, n - k) *
                                                                           std::pow(s, k)));
                 return worst;
               }});
  c.push_back({"finite-rank localization structure", 50, 50, 1e-10, false, [](Rng& rng, int t) {
                 const int n = 2 + t % 2;
                 const int rank = n + 1 + t % 2;
                 const FockBasis b(6, n, Statistics::fermion);
                 const FockBasis small(rank, n, Statistics::fermion);
                 const CMat frame = random_unitary(rng, 6).leftCols(rank);
                 const CVec psi = lift_sector(small, b, frame, n) * random_unit(rng, small.sector_size(n));
                 const auto cert = finite_rank_localization_structure(b, psi, rank, random_contraction(rng, 6));
                 return cert.holds ? cert.reconstruction_error : 1.0;
               }});
  c.push_back({"variational chain ordering", 2, 2, 1e-9, false, [](Rng&, int t) {
                 const auto [b, h, w, n] = chain_problem(2 + t);
                 const double exact = exact_ground_state(assemble_hamiltonian(b, h, w), n).energy;
                 const double hf = hartree_fock_scf(b, h, w, n).energy;
                 const double rank_n = finite_rank_minimize(b, h, w, n, n).energy;
                 return std::max({0.0, exact - hf, hf - rank_n});
               }});
  c.push_back({"full rank equals exact", 2, 2, 1e-7, false, [](Rng&, int t) {
                 const auto [b, h, w, n] = chain_problem(2 + t);
                 const double exact = exact_ground_state(assemble_hamiltonian(b, h, w), n).energy;
                 return std::abs(finite_rank_minimize(b, h, w, n, b.modes()).energy - exact);
               }});
  c.push_back({"determinism", 2, 2, 0.0, false, [](Rng&, int t) {
                 const auto [b, h, w, n] = chain_problem(2);
                 FiniteRankOptions o;
                 o.restarts = 3;
                 o.seed = 7 + t;
                 const auto a = finite_rank_minimize(b, h, w, n, 3, o);
                 const auto c2 = finite_rank_minimize(b, h, w, n, 3, o);
                 return std::abs(a.energy - c2.energy) + (a.vector - c2.vector).norm();
               }});
  return c;
}

}  // namespace

bool VerifyReport::passed() const {
  for (const auto& r : rows)
    if (!r.passed) return false;
  return true;
}

VerifyReport verify_suite(const std::string& level, std::uint64_t seed) {
  require(level == "quick" || level == "full", "verify_suite: level must be quick or full");
  const bool full = level == "full";
  VerifyReport report;
  report.level = level;
  auto checks = battery();
  std::vector<Check> active;
  for (auto& c : checks)
    if (full || !c.full_only) active.push_back(std::move(c));
  report.rows.resize(active.size());
  parallel_for(static_cast<int>(active.size()), [&](int i) {
    const Check& c = active[i];
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    Rng rng(seq);
    VerifyRow row;
    row.identity = c.identity;
    row.tolerance = c.tolerance;
    row.cases = full ? c.full_cases : c.quick_cases;
    for (int t = 0; t < row.cases; ++t) row.max_residual = std::max(row.max_residual, c.run(rng, t));
    row.passed = row.max_residual <= c.tolerance;
    report.rows[i] = row;
  });
  return report;
}

void print_verify_report(const VerifyReport& report, std::ostream& out) {
  out << "verify " << report.level << '\n';
  out << std::left << std::setw(38) << "identity" << std::setw(7) << "cases" << std::setw(14)
      << "max_residual" << std::setw(11) << "tolerance" << "result\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(38) << r.identity << std::setw(7) << r.cases << std::scientific
        << std::setprecision(3) << std::setw(14) << r.max_residual << std::setw(11) << r.tolerance
        << (r.passed ? "PASS" : "FAIL") << '\n'
        << std::defaultfloat;
  }
  out << (report.passed() ? "all identities passed" : "FAILED") << '\n';
}

}  // namespace geofock
