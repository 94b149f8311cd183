#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "geofock/fock.hpp"
#include "geofock/sequences.hpp"
#include "geofock/solvers.hpp"
#include "geofock/states.hpp"
#include "oracles.hpp"

using namespace geofock;

namespace {

struct Chain {
  OneBodySpace space;
  OneBodyOperator t;
  OneBodyOperator hv;
  TwoBodyKernel w;
  RMat pair;
};

// Dirichlet chain of `sites` sites, unit spacing, soft-Coulomb well of charge z
// and soft-Coulomb repulsion.
Chain make_chain(int sites, double z, Statistics stats) {
  auto space = build_lattice_space(1, sites, sites);
  auto t = kinetic_operator(space);
  auto v = potential_operator(space, soft_coulomb_well(space, z));
  auto samples = soft_coulomb_pair(space);
  return {space, t, {t.matrix + v.matrix, "h"}, two_body_kernel(space, samples, stats),
          pair_matrix(space, samples)};
}

// Sector Hamiltonian through the tensor-product route.
CMat oracle_sector(const FockBasis& b, const Chain& c, int n) {
  return oracle::onebody_sector(b, c.hv.matrix, n) +
         oracle::twobody_sector(b, oracle::pair_tensor(c.pair), n);
}

double lowest(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  return es.eigenvalues()(0);
}

double slater_energy(const FockBasis& b, const CMat& h_n, const CMat& frame) {
  std::vector<CVec> cols;
  for (int k = 0; k < frame.cols(); ++k) cols.push_back(frame.col(k));
  CVec psi = product_state(b, cols);
  return psi.dot(h_n * psi).real();
}

// N = 1 Pekar functional minimized by normalized gradient flow over real
// vectors, best of several starts.
double choquard_oracle(const PekarModel& m, std::mt19937_64& rng) {
  const int r = m.space.modes();
  const RMat t = m.kinetic.matrix.real();
  double best = std::numeric_limits<double>::infinity();
  for (int start = 0; start < 6; ++start) {
    RVec phi = oracle::random_vector(rng, r).cwiseAbs();
    phi.normalize();
    for (int it = 0; it < 20000; ++it) {
      RVec rho = phi.cwiseAbs2();
      RVec g = t * phi - m.alpha * (m.attraction * rho).cwiseProduct(phi);
      phi = (phi - 0.2 * g).normalized();
    }
    RVec rho = phi.cwiseAbs2();
    best = std::min(best, phi.dot(t * phi) - 0.5 * m.alpha * rho.dot(m.attraction * rho));
  }
  return best;
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("exact ground state basics") {
  auto c = make_chain(6, 1.0, Statistics::fermion);
  FockBasis b(6, 3, Statistics::fermion);
  auto h = assemble_hamiltonian(b, c.hv, c.w);
  auto e0 = exact_ground_state(h, 0);
  CHECK(e0.energy == 0.0);
  auto e1 = exact_ground_state(h, 1);
  CHECK(std::abs(e1.energy - lowest(c.hv.matrix)) <= 1e-12);
  for (int n = 1; n <= 3; ++n) {
    auto r = exact_ground_state(h, n);
    CHECK(r.residual <= 1e-8);
    CHECK(r.converged);
    CHECK(std::abs(r.ground_vector.norm() - 1.0) <= 1e-12);
    CHECK(std::abs(r.energy - lowest(oracle_sector(b, c, n))) <= 1e-10);
  }
  // W >= 0 and no well: every sector energy is nonnegative.
  auto h0 = assemble_hamiltonian(b, c.t, c.w);
  for (int n = 0; n <= 3; ++n) CHECK(exact_ground_state(h0, n).energy >= -1e-12);
  CHECK_THROWS_AS(exact_ground_state(creation(b, CVec::Unit(6, 0)), 1), PreconditionError);
}

TEST_CASE("lanczos agrees with dense diagonalization") {
  auto c = make_chain(12, 2.0, Statistics::fermion);
  FockBasis b(12, 4, Statistics::fermion);
  auto h = assemble_hamiltonian(b, c.hv, c.w);
  for (int n : {2, 3, 4}) {
    auto dense = exact_ground_state(h, n);
    auto lanczos = exact_ground_state(h, n, 0);
    CHECK(lanczos.method == "lanczos");
    CHECK(lanczos.converged);
    CHECK(lanczos.residual <= 1e-8);
    CHECK(std::abs(dense.energy - lanczos.energy) <= 1e-9);
    CHECK(std::abs(std::abs(dense.ground_vector.dot(lanczos.ground_vector)) - 1.0) <= 1e-8);
    CHECK(std::abs(dense.gap - lanczos.gap) <= 1e-5);
  }
}

TEST_CASE("free fermions fill the lowest levels") {
  auto c = make_chain(7, 0.0, Statistics::fermion);
  FockBasis b(7, 4, Statistics::fermion);
  TwoBodyKernel zero(7, Statistics::fermion);
  Eigen::SelfAdjointEigenSolver<CMat> es(c.t.matrix);
  auto tab = hvz_table(b, c.t, c.t, zero);
  double sum = 0.0;
  for (int k = 0; k <= 4; ++k) {
    CHECK(std::abs(tab.e_v[k] - sum) <= 1e-11);
    if (k < 4) sum += es.eigenvalues()(k);
  }
  // With V = 0 the k = N margin vanishes.
  CHECK(std::abs(tab.margins[4]) <= 1e-11);
  CHECK(std::abs(tab.margins[0]) == 0.0);
}

TEST_CASE("attractive well binds two repelling fermions on 8 sites") {
  auto c = make_chain(8, 2.0, Statistics::fermion);
  FockBasis b(8, 2, Statistics::fermion);
  auto tab = hvz_table(b, c.hv, c.t, c.w);
  for (int k = 0; k <= 2; ++k) CHECK(std::abs(tab.e_v[k] - (k ? lowest(oracle_sector(b, c, k)) : 0.0)) <= 1e-10);
  CHECK(tab.margins[1] < -0.1);
  CHECK(tab.margins[2] < -0.1);
  CHECK(tab.binding);
  CHECK(tab.monotone);
  CHECK(tab.finite_size_caveat);
}

TEST_CASE("finite-size excess shrinks with the box") {
  // Three fermions on a charge-one well: the third is unbound, and its
  // energy cost above E(N-1) is a pure box effect.
  std::vector<double> excess;
  for (int sites : {6, 10}) {
    auto c = make_chain(sites, 1.0, Statistics::fermion);
    FockBasis b(sites, 3, Statistics::fermion);
    auto tab = hvz_table(b, c.hv, c.t, c.w);
    CHECK(tab.e_v[3] <= tab.e_v[2] + tab.excess + 1e-14);
    excess.push_back(tab.excess);
  }
  CHECK(excess[0] > 0.0);
  CHECK(excess[1] < excess[0]);
}

TEST_CASE("finite rank: full rank is exact and ranks nest") {
  auto c = make_chain(6, 1.0, Statistics::fermion);
  for (int n : {2, 3}) {
    FockBasis b(6, n, Statistics::fermion);
    const double exact = lowest(oracle_sector(b, c, n));
    CMat hn = assemble_hamiltonian(b, c.hv, c.w).block(n, n);
    double prev = -std::numeric_limits<double>::infinity();
    for (int r = 6; r >= n; --r) {
      auto res = finite_rank_minimize(b, c.hv, c.w, n, r);
      CHECK(static_cast<int>(res.restart_energies.size()) == 8);
      CHECK(res.converged);
      CHECK((res.orbitals.adjoint() * res.orbitals - CMat::Identity(r, r)).norm() <= 1e-8);
      CHECK(res.energy >= exact - 1e-9);
      CHECK(std::abs(res.vector.dot(hn * res.vector).real() - res.energy) <= 1e-10);
      CHECK(std::abs(res.vector.norm() - 1.0) <= 1e-10);
      CHECK(res.energy >= prev - 1e-9);
      if (r == 6) CHECK(std::abs(res.energy - exact) <= 1e-7);
      prev = res.energy;
    }
  }
}

TEST_CASE("finite rank is deterministic for a fixed seed") {
  auto c = make_chain(5, 1.0, Statistics::fermion);
  FockBasis b(5, 2, Statistics::fermion);
  FiniteRankOptions o;
  o.seed = 42;
  o.restarts = 3;
  auto a = finite_rank_minimize(b, c.hv, c.w, 2, 3, o);
  auto d = finite_rank_minimize(b, c.hv, c.w, 2, 3, o);
  CHECK(a.energy == d.energy);
  CHECK(a.restart_energies == d.restart_energies);
  CHECK_THROWS_AS(finite_rank_minimize(b, c.hv, c.w, 2, 1, o), PreconditionError);
}

TEST_CASE("bosonic rank one is a Hartree product") {
  auto c = make_chain(5, 1.5, Statistics::boson);
  FockBasis b(5, 2, Statistics::boson);
  auto res = finite_rank_minimize(b, c.hv, c.w, 2, 1);
  CVec hartree = tensor_power(b, res.orbitals.col(0), 2);
  CHECK(std::abs(std::abs(hartree.dot(res.vector)) - 1.0) <= 1e-10);
  CHECK(res.energy >= lowest(oracle_sector(b, c, 2)) - 1e-9);
  auto full = finite_rank_minimize(b, c.hv, c.w, 2, 5);
  CHECK(std::abs(full.energy - lowest(oracle_sector(b, c, 2))) <= 1e-7);
}

TEST_CASE("Hartree-Fock beats random Slater determinants") {
  auto c = make_chain(6, 1.0, Statistics::fermion);
  std::mt19937_64 rng(2024);
  for (int n : {2, 3}) {
    FockBasis b(6, n, Statistics::fermion);
    CMat hn = oracle_sector(b, c, n);
    double sample_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 10000; ++s)
      sample_min = std::min(sample_min, slater_energy(b, hn, oracle::random_frame(rng, 6, n)));
    auto hf = hartree_fock_scf(b, c.hv, c.w, n);
    CHECK(hf.converged);
    CHECK(hf.energy <= sample_min + 1e-6);
    CHECK(std::abs(slater_energy(b, hn, hf.orbitals) - hf.energy) <= 1e-9);
    CHECK(hf.polish_gain <= 1e-7);
    CHECK(hf.energy >= lowest(hn) - 1e-9);
    auto rank_n = finite_rank_minimize(b, c.hv, c.w, n, n);
    CHECK(std::abs(rank_n.energy - hf.energy) <= 1e-7);
  }
}

TEST_CASE("Hartree-Fock without interaction is Aufbau") {
  auto c = make_chain(6, 1.0, Statistics::fermion);
  FockBasis b(6, 3, Statistics::fermion);
  TwoBodyKernel zero(6, Statistics::fermion);
  auto hf = hartree_fock_scf(b, c.hv, zero, 3);
  Eigen::SelfAdjointEigenSolver<CMat> es(c.hv.matrix);
  CHECK(std::abs(hf.energy - es.eigenvalues().head(3).sum()) <= 1e-12);
  CMat p_hf = hf.orbitals * hf.orbitals.adjoint();
  CMat p_ref = es.eigenvectors().leftCols(3) * es.eigenvectors().leftCols(3).adjoint();
  CHECK((p_hf - p_ref).norm() <= 1e-9);
}

TEST_CASE("Fock matrix: pair fast path matches the general kernel") {
  std::mt19937_64 rng(5);
  auto c = make_chain(5, 1.0, Statistics::fermion);
  auto general = TwoBodyKernel::from_product_tensor(5, Statistics::fermion, oracle::pair_tensor(c.pair));
  CHECK_FALSE(general.has_pair_potential());
  CMat u = oracle::random_frame(rng, 5, 2);
  CMat gamma = u * u.adjoint();
  CHECK((fock_matrix(c.hv, c.w, gamma) - fock_matrix(c.hv, general, gamma)).norm() <= 1e-12);

  // A kernel with no pair structure: HF energy against the Fock-space functional.
  const int r = 4;
  CMat v4 = oracle::random_hermitian(rng, r * r);
  auto vt = [&](int a, int bb, int cc, int d) -> cplx {
    return 0.5 * (v4(a * r + bb, cc * r + d) + v4(bb * r + a, d * r + cc));
  };
  auto w = TwoBodyKernel::from_product_tensor(r, Statistics::fermion, vt);
  OneBodyOperator h{oracle::random_hermitian(rng, r), "h"};
  FockBasis b(r, 2, Statistics::fermion);
  auto hf = hartree_fock_scf(b, h, w, 2);
  CMat h2 = oracle::onebody_sector(b, h.matrix, 2) + oracle::twobody_sector(b, vt, 2);
  CHECK(std::abs(slater_energy(b, h2, hf.orbitals) - hf.energy) <= 1e-9);
  CHECK(std::abs(hartree_fock_energy(h, w, hf.orbitals * hf.orbitals.adjoint()) - hf.energy) <= 1e-12);
  CHECK(hf.polish_gain <= 1e-7);
}

TEST_CASE("Hartree-Fock binding table in a well") {
  auto c = make_chain(6, 2.0, Statistics::fermion);
  FockBasis b(6, 3, Statistics::fermion);
  std::vector<double> ev(4, 0.0), e0(4, 0.0), exact(4, 0.0);
  for (int n = 1; n <= 3; ++n) {
    ev[n] = hartree_fock_scf(b, c.hv, c.w, n).energy;
    e0[n] = hartree_fock_scf(b, c.t, c.w, n).energy;
    exact[n] = lowest(oracle_sector(b, c, n));
    CHECK(ev[n] >= exact[n] - 1e-9);
  }
  // Two fermions bind to the charge-two well at the HF level.
  CHECK(ev[2] < ev[1] + e0[1]);
  CHECK(ev[2] < e0[2]);
}

TEST_CASE("Pekar functional: linear limits and normalization") {
  auto space = build_lattice_space(1, 8, 8);
  auto m = make_pekar_model(space, Statistics::boson, 0.0, 1.0);
  FockBasis b(8, 2, Statistics::boson);
  std::mt19937_64 rng(9);
  CVec psi = oracle::random_unit(rng, b.sector_size(2));
  CMat lin = assemble_hamiltonian(b, m.kinetic, m.repulsion).block(2, 2);
  CHECK(std::abs(pekar_energy(m, b, 2, psi) - psi.dot(lin * psi).real()) <= 1e-12);
  CVec phi = oracle::random_unit(rng, 8);
  CHECK(std::abs(pekar_energy(m, b, 1, phi) - phi.dot(m.kinetic.matrix * phi).real()) <= 1e-12);
  CHECK_THROWS_AS(pekar_energy(m, b, 2, 2.0 * psi), PreconditionError);

  auto r = pekar_minimize(m, 2);
  CHECK(r.converged);
  CHECK(std::abs(r.energy - lowest(lin)) <= 1e-10);
  CHECK(std::abs(r.mu - lowest(lin)) <= 1e-10);
}

TEST_CASE("Pekar single polaron localizes and matches a direct minimization") {
  auto space = build_lattice_space(1, 12, 12);
  std::mt19937_64 rng(17);
  auto free = pekar_minimize(make_pekar_model(space, Statistics::boson, 0.0, 1.0), 1);
  auto m = make_pekar_model(space, Statistics::boson, 3.0, 1.0);
  auto r = pekar_minimize(m, 1);
  CHECK(r.converged);
  CHECK(r.scf_residual <= 1e-7);
  CHECK(r.energy < free.energy - 0.5);
  CHECK(std::abs(r.energy - choquard_oracle(m, rng)) <= 1e-8);
  CHECK(r.occupation.maxCoeff() > 2.0 * free.occupation.maxCoeff());
}

TEST_CASE("Pekar fixed points: residual, functional and density") {
  auto space = build_lattice_space(1, 10, 10);
  for (auto stats : {Statistics::boson, Statistics::fermion}) {
    auto m = make_pekar_model(space, stats, 2.0, 0.5);
    FockBasis b(10, 2, stats);
    auto r = pekar_minimize(m, 2);
    CHECK(r.converged);
    CHECK(r.monotone);
    CHECK(r.scf_residual <= 1e-7);
    CHECK(std::abs(pekar_energy(m, b, 2, r.wavefunction) - r.energy) <= 1e-9);
    CHECK(r.occupation.minCoeff() >= 0.0);
    CHECK(std::abs(r.occupation.sum() - 2.0) <= 1e-12);
    // The linearized problem at the converged density has Psi as its ground state.
    CMat h = pekar_mean_field(m, b, 2, r.occupation);
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    CHECK(std::abs(es.eigenvalues()(0) - r.mu) <= 1e-7);
    CHECK(std::abs(std::abs(es.eigenvectors().col(0).dot(r.wavefunction)) - 1.0) <= 1e-7);
  }
}

TEST_CASE("Pekar mixtures sit above the convex combination") {
  auto space = build_lattice_space(1, 8, 8);
  auto m = make_pekar_model(space, Statistics::boson, 1.5, 1.0);
  FockBasis b(8, 2, Statistics::boson);
  std::mt19937_64 rng(33);
  for (int t = 0; t < 50; ++t) {
    CVec p1 = oracle::random_unit(rng, b.sector_size(2));
    CVec p2 = oracle::random_unit(rng, b.sector_size(2));
    double w = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double mixed = pekar_mixed_energy(m, b, 2, {w, 1.0 - w}, {p1, p2});
    double convex = w * pekar_energy(m, b, 2, p1) + (1.0 - w) * pekar_energy(m, b, 2, p2);
    CHECK(mixed >= convex - 1e-9);
  }
}

TEST_CASE("Pekar lattice scaling") {
  CHECK(pekar_scaling_deviation(10, 1.0, 2.0, 2.0, Statistics::boson, 2) <= 1e-3);
  CHECK(pekar_scaling_deviation(10, 0.5, 1.0, 0.5, Statistics::fermion, 2) <= 1e-3);
}

TEST_CASE("binding scan on a small box") {
  auto space = build_lattice_space(1, 10, 10);
  auto m = make_pekar_model(space, Statistics::boson, 0.0, 1.0);
  auto curve = binding_scan(m, 2, {0.0, 1.0, 2.0, 3.0});
  REQUIRE(curve.points.size() == 4);
  CHECK(curve.points[0].binding_energy <= 1e-8);
  CHECK(curve.points.back().binding_energy > 0.0);
  REQUIRE(curve.threshold.has_value());
  CHECK(*curve.threshold > 0.0);
  CHECK(*curve.threshold < 3.0);
  for (const auto& p : curve.points) {
    CHECK(p.converged);
    CHECK(p.max_residual <= 1e-7);
    CHECK(std::abs(p.margins[0] + p.binding_energy) <= 1e-14);
  }
  CHECK_THROWS_AS(binding_scan(m, 2, {1.0, 0.5}), PreconditionError);
}

TEST_CASE("Hoffmann-Ostenhof margin") {
  auto space = build_lattice_space(1, 16, 16);
  FockBasis b(16, 2, Statistics::fermion);
  CVec phi = bump_orbital(space, 6, 4);
  CHECK(std::abs(hoffmann_ostenhof_check(CMat(phi * phi.adjoint()), space)) <= 1e-12);
  CHECK(hoffmann_ostenhof_check(vacuum_state(b), space) == 0.0);

  // Disjoint bumps on adjacent sites 3..7 and 8..12: the shared edge makes
  // the margin strictly positive.
  phi = bump_orbital(space, 5, 3);
  CVec psi = bump_orbital(space, 10, 3);
  CHECK(std::abs(phi.dot(psi)) == 0.0);
  auto slater = pure_sector_state(b, 2, product_state(b, {phi, psi}));
  double margin = hoffmann_ostenhof_check(slater, space);
  RVec s = (phi.cwiseAbs2() + psi.cwiseAbs2()).cwiseSqrt();
  double grad = s(0) * s(0) + s(15) * s(15);
  for (int x = 0; x + 1 < 16; ++x) grad += (s(x + 1) - s(x)) * (s(x + 1) - s(x));
  const CMat& t = kinetic_operator(space).matrix;
  double kin = 2.0 * (phi.dot(t * phi) + psi.dot(t * psi)).real();
  CHECK(std::abs(margin - (kin - grad)) <= 1e-12);
  CHECK(margin > 1e-3);

  std::mt19937_64 rng(8);
  auto periodic = build_lattice_space(1, 6, 6, Boundary::periodic);
  FockBasis pb(6, 2, Statistics::boson);
  for (int t = 0; t < 30; ++t) {
    auto g = oracle::random_state(rng, pb, 2);
    CHECK(hoffmann_ostenhof_check(g, periodic) >= -1e-10);
    CHECK(hoffmann_ostenhof_check(g, build_lattice_space(1, 6, 6)) >= -1e-10);
  }
}

}  // TEST_SUITE
