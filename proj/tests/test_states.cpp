#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "geofock/fock.hpp"
#include "geofock/localization.hpp"
#include "geofock/states.hpp"
#include "oracles.hpp"

using namespace geofock;

namespace {

CVec unit(int r, int i) {
  CVec e = CVec::Zero(r);
  e(i) = 1.0;
  return e;
}

double max_abs(const CMat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

MixedState random_sector_state(std::mt19937_64& rng, const FockBasis& b, int n) {
  return pure_sector_state(b, n, oracle::random_unit(rng, b.sector_size(n)));
}

}  // namespace

TEST_SUITE("states") {

TEST_CASE("pure states and their blocks") {
  const FockBasis b(3, 2, Statistics::fermion);
  const auto omega = vacuum_state(b);
  CHECK(omega.block(0, 0)(0, 0) == cplx(1.0));
  CHECK(omega.sector_weights() == std::vector<double>{1.0, 0.0, 0.0});

  std::mt19937_64 rng(1);
  const auto two = random_sector_state(rng, b, 2);
  CHECK(two.sector_weights()[2] == doctest::Approx(1.0));
  CHECK(max_abs(two.block(1, 1)) == 0.0);
  CHECK(max_abs(two.block(0, 2)) == 0.0);

  CVec sup = vacuum(b) + embed_sector(b, 1, unit(3, 0));
  sup /= sup.norm();
  const auto s = pure_state(b, sup);
  CHECK(std::abs(s.block(0, 1)(0, 0) - 0.5) <= 1e-15);

  CHECK_THROWS_AS(pure_state(b, 2.0 * vacuum(b)), PreconditionError);
}

TEST_CASE("state validation") {
  const FockBasis b(2, 1, Statistics::fermion);
  MixedState::Blocks g(2, std::vector<CMat>(2));
  g[0][0] = CMat::Constant(1, 1, 0.5);
  g[1][1] = CMat::Identity(2, 2) * 0.25;
  g[0][1] = CMat::Zero(1, 2);
  g[1][0] = CMat::Zero(2, 1);
  CHECK_NOTHROW(MixedState(b, g));
  auto bad = g;
  bad[1][1](0, 0) = 0.75;
  bad[1][1](1, 1) = -0.25;
  CHECK_THROWS_AS(MixedState(b, bad), PreconditionError);
  bad = g;
  bad[0][0](0, 0) = 0.6;
  CHECK_THROWS_AS(MixedState(b, bad), PreconditionError);
  bad = g;
  bad[0][1](0, 0) = 0.1;
  CHECK_THROWS_AS(MixedState(b, bad), PreconditionError);
}

TEST_CASE("production, ladder and tensor density matrices agree") {
  std::mt19937_64 rng(2);
  for (auto stats : {Statistics::fermion, Statistics::boson}) {
    const FockBasis b(stats == Statistics::fermion ? 4 : 3, 3, stats);
    for (int t = 0; t < 5; ++t) {
      const auto g = oracle::random_state(rng, b, 2);
      for (int p = 0; p <= 3; ++p)
        for (int q = 0; q <= 3; ++q) {
          const CMat d = density_matrix(g, p, q).matrix;
          CHECK(max_abs(d - density_matrix_ladder(g, p, q).matrix) <= 1e-10);
          CHECK(max_abs(d - oracle::density_matrix(g, p, q)) <= 1e-10);
        }
      CHECK(std::abs(density_matrix(g, 0, 0).matrix(0, 0) - 1.0) <= 1e-12);
    }
  }
  const FockBasis b(2, 1, Statistics::fermion);
  CHECK_THROWS_AS(density_matrix(vacuum_state(b), 2, 0), PreconditionError);
}

TEST_CASE("trace law for pure N-body states") {
  std::mt19937_64 rng(3);
  for (auto stats : {Statistics::fermion, Statistics::boson}) {
    for (int n = 1; n <= 4; ++n) {
      const FockBasis b(stats == Statistics::fermion ? 5 : 3, n, stats);
      const auto g = random_sector_state(rng, b, n);
      for (int p = 0; p <= n; ++p)
        CHECK(std::abs(density_matrix(g, p, p).matrix.trace().real() - binomial(n, p)) <= 1e-10);
      CHECK(max_abs(density_matrix(g, n, n).matrix - g.block(n, n)) <= 1e-14);
    }
  }
}

TEST_CASE("one-body density of a two-body product") {
  std::mt19937_64 rng(4);
  for (auto stats : {Statistics::fermion, Statistics::boson}) {
    const FockBasis b(5, 2, stats);
    const CMat frame = oracle::random_frame(rng, 5, 2);
    const CVec psi = product_state(b, {frame.col(0), frame.col(1)});
    const CMat d1 = density_matrix(pure_sector_state(b, 2, psi), 1, 1).matrix;
    CHECK(max_abs(d1 - frame * frame.adjoint()) <= 1e-12);
  }
}

TEST_CASE("density matrix roundtrip") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto stats = t % 2 ? Statistics::boson : Statistics::fermion;
    const FockBasis b(3 + t % 3, 1 + t % 3, stats);
    const auto g = oracle::random_state(rng, b, 1 + t % 3);
    const auto back = blocks_from_density_matrices(density_table(g), b);
    CHECK(back.distance(g) <= 1e-10);
    const auto table = density_table(back);
    const auto orig = density_table(g);
    for (int p = 0; p <= b.max_particles(); ++p)
      for (int q = 0; q <= b.max_particles(); ++q)
        CHECK(max_abs(table[p][q].matrix - orig[p][q].matrix) <= 1e-10);
  }
}

TEST_CASE("vacuum table inverts to the vacuum") {
  const FockBasis b(3, 2, Statistics::boson);
  DensityTable t(3, std::vector<DensityMatrix>(3));
  for (int p = 0; p <= 2; ++p)
    for (int q = 0; q <= 2; ++q) t[p][q] = {p, q, CMat::Zero(b.sector_size(p), b.sector_size(q))};
  t[0][0].matrix(0, 0) = 1.0;
  CHECK(blocks_from_density_matrices(t, b).distance(vacuum_state(b)) == 0.0);
  t.pop_back();
  CHECK_THROWS_AS(blocks_from_density_matrices(t, b), PreconditionError);
}

TEST_CASE("second-to-top block from the two highest density matrices") {
  std::mt19937_64 rng(6);
  for (auto stats : {Statistics::fermion, Statistics::boson}) {
    const FockBasis b(3, 3, stats);
    const auto g = oracle::random_state(rng, b, 2);
    const int n = 3;
    const CMat dn = density_matrix(g, n, n).matrix;
    const CMat en = oracle::tensor_embedding(b, n);
    const CMat em = oracle::tensor_embedding(b, n - 1);
    const CMat ptr = em.adjoint() * oracle::partial_trace_last(en * dn * en.adjoint(), 3, n, n, 1) * em;
    const CMat expect = density_matrix(g, n - 1, n - 1).matrix - double(n) * ptr;
    CHECK(max_abs(g.block(n - 1, n - 1) - expect) <= 1e-10);
  }
}

TEST_CASE("trace-norm bound") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const auto stats = t % 2 ? Statistics::boson : Statistics::fermion;
    const FockBasis b(3, 1 + t % 3, stats);
    const auto g = oracle::random_state(rng, b, 2);
    const int n = b.max_particles();
    for (int p = 0; p <= n; ++p)
      for (int q = 0; q <= n; ++q)
        CHECK(trace_norm(density_matrix(g, p, q).matrix) <= density_matrix_trace_bound(n, p, q) + 1e-10);
  }
  CHECK(density_matrix_trace_bound(2, 0, 0) == doctest::Approx(3.0));
  CHECK(density_matrix_trace_bound(2, 1, 0) == doctest::Approx(1.0 + std::sqrt(2.0)));
}

TEST_CASE("number-commuting states have no off-diagonal density matrices") {
  std::mt19937_64 rng(8);
  const FockBasis b(4, 3, Statistics::fermion);
  const auto g = mixture({0.1, 0.2, 0.3, 0.4}, {vacuum_state(b), random_sector_state(rng, b, 1),
                                                 random_sector_state(rng, b, 2),
                                                 random_sector_state(rng, b, 3)});
  CHECK(g.commutes_with_number());
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; q <= 3; ++q)
      if (p != q) CHECK(max_abs(density_matrix(g, p, q).matrix) <= 1e-12);
  CHECK_FALSE(oracle::random_state(rng, b, 1).commutes_with_number(1e-12));
}

TEST_CASE("representability of diagonal tables") {
  std::mt19937_64 rng(9);
  const FockBasis b(4, 2, Statistics::fermion);
  const auto g = mixture({0.3, 0.7}, {random_sector_state(rng, b, 1), random_sector_state(rng, b, 2)});
  std::vector<CMat> ups;
  for (int m = 0; m <= 2; ++m) ups.push_back(density_matrix(g, m, m).matrix);
  const auto ok = is_representable(ups, b);
  CHECK(ok.representable);
  REQUIRE(ok.witness.has_value());
  CHECK(ok.witness->distance(g) <= 1e-12);

  auto bad = ups;
  bad[1] *= 2.0;
  const auto no = is_representable(bad, b);
  CHECK_FALSE(no.representable);
  CHECK(no.violated_index >= 0);
  CHECK(no.min_eigenvalue < -1e-10);
  CHECK_FALSE(no.witness.has_value());

  std::vector<CMat> vac{CMat::Ones(1, 1), CMat::Zero(4, 4), CMat::Zero(6, 6)};
  const auto v = is_representable(vac, b);
  CHECK(v.representable);
  CHECK(v.witness->distance(vacuum_state(b)) == 0.0);
  vac[0](0, 0) = 0.9;
  CHECK(is_representable(vac, b).violated_index == 0);
}

TEST_CASE("Loewdin support and natural orbitals") {
  std::mt19937_64 rng(10);
  const FockBasis f(5, 2, Statistics::fermion);
  const CMat frame = oracle::random_frame(rng, 5, 2);
  const auto slater = pure_sector_state(f, 2, product_state(f, {frame.col(0), frame.col(1)}));
  const auto ls = lowdin_support(slater);
  CHECK(ls.rank == 2);
  CHECK(max_abs(ls.projector - frame * frame.adjoint()) <= 1e-10);
  CHECK(ls.localization_defect <= 1e-8);
  const auto no = natural_orbitals(slater);
  CHECK(std::abs(no.occupations(0) - 1.0) <= 1e-10);
  CHECK(std::abs(no.occupations(1) - 1.0) <= 1e-10);
  CHECK(std::abs(no.occupations(2)) <= 1e-10);

  CHECK(lowdin_support(vacuum_state(f)).rank == 0);

  const FockBasis bos(4, 3, Statistics::boson);
  const CVec phi = oracle::random_unit(rng, 4);
  const auto hartree = pure_sector_state(bos, 3, tensor_power(bos, phi, 3));
  const auto lh = lowdin_support(hartree);
  CHECK(lh.rank == 1);
  CHECK(lh.localization_defect <= 1e-8);
  CHECK(std::abs(natural_orbitals(hartree).occupations(0) - 3.0) <= 1e-10);
  CHECK(natural_orbitals(hartree).occupations.sum() == doctest::Approx(3.0));
}

TEST_CASE("finite-rank expansion in natural orbitals") {
  std::mt19937_64 rng(11);
  const FockBasis f(6, 2, Statistics::fermion);
  for (int t = 0; t < 10; ++t) {
    // Two-fermion coefficient matrices are antisymmetric, so the rank is even:
    // three orbitals only carry Slater determinants, four carry rank 4.
    for (int k : {3, 4}) {
      const CMat frame = oracle::random_frame(rng, 6, k);
      const FockBasis small(k, 2, Statistics::fermion);
      const CVec psi = lift_sector(small, f, frame, 2) * oracle::random_unit(rng, small.sector_size(2));
      const auto g = pure_sector_state(f, 2, psi);
      const auto no = natural_orbitals(g);
      const int rank = k == 3 ? 2 : 4;
      CHECK(lowdin_support(g).rank == rank);
      CHECK(orbital_expansion_error(f, 2, psi, no.orbitals.leftCols(rank)) <= 1e-10);
      CHECK(orbital_expansion_error(f, 2, psi, no.orbitals.leftCols(rank - 1)) > 1e-3);
    }
  }
}

TEST_CASE("density profiles") {
  const auto space = build_lattice_space(1, 6, 3.0);
  const FockBasis b(6, 2, Statistics::fermion);
  const auto p0 = density_profile(vacuum_state(b), space);
  CHECK(p0.mass() == 0.0);
  const auto p1 = density_profile(pure_sector_state(b, 1, unit(6, 2)), space);
  CHECK(p1.rho[2] == doctest::Approx(2.0));  // 1 / h
  CHECK(p1.mass() == doctest::Approx(1.0));

  std::mt19937_64 rng(12);
  const CMat frame = oracle::random_frame(rng, 6, 2);
  const CVec psi = product_state(b, {frame.col(0), frame.col(1)});
  const auto p2 = density_profile(pure_sector_state(b, 2, psi), space);
  const auto p2v = density_profile(b, 2, psi, space);
  for (int x = 0; x < 6; ++x) {
    const double expect = (std::norm(frame(x, 0)) + std::norm(frame(x, 1))) / 0.5;
    CHECK(std::abs(p2.rho[x] - expect) <= 1e-12);
    CHECK(std::abs(p2v.rho[x] - expect) <= 1e-12);
  }
  CHECK(p2.mass() == doctest::Approx(2.0));
}

TEST_CASE("average particle number") {
  std::mt19937_64 rng(13);
  const FockBasis b(4, 3, Statistics::boson);
  CHECK(average_particle_number(vacuum_state(b)) == 0.0);
  CHECK(average_particle_number(random_sector_state(rng, b, 3)) == doctest::Approx(3.0));
  const auto mix = mixture({0.5, 0.5}, {vacuum_state(b), random_sector_state(rng, b, 2)});
  CHECK(average_particle_number(mix) == doctest::Approx(1.0));
  const auto g = oracle::random_state(rng, b, 3);
  double direct = 0.0;
  const auto w = g.sector_weights();
  for (int m = 0; m <= 3; ++m) direct += m * w[m];
  CHECK(std::abs(average_particle_number(g) - direct) <= 1e-12);
}

TEST_CASE("state text format roundtrip") {
  std::mt19937_64 rng(14);
  const FockBasis b(3, 2, Statistics::boson);
  const auto g = oracle::random_state(rng, b, 2);
  std::stringstream ss;
  write_state(g, ss);
  const auto back = read_state(ss);
  CHECK(back.distance(g) == 0.0);
  CHECK(back.basis().statistics() == Statistics::boson);
  std::stringstream junk("state fermion 3");
  CHECK_THROWS_AS(read_state(junk), PreconditionError);

  std::stringstream csv;
  write_density_table_csv(density_table(vacuum_state(b)), csv);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "p,q,row,col,re,im");
}

}  // TEST_SUITE
