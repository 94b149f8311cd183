#include <cmath>
#include <sstream>

#include "doctest.h"
#include "geofock/localization.hpp"
#include "geofock/sequences.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace geofock;

namespace {

double max_abs(const CMat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Bumps inside sites [0, 23] of a 64-site box.
std::vector<CVec> window_tests(const OneBodySpace& s) {
  return {bump_orbital(s, 6, 3), bump_orbital(s, 10, 4), bump_orbital(s, 16, 5)};
}

}  // namespace

TEST_SUITE("sequences") {

TEST_CASE("bumps and translates") {
  const auto s = build_lattice_space(1, 16, 16.0);
  const CVec b = bump_orbital(s, 5, 3);
  CHECK(std::abs(b.norm() - 1.0) <= 1e-14);
  CHECK(supported_in(b, 3, 7));
  CHECK_FALSE(supported_in(b, 4, 7));
  const CVec t = translate(s, b, 4);
  CHECK(supported_in(t, 7, 11));
  CHECK(std::abs(t(9) - b(5)) == 0.0);
  CHECK_THROWS_AS(translate(s, b, 10), PreconditionError);
  CHECK_THROWS_AS(bump_orbital(s, 1, 3), PreconditionError);
  const auto p = build_lattice_space(1, 16, 16.0, Boundary::periodic);
  CHECK(std::abs(translate(p, b, 16).dot(b) - 1.0) <= 1e-14);
}

TEST_CASE("escaping product sequence") {
  const auto s = build_lattice_space(1, 64, 64.0);
  const CVec phi = bump_orbital(s, 10, 5);
  const CVec esc = bump_orbital(s, 12, 4);
  for (auto stats : {Statistics::fermion, Statistics::boson}) {
    const auto g0 = escaping_product_state(s, phi, esc, 0, stats);
    const auto w = g0.sector_weights();
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 0.0);
    CHECK(w[2] == doctest::Approx(1.0));

    const auto seq = escaping_product_sequence(s, phi, esc, stats);
    const auto rep = geometric_convergence_report(seq, window_tests(s), {0, 16, 32});
    CHECK(rep.final_deviation <= 1e-6);
    CHECK(rep.max_deviation.front() > 1e-2);
    CHECK(rep.lower_semicontinuous);
    CHECK(rep.limit_particle_number == doctest::Approx(1.0));
    CHECK(rep.trend == "decreasing");

    // [Gamma_n]^{(1)} -> |phi><phi| and [Gamma_n]^{(2)} -> 0 against the window tests
    const CMat d1 = density_matrix(seq.at(32), 1, 1).matrix;
    for (const auto& a : window_tests(s))
      for (const auto& b : window_tests(s))
        CHECK(std::abs(a.dot(d1 * b) - a.dot(phi) * phi.dot(b)) <= 1e-12);
  }
  CHECK_THROWS_AS(escaping_product_state(s, phi, esc, 60, Statistics::fermion), PreconditionError);
  CHECK_THROWS_AS(escaping_product_state(s, phi, phi, 0, Statistics::fermion), PreconditionError);
}

TEST_CASE("strong convergence tracks particle number") {
  const auto s = build_lattice_space(1, 24, 24.0);
  const CVec phi = bump_orbital(s, 5, 3);
  const auto seq = escaping_product_sequence(s, phi, bump_orbital(s, 5, 4), Statistics::fermion);
  const auto rep = geometric_convergence_report(seq, {bump_orbital(s, 4, 3)}, {0, 6, 12}, 1000);
  REQUIRE(rep.trace_distance.size() == 3);
  // one particle lost: no trace-norm convergence
  CHECK(rep.trace_distance.back() >= 1.0);
  CHECK(rep.particle_number.back() - rep.limit_particle_number == doctest::Approx(1.0));

  const FockBasis b(24, 2, Statistics::boson);
  const auto constant = hartree_sequence(b, [phi](int) { return phi; }, phi);
  const auto rc = geometric_convergence_report(constant, {phi}, {0, 1, 2}, 1000);
  CHECK(rc.trend == "zero");
  CHECK(rc.trace_distance.back() <= 1e-12);
  CHECK(rc.particle_number.back() == doctest::Approx(rc.limit_particle_number));
}

TEST_CASE("Hartree sequences and their binomial limits") {
  const auto s = build_lattice_space(1, 32, 32.0);
  const FockBasis b(32, 2, Statistics::boson);
  const CVec bump = bump_orbital(s, 6, 3);
  const CVec half = std::sqrt(0.5) * bump;
  const auto seq = hartree_sequence(b, splitting_family(s, half, bump_orbital(s, 6, 4)), half);
  const auto w = seq.declared_limit->sector_weights();
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[1] == doctest::Approx(0.5));
  CHECK(w[2] == doctest::Approx(0.25));
  const auto rep = geometric_convergence_report(seq, {bump_orbital(s, 5, 3), bump_orbital(s, 8, 3)},
                                                {0, 10, 20});
  CHECK(rep.final_deviation <= 1e-10);
  CHECK(rep.max_deviation.front() > 1e-2);
  CHECK(rep.lower_semicontinuous);

  const auto vac = hartree_sequence(b, splitting_family(s, CVec::Zero(32), bump), CVec::Zero(32));
  CHECK(vac.declared_limit->distance(vacuum_state(b)) == 0.0);
  CHECK_THROWS_AS(hartree_sequence(FockBasis(4, 2, Statistics::fermion), nullptr, CVec::Zero(4)),
                  PreconditionError);
}

TEST_CASE("Hartree-Fock escaping sequences") {
  const auto s = build_lattice_space(1, 32, 32.0);
  CMat kept(32, 1), esc(32, 1), none(32, 0);
  kept.col(0) = bump_orbital(s, 5, 3);
  esc.col(0) = bump_orbital(s, 11, 3);
  const std::vector<CVec> tests{bump_orbital(s, 5, 4), bump_orbital(s, 9, 4)};

  const auto strong = hf_escaping_sequence(s, kept, none);
  CHECK(strong.kind == LimitKind::strong);
  CHECK(geometric_convergence_report(strong.sequence, tests, {0, 5}).trend == "zero");

  const auto gone = hf_escaping_sequence(s, none, esc);
  CHECK(gone.kind == LimitKind::vacuum);
  CHECK(gone.sequence.declared_limit->distance(vacuum_state(gone.sequence.basis)) == 0.0);

  const auto mid = hf_escaping_sequence(s, kept, esc);
  CHECK(mid.kind == LimitKind::intermediate);
  const auto w = mid.sequence.declared_limit->sector_weights();
  CHECK(w[1] == doctest::Approx(1.0));
  const auto rep = geometric_convergence_report(mid.sequence, tests, {0, 8, 16});
  CHECK(rep.final_deviation <= 1e-10);
  CHECK(rep.lower_semicontinuous);
  CHECK(std::string(to_string(mid.kind)) == "intermediate");

  CMat overlap(32, 1);
  overlap.col(0) = bump_orbital(s, 6, 3);
  const auto bad = hf_escaping_sequence(s, kept, overlap);
  CHECK_THROWS_AS(bad.sequence.at(0), PreconditionError);
}

TEST_CASE("free evolution") {
  std::mt19937_64 rng(3);
  const auto s = build_lattice_space(1, 5, 5.0);
  const FockBasis b(5, 2, Statistics::fermion);
  const auto g0 = oracle::random_state(rng, b, 2);
  const std::vector<double> times{0.0, 0.7, 3.1, 11.0};
  const auto seq = free_evolution_sequence(s, g0, times);
  CHECK(seq.at(0).distance(g0) <= 1e-13);
  for (int i = 0; i < 4; ++i) {
    const auto g = seq.at(i);
    CHECK(std::abs(average_particle_number(g) - average_particle_number(g0)) <= 1e-12);
    const CMat u = free_propagator(s, times[i]);
    for (int p = 0; p <= 2; ++p)
      for (int q = 0; q <= 2; ++q) {
        const CMat ep = oracle::tensor_embedding(b, p), eq = oracle::tensor_embedding(b, q);
        const CMat expect = ep.adjoint() * oracle::tensor_power(u, p) * ep * density_matrix(g0, p, q).matrix *
                            eq.adjoint() * oracle::tensor_power(u, q).adjoint() * eq;
        CHECK(max_abs(density_matrix(g, p, q).matrix - expect) <= 1e-10);
      }
  }
  const CMat u = free_propagator(s, 1.3);
  CHECK(max_abs(u * u.adjoint() - CMat::Identity(5, 5)) <= 1e-12);
  CHECK_THROWS_AS(seq.at(4), PreconditionError);
}

TEST_CASE("local compactness under a window") {
  const auto s = build_lattice_space(1, 32, 32.0);
  const CVec phi = bump_orbital(s, 6, 3);
  const auto seq = escaping_product_sequence(s, phi, bump_orbital(s, 7, 3), Statistics::fermion);
  std::vector<double> chi(32, 0.0);
  for (int i = 0; i < 14; ++i) chi[i] = i < 10 ? 1.0 : 0.5;
  const auto loc = window_localizer(s, chi);
  const auto limit = localize_via_formula(*seq.declared_limit, loc);
  const double far = localize_via_formula(seq.at(16), loc).trace_distance(limit);
  const double near = localize_via_formula(seq.at(0), loc).trace_distance(limit);
  CHECK(far <= 1e-6);
  CHECK(near > 1e-2);
}

TEST_CASE("convergence report output") {
  const auto s = build_lattice_space(1, 8, 8.0);
  const CVec phi = bump_orbital(s, 3, 2);
  const FockBasis b(8, 1, Statistics::boson);
  const auto seq = hartree_sequence(b, [phi](int) { return phi; }, phi);
  const auto rep = geometric_convergence_report(seq, {phi}, {1, 2});
  std::stringstream csv, js;
  write_convergence_csv(rep, csv);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "n,p,q,deviation");
  std::getline(csv, line);
  CHECK(line == "1,0,0,0");
  write_convergence_summary(rep, "constant", js);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j["trend"] == "zero");
  CHECK(j["lower_semicontinuous"] == true);

  StateSequence bare{b, seq.generator, std::nullopt, "no limit"};
  CHECK_THROWS_AS(geometric_convergence_report(bare, {phi}, {1}), PreconditionError);
}

TEST_CASE("product test vectors") {
  const auto s = build_lattice_space(1, 8, 8.0);
  const std::vector<CVec> t{bump_orbital(s, 2, 2), bump_orbital(s, 4, 2), bump_orbital(s, 6, 2)};
  CHECK(product_test_vectors(FockBasis(8, 2, Statistics::fermion), t, 2).size() == 3);
  CHECK(product_test_vectors(FockBasis(8, 2, Statistics::boson), t, 2).size() == 6);
  CHECK(product_test_vectors(FockBasis(8, 2, Statistics::boson), t, 0).size() == 1);
  for (const auto& v : product_test_vectors(FockBasis(8, 3, Statistics::fermion), t, 3))
    CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
}

TEST_CASE("concentration function") {
  const auto s = build_lattice_space(1, 20, 10.0);  // h = 0.5
  DensityProfile delta{std::vector<double>(20, 0.0), 0.5};
  delta.rho[7] = 2.0;
  CHECK(concentration_function(delta, s, 0.5) == doctest::Approx(1.0));
  DensityProfile flat{std::vector<double>(20, 0.1), 0.5};
  // radius 1 covers 5 sites around an interior centre
  CHECK(concentration_function(flat, s, 1.0) == doctest::Approx(5.0 / 20.0 * flat.mass()));
  CHECK_THROWS_AS(concentration_function(flat, s, 0.0), PreconditionError);

  // spreading Gaussians at fixed radius
  std::vector<DensityProfile> profiles;
  std::vector<int> ns;
  for (int n = 1; n <= 4; ++n) {
    DensityProfile p{std::vector<double>(20, 0.0), 0.5};
    double mass = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double x = s.site_position(i)[0];
      p.rho[i] = std::exp(-x * x / (2.0 * n * n));
      mass += p.rho[i] * 0.5;
    }
    for (auto& r : p.rho) r /= mass;
    profiles.push_back(p);
    ns.push_back(n);
  }
  const auto rep = concentration_report(profiles, ns, s, {0.5, 1.0});
  CHECK(rep.trend == std::vector<std::string>{"decaying", "decaying"});
  for (std::size_t i = 1; i < ns.size(); ++i) CHECK(rep.values[i][0] < rep.values[i - 1][0]);
}

TEST_CASE("translations on a periodic lattice") {
  const auto s = build_lattice_space(1, 6, 6.0, Boundary::periodic);
  CHECK(max_abs(translation_operator(s, {0, 0, 0}) - CMat::Identity(6, 6)) == 0.0);
  CHECK(max_abs(translation_operator(s, {6, 0, 0}) - CMat::Identity(6, 6)) == 0.0);
  CHECK_THROWS_AS(translation_operator(build_lattice_space(1, 6, 6.0), {1, 0, 0}), PreconditionError);

  for (auto stats : {Statistics::fermion, Statistics::boson}) {
    const FockBasis b(6, 2, stats);
    const auto h = assemble_hamiltonian(b, kinetic_operator(s), two_body_kernel(s, soft_coulomb_pair(s), stats));
    const CMat t = translation_operator(s, {2, 0, 0});
    const CMat lt = lift_operator(b, t).dense();
    const CMat hd = h.dense();
    CHECK(max_abs(lt * hd * lt.adjoint() - hd) <= 1e-10);
  }
  const auto s2 = build_lattice_space(2, 3, 3.0, Boundary::periodic);
  const CMat t2 = translation_operator(s2, {1, 2, 0});
  CHECK(max_abs(t2 * t2.adjoint() - CMat::Identity(9, 9)) == 0.0);
  const CMat k2 = kinetic_operator(s2).matrix;
  CHECK(max_abs(t2 * k2 * t2.adjoint() - k2) <= 1e-14);
}

}  // TEST_SUITE
