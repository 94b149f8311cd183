#include "geofock/sequences.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace geofock {

namespace {

void require_1d_lattice(const OneBodySpace& space, const char* what) {
  require(space.basis_kind() == BasisKind::position_lattice && space.geometry().dim == 1, what);
}

void require_unit(const CVec& v, const char* what) {
  require(std::abs(v.norm() - 1.0) <= 1e-10, what);
}

// Unnormalized a^dagger(f_1) ... a^dagger(f_n) Omega in sector n.
CVec raw_product(const FockBasis& basis, const std::vector<CVec>& orbitals) {
  CVec v = vacuum(basis);
  for (auto it = orbitals.rbegin(); it != orbitals.rend(); ++it) v = creation(basis, *it).matrix() * v;
  return sector_part(basis, static_cast<int>(orbitals.size()), v);
}

MixedState conjugate_by_lift(const MixedState& g, const CMat& u) {
  const FockBasis& basis = g.basis();
  const int n = basis.max_particles();
  std::vector<CMat> lifts;
  for (int m = 0; m <= n; ++m) lifts.push_back(lift_sector(basis, basis, u, m));
  MixedState::Blocks out(n + 1, std::vector<CMat>(n + 1));
  for (int m = 0; m <= n; ++m)
    for (int c = 0; c <= n; ++c) out[m][c] = lifts[m] * g.block(m, c) * lifts[c].adjoint();
  return MixedState::trusted(basis, std::move(out));
}

MixedState::Blocks zero_blocks(const FockBasis& basis) {
  const int n = basis.max_particles();
  MixedState::Blocks b(n + 1, std::vector<CMat>(n + 1));
  for (int m = 0; m <= n; ++m)
    for (int c = 0; c <= n; ++c) b[m][c] = CMat::Zero(basis.sector_size(m), basis.sector_size(c));
  return b;
}

CVec escaping_partner(const OneBodySpace& space, const CVec& phi, const CVec& escaping, int n) {
  const CVec moved = translate(space, escaping, n);
  CVec perp = moved - phi.dot(moved) * phi;
  const double nv = perp.norm();
  require(nv > 1e-8, "escaping sequence: translate is parallel to the fixed orbital");
  return perp / nv;
}

}  // namespace

CVec bump_orbital(const OneBodySpace& space, int center_site, int half_width) {
  require_1d_lattice(space, "bump: 1D position lattice required");
  require(half_width >= 1, "bump: half width must be positive");
  const int r = space.modes();
  require(center_site - half_width + 1 >= 0 && center_site + half_width - 1 < r,
          "bump: support leaves the box");
  CVec v = CVec::Zero(r);
  for (int i = center_site - half_width + 1; i < center_site + half_width; ++i) {
    const double c = std::cos(0.5 * M_PI * (i - center_site) / half_width);
    v(i) = c * c;
  }
  return v / v.norm();
}

CVec translate(const OneBodySpace& space, const CVec& v, int shift) {
  require_1d_lattice(space, "translate: 1D position lattice required");
  const int r = space.modes();
  require(v.size() == r, "translate: vector size mismatch");
  const bool periodic = space.geometry().boundary == Boundary::periodic;
  CVec out = CVec::Zero(r);
  for (int i = 0; i < r; ++i) {
    if (v(i) == cplx(0.0)) continue;
    int j = i + shift;
    if (periodic)
      j = ((j % r) + r) % r;
    else
      require(j >= 0 && j < r, "translate: support leaves the box");
    out(j) = v(i);
  }
  return out;
}

bool supported_in(const CVec& v, int first, int last, double tol) {
  for (int i = 0; i < v.size(); ++i)
    if ((i < first || i > last) && std::abs(v(i)) > tol) return false;
  return true;
}

MixedState escaping_product_state(const OneBodySpace& space, const CVec& phi,
                                  const CVec& escaping, int n, Statistics stats) {
  require_unit(phi, "escaping sequence: fixed orbital must be normalized");
  const FockBasis basis(space.modes(), 2, stats);
  return pure_sector_state(basis, 2, product_state(basis, {phi, escaping_partner(space, phi, escaping, n)}));
}

StateSequence escaping_product_sequence(const OneBodySpace& space, const CVec& phi,
                                        const CVec& escaping, Statistics stats) {
  require_unit(phi, "escaping sequence: fixed orbital must be normalized");
  const FockBasis basis(space.modes(), 2, stats);
  auto limit = zero_blocks(basis);
  limit[1][1] = phi * phi.adjoint();
  StateSequence seq{basis, nullptr, MixedState::trusted(basis, std::move(limit)),
                    "two-body product with one escaping orbital"};
  seq.generator = [space, phi, escaping, basis](int n) {
    return pure_sector_state(basis, 2, product_state(basis, {phi, escaping_partner(space, phi, escaping, n)}));
  };
  return seq;
}

std::function<CVec(int)> splitting_family(const OneBodySpace& space, const CVec& phi,
                                          const CVec& escaping) {
  const double t = phi.squaredNorm();
  require(t <= 1.0 + 1e-12, "splitting family: weak limit has norm above one");
  return [space, phi, escaping, t](int n) -> CVec {
    const CVec moved = translate(space, escaping, n);
    CVec perp = moved;
    if (t > 0.0) perp -= phi.dot(moved) / t * phi;
    const double nv = perp.norm();
    require(nv > 1e-8, "splitting family: translate is parallel to the weak limit");
    return phi + std::sqrt(std::max(0.0, 1.0 - t)) * perp / nv;
  };
}

StateSequence hartree_sequence(const FockBasis& basis, std::function<CVec(int)> family,
                               const CVec& weak_limit) {
  require(!basis.is_fermionic(), "hartree sequence: bosonic basis required");
  const int n = basis.max_particles();
  const double t = weak_limit.squaredNorm();
  require(t <= 1.0 + 1e-12, "hartree sequence: weak limit has norm above one");
  auto limit = zero_blocks(basis);
  for (int k = 0; k <= n; ++k) {
    const CVec pk = tensor_power(basis, weak_limit, k);
    limit[k][k] = binomial(n, k) * std::pow(std::max(0.0, 1.0 - t), n - k) * (pk * pk.adjoint());
  }
  StateSequence seq{basis, nullptr, MixedState::trusted(basis, std::move(limit)), "Hartree states"};
  seq.generator = [basis, family, n](int i) {
    const CVec f = family(i);
    require_unit(f, "hartree sequence: member orbital must be normalized");
    return pure_sector_state(basis, n, tensor_power(basis, f, n));
  };
  return seq;
}

const char* to_string(LimitKind k) {
  switch (k) {
    case LimitKind::strong: return "strong";
    case LimitKind::vacuum: return "vacuum";
    case LimitKind::intermediate: return "intermediate";
  }
  return "?";
}

HartreeFockSequence hf_escaping_sequence(const OneBodySpace& space, const CMat& kept,
                                         const CMat& escaping) {
  const int r = space.modes();
  const int n1 = static_cast<int>(kept.cols());
  const int n2 = static_cast<int>(escaping.cols());
  require(n1 + n2 >= 1, "hf sequence: no orbitals");
  require((n1 == 0 || kept.rows() == r) && (n2 == 0 || escaping.rows() == r),
          "hf sequence: orbital size mismatch");
  const FockBasis basis(r, n1 + n2, Statistics::fermion);

  MixedState limit = vacuum_state(basis);
  if (n1 > 0) {
    std::vector<CVec> orbs;
    for (int j = 0; j < n1; ++j) orbs.push_back(kept.col(j));
    limit = pure_sector_state(basis, n1, product_state(basis, orbs));
  }
  const LimitKind kind = n2 == 0 ? LimitKind::strong : (n1 == 0 ? LimitKind::vacuum : LimitKind::intermediate);
  StateSequence seq{basis, nullptr, limit, "Slater determinants with escaping orbitals"};
  seq.generator = [space, kept, escaping, basis, n1, n2](int n) {
    CMat all(kept.rows() > 0 ? kept.rows() : escaping.rows(), n1 + n2);
    if (n1 > 0) all.leftCols(n1) = kept;
    for (int j = 0; j < n2; ++j) all.col(n1 + j) = translate(space, escaping.col(j), n);
    const CMat gram = all.adjoint() * all;
    require((gram - CMat::Identity(n1 + n2, n1 + n2)).cwiseAbs().maxCoeff() <= 1e-8,
            "hf sequence: orbitals are not orthonormal");
    std::vector<CVec> orbs;
    for (int j = 0; j < n1 + n2; ++j) orbs.push_back(all.col(j));
    return pure_sector_state(basis, n1 + n2, product_state(basis, orbs));
  };
  return {std::move(seq), kind};
}

CMat free_propagator(const OneBodySpace& space, double t) {
  Eigen::SelfAdjointEigenSolver<CMat> es(kinetic_operator(space).matrix);
  CVec phase(es.eigenvalues().size());
  for (int i = 0; i < phase.size(); ++i) phase(i) = std::exp(cplx(0.0, -t * es.eigenvalues()(i)));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

StateSequence free_evolution_sequence(const OneBodySpace& space, const MixedState& gamma0,
                                      std::vector<double> times) {
  require(gamma0.basis().modes() == space.modes(), "free evolution: basis does not match the space");
  require(!times.empty(), "free evolution: empty time list");
  StateSequence seq{gamma0.basis(), nullptr, vacuum_state(gamma0.basis()), "free evolution"};
  seq.generator = [space, gamma0, times](int n) {
    require(n >= 0 && n < static_cast<int>(times.size()), "free evolution: time index out of range");
    return conjugate_by_lift(gamma0, free_propagator(space, times[n]));
  };
  return seq;
}

std::vector<CVec> product_test_vectors(const FockBasis& basis,
                                       const std::vector<CVec>& onebody_tests, int p) {
  require(p >= 0 && p <= basis.max_particles(), "test vectors: sector out of range");
  if (p == 0) return {CVec::Ones(1)};
  const int m = static_cast<int>(onebody_tests.size());
  std::vector<CVec> out;
  std::vector<int> idx(p, 0);
  if (basis.is_fermionic())
    for (int i = 0; i < p; ++i) idx[i] = i;
  if (basis.is_fermionic() && p > m) return out;
  while (true) {
    std::vector<CVec> orbs;
    for (int i : idx) orbs.push_back(onebody_tests[i]);
    const CVec v = raw_product(basis, orbs);
    if (v.norm() > 1e-12) out.push_back(v / v.norm());
    // next combination (strict for fermions, with repetition for bosons)
    int k = p - 1;
    const bool strict = basis.is_fermionic();
    while (k >= 0 && idx[k] == (strict ? m - p + k : m - 1)) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < p; ++j) idx[j] = strict ? idx[j - 1] + 1 : idx[k];
  }
  return out;
}

ConvergenceReport geometric_convergence_report(const StateSequence& seq,
                                               const std::vector<CVec>& onebody_tests,
                                               const std::vector<int>& n_values,
                                               int trace_distance_cap) {
  require(seq.declared_limit.has_value(), "convergence report: sequence has no declared limit");
  require(!n_values.empty(), "convergence report: empty index list");
  const FockBasis& basis = seq.basis;
  const int nmax = basis.max_particles();
  const MixedState& limit = *seq.declared_limit;

  std::vector<std::vector<CVec>> tests;
  for (int p = 0; p <= nmax; ++p) tests.push_back(product_test_vectors(basis, onebody_tests, p));
  std::vector<std::vector<CMat>> limit_dm(nmax + 1, std::vector<CMat>(nmax + 1));
  for (int p = 0; p <= nmax; ++p)
    for (int q = 0; q <= nmax; ++q) limit_dm[p][q] = density_matrix(limit, p, q).matrix;

  ConvergenceReport rep;
  rep.n_values = n_values;
  rep.limit_particle_number = average_particle_number(limit);
  const bool with_td = basis.dimension() <= trace_distance_cap;
  for (int n : n_values) {
    const MixedState g = seq.at(n);
    double worst = 0.0;
    for (int p = 0; p <= nmax; ++p)
      for (int q = 0; q <= nmax; ++q) {
        const CMat diff = density_matrix(g, p, q).matrix - limit_dm[p][q];
        double dev = 0.0;
        for (const auto& a : tests[p])
          for (const auto& b : tests[q]) dev = std::max(dev, std::abs(a.dot(diff * b)));
        rep.rows.push_back({n, p, q, dev});
        worst = std::max(worst, dev);
      }
    rep.max_deviation.push_back(worst);
    rep.particle_number.push_back(average_particle_number(g));
    if (with_td) rep.trace_distance.push_back(g.trace_distance(limit));
  }
  rep.final_deviation = rep.max_deviation.back();

  const double floor = 1e-16;
  if (*std::max_element(rep.max_deviation.begin(), rep.max_deviation.end()) <= 1e-14) {
    rep.trend = "zero";
  } else {
    const int m = static_cast<int>(n_values.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
      const double x = n_values[i], y = std::log10(rep.max_deviation[i] + floor);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double den = m * sxx - sx * sx;
    rep.trend_slope = den > 0 ? (m * sxy - sx * sy) / den : 0.0;
    rep.trend = rep.trend_slope < -1e-3 ? "decreasing" : (rep.trend_slope > 1e-3 ? "increasing" : "flat");
  }
  const double nmin = *std::min_element(rep.particle_number.begin(), rep.particle_number.end());
  rep.lower_semicontinuous = rep.limit_particle_number <= nmin + 1e-10;
  return rep;
}

void write_convergence_csv(const ConvergenceReport& r, std::ostream& out) {
  char buf[128];
  out << "n,p,q,deviation\n";
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g\n", row.n, row.p, row.q, row.deviation);
    out << buf;
  }
}

void write_convergence_summary(const ConvergenceReport& r, const std::string& description,
                               std::ostream& out) {
  nlohmann::json j;
  j["description"] = description;
  j["n_values"] = r.n_values;
  j["max_deviation"] = r.max_deviation;
  j["final_deviation"] = r.final_deviation;
  j["trend"] = r.trend;
  j["trend_slope"] = r.trend_slope;
  j["particle_number"] = r.particle_number;
  j["limit_particle_number"] = r.limit_particle_number;
  j["lower_semicontinuous"] = r.lower_semicontinuous;
  if (!r.trace_distance.empty()) j["trace_distance"] = r.trace_distance;
  out << j.dump(2) << "\n";
}

double concentration_function(const DensityProfile& profile, const OneBodySpace& space, double radius) {
  require(radius > 0.0, "concentration: radius must be positive");
  const int r = space.modes();
  require(static_cast<int>(profile.rho.size()) == r, "concentration: profile size mismatch");
  double best = 0.0;
  for (int x = 0; x < r; ++x) {
    double s = 0.0;
    for (int y = 0; y < r; ++y) {
      const auto d = space.displacement(y, x);
      if (std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) <= radius + 1e-12) s += profile.rho[y];
    }
    best = std::max(best, s * profile.cell_volume);
  }
  return best;
}

ConcentrationReport concentration_report(const std::vector<DensityProfile>& profiles,
                                         const std::vector<int>& n_values,
                                         const OneBodySpace& space,
                                         const std::vector<double>& radii) {
  require(profiles.size() == n_values.size() && !profiles.empty(),
          "concentration report: one profile per index required");
  ConcentrationReport rep{radii, n_values, {}, {}};
  for (const auto& p : profiles) {
    std::vector<double> row;
    for (double rad : radii) row.push_back(concentration_function(p, space, rad));
    rep.values.push_back(std::move(row));
  }
  for (std::size_t k = 0; k < radii.size(); ++k) {
    bool nonincreasing = true;
    for (std::size_t i = 1; i < rep.values.size(); ++i)
      if (rep.values[i][k] > rep.values[i - 1][k] + 1e-12) nonincreasing = false;
    const bool dropped = rep.values.back()[k] < rep.values.front()[k] * (1.0 - 1e-6);
    rep.trend.push_back(nonincreasing && dropped ? "decaying" : "non-decaying");
  }
  return rep;
}

CMat translation_operator(const OneBodySpace& space, const std::array<int, 3>& shift) {
  require(space.basis_kind() == BasisKind::position_lattice, "translation: position lattice required");
  require(space.geometry().boundary == Boundary::periodic,
          "translation: exact translations need a periodic box");
  const int r = space.modes();
  const int n = space.geometry().points;
  const int d = space.geometry().dim;
  CMat t = CMat::Zero(r, r);
  for (int s = 0; s < r; ++s) {
    auto idx = space.site_index(s);
    for (int a = 0; a < d; ++a) idx[a] = ((idx[a] + shift[a]) % n + n) % n;
    t(space.site_from_index(idx), s) = 1.0;
  }
  return t;
}

}  // namespace geofock
