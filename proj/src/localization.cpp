#include "geofock/localization.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace geofock {

namespace {

// Lift of B on one sector, kept diagonal when B is.
struct SectorLift {
  bool diagonal = false;
  CVec diag;
  CMat dense;

  CMat left(const CMat& x) const { return diagonal ? CMat(diag.asDiagonal() * x) : CMat(dense * x); }
  CMat right_adjoint(const CMat& x) const {
    return diagonal ? CMat(x * diag.conjugate().asDiagonal()) : CMat(x * dense.adjoint());
  }
};

SectorLift lift_for(const FockBasis& basis, const CMat& b, int n) {
  SectorLift l;
  l.diagonal = b.isDiagonal(0.0);
  CMat full = lift_sector(basis, basis, b, n);
  if (l.diagonal)
    l.diag = full.diagonal();
  else
    l.dense = std::move(full);
  return l;
}

void check_localizer(const FockBasis& basis, const LocalizationOperator& b) {
  require(b.modes() == basis.modes(), "localization: localizer does not match the one-body space");
}

// Phi(I, K) with psi = sum_{I,K} Phi(I,K) e_I (x) e_K, I in sector k.
CMat split_amplitudes(const FockBasis& basis, int n, const CVec& psi, int k) {
  const auto table = split_table(basis, n, k);
  CMat phi = CMat::Zero(basis.sector_size(k), basis.sector_size(n - k));
  for (std::size_t kk = 0; kk < table.size(); ++kk)
    for (const auto& e : table[kk]) phi(e.head, kk) += e.coefficient * psi(e.whole);
  return phi;
}

}  // namespace

MixedState localize_via_formula(const MixedState& state, const LocalizationOperator& b) {
  const FockBasis& basis = state.basis();
  check_localizer(basis, b);
  const int n = basis.max_particles();
  std::vector<SectorLift> lifts;
  for (int p = 0; p <= n; ++p) lifts.push_back(lift_for(basis, b.B(), p));
  DensityTable table(n + 1, std::vector<DensityMatrix>(n + 1));
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      const CMat d = density_matrix(state, p, q).matrix;
      table[p][q] = {p, q, lifts[q].right_adjoint(lifts[p].left(d))};
    }
  return blocks_from_density_matrices(table, basis, false);
}

MixedState localize_via_doubling(const MixedState& state, const LocalizationOperator& b,
                                 int max_doubled_modes) {
  const FockBasis& basis = state.basis();
  check_localizer(basis, b);
  const int r = basis.modes();
  const int n = basis.max_particles();
  require(2 * r <= max_doubled_modes, "doubling: doubled one-body dimension exceeds the cap");
  const FockBasis big(2 * r, n, basis.statistics());
  CMat iso(2 * r, r);
  iso.topRows(r) = b.B();
  iso.bottomRows(r) = b.isometry_complement();

  std::vector<CMat> lifts;
  for (int m = 0; m <= n; ++m) lifts.push_back(lift_sector(basis, big, iso, m));

  // Group doubled configurations by their second-copy part.
  struct Entry {
    int sector;  // in the doubled space
    int local;
    int k;       // particles in the first copy
    int first;   // index of the first-copy part in basis sector k
  };
  std::map<Configuration, std::vector<Entry>> groups;
  for (int m = 0; m <= n; ++m)
    for (int s = 0; s < big.sector_size(m); ++s) {
      const Configuration& c = big.configuration(m, s);
      Configuration first, second;
      for (int mode : c) {
        if (mode < r)
          first.push_back(mode);
        else
          second.push_back(mode - r);
      }
      const int k = static_cast<int>(first.size());
      groups[second].push_back({m, s, k, basis.find(first)});
    }

  MixedState::Blocks lifted(n + 1, std::vector<CMat>(n + 1));
  for (int m = 0; m <= n; ++m)
    for (int c = 0; c <= n; ++c) lifted[m][c] = lifts[m] * state.block(m, c) * lifts[c].adjoint();

  MixedState::Blocks out(n + 1, std::vector<CMat>(n + 1));
  for (int k = 0; k <= n; ++k)
    for (int l = 0; l <= n; ++l) out[k][l] = CMat::Zero(basis.sector_size(k), basis.sector_size(l));
  for (const auto& [second, entries] : groups)
    for (const auto& a : entries)
      for (const auto& e : entries)
        out[a.k][e.k](a.first, e.first) += lifted[a.sector][e.sector](a.local, e.local);
  return MixedState::trusted(basis, std::move(out));
}

LocalizedDecomposition localize_nbody(const FockBasis& basis, const CVec& psi,
                                      const LocalizationOperator& b) {
  check_localizer(basis, b);
  const int n = basis.max_particles();
  require(psi.size() == basis.sector_size(n), "localize: vector is not in the top sector");
  require(std::abs(psi.norm() - 1.0) <= 1e-10, "localize: vector is not normalized");
  MixedState::Blocks blocks(n + 1, std::vector<CMat>(n + 1));
  std::vector<double> weights;
  for (int k = 0; k <= n; ++k) {
    for (int l = 0; l <= n; ++l)
      if (l != k) blocks[k][l] = CMat::Zero(basis.sector_size(k), basis.sector_size(l));
    const CMat phi = split_amplitudes(basis, n, psi, k);
    const CMat lb = lift_sector(basis, basis, b.B(), k);
    const CMat lc = lift_sector(basis, basis, b.isometry_complement(), n - k);
    const CMat phib = lb * phi * lc.transpose();
    blocks[k][k] = phib * phib.adjoint();
    weights.push_back(blocks[k][k].trace().real());
  }
  return {MixedState::trusted(basis, std::move(blocks)), weights,
          std::vector<int>(n + 1, -1)};
}

double trace_complementarity_check(const FockBasis& basis, const CVec& psi,
                                   const LocalizationOperator& b) {
  const auto w = localize_nbody(basis, psi, b).sector_weights;
  const auto wc = localize_nbody(basis, psi, b.complement_localizer()).sector_weights;
  const int n = basis.max_particles();
  double dev = 0.0;
  for (int k = 0; k <= n; ++k) dev = std::max(dev, std::abs(w[k] - wc[n - k]));
  return dev;
}

double trace_complementarity_check(const MixedState& state, const LocalizationOperator& b) {
  const FockBasis& basis = state.basis();
  const int n = basis.max_particles();
  for (int m = 0; m < n; ++m)
    require(state.block(m, m).size() == 0 || state.block(m, m).cwiseAbs().maxCoeff() <= 1e-14,
            "trace complementarity: state is not an N-body state");
  Eigen::SelfAdjointEigenSolver<CMat> es(state.block(n, n));
  std::vector<double> w(n + 1, 0.0), wc(n + 1, 0.0);
  const LocalizationOperator bc = b.complement_localizer();
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam <= 0.0) continue;
    const CVec v = es.eigenvectors().col(i);
    const auto a = localize_nbody(basis, v, b).sector_weights;
    const auto c = localize_nbody(basis, v, bc).sector_weights;
    for (int k = 0; k <= n; ++k) {
      w[k] += lam * a[k];
      wc[k] += lam * c[k];
    }
  }
  double dev = 0.0;
  for (int k = 0; k <= n; ++k) dev = std::max(dev, std::abs(w[k] - wc[n - k]));
  return dev;
}

double composition_check(const MixedState& state, const LocalizationOperator& b1,
                         const LocalizationOperator& b2) {
  const MixedState twice = localize_via_formula(localize_via_formula(state, b1), b2);
  const MixedState once = localize_via_formula(state, LocalizationOperator(b2.B() * b1.B(), 1e-10));
  return twice.distance(once);
}

RankCertificate finite_rank_localization_structure(const FockBasis& basis, const CVec& psi,
                                                   int rank, const LocalizationOperator& b,
                                                   double threshold) {
  require(basis.is_fermionic(), "rank certificate: fermionic state required");
  check_localizer(basis, b);
  const int n = basis.max_particles();
  require(psi.size() == basis.sector_size(n), "rank certificate: vector is not in the top sector");

  // Loewdin support of psi.
  Eigen::SelfAdjointEigenSolver<CMat> es(one_body_density(basis, n, psi));
  std::vector<int> keep;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > threshold) keep.push_back(i);
  const int s = static_cast<int>(keep.size());
  require(s <= rank, "rank certificate: state has rank above the declared bound");
  CMat frame(basis.modes(), s);
  for (int i = 0; i < s; ++i) frame.col(i) = es.eigenvectors().col(keep[i]);

  // Gauge: make the localized orbitals B phi_l mutually orthogonal.
  Eigen::SelfAdjointEigenSolver<CMat> gauge((b.B() * frame).adjoint() * (b.B() * frame));
  const CMat rotated = frame * gauge.eigenvectors();
  const RVec d = gauge.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);

  const FockBasis small(s, n, Statistics::fermion);
  const CVec coeff = lift_sector(small, basis, rotated, n).adjoint() * psi;

  const auto reference = localize_nbody(basis, psi, b);
  RankCertificate cert;
  cert.holds = true;
  const CMat brot = b.B() * rotated;
  for (int k = 0; k <= n; ++k) {
    cert.rank_bound.push_back(rank - n + k);
    cert.weights.push_back(reference.sector_weights[k]);
    const CMat phi = split_amplitudes(small, n, coeff, k);
    const CMat lift_b = lift_sector(small, basis, brot, k);
    CMat recon = CMat::Zero(basis.sector_size(k), basis.sector_size(k));
    int worst = 0;
    for (int kk = 0; kk < small.sector_size(n - k); ++kk) {
      double w = 1.0;
      for (int l : small.configuration(n - k, kk)) w *= 1.0 - d(l);
      const CVec comp = lift_b * phi.col(kk);
      const double mass = w * comp.squaredNorm();
      recon += w * comp * comp.adjoint();
      if (mass <= threshold) continue;
      Eigen::SelfAdjointEigenSolver<CMat> occ(one_body_density(basis, k, comp / comp.norm()),
                                              Eigen::EigenvaluesOnly);
      int rk = 0;
      for (int i = 0; i < occ.eigenvalues().size(); ++i)
        if (occ.eigenvalues()(i) > threshold) ++rk;
      worst = std::max(worst, rk);
    }
    cert.certified_rank.push_back(worst);
    cert.reconstruction_error = std::max(
        cert.reconstruction_error, (recon - reference.result.block(k, k)).cwiseAbs().maxCoeff());
    if (worst > cert.rank_bound.back()) cert.holds = false;
  }
  if (cert.reconstruction_error > 1e-9) cert.holds = false;
  return cert;
}

void write_localization_csv(const LocalizedDecomposition& d, std::ostream& out) {
  char buf[96];
  out << "sector,weight,certified_rank\n";
  for (std::size_t k = 0; k < d.sector_weights.size(); ++k) {
    const int rk = k < d.certified_ranks.size() ? d.certified_ranks[k] : -1;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d\n", k, d.sector_weights[k], rk);
    out << buf;
  }
}

}  // namespace geofock
