#include "geofock/fock.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <ostream>

namespace geofock {

namespace {

void enumerate_fermion(int r, int n, int start, Configuration& cur,
                       std::vector<Configuration>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  for (int m = start; m < r; ++m) {
    cur.push_back(m);
    enumerate_fermion(r, n, m + 1, cur, out);
    cur.pop_back();
  }
}

void enumerate_boson(int r, int n, int start, Configuration& cur,
                     std::vector<Configuration>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  for (int m = start; m < r; ++m) {
    cur.push_back(m);
    enumerate_boson(r, n, m, cur, out);
    cur.pop_back();
  }
}

double boson_norm(const Configuration& c) {
  double v = 1.0;
  std::size_t i = 0;
  while (i < c.size()) {
    std::size_t j = i;
    while (j < c.size() && c[j] == c[i]) ++j;
    v *= std::tgamma(static_cast<double>(j - i) + 1.0);
    i = j;
  }
  return std::sqrt(v);
}

}  // namespace

FockBasis::FockBasis(int r, int n_max, Statistics stats) {
  require(r >= 1, "fock basis: need at least one mode");
  require(n_max >= 0, "fock basis: negative particle number");
  require(stats == Statistics::boson || n_max <= r,
          "fock basis: fermionic N exceeds the number of modes");
  auto impl = std::make_shared<Impl>();
  impl->r = r;
  impl->n_max = n_max;
  impl->stats = stats;
  impl->sectors.resize(n_max + 1);
  impl->offsets.assign(1, 0);
  for (int n = 0; n <= n_max; ++n) {
    Configuration cur;
    if (stats == Statistics::fermion)
      enumerate_fermion(r, n, 0, cur, impl->sectors[n]);
    else
      enumerate_boson(r, n, 0, cur, impl->sectors[n]);
    impl->offsets.push_back(impl->offsets.back() + static_cast<int>(impl->sectors[n].size()));
    for (const auto& c : impl->sectors[n])
      impl->norms.push_back(stats == Statistics::boson ? boson_norm(c) : 1.0);
  }
  impl_ = std::move(impl);
}

FockBasis enumerate_basis(int r, int n_max, Statistics stats) {
  return FockBasis(r, n_max, stats);
}

int FockBasis::sector_of(int global) const {
  const auto& off = impl_->offsets;
  require(global >= 0 && global < off.back(), "fock basis: index out of range");
  return static_cast<int>(std::upper_bound(off.begin(), off.end(), global) - off.begin()) - 1;
}

int FockBasis::find(const Configuration& c) const {
  const int n = static_cast<int>(c.size());
  if (n > impl_->n_max) return -1;
  const auto& sec = impl_->sectors[n];
  auto it = std::lower_bound(sec.begin(), sec.end(), c);
  if (it == sec.end() || *it != c) return -1;
  return static_cast<int>(it - sec.begin());
}

double FockBasis::norm_factor(int n, int local) const {
  return impl_->norms[impl_->offsets[n] + local];
}

std::optional<std::pair<int, double>> FockBasis::create(int mode, int n, int local) const {
  if (n >= impl_->n_max) return std::nullopt;
  const Configuration& c = impl_->sectors[n][local];
  const auto lo = std::lower_bound(c.begin(), c.end(), mode);
  const auto hi = std::upper_bound(c.begin(), c.end(), mode);
  double coeff;
  if (is_fermionic()) {
    if (lo != hi) return std::nullopt;
    coeff = ((lo - c.begin()) % 2 == 0) ? 1.0 : -1.0;
  } else {
    coeff = std::sqrt(static_cast<double>(hi - lo) + 1.0);
  }
  Configuration next;
  next.reserve(c.size() + 1);
  next.insert(next.end(), c.begin(), hi);
  next.push_back(mode);
  next.insert(next.end(), hi, c.end());
  return std::make_pair(find(next), coeff);
}

std::optional<std::pair<int, double>> FockBasis::annihilate(int mode, int n, int local) const {
  if (n == 0) return std::nullopt;
  const Configuration& c = impl_->sectors[n][local];
  const auto lo = std::lower_bound(c.begin(), c.end(), mode);
  const auto hi = std::upper_bound(c.begin(), c.end(), mode);
  if (lo == hi) return std::nullopt;
  double coeff;
  if (is_fermionic())
    coeff = ((lo - c.begin()) % 2 == 0) ? 1.0 : -1.0;
  else
    coeff = std::sqrt(static_cast<double>(hi - lo));
  Configuration next(c.begin(), lo);
  next.insert(next.end(), lo + 1, c.end());
  return std::make_pair(find(next), coeff);
}

// ---------------------------------------------------------------------------

std::vector<std::vector<SplitEntry>> split_table(const FockBasis& basis, int m, int p) {
  require(m >= 0 && m <= basis.max_particles() && p >= 0 && p <= m,
          "split table: sector indices out of range");
  const int k = m - p;
  std::vector<std::vector<SplitEntry>> table(basis.sector_size(k));
  const bool fermi = basis.is_fermionic();
  Configuration merged;
  for (int kk = 0; kk < basis.sector_size(k); ++kk) {
    const Configuration& K = basis.configuration(k, kk);
    for (int ii = 0; ii < basis.sector_size(p); ++ii) {
      const Configuration& I = basis.configuration(p, ii);
      merged.clear();
      std::merge(I.begin(), I.end(), K.begin(), K.end(), std::back_inserter(merged));
      double coeff;
      if (fermi) {
        if (std::adjacent_find(merged.begin(), merged.end()) != merged.end()) continue;
        long inversions = 0;
        for (int i : I)
          inversions += std::lower_bound(K.begin(), K.end(), i) - K.begin();
        coeff = (inversions % 2 == 0) ? 1.0 : -1.0;
      } else {
        coeff = boson_norm(merged) / (boson_norm(I) * boson_norm(K));
      }
      const int s = basis.find(merged);
      table[kk].push_back({ii, s, coeff});
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

FockOperator::FockOperator(FockBasis basis, Sparse matrix, SectorStructure structure)
    : basis_(std::move(basis)), matrix_(std::move(matrix)), structure_(structure) {
  require(matrix_.rows() == basis_.dimension() && matrix_.cols() == basis_.dimension(),
          "fock operator: matrix does not match the basis dimension");
  matrix_.makeCompressed();
}

CMat FockOperator::block(int m, int n) const {
  return CMat(matrix_.block(basis_.sector_offset(m), basis_.sector_offset(n),
                            basis_.sector_size(m), basis_.sector_size(n)));
}

FockOperator FockOperator::adjoint() const {
  SectorStructure s = structure_;
  if (s == SectorStructure::raising) s = SectorStructure::lowering;
  else if (s == SectorStructure::lowering) s = SectorStructure::raising;
  return FockOperator(basis_, Sparse(matrix_.adjoint()), s);
}

bool FockOperator::structure_consistent() const {
  if (structure_ == SectorStructure::general) return true;
  const int shift = structure_ == SectorStructure::raising ? 1
                    : structure_ == SectorStructure::lowering ? -1 : 0;
  for (int col = 0; col < matrix_.outerSize(); ++col)
    for (Sparse::InnerIterator it(matrix_, col); it; ++it)
      if (it.value() != cplx(0.0) &&
          basis_.sector_of(static_cast<int>(it.row())) != basis_.sector_of(col) + shift)
        return false;
  return true;
}

namespace {
SectorStructure combine_sum(SectorStructure a, SectorStructure b) {
  return a == b ? a : SectorStructure::general;
}
SectorStructure combine_product(SectorStructure a, SectorStructure b) {
  using S = SectorStructure;
  if (a == S::number_conserving) return b;
  if (b == S::number_conserving) return a;
  if ((a == S::raising && b == S::lowering) || (a == S::lowering && b == S::raising))
    return S::number_conserving;
  return S::general;
}
}  // namespace

FockOperator FockOperator::operator+(const FockOperator& o) const {
  require(basis_.same_space(o.basis_), "fock operator: basis mismatch");
  return FockOperator(basis_, Sparse(matrix_ + o.matrix_), combine_sum(structure_, o.structure_));
}

FockOperator FockOperator::operator*(const FockOperator& o) const {
  require(basis_.same_space(o.basis_), "fock operator: basis mismatch");
  return FockOperator(basis_, Sparse(matrix_ * o.matrix_),
                      combine_product(structure_, o.structure_));
}

FockOperator FockOperator::operator*(cplx s) const {
  return FockOperator(basis_, Sparse(matrix_ * s), structure_);
}

// ---------------------------------------------------------------------------

CVec vacuum(const FockBasis& basis) {
  CVec v = CVec::Zero(basis.dimension());
  v(0) = 1.0;
  return v;
}

CVec embed_sector(const FockBasis& basis, int n, const CVec& psi) {
  require(n >= 0 && n <= basis.max_particles(), "embed: sector out of range");
  require(psi.size() == basis.sector_size(n), "embed: vector size does not match the sector");
  CVec v = CVec::Zero(basis.dimension());
  v.segment(basis.sector_offset(n), psi.size()) = psi;
  return v;
}

CVec sector_part(const FockBasis& basis, int n, const CVec& full) {
  require(full.size() == basis.dimension(), "sector_part: vector size mismatch");
  return full.segment(basis.sector_offset(n), basis.sector_size(n));
}

namespace {

void check_orbital(const FockBasis& basis, const CVec& f) {
  require(f.size() == basis.modes(), "one-body vector has the wrong number of modes");
}

// a^dagger(f) applied to a sector-n coefficient vector.
CVec create_in_sector(const FockBasis& basis, const CVec& f, int n, const CVec& v) {
  CVec out = CVec::Zero(basis.sector_size(n + 1));
  for (int s = 0; s < v.size(); ++s) {
    if (v(s) == cplx(0.0)) continue;
    for (int j = 0; j < basis.modes(); ++j) {
      if (f(j) == cplx(0.0)) continue;
      if (auto hit = basis.create(j, n, s)) out(hit->first) += f(j) * hit->second * v(s);
    }
  }
  return out;
}

CVec create_mode_in_sector(const FockBasis& basis, int mode, int n, const CVec& v) {
  CVec out = CVec::Zero(basis.sector_size(n + 1));
  for (int s = 0; s < v.size(); ++s) {
    if (v(s) == cplx(0.0)) continue;
    if (auto hit = basis.create(mode, n, s)) out(hit->first) += hit->second * v(s);
  }
  return out;
}

}  // namespace

FockOperator creation(const FockBasis& basis, const CVec& f) {
  check_orbital(basis, f);
  std::vector<Eigen::Triplet<cplx>> trips;
  for (int n = 0; n < basis.max_particles(); ++n)
    for (int s = 0; s < basis.sector_size(n); ++s)
      for (int j = 0; j < basis.modes(); ++j) {
        if (f(j) == cplx(0.0)) continue;
        if (auto hit = basis.create(j, n, s))
          trips.emplace_back(basis.sector_offset(n + 1) + hit->first, basis.sector_offset(n) + s,
                             f(j) * hit->second);
      }
  FockOperator::Sparse m(basis.dimension(), basis.dimension());
  m.setFromTriplets(trips.begin(), trips.end());
  return FockOperator(basis, std::move(m), SectorStructure::raising);
}

FockOperator annihilation(const FockBasis& basis, const CVec& f) {
  return creation(basis, f).adjoint();
}

FockOperator identity_operator(const FockBasis& basis) {
  FockOperator::Sparse m(basis.dimension(), basis.dimension());
  m.setIdentity();
  return FockOperator(basis, std::move(m), SectorStructure::number_conserving);
}

FockOperator number_operator(const FockBasis& basis) {
  return second_quantize_onebody(
      basis, {CMat::Identity(basis.modes(), basis.modes()), "identity"});
}

double car_ccr_residual(const FockBasis& basis, const CVec& f, const CVec& g) {
  check_orbital(basis, f);
  check_orbital(basis, g);
  const CMat af = annihilation(basis, f).dense();
  const CMat ag = annihilation(basis, g).dense();
  const CMat cf = af.adjoint();
  const CMat cg = ag.adjoint();
  const double s = basis.is_fermionic() ? 1.0 : -1.0;
  const CMat id = CMat::Identity(basis.dimension(), basis.dimension());
  const CMat r1 = ag * cf + s * cf * ag - g.dot(f) * id;
  const CMat r2 = cf * cg + s * cg * cf;
  const CMat r3 = af * ag + s * ag * af;
  // Truncation at N only spoils the relations on the top sector, unless the
  // fermionic space is complete (N = r).
  const bool complete = basis.is_fermionic() && basis.max_particles() == basis.modes();
  const int cols = complete ? basis.dimension() : basis.sector_offset(basis.max_particles());
  if (cols == 0) return 0.0;
  return operator_norm(r1.leftCols(cols)) + operator_norm(r2.leftCols(cols)) +
         operator_norm(r3.leftCols(cols));
}

FockOperator second_quantize_onebody(const FockBasis& basis, const OneBodyOperator& a) {
  require(a.matrix.rows() == basis.modes() && a.matrix.cols() == basis.modes(),
          "second quantization: operator size does not match the basis");
  std::vector<Eigen::Triplet<cplx>> trips;
  const int r = basis.modes();
  for (int n = 1; n <= basis.max_particles(); ++n) {
    const int off = basis.sector_offset(n);
    for (int s = 0; s < basis.sector_size(n); ++s) {
      const Configuration& c = basis.configuration(n, s);
      for (std::size_t q = 0; q < c.size(); ++q) {
        if (q > 0 && c[q] == c[q - 1]) continue;
        const int j = c[q];
        auto down = basis.annihilate(j, n, s);
        for (int i = 0; i < r; ++i) {
          const cplx aij = a.matrix(i, j);
          if (aij == cplx(0.0)) continue;
          auto up = basis.create(i, n - 1, down->first);
          if (!up) continue;
          trips.emplace_back(off + up->first, off + s, aij * down->second * up->second);
        }
      }
    }
  }
  FockOperator::Sparse m(basis.dimension(), basis.dimension());
  m.setFromTriplets(trips.begin(), trips.end());
  return FockOperator(basis, std::move(m), SectorStructure::number_conserving);
}

FockOperator second_quantize_twobody(const FockBasis& basis, const TwoBodyKernel& w) {
  require(w.modes() == basis.modes(), "second quantization: kernel size does not match");
  require(w.statistics() == basis.statistics(), "second quantization: statistics mismatch");
  // Nonzero rows of each kernel column.
  const int np = w.pair_count();
  std::vector<std::vector<std::pair<int, cplx>>> column(np);
  for (int q = 0; q < np; ++q)
    for (int p = 0; p < np; ++p)
      if (w.tensor()(p, q) != cplx(0.0)) column[q].emplace_back(p, w.tensor()(p, q));

  std::vector<Eigen::Triplet<cplx>> trips;
  for (int n = 2; n <= basis.max_particles(); ++n) {
    const int off = basis.sector_offset(n);
    for (int s = 0; s < basis.sector_size(n); ++s) {
      const Configuration& c = basis.configuration(n, s);
      for (std::size_t a = 0; a < c.size(); ++a) {
        if (a > 0 && c[a] == c[a - 1]) continue;
        const int k = c[a];
        auto d1 = basis.annihilate(k, n, s);
        const Configuration& c1 = basis.configuration(n - 1, d1->first);
        for (std::size_t b = 0; b < c1.size(); ++b) {
          if (b > 0 && c1[b] == c1[b - 1]) continue;
          const int l = c1[b];
          if (l < k) continue;
          auto d2 = basis.annihilate(l, n - 1, d1->first);
          const double down = d1->second * d2->second;
          for (const auto& [p, wv] : column[w.pair_index(k, l)]) {
            const auto [i, j] = w.pair_modes(p);
            auto u1 = basis.create(j, n - 2, d2->first);
            if (!u1) continue;
            auto u2 = basis.create(i, n - 1, u1->first);
            if (!u2) continue;
            trips.emplace_back(off + u2->first, off + s, wv * down * u1->second * u2->second);
          }
        }
      }
    }
  }
  FockOperator::Sparse m(basis.dimension(), basis.dimension());
  m.setFromTriplets(trips.begin(), trips.end());
  return FockOperator(basis, std::move(m), SectorStructure::number_conserving);
}

FockOperator assemble_hamiltonian(const FockBasis& basis, const OneBodyOperator& h,
                                  const TwoBodyKernel& w) {
  require(hermiticity_defect(h.matrix) <= 1e-12, "hamiltonian: one-body part is not Hermitian");
  return second_quantize_onebody(basis, h) + second_quantize_twobody(basis, w);
}

CVec wedge(const FockBasis& basis, int n1, const CVec& psi1, int n2, const CVec& psi2) {
  require(n1 >= 0 && n2 >= 0, "wedge: negative particle number");
  require(n1 + n2 <= basis.max_particles(), "wedge: particle number exceeds the truncation");
  require(psi1.size() == basis.sector_size(n1) && psi2.size() == basis.sector_size(n2),
          "wedge: vector sizes do not match their sectors");
  CVec out = CVec::Zero(basis.sector_size(n1 + n2));
  for (int s = 0; s < psi1.size(); ++s) {
    if (psi1(s) == cplx(0.0)) continue;
    const Configuration& c = basis.configuration(n1, s);
    CVec v = psi2;
    int n = n2;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = create_mode_in_sector(basis, *it, n++, v);
    out += psi1(s) / basis.norm_factor(n1, s) * v;
  }
  return out;
}

CVec product_state(const FockBasis& basis, const std::vector<CVec>& orbitals) {
  const int n = static_cast<int>(orbitals.size());
  require(n <= basis.max_particles(), "product state: too many orbitals");
  CVec v = CVec::Ones(1);
  for (int k = n - 1; k >= 0; --k) {
    check_orbital(basis, orbitals[k]);
    v = create_in_sector(basis, orbitals[k], n - 1 - k, v);
  }
  const double nv = v.norm();
  if (nv < 1e-14) throw ComputationError("product state: orbitals are linearly dependent");
  return v / nv;
}

CVec tensor_power(const FockBasis& basis, const CVec& f, int n) {
  check_orbital(basis, f);
  require(n >= 0 && n <= basis.max_particles(), "tensor power: sector out of range");
  CVec v = CVec::Ones(1);
  for (int k = 0; k < n; ++k) v = create_in_sector(basis, f, k, v) / std::sqrt(k + 1.0);
  return v;
}

double poisson_tail(double norm_sq, int n_max) {
  double term = std::exp(-norm_sq);
  double head = term;
  for (int n = 1; n <= n_max; ++n) {
    term *= norm_sq / n;
    head += term;
  }
  return std::max(0.0, 1.0 - head);
}

CoherentState weyl_coherent_state(const FockBasis& basis, const CVec& f, double max_tail) {
  require(!basis.is_fermionic(), "coherent states need a bosonic basis");
  check_orbital(basis, f);
  const double tail = poisson_tail(f.squaredNorm(), basis.max_particles());
  if (tail > max_tail)
    throw ComputationError("coherent state: truncated Poisson tail " + std::to_string(tail) +
                           " exceeds tolerance");
  const CMat cf = creation(basis, f).dense();
  const CMat x = cplx(0.0, 1.0) * (cf - cf.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(x);
  const CVec phases = (cplx(0.0, -1.0) * es.eigenvalues().cast<cplx>()).array().exp();
  const CVec omega = vacuum(basis);
  CVec v = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * omega));
  v /= v.norm();
  return {v, tail};
}

void write_operator_coo(const FockOperator& op, std::ostream& out) {
  const auto& b = op.basis();
  out.precision(17);
  out << "# modes " << b.modes() << " max_particles " << b.max_particles() << ' '
      << to_string(b.statistics()) << '\n';
  for (int col = 0; col < op.matrix().outerSize(); ++col)
    for (FockOperator::Sparse::InnerIterator it(op.matrix(), col); it; ++it) {
      const int row = static_cast<int>(it.row());
      const int rs = b.sector_of(row);
      const int cs = b.sector_of(col);
      out << rs << ' ' << row - b.sector_offset(rs) << ' ' << cs << ' '
          << col - b.sector_offset(cs) << ' ' << it.value().real() << ' ' << it.value().imag()
          << '\n';
    }
}

}  // namespace geofock
