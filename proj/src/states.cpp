#include "geofock/states.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "geofock/localization.hpp"

namespace geofock {

namespace {

void check_block_shapes(const FockBasis& basis, const MixedState::Blocks& blocks) {
  const int n = basis.max_particles();
  require(static_cast<int>(blocks.size()) == n + 1, "state: wrong number of block rows");
  for (int a = 0; a <= n; ++a) {
    require(static_cast<int>(blocks[a].size()) == n + 1, "state: wrong number of block columns");
    for (int b = 0; b <= n; ++b)
      require(blocks[a][b].rows() == basis.sector_size(a) &&
                  blocks[a][b].cols() == basis.sector_size(b),
              "state: block shape does not match the sectors");
  }
}

MixedState::Blocks zero_blocks(const FockBasis& basis) {
  const int n = basis.max_particles();
  MixedState::Blocks b(n + 1, std::vector<CMat>(n + 1));
  for (int a = 0; a <= n; ++a)
    for (int c = 0; c <= n; ++c) b[a][c] = CMat::Zero(basis.sector_size(a), basis.sector_size(c));
  return b;
}

}  // namespace

MixedState::MixedState(FockBasis basis, Blocks blocks, Unchecked)
    : basis_(std::move(basis)), blocks_(std::move(blocks)) {
  check_block_shapes(basis_, blocks_);
}

MixedState::MixedState(FockBasis basis, Blocks blocks, double psd_tol)
    : MixedState(std::move(basis), std::move(blocks), Unchecked{}) {
  const int n = max_particles();
  double herm = 0.0;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b)
      if (blocks_[a][b].size() > 0)
        herm = std::max(herm, (blocks_[a][b] - blocks_[b][a].adjoint()).cwiseAbs().maxCoeff());
  require(herm <= 1e-10, "state: blocks are not Hermitian");
  require(std::abs(trace() - 1.0) <= 1e-12, "state: trace differs from one");
  require(min_eigenvalue() >= -psd_tol, "state: operator is not positive");
}

MixedState MixedState::trusted(FockBasis basis, Blocks blocks) {
  return MixedState(std::move(basis), std::move(blocks), Unchecked{});
}

CMat MixedState::assembled() const {
  CMat out(basis_.dimension(), basis_.dimension());
  for (int a = 0; a <= max_particles(); ++a)
    for (int b = 0; b <= max_particles(); ++b)
      out.block(basis_.sector_offset(a), basis_.sector_offset(b), basis_.sector_size(a),
                basis_.sector_size(b)) = blocks_[a][b];
  return out;
}

double MixedState::trace() const {
  double t = 0.0;
  for (int a = 0; a <= max_particles(); ++a) t += blocks_[a][a].trace().real();
  return t;
}

double MixedState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMat> es(assembled(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

std::vector<double> MixedState::sector_weights() const {
  std::vector<double> w;
  for (int a = 0; a <= max_particles(); ++a) w.push_back(blocks_[a][a].trace().real());
  return w;
}

bool MixedState::commutes_with_number(double tol) const {
  for (int a = 0; a <= max_particles(); ++a)
    for (int b = 0; b <= max_particles(); ++b)
      if (a != b && blocks_[a][b].size() > 0 && blocks_[a][b].cwiseAbs().maxCoeff() > tol)
        return false;
  return true;
}

double MixedState::distance(const MixedState& other) const {
  require(basis_.same_space(other.basis_), "state distance: basis mismatch");
  double d = 0.0;
  for (int a = 0; a <= max_particles(); ++a)
    for (int b = 0; b <= max_particles(); ++b)
      if (blocks_[a][b].size() > 0)
        d = std::max(d, (blocks_[a][b] - other.blocks_[a][b]).cwiseAbs().maxCoeff());
  return d;
}

double MixedState::trace_distance(const MixedState& other) const {
  require(basis_.same_space(other.basis_), "state distance: basis mismatch");
  const CMat diff = assembled() - other.assembled();
  Eigen::SelfAdjointEigenSolver<CMat> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double DensityProfile::mass() const {
  double m = 0.0;
  for (double v : rho) m += v;
  return m * cell_volume;
}

// ---------------------------------------------------------------------------

MixedState pure_state(const FockBasis& basis, const CVec& psi) {
  require(psi.size() == basis.dimension(), "pure state: vector size does not match the basis");
  require(std::abs(psi.norm() - 1.0) <= 1e-10, "pure state: vector is not normalized");
  auto blocks = zero_blocks(basis);
  const int n = basis.max_particles();
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b)
      blocks[a][b] = sector_part(basis, a, psi) * sector_part(basis, b, psi).adjoint();
  return MixedState::trusted(basis, std::move(blocks));
}

MixedState pure_sector_state(const FockBasis& basis, int n, const CVec& psi) {
  require(std::abs(psi.norm() - 1.0) <= 1e-10, "pure state: vector is not normalized");
  require(psi.size() == basis.sector_size(n), "pure state: vector does not match the sector");
  auto blocks = zero_blocks(basis);
  blocks[n][n] = psi * psi.adjoint();
  return MixedState::trusted(basis, std::move(blocks));
}

MixedState mixture(const std::vector<double>& weights, const std::vector<MixedState>& states) {
  require(!states.empty() && weights.size() == states.size(), "mixture: size mismatch");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "mixture: negative weight");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "mixture: weights do not sum to one");
  auto blocks = zero_blocks(states[0].basis());
  for (std::size_t i = 0; i < states.size(); ++i) {
    require(states[i].basis().same_space(states[0].basis()), "mixture: basis mismatch");
    for (std::size_t a = 0; a < blocks.size(); ++a)
      for (std::size_t b = 0; b < blocks.size(); ++b) blocks[a][b] += weights[i] * states[i].block(a, b);
  }
  return MixedState::trusted(states[0].basis(), std::move(blocks));
}

MixedState vacuum_state(const FockBasis& basis) {
  auto blocks = zero_blocks(basis);
  blocks[0][0](0, 0) = 1.0;
  return MixedState::trusted(basis, std::move(blocks));
}

// ---------------------------------------------------------------------------

CMat reduce_block(const FockBasis& basis, const CMat& x, int m, int n, int j) {
  require(j >= 0 && j <= std::min(m, n), "reduce: particle count out of range");
  require(x.rows() == basis.sector_size(m) && x.cols() == basis.sector_size(n),
          "reduce: block shape mismatch");
  if (j == 0) return x;
  const auto left = split_table(basis, m, m - j);
  const auto right = split_table(basis, n, n - j);
  CMat out = CMat::Zero(basis.sector_size(m - j), basis.sector_size(n - j));
  for (std::size_t k = 0; k < left.size(); ++k) {
    const auto& lk = left[k];
    const auto& rk = right[k];
    for (const auto& b : rk) {
      const auto col = x.col(b.whole);
      for (const auto& a : lk) out(a.head, b.head) += a.coefficient * b.coefficient * col(a.whole);
    }
  }
  return out;
}

DensityMatrix density_matrix(const MixedState& state, int p, int q) {
  const int n = state.max_particles();
  require(p >= 0 && q >= 0 && p <= n && q <= n, "density matrix: (p,q) out of range");
  const FockBasis& basis = state.basis();
  CMat d = CMat::Zero(basis.sector_size(p), basis.sector_size(q));
  for (int k = 0; p + k <= n && q + k <= n; ++k)
    d += reduce_block(basis, state.block(p + k, q + k), p + k, q + k, k);
  return {p, q, d};
}

namespace {

// Normalized creation string C_I / n_I as a full-space matrix.
CMat creation_string(const FockBasis& basis, int p, int idx) {
  CMat c = CMat::Identity(basis.dimension(), basis.dimension());
  for (int mode : basis.configuration(p, idx)) {
    CVec e = CVec::Zero(basis.modes());
    e(mode) = 1.0;
    c = c * creation(basis, e).dense();
  }
  return c / basis.norm_factor(p, idx);
}

}  // namespace

DensityMatrix density_matrix_ladder(const MixedState& state, int p, int q) {
  const FockBasis& basis = state.basis();
  const int n = state.max_particles();
  require(p >= 0 && q >= 0 && p <= n && q <= n, "density matrix: (p,q) out of range");
  const CMat gamma = state.assembled();
  std::vector<CMat> ci;
  for (int i = 0; i < basis.sector_size(p); ++i) ci.push_back(creation_string(basis, p, i));
  CMat d(basis.sector_size(p), basis.sector_size(q));
  for (int j = 0; j < basis.sector_size(q); ++j) {
    const CMat gj = gamma * creation_string(basis, q, j);
    // tr(Gamma C_J C_I^*) = sum_ab (Gamma C_J)_ab conj((C_I)_ab)
    for (int i = 0; i < basis.sector_size(p); ++i) d(i, j) = ci[i].conjugate().cwiseProduct(gj).sum();
  }
  return {p, q, d};
}

DensityTable density_table(const MixedState& state) {
  const int n = state.max_particles();
  DensityTable t(n + 1, std::vector<DensityMatrix>(n + 1));
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) t[p][q] = density_matrix(state, p, q);
  return t;
}

double density_matrix_trace_bound(int n_max, int p, int q) {
  double s = 0.0;
  for (int j = 0; p + j <= n_max && q + j <= n_max; ++j)
    s += std::sqrt(binomial(p + j, p) * binomial(q + j, q));
  return s;
}

MixedState blocks_from_density_matrices(const DensityTable& table, const FockBasis& basis,
                                        bool validate) {
  const int n = basis.max_particles();
  require(static_cast<int>(table.size()) == n + 1, "density table: incomplete");
  for (int p = 0; p <= n; ++p) {
    require(static_cast<int>(table[p].size()) == n + 1, "density table: incomplete");
    for (int q = 0; q <= n; ++q)
      require(table[p][q].matrix.rows() == basis.sector_size(p) &&
                  table[p][q].matrix.cols() == basis.sector_size(q),
              "density table: entry shape mismatch");
  }
  auto blocks = zero_blocks(basis);
  for (int m = 0; m <= n; ++m)
    for (int c = 0; c <= n; ++c) {
      CMat g = table[m][c].matrix;
      for (int j = 1; m + j <= n && c + j <= n; ++j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        g += sign * reduce_block(basis, table[m + j][c + j].matrix, m + j, c + j, j);
      }
      blocks[m][c] = g;
    }
  if (validate) return MixedState(basis, std::move(blocks));
  return MixedState::trusted(basis, std::move(blocks));
}

RepresentabilityResult is_representable(const std::vector<CMat>& diagonal,
                                        const FockBasis& basis, double tol) {
  const int n = basis.max_particles();
  require(static_cast<int>(diagonal.size()) == n + 1, "representability: incomplete table");
  for (int m = 0; m <= n; ++m) {
    require(diagonal[m].rows() == basis.sector_size(m) && diagonal[m].cols() == basis.sector_size(m),
            "representability: entry shape mismatch");
    require(hermiticity_defect(diagonal[m]) <= 1e-10, "representability: entry not Hermitian");
  }
  RepresentabilityResult res;
  if (std::abs(diagonal[0](0, 0) - 1.0) > tol) {
    res.violated_index = 0;
    return res;
  }
  auto blocks = zero_blocks(basis);
  res.min_eigenvalue = 1.0;
  for (int m = 0; m <= n; ++m) {
    CMat g = diagonal[m];
    for (int j = m + 1; j <= n; ++j) {
      const double sign = ((j - m) % 2 == 0) ? 1.0 : -1.0;
      g += sign * reduce_block(basis, diagonal[j], j, j, j - m);
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    res.min_eigenvalue = std::min(res.min_eigenvalue, lo);
    if (lo < -tol) {
      res.violated_index = m;
      return res;
    }
    blocks[m][m] = g;
  }
  res.representable = true;
  res.witness = MixedState::trusted(basis, std::move(blocks));
  return res;
}

// ---------------------------------------------------------------------------

NaturalOrbitals natural_orbitals(const MixedState& state) {
  const CMat d1 = density_matrix(state, 1, 1).matrix;
  Eigen::SelfAdjointEigenSolver<CMat> es(d1);
  const int r = static_cast<int>(d1.rows());
  NaturalOrbitals out{RVec(r), CMat(r, r)};
  for (int i = 0; i < r; ++i) {
    out.occupations(i) = es.eigenvalues()(r - 1 - i);
    out.orbitals.col(i) = es.eigenvectors().col(r - 1 - i);
  }
  return out;
}

LowdinSupport lowdin_support(const MixedState& state, double threshold) {
  const auto no = natural_orbitals(state);
  LowdinSupport out;
  const int r = static_cast<int>(no.occupations.size());
  while (out.rank < r && no.occupations(out.rank) > threshold) ++out.rank;
  out.orbitals = no.orbitals.leftCols(out.rank);
  out.projector = out.orbitals * out.orbitals.adjoint();
  const MixedState local = localize_via_formula(state, LocalizationOperator(out.projector));
  out.localization_defect = local.distance(state);
  return out;
}

double orbital_expansion_error(const FockBasis& basis, int n, const CVec& psi,
                               const CMat& orbitals) {
  require(orbitals.rows() == basis.modes(), "expansion: orbital size mismatch");
  const int r = static_cast<int>(orbitals.cols());
  if (basis.is_fermionic() && n > r) return psi.norm();
  const FockBasis small(r, n, basis.statistics());
  const CMat lift = lift_sector(small, basis, orbitals, n);
  const CVec coeff = lift.adjoint() * psi;
  return (psi - lift * coeff).norm();
}

CMat one_body_density(const FockBasis& basis, int n, const CVec& psi) {
  require(psi.size() == basis.sector_size(n), "one-body density: vector does not match the sector");
  const int r = basis.modes();
  CMat d = CMat::Zero(r, r);
  if (n == 0) return d;
  const auto table = split_table(basis, n, 1);
  for (const auto& row : table) {
    // (I, S, c) with I a single mode
    for (const auto& a : row)
      for (const auto& b : row)
        d(basis.configuration(1, a.head)[0], basis.configuration(1, b.head)[0]) +=
            a.coefficient * b.coefficient * psi(a.whole) * std::conj(psi(b.whole));
  }
  return d;
}

namespace {

void require_lattice(const OneBodySpace& space, int modes) {
  require(space.basis_kind() == BasisKind::position_lattice,
          "density profile: position-lattice basis required");
  require(space.modes() == modes, "density profile: space does not match the basis");
}

DensityProfile profile_from(const CMat& d1, const OneBodySpace& space) {
  DensityProfile prof;
  prof.cell_volume = space.cell_volume();
  for (int i = 0; i < d1.rows(); ++i) prof.rho.push_back(d1(i, i).real() / prof.cell_volume);
  return prof;
}

}  // namespace

DensityProfile density_profile(const MixedState& state, const OneBodySpace& space) {
  require_lattice(space, state.basis().modes());
  return profile_from(density_matrix(state, 1, 1).matrix, space);
}

DensityProfile density_profile(const FockBasis& basis, int n, const CVec& psi,
                               const OneBodySpace& space) {
  require_lattice(space, basis.modes());
  return profile_from(one_body_density(basis, n, psi), space);
}

double average_particle_number(const MixedState& state) {
  return density_matrix(state, 1, 1).matrix.trace().real();
}

// ---------------------------------------------------------------------------

void write_state(const MixedState& state, std::ostream& out) {
  const auto& b = state.basis();
  out.precision(17);
  out << "state " << to_string(b.statistics()) << ' ' << b.modes() << ' ' << b.max_particles()
      << '\n';
  for (int m = 0; m <= b.max_particles(); ++m)
    for (int n = 0; n <= b.max_particles(); ++n) {
      const CMat& g = state.block(m, n);
      out << "block " << m << ' ' << n << ' ' << g.rows() << ' ' << g.cols() << '\n';
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j)
          out << (j ? " " : "") << g(i, j).real() << ' ' << g(i, j).imag();
        out << '\n';
      }
    }
}

MixedState read_state(std::istream& in) {
  std::string tag, stat;
  int r = 0, n = 0;
  in >> tag >> stat >> r >> n;
  require(in && tag == "state", "state file: missing header");
  require(stat == "fermion" || stat == "boson", "state file: unknown statistics");
  const FockBasis basis(r, n, stat == "fermion" ? Statistics::fermion : Statistics::boson);
  auto blocks = zero_blocks(basis);
  for (int k = 0; k < (n + 1) * (n + 1); ++k) {
    int m = 0, c = 0, rows = 0, cols = 0;
    in >> tag >> m >> c >> rows >> cols;
    require(in && tag == "block", "state file: malformed block header");
    require(m >= 0 && m <= n && c >= 0 && c <= n && rows == basis.sector_size(m) &&
                cols == basis.sector_size(c),
            "state file: block shape mismatch");
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        double re = 0.0, im = 0.0;
        in >> re >> im;
        blocks[m][c](i, j) = cplx(re, im);
      }
    require(static_cast<bool>(in), "state file: truncated block");
  }
  return MixedState(basis, std::move(blocks));
}

void write_density_table_csv(const DensityTable& table, std::ostream& out) {
  char buf[128];
  out << "p,q,row,col,re,im\n";
  for (const auto& row : table)
    for (const auto& dm : row)
      for (int i = 0; i < dm.matrix.rows(); ++i)
        for (int j = 0; j < dm.matrix.cols(); ++j) {
          std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g,%.17g\n", dm.p, dm.q, i, j,
                        dm.matrix(i, j).real(), dm.matrix(i, j).imag());
          out << buf;
        }
}

}  // namespace geofock
