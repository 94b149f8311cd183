#pragma once

#include <Eigen/SparseCore>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geofock/onebody.hpp"
#include "geofock/types.hpp"

namespace geofock {

/// Sorted list of occupied modes; repeated entries for bosons.
using Configuration = std::vector<int>;

/// Occupation-number basis of the truncated Fock space F^{<=N} over r modes.
///
/// Sector n lists the configurations with n particles in lexicographic order,
/// sectors ascending, vacuum at global index 0. Basis vectors are normalized;
/// the bosonic product f_{i_1} v ... v f_{i_n} equals norm_factor() times the
/// corresponding basis vector. The basis is immutable and cheap to copy.
class FockBasis {
 public:
  FockBasis(int r, int n_max, Statistics stats);

  int modes() const { return impl_->r; }
  int max_particles() const { return impl_->n_max; }
  Statistics statistics() const { return impl_->stats; }
  bool is_fermionic() const { return impl_->stats == Statistics::fermion; }

  int dimension() const { return impl_->offsets.back(); }
  int sector_size(int n) const { return impl_->offsets[n + 1] - impl_->offsets[n]; }
  int sector_offset(int n) const { return impl_->offsets[n]; }
  int sector_of(int global) const;

  const Configuration& configuration(int n, int local) const { return impl_->sectors[n][local]; }
  /// Local index of a configuration in its sector, or -1.
  int find(const Configuration& c) const;
  /// sqrt(prod_i n_i!) for bosons, 1 for fermions.
  double norm_factor(int n, int local) const;

  /// a^dagger(e_mode) on a basis vector of sector n. Empty when the result
  /// vanishes or leaves F^{<=N}.
  std::optional<std::pair<int, double>> create(int mode, int n, int local) const;
  /// a(e_mode) on a basis vector of sector n.
  std::optional<std::pair<int, double>> annihilate(int mode, int n, int local) const;

  bool same_space(const FockBasis& other) const {
    return modes() == other.modes() && max_particles() == other.max_particles() &&
           statistics() == other.statistics();
  }

 private:
  struct Impl {
    int r = 0;
    int n_max = 0;
    Statistics stats = Statistics::fermion;
    std::vector<std::vector<Configuration>> sectors;
    std::vector<int> offsets;
    std::vector<double> norms;  // per global index
  };
  std::shared_ptr<const Impl> impl_;
};

FockBasis enumerate_basis(int r, int n_max, Statistics stats);

/// Split coefficients of sector m into p + (m - p) particles.
///
/// For each configuration K of sector m - p, entries (I, S, c) with
/// c = <e_K, A_I e_S> where A_I is the adjoint of the normalized creation
/// string of I. All density-matrix contractions reduce to these tables.
struct SplitEntry {
  int head;   // I in sector p
  int whole;  // S in sector m
  double coefficient;
};

std::vector<std::vector<SplitEntry>> split_table(const FockBasis& basis, int m, int p);

enum class SectorStructure { number_conserving, raising, lowering, general };

/// Operator on F^{<=N}, stored sparse over the full space.
class FockOperator {
 public:
  using Sparse = Eigen::SparseMatrix<cplx>;

  FockOperator(FockBasis basis, Sparse matrix, SectorStructure structure);

  const FockBasis& basis() const { return basis_; }
  const Sparse& matrix() const { return matrix_; }
  SectorStructure structure() const { return structure_; }
  CMat dense() const { return CMat(matrix_); }
  /// Block mapping sector n to sector m.
  CMat block(int m, int n) const;
  FockOperator adjoint() const;
  /// True if every nonzero respects the declared sector structure.
  bool structure_consistent() const;

  FockOperator operator+(const FockOperator& o) const;
  FockOperator operator*(const FockOperator& o) const;
  FockOperator operator*(cplx s) const;

 private:
  FockBasis basis_;
  Sparse matrix_;
  SectorStructure structure_;
};

CVec vacuum(const FockBasis& basis);
/// Embeds a sector-n coefficient vector into the full space.
CVec embed_sector(const FockBasis& basis, int n, const CVec& psi);
CVec sector_part(const FockBasis& basis, int n, const CVec& full);

FockOperator creation(const FockBasis& basis, const CVec& f);
FockOperator annihilation(const FockBasis& basis, const CVec& f);
FockOperator identity_operator(const FockBasis& basis);
FockOperator number_operator(const FockBasis& basis);

/// Residual of the CAR (fermions) or CCR (bosons) in operator norm, summed
/// over the three relations. The relations are checked on F^{<=N-1}, where
/// truncation is invisible; a complete fermionic space (N = r) is checked
/// everywhere.
double car_ccr_residual(const FockBasis& basis, const CVec& f, const CVec& g);

FockOperator second_quantize_onebody(const FockBasis& basis, const OneBodyOperator& a);
FockOperator second_quantize_twobody(const FockBasis& basis, const TwoBodyKernel& w);
FockOperator assemble_hamiltonian(const FockBasis& basis, const OneBodyOperator& h,
                                  const TwoBodyKernel& w);

/// psi1 ^ psi2 (fermions) or psi1 v psi2 (bosons) for sector-local vectors.
CVec wedge(const FockBasis& basis, int n1, const CVec& psi1, int n2, const CVec& psi2);

/// Normalized sector vector a^dagger(f_1) ... a^dagger(f_n) Omega.
CVec product_state(const FockBasis& basis, const std::vector<CVec>& orbitals);

/// Sector-n vector of f^{(x)n} = (a^dagger(f))^n Omega / sqrt(n!) (bosons).
CVec tensor_power(const FockBasis& basis, const CVec& f, int n);

struct CoherentState {
  CVec vector;            // full-space, renormalized
  double tail_weight;     // Poisson weight lost above sector N
};

/// W(f) Omega on F^{<=N} via the exponential of a^dagger(f) - a(f).
/// Throws ComputationError when the truncated tail exceeds max_tail.
CoherentState weyl_coherent_state(const FockBasis& basis, const CVec& f,
                                  double max_tail = 1e-8);

/// Poisson tail e^{-|f|^2} sum_{n > N} |f|^{2n} / n!.
double poisson_tail(double norm_sq, int n_max);

// Lifts of one-body maps -----------------------------------------------------

/// Matrix of M^{(x)n} between sector n of `from` and sector n of `to`;
/// M is to.modes() x from.modes(). Minors for fermions, normalized
/// permanents for bosons.
CMat lift_sector(const FockBasis& from, const FockBasis& to, const CMat& m, int n);

/// 1 (+) M (+) M(x)M (+) ... on F^{<=N} (square M).
FockOperator lift_operator(const FockBasis& basis, const CMat& m);

cplx permanent(const CMat& m);

/// Sector-tagged coordinate list: "row_sector row_local col_sector col_local re im".
void write_operator_coo(const FockOperator& op, std::ostream& out);

}  // namespace geofock
