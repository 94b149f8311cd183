#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "geofock/fock.hpp"
#include "geofock/onebody.hpp"

namespace geofock {

/// Positive trace-one operator on F^{<=N}, stored as sector blocks G_{mn}.
class MixedState {
 public:
  using Blocks = std::vector<std::vector<CMat>>;

  /// Validates Hermiticity, positivity (smallest eigenvalue >= -psd_tol) and
  /// unit trace.
  MixedState(FockBasis basis, Blocks blocks, double psd_tol = 1e-10);

  /// Skips the positivity eigencheck. For states produced by operations that
  /// preserve positivity (pure states, localizations, mixtures).
  static MixedState trusted(FockBasis basis, Blocks blocks);

  const FockBasis& basis() const { return basis_; }
  int max_particles() const { return basis_.max_particles(); }
  const CMat& block(int m, int n) const { return blocks_[m][n]; }
  const Blocks& blocks() const { return blocks_; }
  CMat assembled() const;
  double trace() const;
  double min_eigenvalue() const;
  /// Sector weights tr(G_{kk}).
  std::vector<double> sector_weights() const;
  bool commutes_with_number(double tol = 0.0) const;

  /// Blockwise max-abs deviation.
  double distance(const MixedState& other) const;
  double trace_distance(const MixedState& other) const;

 private:
  struct Unchecked {};
  MixedState(FockBasis basis, Blocks blocks, Unchecked);
  FockBasis basis_;
  Blocks blocks_;
};

struct DensityMatrix {
  int p = 0;
  int q = 0;
  CMat matrix;  // sector p x sector q
};

/// All [Gamma]^{(p,q)}, indexed [p][q].
using DensityTable = std::vector<std::vector<DensityMatrix>>;

struct DensityProfile {
  std::vector<double> rho;  // per site, already divided by h^d
  double cell_volume = 1.0;
  double mass() const;
};

MixedState pure_state(const FockBasis& basis, const CVec& psi);
MixedState pure_sector_state(const FockBasis& basis, int n, const CVec& psi);
/// sum_i w_i Gamma_i; weights nonnegative, summing to one.
MixedState mixture(const std::vector<double>& weights, const std::vector<MixedState>& states);
MixedState vacuum_state(const FockBasis& basis);

/// Contraction of a block X : sector n -> sector m down to (m - j, n - j):
/// [X]^{(m-j, n-j)} = sum_K A_I,K X A_J,K^*, the same reduction that maps
/// G_{mn} into the density matrices.
CMat reduce_block(const FockBasis& basis, const CMat& x, int m, int n, int j);

/// [Gamma]^{(p,q)} from the split-coefficient contraction of the blocks.
DensityMatrix density_matrix(const MixedState& state, int p, int q);
/// Independent route through traces of ladder-operator products.
DensityMatrix density_matrix_ladder(const MixedState& state, int p, int q);
DensityTable density_table(const MixedState& state);

/// Sum_j sqrt(C(p+j,p) C(q+j,q)) over j <= N - max(p,q).
double density_matrix_trace_bound(int n_max, int p, int q);

/// Inverts the triangular system: G_{mn} = sum_j (-1)^j [D^{(m+j,n+j)}]^{(m,n)}.
MixedState blocks_from_density_matrices(const DensityTable& table, const FockBasis& basis,
                                        bool validate = true);

struct RepresentabilityResult {
  bool representable = false;
  int violated_index = -1;        // sector whose block fails positivity; 0 for a bad trace
  double min_eigenvalue = 0.0;
  std::optional<MixedState> witness;
};

/// Diagonal table Upsilon^0..Upsilon^N; representable iff Upsilon^0 = 1 and
/// every reconstructed diagonal block is positive.
RepresentabilityResult is_representable(const std::vector<CMat>& diagonal,
                                        const FockBasis& basis, double tol = 1e-10);

struct NaturalOrbitals {
  RVec occupations;  // descending
  CMat orbitals;     // columns
};

NaturalOrbitals natural_orbitals(const MixedState& state);

struct LowdinSupport {
  CMat projector;
  CMat orbitals;  // orthonormal frame of the range
  int rank = 0;
  double localization_defect = 0.0;  // max |(Gamma_P)_{mn} - G_{mn}|
};

LowdinSupport lowdin_support(const MixedState& state, double threshold = 1e-10);

/// Re-expresses a sector-n vector in the wedge (or symmetric) basis of the
/// given orthonormal orbitals and returns the reconstruction error.
double orbital_expansion_error(const FockBasis& basis, int n, const CVec& psi,
                               const CMat& orbitals);

DensityProfile density_profile(const MixedState& state, const OneBodySpace& space);
/// Density of a sector-n vector without forming the state.
DensityProfile density_profile(const FockBasis& basis, int n, const CVec& psi,
                               const OneBodySpace& space);
/// One-body density matrix of a sector-n vector.
CMat one_body_density(const FockBasis& basis, int n, const CVec& psi);

double average_particle_number(const MixedState& state);

void write_state(const MixedState& state, std::ostream& out);
MixedState read_state(std::istream& in);
/// Columns p,q,row,col,re,im.
void write_density_table_csv(const DensityTable& table, std::ostream& out);

}  // namespace geofock
