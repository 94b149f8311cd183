#pragma once

#include <iosfwd>
#include <vector>

#include "geofock/states.hpp"

namespace geofock {

/// Gamma_B together with its sector weights tr(G_k^B).
struct LocalizedDecomposition {
  MixedState result;
  std::vector<double> sector_weights;
  std::vector<int> certified_ranks;  // -1 where no certificate was computed
};

/// Production route: localize every density matrix, then invert the
/// triangular system.
MixedState localize_via_formula(const MixedState& state, const LocalizationOperator& b);

/// Oracle route: lift onto F^{<=N}(h (+) h) with f -> Bf (+) sqrt(1 - B*B) f and
/// trace out the second copy. Gated by the doubled mode count.
MixedState localize_via_doubling(const MixedState& state, const LocalizationOperator& b,
                                 int max_doubled_modes = 8);

/// Localization of a pure N-body vector via its split amplitudes; the result
/// lives on the same basis as psi.
LocalizedDecomposition localize_nbody(const FockBasis& basis, const CVec& psi,
                                      const LocalizationOperator& b);

/// max_k |tr G_k^B - tr G_{N-k}^{B'}| with B' = sqrt(1 - B*B).
double trace_complementarity_check(const FockBasis& basis, const CVec& psi,
                                   const LocalizationOperator& b);
/// Same for an N-body mixed state (only G_NN nonzero).
double trace_complementarity_check(const MixedState& state, const LocalizationOperator& b);

/// Blockwise deviation between (Gamma_{B1})_{B2} and Gamma_{B2 B1}.
double composition_check(const MixedState& state, const LocalizationOperator& b1,
                         const LocalizationOperator& b2);

struct RankCertificate {
  std::vector<int> rank_bound;       // r - N + k
  std::vector<int> certified_rank;   // largest component rank found in sector k
  std::vector<double> weights;       // tr G_k^B
  double reconstruction_error = 0.0; // max_k |sum_L w_L |psi_L><psi_L| - G_k^B|
  bool holds = false;
};

/// Writes each G_k^B of a fermionic rank-r N-body state as an explicit
/// convex combination of k-body states and certifies their ranks.
RankCertificate finite_rank_localization_structure(const FockBasis& basis, const CVec& psi,
                                                   int rank, const LocalizationOperator& b,
                                                   double threshold = 1e-10);

/// Columns sector,weight,certified_rank.
void write_localization_csv(const LocalizedDecomposition& d, std::ostream& out);

}  // namespace geofock
