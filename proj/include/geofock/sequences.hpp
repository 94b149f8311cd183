#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geofock/states.hpp"

namespace geofock {

/// n -> Gamma_n on a fixed basis, with the limit it is expected to approach
/// geometrically.
struct StateSequence {
  FockBasis basis;
  std::function<MixedState(int)> generator;
  std::optional<MixedState> declared_limit;
  std::string description;

  MixedState at(int n) const { return generator(n); }
};

// Orbitals on the lattice --------------------------------------------------

/// Normalized cos^2 bump centred on a site, supported on |i - c| < half_width
/// (1D, in sites).
CVec bump_orbital(const OneBodySpace& space, int center_site, int half_width);

/// Moves a 1D lattice vector by `shift` sites. On a Dirichlet box every
/// nonzero entry must stay inside; a periodic box wraps.
CVec translate(const OneBodySpace& space, const CVec& v, int shift);

/// True when every entry outside the sites [first, last] is within tol of zero.
bool supported_in(const CVec& v, int first, int last, double tol = 0.0);

// Sequences ----------------------------------------------------------------

/// Two-body state of phi ^ phi_n (or phi v phi_n), phi_n the n-site translate
/// of `escaping` made orthogonal to phi.
MixedState escaping_product_state(const OneBodySpace& space, const CVec& phi,
                                  const CVec& escaping, int n, Statistics stats);
/// The same family with declared limit 0 (+) |phi><phi| (+) 0.
StateSequence escaping_product_sequence(const OneBodySpace& space, const CVec& phi,
                                        const CVec& escaping, Statistics stats);

/// phi_n = phi + sqrt(1 - |phi|^2) psi_n, psi_n the escaping bump translated
/// by n and orthogonalized against phi. Unit norm, weak limit phi.
std::function<CVec(int)> splitting_family(const OneBodySpace& space, const CVec& phi,
                                          const CVec& escaping);

/// Pure Hartree states phi_n^{(x)N} (bosons) with the binomial limit
/// sum_k C(N,k) (1 - |phi|^2)^{N-k} |phi^{(x)k}><phi^{(x)k}|.
StateSequence hartree_sequence(const FockBasis& basis, std::function<CVec(int)> family,
                               const CVec& weak_limit);

enum class LimitKind { strong, vacuum, intermediate };
const char* to_string(LimitKind k);

struct HartreeFockSequence {
  StateSequence sequence;
  LimitKind kind;
};

/// Slater determinants of the kept orbitals together with the escaping ones
/// translated by n sites. The limit is the Slater determinant of the kept
/// orbitals alone.
HartreeFockSequence hf_escaping_sequence(const OneBodySpace& space, const CMat& kept,
                                         const CMat& escaping);

/// e^{-itT} with T the kinetic matrix, by exact eigendecomposition.
CMat free_propagator(const OneBodySpace& space, double t);

/// Gamma(t_n) = U(t_n) Gamma0 U(t_n)* for t_n = times[n]; declared limit is
/// the vacuum, which a finite box never reaches.
StateSequence free_evolution_sequence(const OneBodySpace& space, const MixedState& gamma0,
                                      std::vector<double> times);

// Diagnostics --------------------------------------------------------------

/// Normalized sector-p test vectors built from one-body tests: products of
/// distinct tests for fermions, of tests with repetition for bosons. Sector 0
/// is the vacuum.
std::vector<CVec> product_test_vectors(const FockBasis& basis,
                                       const std::vector<CVec>& onebody_tests, int p);

struct ConvergenceRow {
  int n = 0;
  int p = 0;
  int q = 0;
  double deviation = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<int> n_values;
  std::vector<double> max_deviation;   // per n over all (p,q) and test pairs
  std::vector<double> particle_number; // tr(N Gamma_n)
  std::vector<double> trace_distance;  // |Gamma_n - Gamma|_1, empty when skipped
  double limit_particle_number = 0.0;
  double final_deviation = 0.0;        // at n_max
  double trend_slope = 0.0;            // least-squares slope of log10 deviation vs n
  std::string trend;                   // zero | decreasing | flat | increasing
  bool lower_semicontinuous = false;   // tr(N Gamma) <= min_n tr(N Gamma_n) + 1e-10
};

/// Pairings <psi, [Gamma_n]^{(p,q)} psi'> against the test family, compared
/// with the declared limit for every n in n_values. Trace distances are added
/// when the Fock dimension is at most trace_distance_cap.
ConvergenceReport geometric_convergence_report(const StateSequence& seq,
                                               const std::vector<CVec>& onebody_tests,
                                               const std::vector<int>& n_values,
                                               int trace_distance_cap = 0);

/// Columns n,p,q,deviation.
void write_convergence_csv(const ConvergenceReport& r, std::ostream& out);
/// JSON summary with the trend verdicts.
void write_convergence_summary(const ConvergenceReport& r, const std::string& description,
                               std::ostream& out);

/// sup_x sum_{|y - x| <= R} rho(y) h^d over lattice centres x.
double concentration_function(const DensityProfile& profile, const OneBodySpace& space, double radius);

struct ConcentrationReport {
  std::vector<double> radii;
  std::vector<int> n_values;
  std::vector<std::vector<double>> values;  // [n][radius]
  std::vector<std::string> trend;           // per radius: decaying | non-decaying
};

ConcentrationReport concentration_report(const std::vector<DensityProfile>& profiles,
                                         const std::vector<int>& n_values,
                                         const OneBodySpace& space,
                                         const std::vector<double>& radii);

/// Site permutation x -> x + shift on a periodic lattice.
CMat translation_operator(const OneBodySpace& space, const std::array<int, 3>& shift);

}  // namespace geofock
