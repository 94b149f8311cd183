#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geofock/fock.hpp"
#include "geofock/states.hpp"

namespace geofock {

// Exact diagonalization ------------------------------------------------------

struct SpectralResult {
  int sector = 0;
  double energy = 0.0;
  CVec ground_vector;
  double gap = 0.0;           // E_1 - E_0; +inf for a one-dimensional sector
  double residual = 0.0;      // |(H - E) psi|
  bool degenerate = false;    // gap below 1e-10
  bool converged = true;
  int iterations = 0;
  std::string method;         // dense | lanczos
};

/// Lowest eigenpair of the sector-n block: dense up to dense_limit, restarted
/// Lanczos with full reorthogonalization above.
SpectralResult exact_ground_state(const FockOperator& hamiltonian, int n, int dense_limit = 2000);

/// Lowest eigenpair of a sparse Hermitian matrix by restarted Lanczos.
SpectralResult lanczos_ground_state(const FockOperator::Sparse& h, double tol = 1e-9,
                                    int max_restarts = 60, int krylov = 120);

struct HvzTable {
  std::vector<double> e_v;      // E^V(k), k = 0..N
  std::vector<double> e_0;      // E^0(k)
  std::vector<double> margins;  // E^V(N) - (E^V(N-k) + E^0(k)), k = 0..N
  bool binding = false;         // every margin with k >= 1 below -tol
  bool monotone = false;        // E^V(N) <= E^V(N-1) + tol
  double excess = 0.0;          // max(0, E^V(N) - E^V(N-1)), the finite-box error
  bool finite_size_caveat = true;
};

/// Sector ground energies with and without the external potential, and the
/// binding margins built from them.
HvzTable hvz_table(const FockBasis& basis, const OneBodyOperator& h_v, const OneBodyOperator& h_0,
                   const TwoBodyKernel& w, double tol = 1e-10);

// Finite-rank minimization ---------------------------------------------------

struct FiniteRankOptions {
  int restarts = 8;
  std::uint64_t seed = 1;
  int max_iterations = 2000;
  double gradient_tol = 1e-7;
  std::optional<CMat> initial_orbitals;  // used by the first run when set
};

struct FiniteRankResult {
  int n = 0;
  int rank = 0;
  double energy = 0.0;
  CMat orbitals;            // modes x rank, orthonormal
  CVec coefficients;        // sector-n amplitudes over the orbital basis
  CVec vector;              // the same state in the full sector-n basis
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> restart_energies;
  double commutator_residual = 0.0;  // |[F, gamma]| for Hartree-Fock
  double polish_gain = 0.0;          // energy lowered by a finite-rank polish
};

/// Minimizes <Psi, H Psi> over sector-n states built from `rank` orthonormal
/// orbitals: exact CI in the orbital basis alternating with Riemannian
/// gradient steps on the frame (QR retraction, Armijo backtracking).
FiniteRankResult finite_rank_minimize(const FockBasis& basis, const OneBodyOperator& h,
                                      const TwoBodyKernel& w, int n, int rank,
                                      const FiniteRankOptions& opts = {});

/// Energy of the best state over the given orbitals, with its amplitudes.
double finite_rank_energy(const FockBasis& basis, const CMat& sector_h, const CMat& orbitals, int n,
                          CVec* coefficients = nullptr);

struct HartreeFockOptions {
  int restarts = 4;
  std::uint64_t seed = 1;
  int max_iterations = 500;
  double tol = 1e-10;       // on |[F, gamma]|
  bool polish = true;       // seed finite_rank_minimize(rank = N) with the result
};

/// Roothaan iteration on the one-body density matrix with direct and exchange
/// mean fields; density damping halves whenever the energy rises.
FiniteRankResult hartree_fock_scf(const FockBasis& basis, const OneBodyOperator& h,
                                  const TwoBodyKernel& w, int n, const HartreeFockOptions& opts = {});

/// Fock matrix h + sum_jl W(i,j,k,l) gamma_lj.
CMat fock_matrix(const OneBodyOperator& h, const TwoBodyKernel& w, const CMat& gamma);
/// tr(h gamma) + 1/2 sum W(i,j,k,l) gamma_ki gamma_lj for a projector gamma.
double hartree_fock_energy(const OneBodyOperator& h, const TwoBodyKernel& w, const CMat& gamma);

// Pekar-Tomasevich -----------------------------------------------------------

/// Lattice multi-polaron: T + U W on the particles, and the attraction
/// -(alpha/2) sum_xy n_x k(x - y) n_y with n_x = rho(x) h^d.
struct PekarModel {
  OneBodySpace space;
  Statistics stats;
  double alpha = 0.0;
  double coupling_u = 1.0;
  OneBodyOperator kinetic;
  TwoBodyKernel repulsion;  // W, not yet multiplied by U
  RMat attraction;          // k(x_i - x_j)
};

/// Soft-Coulomb repulsion and attraction with softening a (a <= 0 means h).
PekarModel make_pekar_model(const OneBodySpace& space, Statistics stats, double alpha, double u,
                            double softening = 0.0);

double pekar_energy(const PekarModel& model, const FockBasis& basis, int n, const CVec& psi);
/// Energy of a mixture sum_i w_i |psi_i><psi_i| of sector-n vectors.
double pekar_mixed_energy(const PekarModel& model, const FockBasis& basis, int n,
                          const std::vector<double>& weights, const std::vector<CVec>& psis);

struct PekarOptions {
  double theta = 0.5;
  double tol = 1e-8;         // on |n_new - n_old|_1
  int max_iterations = 5000;
  int max_halvings = 4;
  std::optional<RVec> warm_start;
  bool uniform_seed = true;
  bool site_seed = true;
};

struct PekarResult {
  double alpha = 0.0;
  double coupling_u = 0.0;
  int n = 0;
  double energy = 0.0;
  CVec wavefunction;
  RVec occupation;                  // n_x = rho(x) h^d
  double mu = 0.0;
  double scf_residual = 0.0;        // |(H_Psi - mu) Psi|
  bool converged = false;
  int iterations = 0;
  double theta = 0.0;               // damping in use at convergence
  bool monotone = true;             // mixed energy never rose beyond 1e-10
  std::vector<double> restart_energies;
  std::string seed;                 // uniform | site | warm
};

PekarResult pekar_minimize(const PekarModel& model, int n, const PekarOptions& opts = {});

/// Mean-field operator H_Psi on sector n for the occupation n_x.
CMat pekar_mean_field(const PekarModel& model, const FockBasis& basis, int n, const RVec& occupation);

struct BindingPoint {
  double alpha = 0.0;
  std::vector<double> energies;   // E_alpha(k), k = 0..N
  std::vector<double> margins;    // E(N) - E(N-k) - E(k), k = 1..N-1
  double binding_energy = 0.0;    // 2 E(1) - E(2) when N = 2
  bool converged = false;
  double max_residual = 0.0;
};

struct BindingCurve {
  std::vector<BindingPoint> points;
  std::optional<double> threshold;   // interpolated sign change of B
  double monotonicity_violation = 0.0;
  double convexity_violation = 0.0;
  bool nondecreasing = false;        // within 1e-6
  bool convex = false;               // within 1e-6
};

BindingCurve binding_scan(const PekarModel& base, int n, const std::vector<double>& alpha_grid,
                          const PekarOptions& opts = {});

/// |E_{alpha,U} - U^2 E_{alpha/U,1}| / |E_{alpha,U}| with the second problem on
/// a grid (and softening) stretched by U.
double pekar_scaling_deviation(int sites, double spacing, double alpha, double u, Statistics stats,
                               int n);

/// tr(-Delta gamma) - sum |grad sqrt(rho)|^2 h^d with forward differences.
double hoffmann_ostenhof_check(const CMat& gamma1, const OneBodySpace& space);
double hoffmann_ostenhof_check(const MixedState& state, const OneBodySpace& space);

}  // namespace geofock
