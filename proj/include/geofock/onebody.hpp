#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "geofock/types.hpp"

namespace geofock {

enum class Boundary { dirichlet, periodic };

enum class BasisKind { position_lattice, custom_orthonormal };

/// Lattice descriptor for the discretized one-particle space.
struct LatticeGeometry {
  int dim = 1;          // spatial dimension d
  int points = 2;       // points per axis n
  double box = 1.0;     // box length L
  double spacing = 0.5; // h = L / n
  Boundary boundary = Boundary::dirichlet;
};

/// Finite orthonormal basis of a discretized one-particle space.
///
/// For the position lattice the modes are the normalized site indicators, so
/// a vector of coefficients c has wavefunction values c_x / h^{d/2}.
class OneBodySpace {
 public:
  static constexpr int default_mode_cap = 64;

  OneBodySpace(LatticeGeometry geometry, BasisKind kind, CMat modes);

  int modes() const { return dim_r_; }
  const LatticeGeometry& geometry() const { return geometry_; }
  BasisKind basis_kind() const { return kind_; }
  double spacing() const { return geometry_.spacing; }
  /// h^d, the volume element of one site.
  double cell_volume() const;
  /// Mode functions as columns in site coordinates (identity for the lattice).
  const CMat& mode_functions() const { return modes_; }

  /// Integer lattice coordinates of a site (unused axes are zero).
  std::array<int, 3> site_index(int site) const;
  int site_from_index(const std::array<int, 3>& idx) const;
  /// Physical coordinates, centred so that the box is [-L/2, L/2]^d.
  std::array<double, 3> site_position(int site) const;
  /// Displacement x_i - x_j, using the minimum image on a periodic box.
  std::array<double, 3> displacement(int i, int j) const;
  /// Lattice displacement in sites, minimum image when periodic.
  std::array<int, 3> lattice_displacement(int i, int j) const;

 private:
  LatticeGeometry geometry_;
  BasisKind kind_;
  int dim_r_;
  CMat modes_;
};

/// Hermitian r x r matrix with a label.
struct OneBodyOperator {
  CMat matrix;
  std::string label;

  int modes() const { return static_cast<int>(matrix.rows()); }
};

/// Two-body kernel W_{ij,kl} on pair indices i <= j, k <= l.
///
/// Fermionic entries are <f_i ^ f_j, W f_k ^ f_l>; bosonic entries are
/// <f_i v f_j, W f_k v f_l> / ((1 + d_ij)(1 + d_kl)). When built from a
/// lattice pair potential the site matrix w(x_i - x_j) is kept as well, which
/// the orbital-rotation based solvers need.
class TwoBodyKernel {
 public:
  TwoBodyKernel(int r, Statistics stats);

  /// From the plain tensor V_{ijkl} = <f_i (x) f_j, W f_k (x) f_l>, assumed
  /// symmetric under simultaneous exchange of both particles.
  static TwoBodyKernel from_product_tensor(
      int r, Statistics stats, const std::function<cplx(int, int, int, int)>& v);

  /// From a real symmetric site pair potential w_{ij} (multiplication operator).
  static TwoBodyKernel from_pair_potential(const RMat& w, Statistics stats);

  int modes() const { return r_; }
  Statistics statistics() const { return stats_; }
  int pair_count() const { return static_cast<int>(tensor_.rows()); }
  int pair_index(int i, int j) const;
  std::pair<int, int> pair_modes(int p) const { return pairs_[p]; }

  /// W_{ij,kl}; arguments are reordered to i <= j, k <= l with the fermionic
  /// sign when necessary.
  cplx operator()(int i, int j, int k, int l) const;
  const CMat& tensor() const { return tensor_; }
  CMat& tensor() { return tensor_; }

  bool has_pair_potential() const { return pair_potential_.size() > 0; }
  const RMat& pair_potential() const { return pair_potential_; }

  /// Scaled copy (U * W).
  TwoBodyKernel scaled(double factor) const;
  bool is_zero(double tol = 0.0) const;

 private:
  int r_;
  Statistics stats_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> pair_lookup_;
  CMat tensor_;
  RMat pair_potential_;
};

/// One-body operator B with ||B|| <= 1 and its complements.
class LocalizationOperator {
 public:
  explicit LocalizationOperator(CMat b, double tol = 1e-12);

  const CMat& B() const { return b_; }
  /// sqrt(1 - B B*).
  const CMat& complement() const { return complement_; }
  /// sqrt(1 - B* B); the second leg of the isometry f -> Bf (+) sqrt(1-B*B) f.
  /// Coincides with complement() whenever B is normal.
  const CMat& isometry_complement() const { return iso_complement_; }
  int modes() const { return static_cast<int>(b_.rows()); }
  bool is_diagonal(double tol = 0.0) const;

  /// The localizer sqrt(1 - B* B), used for trace complementarity.
  LocalizationOperator complement_localizer() const;

 private:
  CMat b_;
  CMat complement_;
  CMat iso_complement_;
};

/// Hermitian PSD square root of 1 - X with X Hermitian; eigenvalues of 1 - X
/// are clamped to [0, 1].
CMat sqrt_one_minus(const CMat& x);

// ---------------------------------------------------------------------------

OneBodySpace build_lattice_space(int d, int n, double box,
                                 Boundary boundary = Boundary::dirichlet,
                                 int mode_cap = OneBodySpace::default_mode_cap);

/// -Delta/2 with the second-difference Laplacian (Dirichlet or periodic).
OneBodyOperator kinetic_operator(const OneBodySpace& space);

OneBodyOperator potential_operator(const OneBodySpace& space,
                                   const std::vector<double>& v_samples);

/// -z / sqrt(|x|^2 + a^2) sampled at the sites; a <= 0 means a = h.
std::vector<double> soft_coulomb_well(const OneBodySpace& space, double z,
                                      double a = 0.0);

/// Pair potential samples on lattice displacements. The layout is
/// lexicographic over [-(n-1), n-1]^d, i.e. (2n-1)^d values.
std::vector<double> sample_pair_potential(
    const OneBodySpace& space,
    const std::function<double(const std::array<double, 3>&)>& w);

/// 1/sqrt(|x|^2 + a^2); a <= 0 means a = h.
std::vector<double> soft_coulomb_pair(const OneBodySpace& space, double a = 0.0);

/// Site pair matrix w(x_i - x_j) from displacement samples. Rejects odd w.
RMat pair_matrix(const OneBodySpace& space, const std::vector<double>& w_samples);

TwoBodyKernel two_body_kernel(const OneBodySpace& space,
                              const std::vector<double>& w_samples,
                              Statistics stats);

LocalizationOperator window_localizer(const OneBodySpace& space,
                                      const std::vector<double>& chi_samples);

enum class WindowProfile { smooth, sharp };

struct ImsPartition {
  LocalizationOperator chi;
  LocalizationOperator eta;
};

/// chi_R = 1 on |x| <= R, 0 on |x| >= 2R; eta_R = sqrt(1 - chi_R^2).
ImsPartition ims_partition(const OneBodySpace& space, double radius,
                           WindowProfile profile = WindowProfile::smooth);

/// || A - chi A chi - eta A eta - [chi,[chi,A]]/2 - [eta,[eta,A]]/2 ||_op,
/// an exact identity whenever chi^2 + eta^2 = 1 and both windows commute.
double ims_identity_check(const OneBodyOperator& a, const LocalizationOperator& chi,
                          const LocalizationOperator& eta);

}  // namespace geofock
