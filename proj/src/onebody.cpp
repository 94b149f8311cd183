#include "geofock/onebody.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace geofock {

double trace_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<CMat> svd(m);
  return svd.singularValues().sum();
}

double operator_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<CMat> svd(m);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------

OneBodySpace::OneBodySpace(LatticeGeometry geometry, BasisKind kind, CMat modes)
    : geometry_(geometry), kind_(kind), dim_r_(static_cast<int>(modes.cols())),
      modes_(std::move(modes)) {
  require(geometry_.box > 0 && geometry_.spacing > 0, "lattice: box and spacing must be positive");
  require(dim_r_ >= 1, "lattice: need at least one mode");
  const CMat overlap = modes_.adjoint() * modes_;
  const double defect = (overlap - CMat::Identity(dim_r_, dim_r_)).cwiseAbs().maxCoeff();
  require(defect <= 1e-12, "one-body basis is not orthonormal");
}

double OneBodySpace::cell_volume() const {
  return std::pow(geometry_.spacing, geometry_.dim);
}

std::array<int, 3> OneBodySpace::site_index(int site) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = 0; a < geometry_.dim; ++a) {
    idx[a] = site % geometry_.points;
    site /= geometry_.points;
  }
  return idx;
}

int OneBodySpace::site_from_index(const std::array<int, 3>& idx) const {
  int site = 0;
  for (int a = geometry_.dim - 1; a >= 0; --a) site = site * geometry_.points + idx[a];
  return site;
}

std::array<double, 3> OneBodySpace::site_position(int site) const {
  const auto idx = site_index(site);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  const double centre = 0.5 * (geometry_.points - 1);
  for (int a = 0; a < geometry_.dim; ++a) x[a] = (idx[a] - centre) * geometry_.spacing;
  return x;
}

std::array<int, 3> OneBodySpace::lattice_displacement(int i, int j) const {
  const auto a = site_index(i);
  const auto b = site_index(j);
  std::array<int, 3> d{0, 0, 0};
  const int n = geometry_.points;
  for (int ax = 0; ax < geometry_.dim; ++ax) {
    int delta = a[ax] - b[ax];
    if (geometry_.boundary == Boundary::periodic) {
      delta = ((delta % n) + n) % n;
      if (delta > n / 2) delta -= n;
    }
    d[ax] = delta;
  }
  return d;
}

std::array<double, 3> OneBodySpace::displacement(int i, int j) const {
  const auto d = lattice_displacement(i, j);
  return {d[0] * geometry_.spacing, d[1] * geometry_.spacing, d[2] * geometry_.spacing};
}

// ---------------------------------------------------------------------------

TwoBodyKernel::TwoBodyKernel(int r, Statistics stats) : r_(r), stats_(stats) {
  require(r >= 1, "two-body kernel: need at least one mode");
  pair_lookup_.assign(static_cast<size_t>(r) * r, -1);
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) {
      pair_lookup_[i * r + j] = static_cast<int>(pairs_.size());
      pairs_.emplace_back(i, j);
    }
  tensor_ = CMat::Zero(static_cast<Eigen::Index>(pairs_.size()),
                       static_cast<Eigen::Index>(pairs_.size()));
}

int TwoBodyKernel::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  return pair_lookup_[i * r_ + j];
}

cplx TwoBodyKernel::operator()(int i, int j, int k, int l) const {
  double sign = 1.0;
  if (i > j) {
    std::swap(i, j);
    if (stats_ == Statistics::fermion) sign = -sign;
  }
  if (k > l) {
    std::swap(k, l);
    if (stats_ == Statistics::fermion) sign = -sign;
  }
  return sign * tensor_(pair_index(i, j), pair_index(k, l));
}

TwoBodyKernel TwoBodyKernel::from_product_tensor(
    int r, Statistics stats, const std::function<cplx(int, int, int, int)>& v) {
  TwoBodyKernel w(r, stats);
  const int np = w.pair_count();
  for (int p = 0; p < np; ++p) {
    const auto [i, j] = w.pairs_[p];
    for (int q = 0; q < np; ++q) {
      const auto [k, l] = w.pairs_[q];
      if (stats == Statistics::fermion) {
        // <f_i^f_j, W f_k^f_l> = V_ijkl - V_ijlk for i<j, k<l; zero otherwise.
        if (i == j || k == l) continue;
        w.tensor_(p, q) = v(i, j, k, l) - v(i, j, l, k);
      } else {
        // <f_i v f_j, W f_k v f_l> = V_ijkl + V_ijlk, then the normalization divisor.
        const double divisor = (i == j ? 2.0 : 1.0) * (k == l ? 2.0 : 1.0);
        w.tensor_(p, q) = (v(i, j, k, l) + v(i, j, l, k)) / divisor;
      }
    }
  }
  return w;
}

TwoBodyKernel TwoBodyKernel::from_pair_potential(const RMat& wmat, Statistics stats) {
  const int r = static_cast<int>(wmat.rows());
  require(wmat.cols() == r, "pair potential must be square");
  require((wmat - wmat.transpose()).cwiseAbs().maxCoeff() <= 1e-14,
          "pair potential must be symmetric");
  TwoBodyKernel w(r, stats);
  const int np = w.pair_count();
  // V_ijkl = w_ij d_ik d_jl, so only diagonal pair entries survive.
  for (int p = 0; p < np; ++p) {
    const auto [i, j] = w.pairs_[p];
    if (stats == Statistics::fermion) {
      if (i != j) w.tensor_(p, p) = wmat(i, j);
    } else {
      const double divisor = (i == j) ? 4.0 : 1.0;
      w.tensor_(p, p) = (i == j ? 2.0 * wmat(i, i) : wmat(i, j)) / divisor;
    }
  }
  w.pair_potential_ = wmat;
  return w;
}

TwoBodyKernel TwoBodyKernel::scaled(double factor) const {
  TwoBodyKernel w = *this;
  w.tensor_ *= factor;
  if (w.pair_potential_.size() > 0) w.pair_potential_ *= factor;
  return w;
}

bool TwoBodyKernel::is_zero(double tol) const {
  return tensor_.size() == 0 || tensor_.cwiseAbs().maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------

CMat sqrt_one_minus(const CMat& x) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (x + x.adjoint()));
  RVec vals = (1.0 - es.eigenvalues().array()).max(0.0).min(1.0).sqrt();
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

LocalizationOperator::LocalizationOperator(CMat b, double tol) : b_(std::move(b)) {
  require(b_.rows() == b_.cols(), "localizer must be square");
  const CMat bbstar = b_ * b_.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> es(bbstar, Eigen::EigenvaluesOnly);
  if (b_.rows() > 0) {
    require(es.eigenvalues().minCoeff() >= -tol && es.eigenvalues().maxCoeff() <= 1.0 + tol,
            "localizer violates 0 <= BB* <= 1");
  }
  complement_ = sqrt_one_minus(bbstar);
  iso_complement_ = sqrt_one_minus(b_.adjoint() * b_);
}

bool LocalizationOperator::is_diagonal(double tol) const {
  CMat off = b_;
  off.diagonal().setZero();
  return off.size() == 0 || off.cwiseAbs().maxCoeff() <= tol;
}

LocalizationOperator LocalizationOperator::complement_localizer() const {
  return LocalizationOperator(iso_complement_, 1e-10);
}

// ---------------------------------------------------------------------------

OneBodySpace build_lattice_space(int d, int n, double box, Boundary boundary, int mode_cap) {
  require(d >= 1 && d <= 3, "lattice: dimension must be 1, 2 or 3");
  require(n >= 2, "lattice: need at least 2 points per axis");
  require(box > 0, "lattice: box length must be positive");
  const double modes = std::pow(static_cast<double>(n), d);
  require(modes <= mode_cap, "lattice: n^d = " + std::to_string(static_cast<long>(modes)) +
                                 " exceeds the mode cap " + std::to_string(mode_cap));
  LatticeGeometry g{d, n, box, box / n, boundary};
  const int r = static_cast<int>(modes);
  return OneBodySpace(g, BasisKind::position_lattice, CMat::Identity(r, r));
}

OneBodyOperator kinetic_operator(const OneBodySpace& space) {
  const auto& g = space.geometry();
  const int r = space.modes();
  const double h2 = g.spacing * g.spacing;
  CMat t = CMat::Zero(r, r);
  for (int s = 0; s < r; ++s) {
    const auto idx = space.site_index(s);
    t(s, s) += g.dim / h2;
    for (int a = 0; a < g.dim; ++a) {
      for (int step : {-1, 1}) {
        auto nb = idx;
        nb[a] += step;
        if (nb[a] < 0 || nb[a] >= g.points) {
          if (g.boundary == Boundary::dirichlet) continue;
          nb[a] = (nb[a] + g.points) % g.points;
        }
        t(s, space.site_from_index(nb)) += -0.5 / h2;
      }
    }
  }
  return {t, "kinetic"};
}

OneBodyOperator potential_operator(const OneBodySpace& space, const std::vector<double>& v) {
  require(static_cast<int>(v.size()) == space.modes(),
          "potential: expected one sample per mode");
  CMat m = CMat::Zero(space.modes(), space.modes());
  for (int i = 0; i < space.modes(); ++i) m(i, i) = v[i];
  return {m, "potential"};
}

std::vector<double> soft_coulomb_well(const OneBodySpace& space, double z, double a) {
  if (a <= 0) a = space.spacing();
  std::vector<double> v(space.modes());
  for (int i = 0; i < space.modes(); ++i) {
    const auto x = space.site_position(i);
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    v[i] = -z / std::sqrt(r2 + a * a);
  }
  return v;
}

namespace {

int displacement_slot(const OneBodySpace& space, const std::array<int, 3>& d) {
  const int n = space.geometry().points;
  const int width = 2 * n - 1;
  int slot = 0;
  for (int a = space.geometry().dim - 1; a >= 0; --a) slot = slot * width + (d[a] + n - 1);
  return slot;
}

}  // namespace

std::vector<double> sample_pair_potential(
    const OneBodySpace& space, const std::function<double(const std::array<double, 3>&)>& w) {
  const auto& g = space.geometry();
  const int width = 2 * g.points - 1;
  int count = 1;
  for (int a = 0; a < g.dim; ++a) count *= width;
  std::vector<double> out(count);
  for (int slot = 0; slot < count; ++slot) {
    int rest = slot;
    std::array<double, 3> x{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      x[a] = ((rest % width) - (g.points - 1)) * g.spacing;
      rest /= width;
    }
    out[slot] = w(x);
  }
  return out;
}

std::vector<double> soft_coulomb_pair(const OneBodySpace& space, double a) {
  if (a <= 0) a = space.spacing();
  return sample_pair_potential(space, [a](const std::array<double, 3>& x) {
    return 1.0 / std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + a * a);
  });
}

RMat pair_matrix(const OneBodySpace& space, const std::vector<double>& w) {
  const auto& g = space.geometry();
  const int width = 2 * g.points - 1;
  size_t count = 1;
  for (int a = 0; a < g.dim; ++a) count *= width;
  require(w.size() == count, "pair potential: expected (2n-1)^d displacement samples");
  for (size_t slot = 0; slot < count; ++slot) {
    // mirror slot: negate every axis
    size_t rest = slot, mirror = 0, scale = 1;
    for (int a = 0; a < g.dim; ++a) {
      const size_t c = rest % width;
      rest /= width;
      mirror += (width - 1 - c) * scale;
      scale *= width;
    }
    require(std::abs(w[slot] - w[mirror]) <= 1e-14 * (1.0 + std::abs(w[slot])),
            "pair potential must be even: w(x) = w(-x)");
  }
  const int r = space.modes();
  RMat m(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) m(i, j) = w[displacement_slot(space, space.lattice_displacement(i, j))];
  return m;
}

TwoBodyKernel two_body_kernel(const OneBodySpace& space, const std::vector<double>& w_samples,
                              Statistics stats) {
  return TwoBodyKernel::from_pair_potential(pair_matrix(space, w_samples), stats);
}

LocalizationOperator window_localizer(const OneBodySpace& space, const std::vector<double>& chi) {
  require(static_cast<int>(chi.size()) == space.modes(), "window: expected one sample per mode");
  CMat b = CMat::Zero(space.modes(), space.modes());
  for (int i = 0; i < space.modes(); ++i) {
    require(chi[i] >= 0.0 && chi[i] <= 1.0, "window: samples must lie in [0, 1]");
    b(i, i) = chi[i];
  }
  return LocalizationOperator(b);
}

ImsPartition ims_partition(const OneBodySpace& space, double radius, WindowProfile profile) {
  require(radius > 0 && radius < 0.5 * space.geometry().box,
          "ims partition: radius must satisfy 0 < R < L/2");
  const int r = space.modes();
  CMat chi = CMat::Zero(r, r), eta = CMat::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    const auto x = space.site_position(i);
    const double dist = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    if (profile == WindowProfile::sharp) {
      chi(i, i) = dist <= radius ? 1.0 : 0.0;
      eta(i, i) = dist <= radius ? 0.0 : 1.0;
      continue;
    }
    // chi = cos(angle), eta = sin(angle) with a C^2 ramp between R and 2R
    const double t = std::clamp((dist - radius) / radius, 0.0, 1.0);
    const double ramp = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    const double angle = 0.5 * std::numbers::pi * ramp;
    chi(i, i) = t >= 1.0 ? 0.0 : std::cos(angle);
    eta(i, i) = t <= 0.0 ? 0.0 : std::sin(angle);
  }
  return {LocalizationOperator(chi), LocalizationOperator(eta)};
}

double ims_identity_check(const OneBodyOperator& op, const LocalizationOperator& chi,
                          const LocalizationOperator& eta) {
  require(chi.is_diagonal() && eta.is_diagonal(), "ims check: windows must be diagonal");
  require(op.modes() == chi.modes() && op.modes() == eta.modes(), "ims check: size mismatch");
  const CMat& a = op.matrix;
  const CMat& c = chi.B();
  const CMat& e = eta.B();
  auto comm = [](const CMat& x, const CMat& y) -> CMat { return x * y - y * x; };
  const CMat residual = a - c * a * c - e * a * e - 0.5 * comm(c, comm(c, a)) - 0.5 * comm(e, comm(e, a));
  return operator_norm(residual);
}

}  // namespace geofock
