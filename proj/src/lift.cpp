#include <Eigen/LU>
#include <cmath>

#include "geofock/fock.hpp"

namespace geofock {

namespace {

cplx small_determinant(const CMat& a) {
  switch (a.rows()) {
    case 0: return 1.0;
    case 1: return a(0, 0);
    case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    default: return a.partialPivLu().determinant();
  }
}

// Ryser's formula with a Gray-code walk over column subsets.
cplx ryser(const CMat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 1.0;
  CVec row_sums = CVec::Zero(n);
  cplx total = 0.0;
  std::uint64_t gray_prev = 0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < count; ++k) {
    const std::uint64_t gray = k ^ (k >> 1);
    const std::uint64_t flip = gray ^ gray_prev;
    const int col = __builtin_ctzll(flip);
    if (gray & flip)
      row_sums += a.col(col);
    else
      row_sums -= a.col(col);
    gray_prev = gray;
    cplx prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= row_sums(i);
    const int bits = __builtin_popcountll(gray);
    total += ((bits % 2 == n % 2) ? 1.0 : -1.0) * prod;
  }
  return total;
}

}  // namespace

cplx permanent(const CMat& m) {
  require(m.rows() == m.cols(), "permanent: matrix must be square");
  return ryser(m);
}

CMat lift_sector(const FockBasis& from, const FockBasis& to, const CMat& m, int n) {
  require(from.statistics() == to.statistics(), "lift: statistics mismatch");
  require(m.rows() == to.modes() && m.cols() == from.modes(), "lift: matrix shape mismatch");
  require(n <= from.max_particles() && n <= to.max_particles(), "lift: sector out of range");
  const int rows = to.sector_size(n);
  const int cols = from.sector_size(n);
  if (from.same_space(to) && m.isDiagonal(0.0)) {
    CMat out = CMat::Zero(rows, cols);
    for (int i = 0; i < rows; ++i) {
      cplx v = 1.0;
      for (int mode : from.configuration(n, i)) v *= m(mode, mode);
      out(i, i) = v;
    }
    return out;
  }
  CMat out(rows, cols);
  CMat sub(n, n);
  const bool fermi = from.is_fermionic();
  for (int j = 0; j < cols; ++j) {
    const Configuration& cj = from.configuration(n, j);
    for (int i = 0; i < rows; ++i) {
      const Configuration& ci = to.configuration(n, i);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) sub(a, b) = m(ci[a], cj[b]);
      out(i, j) = fermi ? small_determinant(sub)
                        : ryser(sub) / (to.norm_factor(n, i) * from.norm_factor(n, j));
    }
  }
  return out;
}

FockOperator lift_operator(const FockBasis& basis, const CMat& m) {
  require(m.rows() == basis.modes() && m.cols() == basis.modes(), "lift: square matrix expected");
  std::vector<Eigen::Triplet<cplx>> trips;
  for (int n = 0; n <= basis.max_particles(); ++n) {
    const CMat blk = lift_sector(basis, basis, m, n);
    const int off = basis.sector_offset(n);
    for (int j = 0; j < blk.cols(); ++j)
      for (int i = 0; i < blk.rows(); ++i)
        if (blk(i, j) != cplx(0.0)) trips.emplace_back(off + i, off + j, blk(i, j));
  }
  FockOperator::Sparse s(basis.dimension(), basis.dimension());
  s.setFromTriplets(trips.begin(), trips.end());
  return FockOperator(basis, std::move(s), SectorStructure::number_conserving);
}

}  // namespace geofock
