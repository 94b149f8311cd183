#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <random>

#include "geofock/parallel.hpp"
#include "geofock/solvers.hpp"

namespace geofock {

namespace {

// Fixes the global phase so the largest-magnitude entry is real positive.
void normalize_phase(CVec& v) {
  if (v.size() == 0) return;
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  cplx p = v(k) / std::abs(v(k));
  v /= p;
}

struct LanczosOutcome {
  double value = 0.0;
  CVec vector;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

void project_out(CVec& w, const std::vector<CVec>& deflate) {
  for (const auto& d : deflate) w -= d * d.dot(w);
}

// Restarted Lanczos for the lowest eigenpair orthogonal to `deflate`. The
// projected matrix is formed as V* (H V) from the stored products, and every
// new direction is orthogonalized twice against the full Krylov basis.
LanczosOutcome lanczos_lowest(const FockOperator::Sparse& h, const std::vector<CVec>& deflate,
                              double tol, int max_restarts, int krylov) {
  const Eigen::Index dim = h.rows();
  LanczosOutcome out;
  std::mt19937_64 rng(0x5eed1234ULL);
  std::normal_distribution<double> g;
  CVec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = cplx(g(rng), g(rng));
  project_out(v, deflate);
  v.normalize();

  const int m_max = static_cast<int>(std::min<Eigen::Index>(krylov, dim - deflate.size()));
  require(m_max >= 1, "lanczos: no space left after deflation");
  for (int restart = 0; restart <= max_restarts; ++restart) {
    CMat V(dim, m_max), HV(dim, m_max);
    int m = 0;
    CVec w = v;
    while (m < m_max) {
      V.col(m) = w;
      HV.col(m) = h * w;
      ++m;
      ++out.iterations;
      if (m == m_max) break;
      CVec next = HV.col(m - 1);
      project_out(next, deflate);
      for (int pass = 0; pass < 2; ++pass) next -= V.leftCols(m) * (V.leftCols(m).adjoint() * next);
      double nrm = next.norm();
      if (nrm < 1e-12 * std::max(1.0, HV.col(m - 1).norm())) break;  // invariant subspace
      w = next / nrm;
    }
    CMat t = V.leftCols(m).adjoint() * HV.leftCols(m);
    t = 0.5 * (t + t.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(t);
    CVec y = es.eigenvectors().col(0);
    out.value = es.eigenvalues()(0);
    out.vector = V.leftCols(m) * y;
    project_out(out.vector, deflate);
    out.vector.normalize();
    out.residual = (h * out.vector - out.value * out.vector).norm();
    if (out.residual <= tol) {
      out.converged = true;
      return out;
    }
    v = out.vector;
  }
  return out;
}

}  // namespace

SpectralResult lanczos_ground_state(const FockOperator::Sparse& h, double tol, int max_restarts,
                                    int krylov) {
  require(h.rows() == h.cols(), "lanczos_ground_state: square matrix required");
  SpectralResult r;
  r.method = "lanczos";
  if (h.rows() == 0) return r;
  auto lo = lanczos_lowest(h, {}, tol, max_restarts, krylov);
  r.energy = lo.value;
  r.ground_vector = lo.vector;
  normalize_phase(r.ground_vector);
  r.residual = lo.residual;
  r.iterations = lo.iterations;
  r.converged = lo.converged;
  if (h.rows() > 1) {
    auto second = lanczos_lowest(h, {lo.vector}, 1e-6, max_restarts, krylov);
    r.gap = second.value - lo.value;
  } else {
    r.gap = std::numeric_limits<double>::infinity();
  }
  r.degenerate = r.gap < 1e-10;
  return r;
}

SpectralResult exact_ground_state(const FockOperator& hamiltonian, int n, int dense_limit) {
  require(hamiltonian.structure() == SectorStructure::number_conserving,
          "exact_ground_state: Hamiltonian must conserve particle number");
  const FockBasis& basis = hamiltonian.basis();
  require(n >= 0 && n <= basis.max_particles(), "exact_ground_state: sector out of range");
  const int dim = basis.sector_size(n);
  const int off = basis.sector_offset(n);
  SpectralResult r;
  if (dim > dense_limit) {
    FockOperator::Sparse blk = hamiltonian.matrix().block(off, off, dim, dim);
    r = lanczos_ground_state(blk);
  } else {
    CMat blk = hamiltonian.block(n, n);
    blk = 0.5 * (blk + blk.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(blk);
    r.method = "dense";
    r.energy = es.eigenvalues()(0);
    r.ground_vector = es.eigenvectors().col(0);
    normalize_phase(r.ground_vector);
    r.gap = dim > 1 ? es.eigenvalues()(1) - es.eigenvalues()(0)
                    : std::numeric_limits<double>::infinity();
    r.degenerate = r.gap < 1e-10;
    r.residual = (blk * r.ground_vector - r.energy * r.ground_vector).norm();
    r.converged = r.residual <= 1e-8;
    r.iterations = 1;
  }
  r.sector = n;
  return r;
}

HvzTable hvz_table(const FockBasis& basis, const OneBodyOperator& h_v, const OneBodyOperator& h_0,
                   const TwoBodyKernel& w, double tol) {
  const int n_max = basis.max_particles();
  FockOperator hv = assemble_hamiltonian(basis, h_v, w);
  FockOperator h0 = assemble_hamiltonian(basis, h_0, w);
  HvzTable t;
  t.e_v.assign(n_max + 1, 0.0);
  t.e_0.assign(n_max + 1, 0.0);
  std::vector<SpectralResult> results(2 * (n_max + 1));
  parallel_for(2 * (n_max + 1), [&](int task) {
    int k = task % (n_max + 1);
    results[task] = exact_ground_state(task <= n_max ? hv : h0, k);
  });
  for (int k = 0; k <= n_max; ++k) {
    for (const auto* res : {&results[k], &results[n_max + 1 + k]}) {
      if (!res->converged)
        throw ComputationError("hvz_table: sector " + std::to_string(k) +
                               " did not converge, residual " + std::to_string(res->residual));
    }
    t.e_v[k] = results[k].energy;
    t.e_0[k] = results[n_max + 1 + k].energy;
  }
  t.margins.assign(n_max + 1, 0.0);
  for (int k = 0; k <= n_max; ++k) t.margins[k] = t.e_v[n_max] - (t.e_v[n_max - k] + t.e_0[k]);
  t.binding = n_max >= 1;
  for (int k = 1; k <= n_max; ++k) t.binding = t.binding && t.margins[k] < -tol;
  if (n_max >= 1) {
    t.monotone = t.e_v[n_max] <= t.e_v[n_max - 1] + tol;
    t.excess = std::max(0.0, t.e_v[n_max] - t.e_v[n_max - 1]);
  } else {
    t.monotone = true;
  }
  return t;
}

}  // namespace geofock
