#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <random>

#include "geofock/parallel.hpp"
#include "geofock/solvers.hpp"

namespace geofock {

CMat fock_matrix(const OneBodyOperator& h, const TwoBodyKernel& w, const CMat& gamma) {
  const int r = h.modes();
  require(w.modes() == r && gamma.rows() == r && gamma.cols() == r, "fock_matrix: size mismatch");
  require(w.statistics() == Statistics::fermion, "fock_matrix: fermionic kernel required");
  CMat f = h.matrix;
  if (w.has_pair_potential()) {
    const RMat& v = w.pair_potential();
    for (int i = 0; i < r; ++i) {
      cplx direct = 0.0;
      for (int j = 0; j < r; ++j) direct += v(i, j) * gamma(j, j);
      f(i, i) += direct;
      for (int k = 0; k < r; ++k) f(i, k) -= v(i, k) * gamma(i, k);
    }
    return f;
  }
  // W(i,j,k,l) is already antisymmetrized, so it carries direct and exchange.
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < r; ++k) {
      cplx s = 0.0;
      for (int j = 0; j < r; ++j)
        for (int l = 0; l < r; ++l)
          if (gamma(l, j) != cplx(0.0)) s += w(i, j, k, l) * gamma(l, j);
      f(i, k) += s;
    }
  return f;
}

double hartree_fock_energy(const OneBodyOperator& h, const TwoBodyKernel& w, const CMat& gamma) {
  CMat f = fock_matrix(h, w, gamma);
  return ((h.matrix + 0.5 * (f - h.matrix)) * gamma).trace().real();
}

namespace {

struct ScfRun {
  double energy = std::numeric_limits<double>::infinity();
  CMat orbitals;
  double commutator = 0.0;
  bool converged = false;
  int iterations = 0;
};

CMat aufbau(const CMat& f, int n) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (f + f.adjoint()));
  return es.eigenvectors().leftCols(n);
}

ScfRun scf_run(const OneBodyOperator& h, const TwoBodyKernel& w, int n, CMat orbitals,
               const HartreeFockOptions& opts) {
  ScfRun run;
  CMat mix = orbitals * orbitals.adjoint();
  double beta = 1.0;
  double e_prev = hartree_fock_energy(h, w, mix);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    CMat u = aufbau(fock_matrix(h, w, mix), n);
    CMat gamma = u * u.adjoint();
    CMat f = fock_matrix(h, w, gamma);
    double e = ((h.matrix + 0.5 * (f - h.matrix)) * gamma).trace().real();
    double comm = (f * gamma - gamma * f).norm();
    run.iterations = it;
    if (e < run.energy) {
      run.energy = e;
      run.orbitals = u;
      run.commutator = comm;
    }
    if (comm <= opts.tol) {
      run.energy = e;
      run.orbitals = u;
      run.commutator = comm;
      run.converged = true;
      break;
    }
    if (e > e_prev + 1e-12 && beta > 1.0 / 1024) beta *= 0.5;  // oscillation: damp harder
    mix = (1.0 - beta) * mix + beta * gamma;
    e_prev = e;
  }
  return run;
}

}  // namespace

FiniteRankResult hartree_fock_scf(const FockBasis& basis, const OneBodyOperator& h,
                                  const TwoBodyKernel& w, int n, const HartreeFockOptions& opts) {
  const int r = basis.modes();
  require(basis.is_fermionic(), "hartree_fock_scf: fermions only");
  require(h.modes() == r && w.modes() == r, "hartree_fock_scf: size mismatch");
  require(n >= 1 && n <= r && n <= basis.max_particles(), "hartree_fock_scf: N out of range");
  require(opts.restarts >= 1, "hartree_fock_scf: at least one restart");

  std::vector<CMat> starts(opts.restarts);
  starts[0] = aufbau(h.matrix, n);
  for (int i = 1; i < opts.restarts; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(i), 0x4846u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> g;
    CMat x(r, n);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index k = 0; k < x.rows(); ++k) x(k, c) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<CMat> qr(x);
    starts[i] = qr.householderQ() * CMat::Identity(r, n);
  }
  std::vector<ScfRun> runs(opts.restarts);
  parallel_for(opts.restarts, [&](int i) { runs[i] = scf_run(h, w, n, starts[i], opts); });

  int best = 0;
  FiniteRankResult out;
  for (int i = 0; i < opts.restarts; ++i) {
    out.restart_energies.push_back(runs[i].energy);
    bool better = runs[i].energy < runs[best].energy - 1e-12;
    if (better || (!runs[best].converged && runs[i].converged &&
                   runs[i].energy <= runs[best].energy + 1e-12))
      best = i;
  }
  const ScfRun& b = runs[best];
  out.n = n;
  out.rank = n;
  out.energy = b.energy;
  out.orbitals = b.orbitals;
  out.coefficients = CVec::Ones(1);
  std::vector<CVec> cols;
  for (int k = 0; k < n; ++k) cols.push_back(b.orbitals.col(k));
  out.vector = product_state(basis, cols);
  out.converged = b.converged;
  out.iterations = b.iterations;
  out.commutator_residual = b.commutator;

  if (opts.polish) {
    FiniteRankOptions fo;
    fo.restarts = 1;
    fo.initial_orbitals = b.orbitals;
    FiniteRankResult polished = finite_rank_minimize(basis, h, w, n, n, fo);
    out.polish_gain = std::max(0.0, out.energy - polished.energy);
  }
  return out;
}

}  // namespace geofock
