#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "geofock/parallel.hpp"
#include "geofock/solvers.hpp"

namespace geofock {

namespace {

// Orthonormal frame spanning the columns of x, with R's diagonal made real
// positive so the retraction is a smooth function of x.
CMat qr_frame(const CMat& x) {
  Eigen::HouseholderQR<CMat> qr(x);
  CMat q = qr.householderQ() * CMat::Identity(x.rows(), x.cols());
  const CMat r = qr.matrixQR().topRows(x.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    cplx d = r(k, k);
    if (std::abs(d) > 0) q.col(k) *= d / std::abs(d);
  }
  return q;
}

CMat random_frame(int rows, int cols, std::uint64_t seed, int stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> g;
  CMat x(rows, cols);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = cplx(g(rng), g(rng));
  return qr_frame(x);
}

// Column a holds a(e_a) v, mapping sector n to sector n - 1.
CMat annihilate_all(const FockBasis& basis, int n, const CVec& v) {
  CMat out = CMat::Zero(basis.sector_size(n - 1), basis.modes());
  for (int local = 0; local < basis.sector_size(n); ++local) {
    if (v(local) == cplx(0.0)) continue;
    for (int a = 0; a < basis.modes(); ++a) {
      auto hit = basis.annihilate(a, n, local);
      if (hit) out(hit->first, a) += hit->second * v(local);
    }
  }
  return out;
}

struct Run {
  double energy = std::numeric_limits<double>::infinity();
  CMat orbitals;
  CVec coefficients;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

class RankProblem {
 public:
  RankProblem(const FockBasis& basis, CMat sector_h, int n, int rank)
      : basis_(basis), h_(std::move(sector_h)), n_(n), small_(rank, n, basis.statistics()) {}

  double energy(const CMat& u, CVec* c, CVec* psi) const {
    CMat lift = lift_sector(small_, basis_, u, n_);
    CMat hs = lift.adjoint() * h_ * lift;
    hs = 0.5 * (hs + hs.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(hs);
    if (c) *c = es.eigenvectors().col(0);
    if (psi) *psi = lift * es.eigenvectors().col(0);
    return es.eigenvalues()(0);
  }

  // Riemannian gradient (1 - U U*) 2 conj(M) U, M_ab = <a_a H psi, a_b psi>.
  CMat gradient(const CMat& u, const CVec& psi) const {
    if (n_ == 0) return CMat::Zero(u.rows(), u.cols());
    CVec hpsi = h_ * psi;
    CMat x = annihilate_all(basis_, n_, hpsi);
    CMat y = annihilate_all(basis_, n_, psi);
    CMat m = x.adjoint() * y;
    CMat g = 2.0 * m.conjugate() * u;
    return g - u * (u.adjoint() * g);
  }

  // Riemannian Polak-Ribiere+ conjugate gradient; the previous direction is
  // carried over by tangent projection, the trial step comes from
  // Barzilai-Borwein, and Armijo backtracking keeps every accepted step
  // energy-decreasing.
  Run minimize(CMat u, int max_iterations, double tol) const {
    Run run;
    u = qr_frame(u);
    CVec c, psi;
    double e = energy(u, &c, &psi);
    CMat xi_prev, d_prev;
    double step = 1.0;
    auto tangent = [](const CMat& frame, const CMat& x) { return CMat(x - frame * (frame.adjoint() * x)); };
    for (int it = 0; it < max_iterations; ++it) {
      CMat xi = gradient(u, psi);
      const double gn2 = xi.squaredNorm();
      run.gradient_norm = std::sqrt(gn2);
      run.iterations = it;
      if (run.gradient_norm <= tol) {
        run.converged = true;
        break;
      }
      CMat d = -xi;
      if (d_prev.size() > 0) {
        CMat xp = tangent(u, xi_prev);
        CMat dp = tangent(u, d_prev);
        double beta = std::max(0.0, (xi.adjoint() * (xi - xp)).trace().real() / xi_prev.squaredNorm());
        d += beta * dp;
        if ((xi.adjoint() * d).trace().real() >= 0.0) d = -xi;
        CMat y = xi - xp;
        double sy = std::abs((dp.adjoint() * y).trace().real());
        if (sy > 0.0) step = std::clamp(dp.squaredNorm() / sy, 1e-8, 1e3);
      }
      const double slope = (xi.adjoint() * d).trace().real();
      bool accepted = false;
      double t = step;
      for (int back = 0; back < 60; ++back, t *= 0.5) {
        CMat trial = qr_frame(u + t * d);
        CVec c2, psi2;
        double e2 = energy(trial, &c2, &psi2);
        if (e2 <= e + 1e-4 * t * slope) {
          u = std::move(trial);
          c = std::move(c2);
          psi = std::move(psi2);
          e = e2;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;  // stagnation: no descent at machine precision
      xi_prev = std::move(xi);
      d_prev = t * d;
      step = t;
    }
    run.energy = e;
    run.orbitals = u;
    run.coefficients = c;
    return run;
  }

  const FockBasis& small() const { return small_; }

 private:
  const FockBasis& basis_;
  CMat h_;
  int n_;
  FockBasis small_;
};

CMat sector_hamiltonian(const FockBasis& basis, const OneBodyOperator& h, const TwoBodyKernel& w,
                        int n) {
  require(n >= 0 && n <= basis.max_particles(), "finite rank: sector out of range");
  return assemble_hamiltonian(basis, h, w).block(n, n);
}

}  // namespace

double finite_rank_energy(const FockBasis& basis, const CMat& sector_h, const CMat& orbitals, int n,
                          CVec* coefficients) {
  RankProblem p(basis, sector_h, n, static_cast<int>(orbitals.cols()));
  return p.energy(orbitals, coefficients, nullptr);
}

FiniteRankResult finite_rank_minimize(const FockBasis& basis, const OneBodyOperator& h,
                                      const TwoBodyKernel& w, int n, int rank,
                                      const FiniteRankOptions& opts) {
  const int r = basis.modes();
  require(h.modes() == r && w.modes() == r, "finite_rank_minimize: size mismatch");
  require(rank >= 1 && rank <= r, "finite_rank_minimize: rank must lie in [1, dim]");
  if (basis.is_fermionic()) require(n <= rank, "finite_rank_minimize: fermions need N <= rank");
  require(opts.restarts >= 1, "finite_rank_minimize: at least one restart");

  RankProblem problem(basis, sector_hamiltonian(basis, h, w, n), n, rank);

  std::vector<CMat> starts(opts.restarts);
  {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h.matrix + h.matrix.adjoint()));
    for (int i = 0; i < opts.restarts; ++i) {
      if (i == 0 && opts.initial_orbitals) {
        require(opts.initial_orbitals->rows() == r && opts.initial_orbitals->cols() == rank,
                "finite_rank_minimize: initial orbitals have the wrong shape");
        starts[i] = *opts.initial_orbitals;
      } else if (i == 0) {
        starts[i] = es.eigenvectors().leftCols(rank);
      } else {
        starts[i] = random_frame(r, rank, opts.seed, i);
      }
    }
  }

  std::vector<Run> runs(opts.restarts);
  parallel_for(opts.restarts, [&](int i) {
    runs[i] = problem.minimize(starts[i], opts.max_iterations, opts.gradient_tol);
  });

  FiniteRankResult out;
  out.n = n;
  out.rank = rank;
  int best = 0;
  for (int i = 0; i < opts.restarts; ++i) {
    out.restart_energies.push_back(runs[i].energy);
    if (runs[i].energy < runs[best].energy - 1e-13) best = i;
  }
  const Run& b = runs[best];
  out.energy = b.energy;
  out.orbitals = b.orbitals;
  out.coefficients = b.coefficients;
  out.vector = lift_sector(problem.small(), basis, b.orbitals, n) * b.coefficients;
  out.converged = b.converged;
  out.iterations = b.iterations;
  out.gradient_norm = b.gradient_norm;
  return out;
}

}  // namespace geofock
