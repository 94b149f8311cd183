#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <optional>

#include "geofock/parallel.hpp"
#include "geofock/solvers.hpp"

namespace geofock {

PekarModel make_pekar_model(const OneBodySpace& space, Statistics stats, double alpha, double u,
                            double softening) {
  require(space.basis_kind() == BasisKind::position_lattice,
          "pekar model: position lattice required");
  require(alpha >= 0.0 && u >= 0.0, "pekar model: couplings must be nonnegative");
  auto samples = soft_coulomb_pair(space, softening);
  PekarModel m{space,
               stats,
               alpha,
               u,
               kinetic_operator(space),
               two_body_kernel(space, samples, stats),
               pair_matrix(space, samples)};
  return m;
}

namespace {

// Sector-n pieces that do not depend on the density: the linear Hamiltonian
// T + U W and the site occupation numbers of every configuration.
struct SectorData {
  FockBasis basis;
  CMat linear;
  RMat occupation;  // configurations x sites

  SectorData(const PekarModel& m, const FockBasis& b, int n) : basis(b) {
    require(n >= 0 && n <= b.max_particles(), "pekar: sector out of range");
    require(b.modes() == m.space.modes() && b.statistics() == m.stats,
            "pekar: basis does not match the model");
    linear = assemble_hamiltonian(b, m.kinetic, m.repulsion.scaled(m.coupling_u)).block(n, n);
    occupation = RMat::Zero(b.sector_size(n), b.modes());
    for (int c = 0; c < b.sector_size(n); ++c)
      for (int mode : b.configuration(n, c)) occupation(c, mode) += 1.0;
  }

  RVec site_occupation(const CVec& psi) const {
    return occupation.transpose() * psi.cwiseAbs2();
  }

  CMat mean_field(const PekarModel& m, const RVec& sigma) const {
    RVec v = -m.alpha * (m.attraction * sigma);
    CMat h = linear;
    h.diagonal() += (occupation * v).cast<cplx>();
    return h;
  }

  double energy(const PekarModel& m, const CVec& psi) const {
    RVec nx = site_occupation(psi);
    double lin = psi.dot(linear * psi).real();
    return lin - 0.5 * m.alpha * nx.dot(m.attraction * nx);
  }
};

void check_normalized(const CVec& psi, int expected) {
  require(psi.size() == expected, "pekar_energy: vector does not match the sector");
  require(std::abs(psi.norm() - 1.0) <= 1e-10, "pekar_energy: psi must be normalized");
}

struct SeedRun {
  PekarResult result;
  std::vector<double> trace;
};

struct Probe {
  RVec sigma;
  CVec psi;
  RVec occupation;
  double mixed = 0.0;  // F(psi, sigma)
};

// F(psi, sigma) = <psi, H(sigma) psi> + (alpha/2) sigma K sigma with psi the
// ground state of H(sigma). It bounds the energy from above, equals it at a
// fixed point, and cannot rise under a damped step when K is positive-type.
Probe probe(const PekarModel& m, const SectorData& sd, const RVec& sigma) {
  Eigen::SelfAdjointEigenSolver<CMat> es(sd.mean_field(m, sigma));
  Probe p{sigma, es.eigenvectors().col(0), RVec(), 0.0};
  p.occupation = sd.site_occupation(p.psi);
  p.mixed = es.eigenvalues()(0) + 0.5 * m.alpha * sigma.dot(m.attraction * sigma);
  return p;
}

// Anderson extrapolation over the stored (sigma, residual) history, projected
// back onto nonnegative occupations with the right total.
RVec anderson_candidate(const std::vector<RVec>& sig, const std::vector<RVec>& res, double theta,
                        double total) {
  const int k = static_cast<int>(sig.size()) - 1;
  RMat ds(sig[0].size(), k), df(sig[0].size(), k);
  for (int i = 0; i < k; ++i) {
    ds.col(i) = sig[i + 1] - sig[i];
    df.col(i) = res[i + 1] - res[i];
  }
  RVec gamma = df.completeOrthogonalDecomposition().solve(res[k]);
  RVec next = sig[k] + theta * res[k] - (ds + theta * df) * gamma;
  next = next.cwiseMax(0.0);
  double sum = next.sum();
  if (!(sum > 0.0)) return sig[k] + theta * res[k];
  return next * (total / sum);
}

SeedRun run_from(const PekarModel& m, const SectorData& sd, int n, RVec sigma0,
                 const PekarOptions& opts, const std::string& seed) {
  constexpr int depth = 6;
  SeedRun out;
  PekarResult& r = out.result;
  r.alpha = m.alpha;
  r.coupling_u = m.coupling_u;
  r.n = n;
  r.seed = seed;
  double theta = opts.theta;
  RVec sigma = sigma0;
  auto rises = [](double f, double ref) { return f > ref + 1e-12 * std::max(1.0, std::abs(ref)); };
  for (int halving = 0; halving <= opts.max_halvings; ++halving, theta *= 0.5) {
    bool diverged = false;
    out.trace.clear();
    Probe cur = probe(m, sd, sigma0);
    std::vector<RVec> hist_sigma{cur.sigma}, hist_res{cur.occupation - cur.sigma};
    out.trace.push_back(cur.mixed);
    for (int it = 0; it < opts.max_iterations; ++it) {
      ++r.iterations;
      RVec res = cur.occupation - cur.sigma;
      if (res.lpNorm<1>() <= opts.tol) {
        r.wavefunction = cur.psi;
        r.converged = true;
        r.theta = theta;
        break;
      }
      std::optional<Probe> next;
      if (hist_sigma.size() >= 2) {
        Probe cand = probe(m, sd, anderson_candidate(hist_sigma, hist_res, theta, n));
        if (!rises(cand.mixed, cur.mixed)) next = std::move(cand);
      }
      if (!next) {
        hist_sigma.assign(1, cur.sigma);
        hist_res.assign(1, res);
        next = probe(m, sd, cur.sigma + theta * res);
        if (rises(next->mixed, cur.mixed)) {
          r.monotone = false;
          diverged = true;
          break;
        }
      }
      cur = std::move(*next);
      out.trace.push_back(cur.mixed);
      hist_sigma.push_back(cur.sigma);
      hist_res.push_back(cur.occupation - cur.sigma);
      if (static_cast<int>(hist_sigma.size()) > depth + 1) {
        hist_sigma.erase(hist_sigma.begin());
        hist_res.erase(hist_res.begin());
      }
    }
    sigma = cur.sigma;
    if (r.converged || !diverged) break;
  }
  if (!r.converged) {
    Eigen::SelfAdjointEigenSolver<CMat> es(sd.mean_field(m, sigma));
    r.wavefunction = es.eigenvectors().col(0);
    r.theta = theta;
  }
  CVec& psi = r.wavefunction;
  Eigen::Index k = 0;
  psi.cwiseAbs().maxCoeff(&k);
  psi /= psi(k) / std::abs(psi(k));
  r.occupation = sd.site_occupation(psi);
  CMat hp = sd.mean_field(m, r.occupation);
  CVec hpsi = hp * psi;
  r.mu = psi.dot(hpsi).real();
  r.scf_residual = (hpsi - r.mu * psi).norm();
  r.energy = sd.energy(m, psi);
  return out;
}

int central_site(const OneBodySpace& space) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int s = 0; s < space.modes(); ++s) {
    auto p = space.site_position(s);
    double d = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if (d < best_d - 1e-12) {
      best_d = d;
      best = s;
    }
  }
  return best;
}

}  // namespace

double pekar_energy(const PekarModel& model, const FockBasis& basis, int n, const CVec& psi) {
  SectorData sd(model, basis, n);
  check_normalized(psi, basis.sector_size(n));
  return sd.energy(model, psi);
}

double pekar_mixed_energy(const PekarModel& model, const FockBasis& basis, int n,
                          const std::vector<double>& weights, const std::vector<CVec>& psis) {
  require(weights.size() == psis.size() && !psis.empty(), "pekar_mixed_energy: size mismatch");
  SectorData sd(model, basis, n);
  RVec nx = RVec::Zero(basis.modes());
  double lin = 0.0, total = 0.0;
  for (std::size_t i = 0; i < psis.size(); ++i) {
    require(weights[i] >= 0.0, "pekar_mixed_energy: negative weight");
    check_normalized(psis[i], basis.sector_size(n));
    nx += weights[i] * sd.site_occupation(psis[i]);
    lin += weights[i] * psis[i].dot(sd.linear * psis[i]).real();
    total += weights[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, "pekar_mixed_energy: weights must sum to one");
  return lin - 0.5 * model.alpha * nx.dot(model.attraction * nx);
}

CMat pekar_mean_field(const PekarModel& model, const FockBasis& basis, int n, const RVec& occupation) {
  require(occupation.size() == basis.modes(), "pekar_mean_field: one occupation per site");
  return SectorData(model, basis, n).mean_field(model, occupation);
}

PekarResult pekar_minimize(const PekarModel& model, int n, const PekarOptions& opts) {
  require(n >= 1, "pekar_minimize: N >= 1");
  require(opts.theta > 0.0 && opts.theta <= 1.0, "pekar_minimize: theta must lie in (0, 1]");
  const int r = model.space.modes();
  if (model.stats == Statistics::fermion) require(n <= r, "pekar_minimize: too many fermions");
  FockBasis basis(r, n, model.stats);
  SectorData sd(model, basis, n);

  std::vector<std::pair<std::string, RVec>> seeds;
  if (opts.warm_start) {
    require(opts.warm_start->size() == r, "pekar_minimize: warm start has the wrong size");
    seeds.emplace_back("warm", *opts.warm_start);
  }
  if (opts.uniform_seed) seeds.emplace_back("uniform", RVec::Constant(r, double(n) / r));
  if (opts.site_seed) {
    RVec s = RVec::Zero(r);
    s(central_site(model.space)) = n;
    seeds.emplace_back("site", s);
  }
  require(!seeds.empty(), "pekar_minimize: no seeds enabled");

  std::vector<SeedRun> runs(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), [&](int i) {
    runs[i] = run_from(model, sd, n, seeds[i].second, opts, seeds[i].first);
  });
  int best = -1;
  for (int i = 0; i < static_cast<int>(runs.size()); ++i) {
    const auto& ri = runs[i].result;
    if (best < 0) {
      best = i;
      continue;
    }
    const auto& rb = runs[best].result;
    if ((ri.converged && !rb.converged) ||
        (ri.converged == rb.converged && ri.energy < rb.energy - 1e-12))
      best = i;
  }
  PekarResult out = runs[best].result;
  out.restart_energies.clear();
  for (const auto& run : runs) out.restart_energies.push_back(run.result.energy);
  return out;
}

BindingCurve binding_scan(const PekarModel& base, int n, const std::vector<double>& alpha_grid,
                          const PekarOptions& opts) {
  require(n >= 2, "binding_scan: N >= 2");
  require(!alpha_grid.empty(), "binding_scan: empty grid");
  for (std::size_t i = 1; i < alpha_grid.size(); ++i)
    require(alpha_grid[i] > alpha_grid[i - 1], "binding_scan: alpha grid must ascend");

  BindingCurve curve;
  std::vector<std::optional<RVec>> warm(n + 1);
  for (double alpha : alpha_grid) {
    PekarModel m = base;
    m.alpha = alpha;
    BindingPoint pt;
    pt.alpha = alpha;
    pt.energies.assign(n + 1, 0.0);
    std::vector<PekarResult> res(n);
    parallel_for(n, [&](int i) {
      PekarOptions o = opts;
      o.warm_start = warm[i + 1];
      res[i] = pekar_minimize(m, i + 1, o);
    });
    pt.converged = true;
    for (int k = 1; k <= n; ++k) {
      const auto& rk = res[k - 1];
      pt.energies[k] = rk.energy;
      pt.converged = pt.converged && rk.converged;
      pt.max_residual = std::max(pt.max_residual, rk.scf_residual);
      warm[k] = rk.occupation;
    }
    for (int k = 1; k < n; ++k) pt.margins.push_back(pt.energies[n] - pt.energies[n - k] - pt.energies[k]);
    pt.binding_energy = pt.energies[n - 1] + pt.energies[1] - pt.energies[n];
    curve.points.push_back(std::move(pt));
  }

  const auto& p = curve.points;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    double b0 = p[i].binding_energy, b1 = p[i + 1].binding_energy;
    curve.monotonicity_violation = std::max(curve.monotonicity_violation, b0 - b1);
    if (!curve.threshold && b0 <= 0.0 && b1 > 0.0)
      curve.threshold = p[i].alpha + (p[i + 1].alpha - p[i].alpha) * (-b0) / (b1 - b0);
  }
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    double a0 = p[i - 1].alpha, a1 = p[i].alpha, a2 = p[i + 1].alpha;
    double chord = ((a2 - a1) * p[i - 1].binding_energy + (a1 - a0) * p[i + 1].binding_energy) / (a2 - a0);
    curve.convexity_violation = std::max(curve.convexity_violation, p[i].binding_energy - chord);
  }
  curve.nondecreasing = curve.monotonicity_violation <= 1e-6;
  curve.convex = curve.convexity_violation <= 1e-6;
  return curve;
}

double pekar_scaling_deviation(int sites, double spacing, double alpha, double u, Statistics stats,
                               int n) {
  require(u > 0.0, "pekar_scaling_deviation: U must be positive");
  auto s1 = build_lattice_space(1, sites, sites * spacing);
  auto s2 = build_lattice_space(1, sites, sites * spacing * u);
  auto e1 = pekar_minimize(make_pekar_model(s1, stats, alpha, u, spacing), n);
  auto e2 = pekar_minimize(make_pekar_model(s2, stats, alpha / u, 1.0, spacing * u), n);
  if (!e1.converged || !e2.converged)
    throw ComputationError("pekar_scaling_deviation: SCF did not converge");
  return std::abs(e1.energy - u * u * e2.energy) / std::abs(e1.energy);
}

double hoffmann_ostenhof_check(const CMat& gamma1, const OneBodySpace& space) {
  require(space.basis_kind() == BasisKind::position_lattice,
          "hoffmann_ostenhof_check: position lattice required");
  const int r = space.modes();
  require(gamma1.rows() == r && gamma1.cols() == r, "hoffmann_ostenhof_check: size mismatch");
  const auto& g = space.geometry();
  const double h2 = g.spacing * g.spacing;
  double kinetic = (2.0 * kinetic_operator(space).matrix * gamma1).trace().real();
  RVec s(r);
  for (int x = 0; x < r; ++x) s(x) = std::sqrt(std::max(0.0, gamma1(x, x).real()));
  double grad = 0.0;
  for (int x = 0; x < r; ++x) {
    auto idx = space.site_index(x);
    for (int a = 0; a < g.dim; ++a) {
      auto nb = idx;
      nb[a] += 1;
      double next = 0.0;
      if (nb[a] < g.points) {
        next = s(space.site_from_index(nb));
      } else if (g.boundary == Boundary::periodic) {
        nb[a] = 0;
        next = s(space.site_from_index(nb));
      }
      grad += (next - s(x)) * (next - s(x));
      // Dirichlet ghost edge on the low side of the axis.
      if (idx[a] == 0 && g.boundary == Boundary::dirichlet) grad += s(x) * s(x);
    }
  }
  return kinetic - grad / h2;
}

double hoffmann_ostenhof_check(const MixedState& state, const OneBodySpace& space) {
  if (state.max_particles() == 0) return 0.0;
  return hoffmann_ostenhof_check(density_matrix(state, 1, 1).matrix, space);
}

}  // namespace geofock
