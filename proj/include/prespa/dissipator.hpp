#pragma once
// Ideal engineered dissipation: the even->odd recovery operator, the analytic
// piecewise-deterministic trajectory solution, and Monte Carlo unraveling.
// Everything here exploits that the compound jump operator is diagonal-acting
// on photon number (it maps |n> -> sqrt(n)|n+-0/1> keeping n's weight), so a
// trajectory depends only on its jump count, not the jump times.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "qalg.hpp"
#include "rng.hpp"

namespace prespa {

struct JumpProcess {
  Operator jump_op;            // compound loss + recovery operator
  double kappa = 0.0;          // 1/us
  Operator no_jump_generator;  // kappa * n / 2, diagonal

  static JumpProcess ideal_prespa(int dim, double kappa) {
    if (dim < 8) throw invalid_dimension("JumpProcess: dim must be >= 8");
    if (kappa < 0) throw invalid_input("JumpProcess: kappa must be >= 0");
    auto f = fock_operators(dim);
    Mat pi = Mat::Zero(dim, dim);
    for (int n = 0; n + 1 < dim; n += 2) pi(n + 1, n) = 1.0;
    Mat j = pi * f.lowering.elements;
    Mat g = 0.5 * kappa * f.number.elements;
    HilbertSpace sp = single_mode(dim);
    return {Operator(sp, std::move(j)), kappa, Operator(sp, std::move(g), true)};
  }
};

// |1><0| + |3><2| + |5><4| + |7><6| on exactly the first eight levels.
inline Operator prespa_truncated(int dim) {
  if (dim < 8) throw invalid_dimension("prespa_truncated: dim must be >= 8");
  Mat pi = Mat::Zero(dim, dim);
  for (int n = 0; n <= 6; n += 2) pi(n + 1, n) = 1.0;
  return {single_mode(dim), std::move(pi)};
}

// Sum |2n+1><2n| over the whole truncated space.
inline Operator prespa_infinite(int ncut) {
  if (ncut < 8 || ncut % 2 != 0)
    throw invalid_dimension("prespa_infinite: ncut must be even and >= 8");
  Mat pi = Mat::Zero(ncut, ncut);
  for (int n = 0; n + 1 < ncut; n += 2) pi(n + 1, n) = 1.0;
  return {single_mode(ncut), std::move(pi)};
}

// V(t) = exp(-kappa t n/2): deterministic decay between jumps.
inline Operator no_jump_propagator(const JumpProcess& jp, double t) {
  if (t < 0) throw invalid_input("no_jump_propagator: t must be >= 0");
  int dim = jp.no_jump_generator.space.total();
  Mat v = Mat::Zero(dim, dim);
  for (int n = 0; n < dim; ++n)
    v(n, n) = std::exp(-jp.no_jump_generator.elements(n, n).real() * t);
  return {jp.no_jump_generator.space, std::move(v)};
}

// Trajectory after exactly j jumps at time t: amplitudes C_n n^{j/2} e^{-n kappa t/2}
// on the shifted support (each jump maps |n> to |n+... recovered level> carrying
// weight sqrt(n)). For the parity-recovering jump the Fock label returns to its
// starting value after loss + recovery, so only the weights matter.
inline StateVector trajectory_state(const StateVector& psi0, int j, double t,
                                    const JumpProcess& jp) {
  if (j < 0) throw invalid_input("trajectory_state: j must be >= 0");
  if (t < 0) throw invalid_input("trajectory_state: t must be >= 0");
  const int dim = psi0.space.total();
  Vec v = no_jump_propagator(jp, t).elements.diagonal().cwiseProduct(psi0.amplitudes);
  for (int k = 0; k < j; ++k) v = jp.jump_op.elements * v;
  double nrm = v.norm();
  if (nrm < 1e-300)
    throw impossible_trajectory("trajectory_state: j jumps annihilate the state");
  Vec out = v / nrm;
  return {single_mode(dim), std::move(out)};
}

struct JumpCountProbs {
  std::vector<double> p;  // p_j for j = 0..jmax
  double deficit = 0.0;   // 1 - sum(p)
};

// p_j(t) = (kappa t)^j / j! * ||J^j V(t) psi0||^2, evaluated per Fock component
// in log space: each |n> contributes |C_n|^2 Poisson(j; n kappa t).
inline JumpCountProbs jump_count_probs(const StateVector& psi0, double t, int jmax,
                                       const JumpProcess& jp) {
  if (jmax < 0) throw invalid_input("jump_count_probs: jmax must be >= 0");
  if (t < 0) throw invalid_input("jump_count_probs: t must be >= 0");
  const int dim = psi0.space.total();
  const double kt = jp.kappa * t;
  JumpCountProbs out;
  out.p.assign(jmax + 1, 0.0);
  for (int n = 0; n < dim; ++n) {
    double w = std::norm(psi0.amplitudes[n]);
    if (w == 0.0) continue;
    double mean = n * kt;
    for (int j = 0; j <= jmax; ++j) {
      double logp;
      if (mean == 0.0)
        logp = (j == 0) ? 0.0 : -std::numeric_limits<double>::infinity();
      else
        logp = j * std::log(mean) - mean - std::lgamma(j + 1.0);
      out.p[j] += w * std::exp(logp);
    }
  }
  double tot = 0.0;
  for (double q : out.p) tot += q;
  out.deficit = 1.0 - tot;
  return out;
}

struct TrajectoryTerm {
  double weight;
  StateVector state;
};

struct TrajectoryMixture {
  std::vector<TrajectoryTerm> terms;
  double time = 0.0;
  double deficit = 0.0;  // probability beyond the j-cutoff
};

inline TrajectoryMixture trajectory_mixture(const StateVector& psi0, double t, int jmax,
                                            const JumpProcess& jp) {
  auto probs = jump_count_probs(psi0, t, jmax, jp);
  TrajectoryMixture mix;
  mix.time = t;
  mix.deficit = probs.deficit;
  mix.terms.reserve(jmax + 1);
  for (int j = 0; j <= jmax; ++j) {
    if (probs.p[j] <= 0.0) continue;
    mix.terms.push_back({probs.p[j], trajectory_state(psi0, j, t, jp)});
  }
  return mix;
}

inline DensityMatrix averaged_density(const StateVector& psi0, double t, int jmax,
                                      const JumpProcess& jp) {
  auto mix = trajectory_mixture(psi0, t, jmax, jp);
  const int dim = psi0.space.total();
  Mat rho = Mat::Zero(dim, dim);
  double tot = 0.0;
  for (const auto& term : mix.terms) {
    rho += term.weight * (term.state.amplitudes * term.state.amplitudes.adjoint());
    tot += term.weight;
  }
  if (tot <= 0.0) throw impossible_trajectory("averaged_density: empty mixture");
  rho /= tot;
  return {psi0.space, std::move(rho)};
}

struct UnravelResult {
  std::vector<int> jump_counts;  // one entry per trajectory
  DensityMatrix ensemble;        // average of final-state projectors
};

// First-order jump unraveling. Substeps keep kappa<n> delta <= 0.01. The
// ensemble reduction runs over fixed 64-trajectory chunks in index order, so
// the result is byte-identical for any worker count.
inline UnravelResult monte_carlo_unravel(const StateVector& psi0, double t, int ntraj,
                                         std::uint64_t seed, const JumpProcess& jp,
                                         int threads = 1) {
  if (ntraj < 1) throw invalid_input("monte_carlo_unravel: ntraj must be >= 1");
  if (t < 0) throw invalid_input("monte_carlo_unravel: t must be >= 0");
  const int dim = psi0.space.total();
  const Mat& jop = jp.jump_op.elements;
  Vec gen_diag = jp.no_jump_generator.elements.diagonal();

  auto run_one = [&](std::uint64_t idx, int& jumps_out) {
    Rng rng(derive_seed(seed, idx));
    Vec psi = psi0.amplitudes;
    int jumps = 0;
    double now = 0.0;
    while (now < t) {
      double nbar = 0.0;
      for (int n = 0; n < dim; ++n) nbar += std::norm(psi[n]) * n;
      double rate = jp.kappa * std::max(nbar, 1e-12);
      double dt = std::min(0.01 / rate, t - now);
      double pj = rate * dt;
      if (rng.uniform() < pj) {
        Vec jumped = jop * psi;
        double nrm = jumped.norm();
        if (nrm < 1e-300)
          throw impossible_trajectory("monte_carlo_unravel: jump annihilated state");
        psi = jumped / nrm;
        ++jumps;
      } else {
        for (int n = 0; n < dim; ++n)
          psi[n] *= std::exp(-gen_diag[n].real() * dt);
        psi /= psi.norm();
      }
      now += dt;
    }
    jumps_out = jumps;
    return psi;
  };

  const int chunk = 64;
  const int nchunks = (ntraj + chunk - 1) / chunk;
  std::vector<Mat> chunk_rho(nchunks);
  std::vector<int> counts(ntraj, 0);

  auto run_chunk = [&](int c) {
    Mat acc = Mat::Zero(dim, dim);
    int lo = c * chunk, hi = std::min(ntraj, lo + chunk);
    for (int i = lo; i < hi; ++i) {
      Vec fin = run_one(static_cast<std::uint64_t>(i), counts[i]);
      acc += fin * fin.adjoint();
    }
    chunk_rho[c] = std::move(acc);
  };

  int nworkers = std::max(1, threads);
  if (nworkers == 1) {
    for (int c = 0; c < nchunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < nworkers; ++w)
      pool.emplace_back([&] {
        for (int c = next.fetch_add(1); c < nchunks; c = next.fetch_add(1)) run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }

  Mat rho = Mat::Zero(dim, dim);
  for (int c = 0; c < nchunks; ++c) rho += chunk_rho[c];
  rho /= static_cast<double>(ntraj);
  return {std::move(counts), DensityMatrix(psi0.space, std::move(rho))};
}

}  // namespace prespa
