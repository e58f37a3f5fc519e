#pragma once
// Piecewise-constant pulse optimization on the dispersive cavity-transmon
// model: exact step propagators by eigendecomposition, reverse-mode cost
// gradients, and an ADAM descent loop.
//
// Conventions: Hamiltonians in rad/us, control grids in ns.  Joint spaces
// order the cavity first (slow index), transmon second.

#include <cmath>
#include <complex>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "circuitmodel.hpp"
#include "codes.hpp"
#include "decoder.hpp"
#include "errors.hpp"
#include "qalg.hpp"
#include "rng.hpp"

namespace prespa {

struct ControlPulse {
  Eigen::MatrixXd u;       // one row per control, one column per step
  double dt_ns = 1.0;
  double duration_us = 0;  // must equal cols * dt

  void validate() const {
    if (u.rows() < 1 || u.cols() < 1)
      throw invalid_input("ControlPulse: empty amplitude grid");
    if (!(dt_ns > 0) || !std::isfinite(dt_ns))
      throw invalid_input("ControlPulse: step must be positive");
    if (!u.allFinite()) throw invalid_input("ControlPulse: non-finite amplitude");
    if (std::abs(u.cols() * dt_ns * 1e-3 - duration_us) > 1e-9)
      throw invalid_input("ControlPulse: duration does not match the grid");
  }

  static ControlPulse gaussian_noise(int controls, int steps, double dt_ns,
                                     double sigma, Rng& rng) {
    if (controls < 1 || steps < 1)
      throw invalid_input("ControlPulse: empty amplitude grid");
    ControlPulse p;
    p.u.resize(controls, steps);
    for (int k = 0; k < controls; ++k)
      for (int n = 0; n < steps; ++n) p.u(k, n) = sigma * rng.normal();
    p.dt_ns = dt_ns;
    p.duration_us = steps * dt_ns * 1e-3;
    return p;
  }

  // Same waveform on a grid `factor` times finer.
  ControlPulse refined(int factor) const {
    if (factor < 1) throw invalid_input("ControlPulse: refinement factor < 1");
    ControlPulse p;
    p.u.resize(u.rows(), u.cols() * factor);
    for (int n = 0; n < u.cols(); ++n)
      for (int r = 0; r < factor; ++r) p.u.col(n * factor + r) = u.col(n);
    p.dt_ns = dt_ns / factor;
    p.duration_us = duration_us;
    return p;
  }
};

struct CostBreakdown {
  double total = 0;
  double infidelity = 0;  // 1 - overlap with the target
  double roughness = 0;   // step-to-step amplitude jumps
  double power = 0;       // integrated squared amplitude
  double forbidden = 0;   // occupation of penalized states
};

struct AdamConfig {
  double eta0 = 0.1;           // initial step size
  double beta = 5e-4;          // exponential step-size decay per iteration
  double decay1 = 0.9;         // first-moment averaging
  double decay2 = 0.999;       // second-moment averaging
  double eps = 1e-8;
  int max_iters = 2000;
  double stop_infidelity = 0;  // early stop threshold (0 disables)
  double init_sigma = 0.05;    // white-noise start amplitude

  void validate() const {
    if (!(eta0 > 0) || !(beta >= 0) || !(decay1 >= 0) || decay1 >= 1 ||
        !(decay2 >= 0) || decay2 >= 1 || !(eps > 0) || max_iters < 1 ||
        !(stop_infidelity >= 0) || !(init_sigma > 0))
      throw invalid_input("AdamConfig: parameter outside its range");
  }
};

// Target unitary given by its action on an orthonormal set of domain columns.
struct UnitarySubspaceTarget {
  Mat basis;  // dim x D
  Mat image;  // dim x D
};

struct ControlProblem {
  Operator h0;                    // drift, rad/us
  std::vector<Operator> controls; // one Hermitian generator per pulse row
  bool unitary_mode = false;
  Vec psi0, psi_target;           // state-transfer target
  UnitarySubspaceTarget target;   // subspace-unitary target
  double roughness_weight = 0;
  double power_weight = 0;
  double forbidden_weight = 0;
  std::vector<Vec> forbidden;     // normalized states to keep unoccupied
  double duration_us = 1.0;
  double dt_ns = 1.0;
  AdamConfig adam;

  int dim() const { return h0.space.total(); }
  int steps() const {
    return static_cast<int>(std::lround(duration_us * 1000.0 / dt_ns));
  }

  void validate() const {
    const int d = dim();
    if (controls.empty()) throw invalid_input("ControlProblem: no controls");
    for (const auto& c : controls) {
      if (c.elements.rows() != d || c.elements.cols() != d)
        throw invalid_dimension("ControlProblem: control dimension mismatch");
      if ((c.elements - c.elements.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw invalid_input("ControlProblem: control not Hermitian");
    }
    if ((h0.elements - h0.elements.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
      throw invalid_input("ControlProblem: drift not Hermitian");
    if (unitary_mode) {
      const int cols = static_cast<int>(target.basis.cols());
      if (cols < 1 || target.basis.rows() != d || target.image.rows() != d ||
          target.image.cols() != cols)
        throw invalid_dimension("ControlProblem: target shape mismatch");
      const Mat gram_b = target.basis.adjoint() * target.basis;
      const Mat gram_t = target.image.adjoint() * target.image;
      const Mat eye = Mat::Identity(cols, cols);
      if ((gram_b - eye).cwiseAbs().maxCoeff() > 1e-9 ||
          (gram_t - eye).cwiseAbs().maxCoeff() > 1e-9)
        throw invalid_input("ControlProblem: target columns not orthonormal");
    } else {
      if (psi0.size() != d || psi_target.size() != d)
        throw invalid_dimension("ControlProblem: state dimension mismatch");
      if (std::abs(psi0.norm() - 1.0) > 1e-9 ||
          std::abs(psi_target.norm() - 1.0) > 1e-9)
        throw invalid_input("ControlProblem: states must be normalized");
    }
    if (!(roughness_weight >= 0) || !(power_weight >= 0) ||
        !(forbidden_weight >= 0))
      throw invalid_input("ControlProblem: negative cost weight");
    for (const auto& f : forbidden)
      if (f.size() != d || std::abs(f.norm() - 1.0) > 1e-9)
        throw invalid_input("ControlProblem: forbidden state not normalized");
    if (!(duration_us > 0) || !(dt_ns > 0) || steps() < 1)
      throw invalid_input("ControlProblem: empty time grid");
    adam.validate();
  }
};

namespace detail {

// Cost and (optionally) its exact gradient in one forward/backward sweep.
// The step propagator exp(-i H_n dt) and its directional derivatives are
// evaluated in the eigenbasis of each H_n; gradients are accumulated through
// the adjoint recursion with forbidden-state source terms.
inline CostBreakdown evaluate_pulse(const ControlProblem& p,
                                    const ControlPulse& pulse,
                                    Eigen::MatrixXd* grad) {
  const int d = p.dim();
  const int nsteps = static_cast<int>(pulse.u.cols());
  const int nctl = static_cast<int>(p.controls.size());
  const double dt = pulse.dt_ns * 1e-3;  // us
  const cx mi(0.0, -1.0);

  Mat start;
  if (p.unitary_mode)
    start = p.target.basis;
  else
    start = p.psi0;
  const int ncols = static_cast<int>(start.cols());
  const double fid_norm = p.unitary_mode ? double(ncols) * ncols : 1.0;

  const bool need_states = grad != nullptr;
  std::vector<Mat> vecs, states;
  std::vector<Vec> phases;
  std::vector<Eigen::VectorXd> lams;
  if (need_states) {
    vecs.resize(nsteps);
    phases.resize(nsteps);
    lams.resize(nsteps);
    states.resize(nsteps + 1);
    states[0] = start;
  }

  CostBreakdown cb;
  Eigen::SelfAdjointEigenSolver<Mat> es;
  Mat h(d, d), cur = start, tmp(d, ncols);
  Vec ph(d);
  for (int n = 0; n < nsteps; ++n) {
    h = p.h0.elements;
    for (int k = 0; k < nctl; ++k) h += pulse.u(k, n) * p.controls[k].elements;
    es.compute(h);
    if (es.info() != Eigen::Success)
      throw optimizer_error("step eigendecomposition failed");
    ph = ((mi * dt) * es.eigenvalues().cast<cx>().array()).exp().matrix();
    tmp.noalias() = es.eigenvectors().adjoint() * cur;
    tmp.array().colwise() *= ph.array();
    cur.noalias() = es.eigenvectors() * tmp;
    if (need_states) {
      vecs[n] = es.eigenvectors();
      phases[n] = ph;
      lams[n] = es.eigenvalues();
      states[n + 1] = cur;
    }
    for (const auto& f : p.forbidden)
      cb.forbidden += (f.adjoint() * cur).squaredNorm();
  }

  cx c;
  if (p.unitary_mode)
    c = (p.target.image.adjoint() * cur).trace();
  else
    c = (p.psi_target.adjoint() * cur)(0, 0);
  cb.infidelity = 1.0 - std::norm(c) / fid_norm;
  for (int k = 0; k < nctl; ++k)
    for (int n = 1; n < nsteps; ++n)
      cb.roughness += std::pow(pulse.u(k, n) - pulse.u(k, n - 1), 2);
  cb.power = pulse.u.squaredNorm();
  cb.total = cb.infidelity + p.roughness_weight * cb.roughness +
             p.power_weight * cb.power + p.forbidden_weight * cb.forbidden;

  if (!grad) return cb;

  grad->setZero(nctl, nsteps);
  Mat tgt;
  if (p.unitary_mode)
    tgt = p.target.image;
  else
    tgt = p.psi_target;
  Mat lam = -(c / fid_norm) * tgt;  // dC/d(conj state), propagated backward
  for (const auto& f : p.forbidden)
    lam.noalias() += p.forbidden_weight * f * (f.adjoint() * states[nsteps]);

  Mat a(d, ncols), b(d, ncols), r(d, d), kmat(d, d), phi(d, d), work(d, d);
  for (int n = nsteps - 1; n >= 0; --n) {
    a.noalias() = vecs[n].adjoint() * lam;
    b.noalias() = vecs[n].adjoint() * states[n];
    // Divided-difference table of the step exponential over the spectrum.
    for (int pp = 0; pp < d; ++pp) {
      phi(pp, pp) = phases[n](pp);
      for (int q = pp + 1; q < d; ++q) {
        const double dl = lams[n](pp) - lams[n](q);
        const cx val = (std::abs(dl) * dt < 1e-8)
                           ? 0.5 * (phases[n](pp) + phases[n](q))
                           : (phases[n](pp) - phases[n](q)) / (mi * dt * cx(dl));
        phi(pp, q) = val;
        phi(q, pp) = val;
      }
    }
    r.noalias() = a.conjugate() * b.transpose();
    r = r.cwiseProduct(phi);
    work.noalias() = r.transpose() * vecs[n].adjoint();
    kmat.noalias() = vecs[n] * work;
    for (int k = 0; k < nctl; ++k) {
      const cx tr = p.controls[k].elements.cwiseProduct(kmat.transpose()).sum();
      (*grad)(k, n) = 2.0 * std::real(mi * dt * tr);
    }
    // lam step: U_n^dagger lam, plus the forbidden-state source at time n.
    a.array().colwise() *= phases[n].conjugate().array();
    lam.noalias() = vecs[n] * a;
    if (n >= 1)
      for (const auto& f : p.forbidden)
        lam.noalias() += p.forbidden_weight * f * (f.adjoint() * states[n]);
  }

  for (int k = 0; k < nctl; ++k)
    for (int n = 0; n < nsteps; ++n) {
      double g = 2.0 * p.power_weight * pulse.u(k, n);
      if (n >= 1)
        g += 2.0 * p.roughness_weight * (pulse.u(k, n) - pulse.u(k, n - 1));
      if (n + 1 < nsteps)
        g -= 2.0 * p.roughness_weight * (pulse.u(k, n + 1) - pulse.u(k, n));
      (*grad)(k, n) += g;
    }
  return cb;
}

inline void check_pulse(const ControlProblem& p, const ControlPulse& pulse) {
  p.validate();
  pulse.validate();
  if (pulse.u.rows() != static_cast<Eigen::Index>(p.controls.size()))
    throw invalid_dimension("pulse rows != number of controls");
}

}  // namespace detail

inline CostBreakdown cost(const ControlPulse& pulse, const ControlProblem& p) {
  detail::check_pulse(p, pulse);
  return detail::evaluate_pulse(p, pulse, nullptr);
}

inline Eigen::MatrixXd gradient(const ControlPulse& pulse,
                                const ControlProblem& p) {
  detail::check_pulse(p, pulse);
  Eigen::MatrixXd g;
  detail::evaluate_pulse(p, pulse, &g);
  return g;
}

// Product of the step propagators applied to the identity.
inline Operator propagate_unitary(const ControlPulse& pulse,
                                  const ControlProblem& p) {
  detail::check_pulse(p, pulse);
  const int d = p.dim();
  const double dt = pulse.dt_ns * 1e-3;
  Eigen::SelfAdjointEigenSolver<Mat> es;
  Mat h(d, d), u = Mat::Identity(d, d);
  for (int n = 0; n < pulse.u.cols(); ++n) {
    h = p.h0.elements;
    for (size_t k = 0; k < p.controls.size(); ++k)
      h += pulse.u(k, n) * p.controls[k].elements;
    es.compute(h);
    if (es.info() != Eigen::Success)
      throw optimizer_error("step eigendecomposition failed");
    Vec ph =
        ((cx(0, -1) * dt) * es.eigenvalues().cast<cx>().array()).exp().matrix();
    u = (es.eigenvectors() *
         (ph.asDiagonal() * (es.eigenvectors().adjoint() * u)))
            .eval();
  }
  return Operator(p.h0.space, std::move(u), false, true);
}

inline StateVector propagate_state(const ControlPulse& pulse,
                                   const ControlProblem& p) {
  detail::check_pulse(p, pulse);
  if (p.psi0.size() != p.dim())
    throw invalid_dimension("propagate_state: no start state");
  Vec out = (propagate_unitary(pulse, p).elements * p.psi0).eval();
  return StateVector(p.h0.space, std::move(out));
}

struct OptimizeResult {
  ControlPulse pulse;                  // best iterate by total cost
  std::vector<CostBreakdown> history;  // starting point, then one per step
  CostBreakdown best;
  double fidelity = 0;
  int iterations = 0;
};

inline OptimizeResult optimize(const ControlProblem& p, unsigned seed) {
  p.validate();
  Rng rng(seed);
  ControlPulse cur = ControlPulse::gaussian_noise(
      static_cast<int>(p.controls.size()), p.steps(), p.dt_ns,
      p.adam.init_sigma, rng);

  OptimizeResult res;
  Eigen::MatrixXd g, m = Eigen::MatrixXd::Zero(cur.u.rows(), cur.u.cols());
  Eigen::MatrixXd v = m;
  CostBreakdown cb = detail::evaluate_pulse(p, cur, &g);
  if (!g.allFinite() || !std::isfinite(cb.total))
    throw optimizer_error("optimize: cost diverged");
  res.history.push_back(cb);
  res.pulse = cur;
  res.best = cb;

  int it = 0;
  while (it < p.adam.max_iters &&
         !(p.adam.stop_infidelity > 0 &&
           cb.infidelity <= p.adam.stop_infidelity)) {
    ++it;
    m = p.adam.decay1 * m + (1.0 - p.adam.decay1) * g;
    v = p.adam.decay2 * v + (1.0 - p.adam.decay2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(p.adam.decay1, it);
    const double bc2 = 1.0 - std::pow(p.adam.decay2, it);
    const double eta = p.adam.eta0 * std::exp(-p.adam.beta * it);
    const Eigen::MatrixXd denom =
        ((v / bc2).cwiseSqrt().array() + p.adam.eps).matrix();
    cur.u -= eta * (m / bc1).cwiseQuotient(denom);
    if (!cur.u.allFinite()) throw optimizer_error("optimize: pulse diverged");

    cb = detail::evaluate_pulse(p, cur, &g);
    if (!g.allFinite() || !std::isfinite(cb.total))
      throw optimizer_error("optimize: cost diverged");
    res.history.push_back(cb);
    res.iterations = it;
    if (cb.total < res.best.total) {
      res.best = cb;
      res.pulse = cur;
    }
  }
  res.fidelity = 1.0 - res.best.infidelity;
  return res;
}

// ---- Standard problems on the dispersive cavity-transmon model ----

// Drift -chi_q q'q a'a - K/2 a'a'aa - chi_q'/2 q'q a'a'aa; diagonal in the
// joint Fock basis.  Three transmon levels are kept so leakage penalties can
// watch the third one.
inline Operator dispersive_drift(int cavity_dim, const DeviceParams& dev) {
  if (cavity_dim < 2) throw invalid_dimension("dispersive_drift: dim too small");
  dev.validate();
  HilbertSpace sp({cavity_dim, 3});
  Mat h = Mat::Zero(sp.total(), sp.total());
  const double chi = kTwoPi * dev.chi_q;              // MHz -> rad/us
  const double kerr = kTwoPi * dev.K * 1e-3;          // kHz -> rad/us
  const double chip = kTwoPi * dev.chi_q_prime * 1e-3;
  for (int n = 0; n < cavity_dim; ++n)
    for (int q = 0; q < 3; ++q) {
      const int i = 3 * n + q;
      h(i, i) = -chi * q * n - 0.5 * kerr * n * (n - 1.0) -
                0.5 * chip * q * n * (n - 1.0);
    }
  return Operator(sp, std::move(h), true);
}

// Transmon x/y on the bottom two levels plus cavity x/p quadratures.  The
// transmon drives do not couple to the third level, whose population therefore
// stays exactly zero under these generators.
inline std::vector<Operator> standard_controls(int cavity_dim) {
  if (cavity_dim < 2)
    throw invalid_dimension("standard_controls: dim too small");
  HilbertSpace sp({cavity_dim, 3});
  const int d = sp.total();
  Mat sx = Mat::Zero(d, d), sy = Mat::Zero(d, d);
  Mat xa = Mat::Zero(d, d), pa = Mat::Zero(d, d);
  for (int n = 0; n < cavity_dim; ++n) {
    const int ig = 3 * n, ie = 3 * n + 1;
    sx(ig, ie) = 1.0;
    sx(ie, ig) = 1.0;
    sy(ig, ie) = cx(0, -1);
    sy(ie, ig) = cx(0, 1);
  }
  for (int n = 0; n + 1 < cavity_dim; ++n)
    for (int q = 0; q < 3; ++q) {
      const int i = 3 * n + q, j = 3 * (n + 1) + q;
      const double s = std::sqrt(n + 1.0);
      xa(i, j) = s;
      xa(j, i) = s;
      pa(i, j) = cx(0, -s);
      pa(j, i) = cx(0, s);
    }
  return {Operator(sp, std::move(sx), true), Operator(sp, std::move(sy), true),
          Operator(sp, std::move(xa), true), Operator(sp, std::move(pa), true)};
}

// Penalized states: top two cavity levels (any transmon state) and the third
// transmon level (any cavity state).
inline std::vector<Vec> default_forbidden(int cavity_dim) {
  if (cavity_dim < 3)
    throw invalid_dimension("default_forbidden: dim too small");
  const int d = 3 * cavity_dim;
  std::set<int> idx;
  for (int q = 0; q < 3; ++q) {
    idx.insert(3 * (cavity_dim - 1) + q);
    idx.insert(3 * (cavity_dim - 2) + q);
  }
  for (int n = 0; n < cavity_dim; ++n) idx.insert(3 * n + 2);
  std::vector<Vec> out;
  for (int i : idx) {
    Vec f = Vec::Zero(d);
    f[i] = 1.0;
    out.push_back(std::move(f));
  }
  return out;
}

// Decoding map on its seven-dimensional domain: code words to transmon-tagged
// Fock states, with |0> and the error-space images completing the isometry.
inline UnitarySubspaceTarget decode_target(const DecodingBasis& basis) {
  const int cavity_dim = basis.u0.space.total();
  if (cavity_dim < 8) throw invalid_dimension("decode_target: dim must be >= 8");
  const int d = 3 * cavity_dim;
  auto lift = [&](const Vec& w, int q) {
    Vec v = Vec::Zero(d);
    for (int n = 0; n < cavity_dim; ++n) v[3 * n + q] = w[n];
    return v;
  };
  auto ket = [&](int n, int q) {
    Vec v = Vec::Zero(d);
    v[3 * n + q] = 1.0;
    return v;
  };
  UnitarySubspaceTarget t;
  t.basis.resize(d, 7);
  t.image.resize(d, 7);
  t.basis.col(0) = lift(basis.u0.amplitudes, 0);  // code word 0 -> transmon g
  t.image.col(0) = ket(0, 0);
  t.basis.col(1) = lift(basis.u1.amplitudes, 0);  // its in-manifold complement
  t.image.col(1) = ket(1, 0);
  t.basis.col(2) = ket(0, 0);
  t.image.col(2) = ket(5, 0);
  t.basis.col(3) = lift(basis.v0.amplitudes, 0);  // code word 1 -> transmon e
  t.image.col(3) = ket(0, 1);
  t.basis.col(4) = lift(basis.v1.amplitudes, 0);  // its in-manifold complement
  t.image.col(4) = ket(1, 1);
  t.basis.col(5) = ket(0, 1);
  t.image.col(5) = lift(basis.v0.amplitudes, 0);
  t.basis.col(6) = ket(1, 1);
  t.image.col(6) = lift(basis.v1.amplitudes, 0);
  return t;
}

// |vac, g> -> |word 0, g> state preparation at the desk truncation.
inline ControlProblem prep_problem(int cavity_dim, const CodeWords& words,
                                   const DeviceParams& dev) {
  words.validate();
  if (cavity_dim < 8) throw invalid_dimension("prep_problem: dim must be >= 8");
  ControlProblem p;
  p.h0 = dispersive_drift(cavity_dim, dev);
  p.controls = standard_controls(cavity_dim);
  const int d = p.dim();
  p.psi0 = Vec::Zero(d);
  p.psi0[0] = 1.0;
  p.psi_target = Vec::Zero(d);
  p.psi_target[3 * 1] = words.c1;
  p.psi_target[3 * 5] = words.c5;
  p.roughness_weight = 5e-5;
  p.power_weight = 1e-6;
  p.forbidden_weight = 1e-3;
  p.forbidden = default_forbidden(cavity_dim);
  p.duration_us = 1.0;
  p.dt_ns = 1.0;
  p.adam.eta0 = 0.15;
  p.adam.beta = 8e-4;
  return p;
}

// Decoding unitary on the seven-dimensional subspace.
inline ControlProblem decode_problem(int cavity_dim, const CodeWords& words,
                                     const DeviceParams& dev) {
  ControlProblem p;
  p.h0 = dispersive_drift(cavity_dim, dev);
  p.controls = standard_controls(cavity_dim);
  p.unitary_mode = true;
  p.target = decode_target(DecodingBasis::from_codewords(words, cavity_dim));
  p.roughness_weight = 5e-5;
  p.power_weight = 1e-6;
  p.forbidden_weight = 1e-3;
  p.forbidden = default_forbidden(cavity_dim);
  p.duration_us = 2.0;
  p.dt_ns = 1.0;
  p.adam.eta0 = 0.1;
  p.adam.beta = 4e-4;
  return p;
}

}  // namespace prespa
