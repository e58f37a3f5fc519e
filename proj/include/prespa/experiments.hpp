#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "circuitmodel.hpp"
#include "codes.hpp"
#include "decoder.hpp"
#include "dissipator.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "opensystem.hpp"
#include "qalg.hpp"

namespace prespa {

inline constexpr double kPi = kTwoPi / 2;

// ---------------------------------------------------------------------------
// Spectroscopy
// ---------------------------------------------------------------------------

struct SpectroscopyResult {
  std::vector<double> detuning_q;  // MHz
  std::vector<double> detuning_m;  // MHz; empty for a single-tone scan
  Eigen::MatrixXd p;               // rows follow detuning_m, cols detuning_q

  void validate() const {
    if (p.cols() != static_cast<long>(detuning_q.size()))
      throw invalid_input("SpectroscopyResult: grid/column mismatch");
    long rows = detuning_m.empty() ? 1 : static_cast<long>(detuning_m.size());
    if (p.rows() != rows) throw invalid_input("SpectroscopyResult: grid/row mismatch");
    for (long i = 0; i < p.rows(); ++i)
      for (long j = 0; j < p.cols(); ++j)
        if (p(i, j) < -1e-9 || p(i, j) > 1.0 + 1e-9)
          throw invalid_input("SpectroscopyResult: probability outside [0,1]");
  }
};

// Number-split transmon line: each occupied Fock level contributes a
// Lorentzian displaced by one dispersive shift, weighted by its population.
inline SpectroscopyResult transmon_spectroscopy(const DensityMatrix& rho_cavity,
                                                const DeviceParams& dev,
                                                const std::vector<double>& dq_MHz) {
  dev.validate();
  if (rho_cavity.space.subsystems() != 1)
    throw invalid_input("transmon_spectroscopy: cavity state must be a single mode");
  if (dq_MHz.empty()) throw invalid_input("transmon_spectroscopy: empty grid");
  const int dim = rho_cavity.space.total();
  const double w = 1.0 / (kTwoPi * dev.T2q_star);  // half-width, MHz
  Eigen::MatrixXd p(1, dq_MHz.size());
  for (std::size_t j = 0; j < dq_MHz.size(); ++j) {
    double acc = 0;
    for (int n = 0; n < dim; ++n) {
      double pn = std::max(0.0, rho_cavity.elements(n, n).real());
      double d = dq_MHz[j] + n * dev.chi_q;
      acc += pn * w * w / (w * w + d * d);
    }
    p(0, j) = acc;
  }
  SpectroscopyResult out{dq_MHz, {}, std::move(p)};
  out.validate();
  return out;
}

// Two-tone map of one photon-addition path: a transmon tone (detuning dq) and
// a mixing tone (detuning dm) drive the two-stage conversion off one even
// level; the reported value is the added-photon likelihood, i.e. the excess of
// the driven protocol over the drive-free background (which is exactly zero
// here).  Resonance sits at the Stark-adjusted origin; the mixing axis
// inherits the reservoir linewidth while the transmon axis stays narrow.
inline SpectroscopyResult spectroscopy_2d(const std::vector<double>& dq_MHz,
                                          const std::vector<double>& dm_MHz,
                                          int init_fock, const DeviceParams& dev,
                                          double lam_kHz, double om_kHz,
                                          double duration_us, double stark_q_MHz = 0,
                                          double stark_m_MHz = 0) {
  dev.validate();
  if (dq_MHz.empty() || dm_MHz.empty()) throw invalid_input("spectroscopy_2d: empty grid");
  if (init_fock < 0 || init_fock > 6 || init_fock % 2 != 0)
    throw invalid_input("spectroscopy_2d: initial level must be even and <= 6");
  if (!(duration_us > 0)) throw invalid_input("spectroscopy_2d: duration must be positive");

  const double lam = kTwoPi * lam_kHz * 1e-3;
  const double om = kTwoPi * om_kHz * 1e-3;
  const double gphi_q = NoiseModel::pure_dephasing_rate(dev.T1q, dev.T2q_star);
  const HilbertSpace sp({4});  // (m,g,0), (m,e,0), (m+1,g,1), (m+1,g,0)

  Eigen::MatrixXd p(dm_MHz.size(), dq_MHz.size());
  for (std::size_t im = 0; im < dm_MHz.size(); ++im) {
    for (std::size_t iq = 0; iq < dq_MHz.size(); ++iq) {
      Mat h = Mat::Zero(4, 4);
      double dq = kTwoPi * (dq_MHz[iq] - stark_q_MHz);
      double dm = kTwoPi * (dm_MHz[im] - stark_m_MHz);
      h(0, 1) = lam;
      h(1, 0) = lam;
      h(1, 2) = om;
      h(2, 1) = om;
      h(1, 1) = -dq;
      h(2, 2) = -(dq + dm);

      NoiseModel nm;
      Mat res = Mat::Zero(4, 4);
      res(3, 2) = 1;
      nm.collapse.push_back({Operator(sp, res), kTwoPi * dev.kappa_r});
      Mat tdec = Mat::Zero(4, 4);
      tdec(0, 1) = 1;
      nm.collapse.push_back({Operator(sp, tdec), 1.0 / dev.T1q});
      Mat tphi = Mat::Zero(4, 4);
      tphi(1, 1) = 1;
      nm.collapse.push_back({Operator(sp, tphi), 2.0 * gphi_q});

      Mat rho0 = Mat::Zero(4, 4);
      rho0(0, 0) = 1;
      MasterEqProblem prob{Operator(sp, h, true), nm, DensityMatrix(sp, rho0),
                           {0.0, duration_us}};
      Mat rho = lindblad_evolve(prob).back().elements;
      p(im, iq) = std::max(0.0, rho(2, 2).real() + rho(3, 3).real());
    }
  }
  SpectroscopyResult out{dq_MHz, dm_MHz, std::move(p)};
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Wigner tomography
// ---------------------------------------------------------------------------

namespace detail {

// (2/pi) D(alpha) P D(-alpha) restricted to the top-left dim x dim block.
// Evaluated in an enlarged working space: the truncated product at dim itself
// collapses onto the symmetric d(d+1)/2-dimensional subspace and cannot
// resolve Im rho_kl, so probes built at dim are useless for reconstruction.
inline Mat displaced_parity_block(cx alpha, int dim) {
  const double reach =
      std::pow(std::sqrt(dim - 1.0) + std::abs(alpha), 2.0);
  const int work =
      static_cast<int>(std::ceil(reach + 6.0 * std::sqrt(reach + 1.0) + 8.0));
  const Mat d = displacement(alpha, work).elements;
  Mat probe(work, work);
  for (int c = 0; c < work; ++c)
    probe.col(c) = ((c % 2 == 0) ? 1.0 : -1.0) * d.col(c);
  probe = (2.0 / kPi) * (probe * d.adjoint());
  return probe.topLeftCorner(dim, dim);
}

}  // namespace detail

// W(alpha) = (2/pi) Tr[D(alpha) P D(-alpha) rho].  Probes must stay inside the
// truncation: |alpha|^2 < dim.
inline std::vector<double> wigner(const DensityMatrix& rho_cavity,
                                  const std::vector<cx>& alphas) {
  if (rho_cavity.space.subsystems() != 1)
    throw invalid_input("wigner: cavity state must be a single mode");
  const int dim = rho_cavity.space.total();
  std::vector<double> out;
  out.reserve(alphas.size());
  for (cx a : alphas) {
    if (std::norm(a) >= dim)
      throw truncation_error("wigner: probe amplitude outside the truncation");
    out.push_back((detail::displaced_parity_block(a, dim) * rho_cavity.elements)
                      .trace()
                      .real());
  }
  return out;
}

// Constrained least squares on the displaced-parity design: solve for the
// Hermitian matrix reproducing the samples, then project onto unit-trace
// positive matrices.  Needs at least dim^2 informative samples.
inline DensityMatrix reconstruct_density(const std::vector<cx>& alphas,
                                         const std::vector<double>& w, int dim) {
  if (dim < 1 || dim > 16) throw invalid_dimension("reconstruct_density: dim must be in [1,16]");
  if (alphas.size() != w.size())
    throw invalid_input("reconstruct_density: sample/probe count mismatch");
  const int d2 = dim * dim;
  if (static_cast<int>(alphas.size()) < d2)
    throw invalid_input("reconstruct_density: needs at least dim^2 samples");

  const int n = static_cast<int>(alphas.size());
  Eigen::MatrixXd design(n, d2);
  for (int s = 0; s < n; ++s) {
    if (std::norm(alphas[s]) >= dim)
      throw truncation_error("reconstruct_density: probe outside the truncation");
    Mat probe = detail::displaced_parity_block(alphas[s], dim);
    int col = 0;
    for (int k = 0; k < dim; ++k) design(s, col++) = probe(k, k).real();
    for (int k = 0; k < dim; ++k)
      for (int l = k + 1; l < dim; ++l) {
        design(s, col++) = 2.0 * probe(k, l).real();
        design(s, col++) = 2.0 * probe(k, l).imag();
      }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 1e-8 * smax))
    throw reconstruction_error("reconstruct_density: design condition " +
                               std::to_string(smax / std::max(smin, 1e-300)) +
                               " too large");
  Eigen::VectorXd y(n);
  for (int s = 0; s < n; ++s) y(s) = w[s];
  Eigen::VectorXd theta = svd.solve(y);

  Mat rho = Mat::Zero(dim, dim);
  int col = 0;
  for (int k = 0; k < dim; ++k) rho(k, k) = theta(col++);
  for (int k = 0; k < dim; ++k)
    for (int l = k + 1; l < dim; ++l) {
      double re = theta(col++), im = theta(col++);
      rho(k, l) = cx(re, im);  // columns carry 2 Re probe_kl, 2 Im probe_kl
      rho(l, k) = cx(re, -im);
    }
  rho = 0.5 * (rho + Mat(rho.adjoint()));

  Eigen::SelfAdjointEigenSolver<Mat> es(rho);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  double tr = ev.sum();
  if (!(tr > 1e-12))
    throw reconstruction_error("reconstruct_density: projected trace vanished");
  Mat out = es.eigenvectors() * (ev / tr).asDiagonal() *
            es.eigenvectors().adjoint();
  return {single_mode(dim), std::move(out)};
}

// ---------------------------------------------------------------------------
// Ramsey interferometry of the corrected cavity
// ---------------------------------------------------------------------------

struct RamseyConfig {
  double kappa = 1.0 / 520.0;  // photon-loss rate, 1/us
  double kerr_kHz = 0.0;       // self-Kerr entering as -K/2 n(n-1)
  bool corrected = true;       // loss arrives through the parity-restored jump
};

struct RamseyResult {
  std::vector<double> times;
  std::vector<double> w;       // W(alpha_probe) along the grid
  double frequency_kHz = 0;
  double decay_rate = 0;       // 1/us
  double amplitude = 0;
  double offset = 0;
};

namespace detail {

struct SinusoidFit {
  double amplitude = 0, decay = 0, omega = 0, phase = 0, offset = 0, rss = 0;
};

// Damped sinusoid y = C + A exp(-g t) cos(w t + phi).  Frequency seeded by a
// coarse scan, refined by least squares.  Throws fit_error when the data hold
// a substantial amplitude but less than half a cycle (no identifiable
// frequency) or when the model cannot represent the data.
inline SinusoidFit fit_damped_sinusoid(const std::vector<double>& t,
                                       const std::vector<double>& y) {
  const int n = static_cast<int>(t.size());
  if (n < 8 || y.size() != t.size())
    throw invalid_input("fit_damped_sinusoid: needs at least 8 samples");
  double ymin = *std::min_element(y.begin(), y.end());
  double ymax = *std::max_element(y.begin(), y.end());
  double range = ymax - ymin;
  double mean = 0;
  for (double v : y) mean += v;
  mean /= n;
  if (range < 1e-9 * std::max(1.0, std::abs(ymax))) return {0, 0, 0, 0, mean, 0};

  const double span = t.back() - t.front();
  double dtmin = span;
  for (int i = 1; i < n; ++i) dtmin = std::min(dtmin, t[i] - t[i - 1]);
  const double g0 = 1.0 / span;

  // coarse frequency scan with a linear solve for the quadrature amplitudes
  double best_rss = std::numeric_limits<double>::infinity();
  double w0 = 0, a0 = range / 2, b0 = 0, c0 = mean;
  const int ncand = 240;
  const double wlo = kPi / (2 * span), whi = kPi / dtmin;
  for (int k = 0; k <= ncand; ++k) {
    double wc = wlo + (whi - wlo) * k / ncand;
    Eigen::MatrixXd basis(n, 3);
    for (int i = 0; i < n; ++i) {
      double env = std::exp(-g0 * t[i]);
      basis(i, 0) = env * std::cos(wc * t[i]);
      basis(i, 1) = env * std::sin(wc * t[i]);
      basis(i, 2) = 1.0;
    }
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = y[i];
    Eigen::VectorXd sol = (basis.transpose() * basis)
                              .ldlt()
                              .solve(basis.transpose() * rhs);
    double rss = (basis * sol - rhs).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      w0 = wc;
      a0 = sol(0);
      b0 = sol(1);
      c0 = sol(2);
    }
  }

  Eigen::VectorXd tv(n), yv(n);
  for (int i = 0; i < n; ++i) {
    tv(i) = t[i];
    yv(i) = y[i];
  }
  // decay enters squared so the zero-damping optimum stays smooth
  ModelFn model = [](double tt, const Eigen::VectorXd& p) {
    return p(4) + p(0) * std::exp(-p(1) * p(1) * tt) * std::cos(p(2) * tt + p(3));
  };
  Eigen::VectorXd p0(5);
  p0 << std::hypot(a0, b0), std::sqrt(g0), w0, std::atan2(-b0, a0), c0;
  FitResult fr = fit_nonlinear(model, tv, yv, p0);
  if (!fr.converged) throw fit_error("fit_damped_sinusoid: no convergence");

  SinusoidFit out;
  out.amplitude = fr.params(0);
  out.decay = fr.params(1) * fr.params(1);
  out.omega = fr.params(2);
  out.phase = fr.params(3);
  out.offset = fr.params(4);
  out.rss = fr.rss;
  if (out.amplitude < 0) {
    out.amplitude = -out.amplitude;
    out.phase += kPi;
  }
  if (out.omega < 0) {
    out.omega = -out.omega;
    out.phase = -out.phase;
  }
  if (fr.rss / n > std::pow(0.05 * range, 2))
    throw fit_error("fit_damped_sinusoid: residual too large for a damped sinusoid");
  double cycles = out.omega * span / kTwoPi;
  if (out.amplitude > 0.05 * range && cycles < 0.5)
    throw fit_error("fit_damped_sinusoid: non-oscillatory data");
  if (out.amplitude <= 1e-6 * std::max(1.0, range)) {
    out.omega = 0;
    out.decay = 0;
  }
  return out;
}

}  // namespace detail

// Track W(alpha_probe) while the cavity loses photons (through the
// parity-restored jump when corrected), in the frame where the logical
// codewords are stationary; a diagonal Kerr adds a deterministic fringe
// frequency.  Populations are invariant under the corrected jump, so the
// fringe envelope follows the inter-component coherence alone.
inline RamseyResult prespa_ramsey(const StateVector& psi0, cx alpha_probe,
                                  const std::vector<double>& times,
                                  const RamseyConfig& cfg = {}) {
  if (psi0.space.subsystems() != 1)
    throw invalid_input("prespa_ramsey: cavity state must be a single mode");
  const int dim = psi0.space.total();
  if (std::norm(alpha_probe) >= dim)
    throw truncation_error("prespa_ramsey: probe amplitude outside the truncation");
  if (times.size() < 8) throw invalid_input("prespa_ramsey: needs at least 8 times");
  if (cfg.kappa < 0) throw invalid_input("prespa_ramsey: negative loss rate");

  const double ka = kTwoPi * cfg.kerr_kHz * 1e-3;
  Mat h = Mat::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) h(n, n) = -ka * 0.5 * n * (n - 1.0);

  NoiseModel nm;
  if (cfg.kappa > 0) {
    if (cfg.corrected) {
      nm.collapse.push_back({JumpProcess::ideal_prespa(dim, cfg.kappa).jump_op, cfg.kappa});
    } else {
      nm.collapse.push_back({fock_operators(dim).lowering, cfg.kappa});
    }
  }
  MasterEqProblem prob{Operator(single_mode(dim), h, true), nm, pure_density(psi0),
                       times};
  std::vector<DensityMatrix> rhos = lindblad_evolve(prob);

  Mat probe = detail::displaced_parity_block(alpha_probe, dim);
  RamseyResult out;
  out.times = times;
  out.w.reserve(times.size());
  for (const auto& r : rhos)
    out.w.push_back((probe * r.elements).trace().real());

  detail::SinusoidFit fit = detail::fit_damped_sinusoid(times, out.w);
  out.frequency_kHz = fit.omega / kTwoPi * 1e3;
  out.decay_rate = fit.decay;
  out.amplitude = fit.amplitude;
  out.offset = fit.offset;
  return out;
}

// ---------------------------------------------------------------------------
// Process (chi) matrix over Fock pairs
// ---------------------------------------------------------------------------

using ChannelFn = std::function<DensityMatrix(const DensityMatrix&)>;

struct ProcessMatrix {
  Eigen::MatrixXd population;  // column n: Fock populations after input |n>
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::pair<int, int>> image_pairs;
  std::vector<cx> coherence;   // rho_out(image)/rho_in(pair)
  double duration_us = 0;

  void validate() const {
    for (long c = 0; c < population.cols(); ++c) {
      double sum = 0;
      for (long r = 0; r < population.rows(); ++r) {
        if (population(r, c) < -1e-9)
          throw invalid_input("ProcessMatrix: negative population");
        sum += population(r, c);
      }
      if (sum > 1.0 + 1e-6)
        throw invalid_input("ProcessMatrix: population column exceeds unity");
    }
  }
};

// Ideal correction step as an instantaneous channel: every even level gains a
// photon, odd levels pass through, an even level with no room is left alone.
inline ChannelFn ideal_prespa_channel(int dim) {
  if (dim < 2) throw invalid_dimension("ideal_prespa_channel: dim must be >= 2");
  Mat convert = Mat::Zero(dim, dim), rest = Mat::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) {
    if (n % 2 == 0 && n + 1 < dim)
      convert(n + 1, n) = 1;
    else
      rest(n, n) = 1;
  }
  HilbertSpace sp = single_mode(dim);
  return [sp, convert, rest](const DensityMatrix& rho) {
    if (rho.space.total() != sp.total())
      throw invalid_dimension("ideal_prespa_channel: dimension mismatch");
    Mat out = convert * rho.elements * convert.adjoint() +
              rest * rho.elements * rest.adjoint();
    return DensityMatrix(sp, std::move(out));
  };
}

// Population block from Fock inputs 0..7; coherences from equal superposition
// inputs via the ratio estimator rho_out(image)/rho_in(pair).  The image of
// each input level is read off the population block.
inline ProcessMatrix chi_matrix(const ChannelFn& channel, int dim, double duration_us,
                                const std::vector<std::pair<int, int>>& pairs) {
  if (dim < 9) throw invalid_dimension("chi_matrix: channel dim must be >= 9");
  const int nin = 8;
  HilbertSpace sp = single_mode(dim);

  ProcessMatrix out;
  out.duration_us = duration_us;
  out.population.resize(dim, nin);
  std::array<int, 8> image{};
  for (int n = 0; n < nin; ++n) {
    Mat rho = Mat::Zero(dim, dim);
    rho(n, n) = 1;
    DensityMatrix res = channel(DensityMatrix(sp, std::move(rho)));
    double best = -1;
    for (int r = 0; r < dim; ++r) {
      out.population(r, n) = res.elements(r, r).real();
      if (out.population(r, n) > best) {
        best = out.population(r, n);
        image[n] = r;
      }
    }
  }

  for (auto [n, m] : pairs) {
    if (n == m || n < 0 || m < 0 || n >= nin || m >= nin)
      throw undefined_element("chi_matrix: pair (" + std::to_string(n) + "," +
                              std::to_string(m) + ") has no input coherence");
    if (image[n] == image[m])
      throw undefined_element("chi_matrix: pair images coincide, element undefined");
    Mat rho = Mat::Zero(dim, dim);
    rho(n, n) = 0.5;
    rho(m, m) = 0.5;
    rho(n, m) = 0.5;
    rho(m, n) = 0.5;
    DensityMatrix res = channel(DensityMatrix(sp, std::move(rho)));
    out.pairs.emplace_back(n, m);
    out.image_pairs.emplace_back(image[n], image[m]);
    out.coherence.push_back(res.elements(image[n], image[m]) / 0.5);
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Effective model of the driven, corrected cavity
// ---------------------------------------------------------------------------

// Reservoir-eliminated model on cavity (x) transmon (joint index 2n+q): each
// drive tone becomes a which-path emission line |n,e> -> |n+1,g| with a
// Lorentzian amplitude in its detuning from the tone, transmon decay, heating
// and dephasing act per photon level, and the cavity keeps its loss, thermal
// excitation and dephasing.  Decoding happens in the Kerr co-rotating frame.
struct EffectiveNoisyModel {
  HilbertSpace space;
  int levels = 10;
  DeviceParams device;
  Mat h;
  Mat drift;                   // -i h - (1/2) sum L^dag L
  Mat loss, thermal;           // dense collapse operators, sqrt-rate included
  std::vector<Vec> line_g;     // emission lines: amplitude per lower level
  std::vector<std::array<int, 2>> rank1_idx;  // (to, from) per-level jump
  std::vector<double> rank1_rate;
  Mat diag_kernel;             // sum_k d_k d_k^dag over diagonal collapses
  Mat ud;                      // decode target on the joint space
  double kerr_ang = 0;         // rad/us
  bool drives_only = false;

  static EffectiveNoisyModel standard(const DeviceParams& p, double lam_kHz,
                                      double om_kHz, int levels = 10,
                                      bool drives_only = false,
                                      const CodeWords& words = CodeWords::experimental()) {
    p.validate();
    if (levels < 9)
      throw invalid_dimension("EffectiveNoisyModel: needs at least 9 cavity levels");
    EffectiveNoisyModel mdl;
    mdl.levels = levels;
    mdl.device = p;
    mdl.drives_only = drives_only;
    mdl.space = HilbertSpace({levels, 2});
    const int d = 2 * levels;

    const double chi_a = kTwoPi * p.chi_q;
    const double chip_a = kTwoPi * p.chi_q_prime * 1e-3;
    const double ka = kTwoPi * p.K * 1e-3;
    const double kap_c = 1.0 / p.T1A;
    const double kap_r = kTwoPi * p.kappa_r;
    const double lam = kTwoPi * lam_kHz * 1e-3;
    const double om = kTwoPi * om_kHz * 1e-3;
    const double gphi_a = std::max(0.0, 1.0 / p.T2A - 0.5 / p.T1A - 1.4e-3);
    const double gphi_q = NoiseModel::pure_dephasing_rate(p.T1q, p.T2q_star);
    const double gup = p.gamma_up_driven * 1e-3;
    mdl.kerr_ang = ka;

    auto q_of = [](int n) { return 0.5 * n * (n - 1.0); };
    // transmon comb laid on the least-squares line through the even ladder;
    // the residual is the per-level tone detuning
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int m = 0; m <= 6; m += 2) {
      double fq = -chi_a * m - chip_a * q_of(m);
      sx += m;
      sy += fq;
      sxx += m * m;
      sxy += m * fq;
    }
    double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
    double icept = (sy - slope * sx) / 4;
    auto eps_q = [&](int n) { return -chi_a * n - chip_a * q_of(n) - (icept + slope * n); };
    auto f_mix = [&](int m) { return chi_a * m + chip_a * q_of(m) - ka * m; };

    auto idx = [](int n, int q) { return 2 * n + q; };
    mdl.h = Mat::Zero(d, d);
    for (int n = 0; n < levels; ++n) {
      mdl.h(idx(n, 0), idx(n, 0)) = -ka * q_of(n);
      mdl.h(idx(n, 1), idx(n, 1)) = -ka * q_of(n) - eps_q(n);
      if (n % 2 == 0 && n <= 6) {
        mdl.h(idx(n, 0), idx(n, 1)) = lam;
        mdl.h(idx(n, 1), idx(n, 0)) = lam;
      }
    }

    std::map<int, Vec> lines;
    for (int tone = 0; tone < 4; ++tone) {
      int mp = 2 * tone;
      for (int n = 0; n + 1 < levels; ++n) {
        double delt = f_mix(n) - f_mix(mp);
        cx g = std::sqrt(kap_r) * om / cx(kap_r / 2, delt);
        auto it = lines.find(mp - n);
        if (it == lines.end()) it = lines.emplace(mp - n, Vec::Zero(levels - 1)).first;
        it->second(n) += g;
      }
    }
    for (auto& [s, g] : lines) mdl.line_g.push_back(std::move(g));

    mdl.loss = Mat::Zero(d, d);
    mdl.thermal = Mat::Zero(d, d);
    mdl.diag_kernel = Mat::Zero(d, d);
    if (!drives_only) {
      for (int n = 0; n + 1 < levels; ++n)
        for (int q = 0; q < 2; ++q) {
          mdl.loss(idx(n, q), idx(n + 1, q)) = std::sqrt(kap_c) * std::sqrt(n + 1.0);
          mdl.thermal(idx(n + 1, q), idx(n, q)) =
              std::sqrt(p.thermal_1_A * kap_c) * std::sqrt(n + 1.0);
        }
      for (int n = 0; n < levels; ++n) {
        mdl.rank1_idx.push_back({idx(n, 1), idx(n, 0)});
        mdl.rank1_rate.push_back(gup);
        mdl.rank1_idx.push_back({idx(n, 0), idx(n, 1)});
        mdl.rank1_rate.push_back(1.0 / p.T1q);
      }
      Vec dq = Vec::Zero(d), da = Vec::Zero(d);
      for (int n = 0; n < levels; ++n) {
        dq(idx(n, 1)) = std::sqrt(2.0 * gphi_q);
        da(idx(n, 0)) = std::sqrt(2.0 * gphi_a) * n;
        da(idx(n, 1)) = std::sqrt(2.0 * gphi_a) * n;
      }
      mdl.diag_kernel = dq * dq.adjoint() + da * da.adjoint();
    }

    Mat anti = mdl.loss.adjoint() * mdl.loss + mdl.thermal.adjoint() * mdl.thermal;
    for (const Vec& g : mdl.line_g)
      for (int n = 0; n + 1 < levels; ++n)
        anti(idx(n, 1), idx(n, 1)) += std::norm(g(n));
    for (std::size_t k = 0; k < mdl.rank1_idx.size(); ++k)
      anti(mdl.rank1_idx[k][1], mdl.rank1_idx[k][1]) += mdl.rank1_rate[k];
    for (int i = 0; i < d; ++i) anti(i, i) += mdl.diag_kernel(i, i).real();
    mdl.drift = cx(0, -1) * mdl.h - 0.5 * anti;

    mdl.ud = decode_unitary(DecodingBasis::from_codewords(words, levels), levels).elements;
    return mdl;
  }

  Mat rhs(const Mat& rho) const {
    Mat out = drift * rho + rho * drift.adjoint();
    if (!drives_only) {
      out.noalias() += loss * rho * loss.adjoint();
      out.noalias() += thermal * rho * thermal.adjoint();
      for (std::size_t k = 0; k < rank1_idx.size(); ++k)
        out(rank1_idx[k][0], rank1_idx[k][0]) +=
            rank1_rate[k] * rho(rank1_idx[k][1], rank1_idx[k][1]);
      out += diag_kernel.cwiseProduct(rho);
    }
    for (const Vec& g : line_g)
      for (int a = 0; a + 1 < levels; ++a) {
        if (g(a) == cx(0, 0)) continue;
        for (int b = 0; b + 1 < levels; ++b) {
          if (g(b) == cx(0, 0)) continue;
          out(2 * a + 2, 2 * b + 2) += g(a) * std::conj(g(b)) * rho(2 * a + 1, 2 * b + 1);
        }
      }
    return out;
  }

  std::vector<Mat> evolve_grid(const Mat& rho0, const std::vector<double>& times) const {
    if (times.size() < 2) throw invalid_input("EffectiveNoisyModel: needs >= 2 times");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (times[i] <= times[i - 1])
        throw invalid_input("EffectiveNoisyModel: times must be strictly increasing");
    return detail::integrate_grid([this](const Mat& r) { return rhs(r); }, rho0, times);
  }

  Mat embed_ground(const Mat& rho_cav) const {
    Mat out = Mat::Zero(2 * levels, 2 * levels);
    for (int i = 0; i < levels; ++i)
      for (int j = 0; j < levels; ++j) out(2 * i, 2 * j) = rho_cav(i, j);
    return out;
  }

  // Cavity state in the Kerr co-rotating frame at time t.
  DensityMatrix cavity_reduced(const Mat& rho, double t) const {
    Mat rc(levels, levels);
    for (int i = 0; i < levels; ++i)
      for (int j = 0; j < levels; ++j)
        rc(i, j) = rho(2 * i, 2 * j) + rho(2 * i + 1, 2 * j + 1);
    for (int i = 0; i < levels; ++i)
      for (int j = 0; j < levels; ++j) {
        double qi = 0.5 * i * (i - 1.0), qj = 0.5 * j * (j - 1.0);
        rc(i, j) *= std::exp(cx(0, -kerr_ang * (qi - qj) * t));
      }
    return {single_mode(levels), std::move(rc)};
  }

  double decoded_fidelity(const Mat& rho, const LogicalAmplitudes& xy, double t) const {
    const int d = 2 * levels;
    Vec ph(d);
    for (int n = 0; n < levels; ++n) {
      cx v = std::exp(cx(0, -kerr_ang * 0.5 * n * (n - 1.0) * t));
      ph(2 * n) = v;
      ph(2 * n + 1) = v;
    }
    Mat u = ud * ph.asDiagonal();
    Mat rr = u * rho * u.adjoint();
    Mat rq = Mat::Zero(2, 2);
    for (int n = 0; n < levels; ++n)
      for (int q1 = 0; q1 < 2; ++q1)
        for (int q2 = 0; q2 < 2; ++q2) rq(q1, q2) += rr(2 * n + q1, 2 * n + q2);
    Eigen::Vector2cd psi(xy.x, xy.y);
    return (psi.adjoint() * rq * psi).value().real();
  }

  ChannelFn cavity_channel(double duration_us) const {
    if (duration_us < 0) throw invalid_input("cavity_channel: negative duration");
    auto mdl = std::make_shared<const EffectiveNoisyModel>(*this);
    return [mdl, duration_us](const DensityMatrix& rho_cav) {
      if (rho_cav.space.total() != mdl->levels)
        throw invalid_dimension("cavity_channel: dimension mismatch");
      if (duration_us == 0) return rho_cav;
      Mat r0 = mdl->embed_ground(rho_cav.elements);
      Mat rt = mdl->evolve_grid(r0, {0.0, duration_us}).back();
      return mdl->cavity_reduced(rt, duration_us);
    };
  }
};

// ---------------------------------------------------------------------------
// Logical-lifetime experiment
// ---------------------------------------------------------------------------

enum class LifetimeMode {
  corrected_ideal,  // analytic trajectory mixture of the corrected cavity
  free_t4c,         // undriven codewords under loss + Kerr, static decode
  free_fock,        // {|0>,|1>} encoding under loss, trivial decode
  full_noise        // driven effective model with the complete noise budget
};

struct LifetimeConfig {
  LifetimeMode mode = LifetimeMode::corrected_ideal;
  CodeWords words = CodeWords::experimental();
  DeviceParams device;
  std::vector<double> times;  // defaults per mode when empty
  int jmax = 40;              // floor for the jump-count cutoff
  double lambda_kHz = 28.0;
  double omega_kHz = 90.0;
  int levels = 10;            // cavity truncation of the full-noise model
};

struct DecayInfo {
  double amplitude = 0;
  double tau = 0;
};

struct LifetimeResult {
  std::vector<double> times;
  Eigen::MatrixXd curves;       // six cardinal fidelities, one row each
  std::vector<double> process;  // 1.5 mean(cardinals) - 0.5
  DecayInfo pole, equator, process_fit;
};

namespace detail {

inline DecayInfo decay_from_curve(const std::vector<double>& t,
                                  const Eigen::VectorXd& y, double floor) {
  double range = y.maxCoeff() - y.minCoeff();
  if (range < 1e-8)
    return {y(0) - floor, std::numeric_limits<double>::infinity()};
  Eigen::VectorXd tv(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) tv(i) = t[i];
  double a0 = std::max(0.05, y(0) - floor);
  double tau0 = t.back();
  for (int i = 0; i < y.size(); ++i)
    if (y(i) - floor < a0 / std::exp(1.0)) {
      tau0 = std::max(t[i], 1e-6);
      break;
    }
  DecayFit fit = fit_exp_decay(tv, y, floor, a0, tau0);
  return {fit.amplitude, fit.tau};
}

}  // namespace detail

// Six cardinal states held for each dwell time, decoded, and fit against
// exponential decay toward the fully mixed point: poles and equator to a 0.5
// floor, the process fidelity to 0.25.
inline LifetimeResult lifetime_experiment(const LifetimeConfig& cfg) {
  cfg.words.validate();
  cfg.device.validate();
  std::vector<double> times = cfg.times;
  if (times.empty()) {
    int npts = cfg.mode == LifetimeMode::full_noise ? 21 : 41;
    double tmax = cfg.mode == LifetimeMode::full_noise ? 1000.0 : 2000.0;
    for (int i = 0; i < npts; ++i) times.push_back(tmax * i / (npts - 1));
  }
  if (times.size() < 4) throw invalid_input("lifetime_experiment: needs >= 4 times");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw invalid_input("lifetime_experiment: times must be strictly increasing");
  const int nt = static_cast<int>(times.size());

  std::vector<LogicalAmplitudes> cards = cardinal_states();
  LifetimeResult out;
  out.times = times;
  out.curves.resize(6, nt);

  switch (cfg.mode) {
    case LifetimeMode::corrected_ideal: {
      DecodingBasis basis = DecodingBasis::from_codewords(cfg.words, 8);
      for (int c = 0; c < 6; ++c)
        for (int k = 0; k < nt; ++k) {
          double kt = times[k] / cfg.device.T1A;
          double lam7 = 7.0 * kt;
          int jm = std::max(cfg.jmax,
                            static_cast<int>(lam7 + 10.0 * std::sqrt(lam7 + 1.0) + 20.0));
          DecodedQubit dq = decode_encoded(cfg.words, cards[c], kt, jm, basis);
          out.curves(c, k) = state_fidelity(dq, cards[c]);
        }
      break;
    }
    case LifetimeMode::free_t4c: {
      const int dim = 8;
      const double ka = kTwoPi * cfg.device.K * 1e-3;
      HilbertSpace sp = single_mode(dim);
      Mat h = Mat::Zero(dim, dim);
      for (int n = 0; n < dim; ++n) h(n, n) = -ka * 0.5 * n * (n - 1.0);
      NoiseModel nm;
      nm.collapse.push_back({fock_operators(dim).lowering, 1.0 / cfg.device.T1A});
      Mat ud = decode_unitary(DecodingBasis::from_codewords(cfg.words, dim), dim).elements;
      for (int c = 0; c < 6; ++c) {
        MasterEqProblem prob{Operator(sp, h, true), nm,
                             pure_density(encode(cfg.words, cards[c], dim)), times};
        std::vector<DensityMatrix> rhos = lindblad_evolve(prob);
        Eigen::Vector2cd psi(cards[c].x, cards[c].y);
        for (int k = 0; k < nt; ++k) {
          Mat rr = Mat::Zero(2 * dim, 2 * dim);
          for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) rr(2 * i, 2 * j) = rhos[k].elements(i, j);
          rr = ud * rr * ud.adjoint();
          Mat rq = Mat::Zero(2, 2);
          for (int n = 0; n < dim; ++n)
            for (int q1 = 0; q1 < 2; ++q1)
              for (int q2 = 0; q2 < 2; ++q2) rq(q1, q2) += rr(2 * n + q1, 2 * n + q2);
          out.curves(c, k) = (psi.adjoint() * rq * psi).value().real();
        }
      }
      break;
    }
    case LifetimeMode::free_fock: {
      const int dim = 2;
      HilbertSpace sp = single_mode(dim);
      NoiseModel nm;
      nm.collapse.push_back({fock_operators(dim).lowering, 1.0 / cfg.device.T1A});
      for (int c = 0; c < 6; ++c) {
        Vec psi(2);
        psi << cards[c].x, cards[c].y;
        MasterEqProblem prob{Operator(sp, Mat::Zero(dim, dim), true), nm,
                             pure_density(StateVector(sp, psi)), times};
        std::vector<DensityMatrix> rhos = lindblad_evolve(prob);
        for (int k = 0; k < nt; ++k)
          out.curves(c, k) = (psi.adjoint() * rhos[k].elements * psi).value().real();
      }
      break;
    }
    case LifetimeMode::full_noise: {
      EffectiveNoisyModel mdl = EffectiveNoisyModel::standard(
          cfg.device, cfg.lambda_kHz, cfg.omega_kHz, cfg.levels, false, cfg.words);
      for (int c = 0; c < 6; ++c) {
        Mat rho0 = mdl.embed_ground(
            pure_density(encode(cfg.words, cards[c], cfg.levels)).elements);
        std::vector<Mat> rhos = mdl.evolve_grid(rho0, times);
        for (int k = 0; k < nt; ++k)
          out.curves(c, k) = mdl.decoded_fidelity(rhos[k], cards[c], times[k]);
      }
      break;
    }
  }

  out.process.resize(nt);
  for (int k = 0; k < nt; ++k) {
    double mean = out.curves.col(k).mean();
    out.process[k] = 1.5 * mean - 0.5;
  }
  Eigen::VectorXd pole = 0.5 * (out.curves.row(0) + out.curves.row(1)).transpose();
  Eigen::VectorXd equ = 0.25 * (out.curves.row(2) + out.curves.row(3) +
                                out.curves.row(4) + out.curves.row(5))
                                  .transpose();
  Eigen::VectorXd proc(nt);
  for (int k = 0; k < nt; ++k) proc(k) = out.process[k];
  out.pole = detail::decay_from_curve(times, pole, 0.5);
  out.equator = detail::decay_from_curve(times, equ, 0.5);
  out.process_fit = detail::decay_from_curve(times, proc, 0.25);
  return out;
}

// ---------------------------------------------------------------------------
// Empirical comb tuning
// ---------------------------------------------------------------------------

struct OptimizerOptions {
  int max_sweeps = 24;
  double rel_step = 0.08;  // initial step, relative for magnitudes / rad for phases
  double tol = 1e-3;       // stop once the step shrinks below tol x initial
};

// Greedy coordinate ascent over the comb amplitudes and phases: each sweep
// probes every coordinate both ways and keeps only improvements, so the cost
// trace of accepted configurations is monotone.  Trial configurations that
// fail validation are skipped.
inline CombConfig empirical_optimizer(const CombConfig& start,
                                      const std::function<double(const CombConfig&)>& cost,
                                      const OptimizerOptions& opt = {},
                                      std::vector<CombConfig>* accepted = nullptr) {
  start.validate();
  if (!cost) throw invalid_input("empirical_optimizer: missing cost callable");
  if (opt.max_sweeps < 1 || !(opt.rel_step > 0) || !(opt.tol > 0))
    throw invalid_input("empirical_optimizer: bad options");

  auto get_coord = [](const CombConfig& c, int k) {
    int n = (k / 2) % 4;
    bool is_xi = k < 8;
    cx v = is_xi ? c.xi[n] : c.lambda_bare[n];
    return (k % 2 == 0) ? std::abs(v) : std::arg(v);
  };
  auto set_coord = [](CombConfig c, int k, double val) {
    int n = (k / 2) % 4;
    bool is_xi = k < 8;
    cx v = is_xi ? c.xi[n] : c.lambda_bare[n];
    double mag = std::abs(v), ph = std::arg(v);
    if (k % 2 == 0)
      mag = val;
    else
      ph = val;
    cx nv = std::polar(mag, ph);
    if (is_xi)
      c.xi[n] = nv;
    else
      c.lambda_bare[n] = nv;
    return c;
  };
  std::array<double, 16> scale{};
  for (int k = 0; k < 16; ++k)
    scale[k] = (k % 2 == 0) ? std::max(get_coord(start, k), 1e-3) : 1.0;

  CombConfig cur = start;
  double best = cost(cur);
  if (accepted) accepted->push_back(cur);
  double step = opt.rel_step;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    bool improved = false;
    for (int k = 0; k < 16; ++k) {
      double base = get_coord(cur, k);
      for (int dir : {+1, -1}) {
        double val = base + dir * step * scale[k];
        if (k % 2 == 0 && val < 0) continue;
        CombConfig trial = set_coord(cur, k, val);
        double c;
        try {
          trial.validate();
          c = cost(trial);
        } catch (const error&) {
          continue;
        }
        if (c > best + 1e-12) {
          cur = std::move(trial);
          best = c;
          improved = true;
          if (accepted) accepted->push_back(cur);
          base = get_coord(cur, k);
        }
      }
    }
    if (!improved) {
      step *= 0.5;
      if (step < opt.tol * opt.rel_step) break;
    }
  }
  return cur;
}

}  // namespace prespa
