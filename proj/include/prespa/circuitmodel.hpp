#pragma once
// Device Hamiltonians and the multi-tone parametric rate formulas: dispersive
// shifts, the driven Raman ladder, comb residual detunings, and the
// perturbative Omega_n / lambda_n corrections.
//
// Unit convention: every stored frequency is an ordinary frequency (MHz or kHz
// as annotated); the single x2pi conversion to angular units happens inside
// the *_hamiltonian builders. Times are microseconds.
#include <array>
#include <cmath>
#include <complex>

#include "qalg.hpp"

namespace prespa {

struct DeviceParams {
  double chi_q = 1.313;        // MHz
  double K = 1.7;              // kHz
  double chi_q_prime = 5.5;    // kHz
  double alpha_q = 201.22;     // MHz
  double T1A = 520.0;          // us
  double T2A = 380.0;          // us
  double T1q = 39.0;           // us
  double T2q_star = 17.0;      // us
  double T1r = 0.27;           // us
  double kappa_r = 0.58;       // MHz (kappa/2pi)
  double gamma_up_idle = 1.4;  // 1/ms
  double gamma_up_driven = 1.8;  // 1/ms
  double thermal_e_q = 0.05;
  double thermal_1_A = 0.01;

  void validate() const {
    const double vals[] = {chi_q, K,   chi_q_prime, alpha_q,       T1A,
                           T2A,   T1q, T2q_star,    T1r,           kappa_r,
                           gamma_up_idle, gamma_up_driven, thermal_e_q, thermal_1_A};
    for (double v : vals)
      if (!(v > 0)) throw invalid_input("DeviceParams: all fields must be positive");
    double implied = 1.0 / (2.0 * 3.14159265358979323846 * T1r);
    if (std::abs(kappa_r - implied) / implied > 0.05)
      throw invalid_input("DeviceParams: kappa_r inconsistent with T1r beyond 5%");
  }
};

struct CombConfig {
  std::array<cx, 4> xi{};           // mixing-tone displacement parameters
  std::array<cx, 4> lambda_bare{};  // bare transmon Rabi rates (kHz scale)
  double eta = 2.679;               // MHz, mixing-comb spacing
  double delta = 2.9;               // MHz, Raman detuning
  double prefactor_mix = 1.0;       // kHz, calibrated global prefactor
  double stark_coeff = 201.22;      // MHz (the transmon anharmonicity scale)

  static CombConfig table_defaults() {
    CombConfig c;
    c.xi = {cx(-0.058, 0), cx(0.048, 0), cx(0.030, 0), cx(0.023, 0)};
    c.lambda_bare = {-0.98 * std::exp(cx(0, -0.43)), cx(1.52, 0),
                     1.27 * std::exp(cx(0, 0.02)), 1.14 * std::exp(cx(0, -0.35))};
    return c;
  }

  void validate() const {
    for (const cx& x : xi)
      if (std::abs(x) >= 0.2)
        throw invalid_input("CombConfig: |xi| must stay below 0.2");
    if (!(eta > 0)) throw invalid_input("CombConfig: eta must be positive");
  }
};

inline constexpr double kTwoPi = 6.28318530717958647692;

// Diagonal dispersive Hamiltonian (rad/us) on a space whose first two slots
// are (cavity, transmon); any further slots are spectators:
//   -chi_q q n - (K/2) n(n-1) - (chi'_q/2) q n(n-1)
inline Operator dispersive_hamiltonian(const DeviceParams& p, const HilbertSpace& space) {
  if (space.subsystems() < 2)
    throw invalid_dimension("dispersive_hamiltonian: need cavity and transmon slots");
  const double chi = p.chi_q;              // MHz
  const double kerr = p.K * 1e-3;          // MHz
  const double chip = p.chi_q_prime * 1e-3;  // MHz
  const int D = space.total();
  Mat h = Mat::Zero(D, D);
  int rest = 1;
  for (int s = 2; s < space.subsystems(); ++s) rest *= space.dims[s];
  const int dq = space.dims[1];
  for (int n = 0; n < space.dims[0]; ++n)
    for (int q = 0; q < dq; ++q) {
      double f = -chi * q * n - 0.5 * kerr * n * (n - 1) - 0.5 * chip * q * n * (n - 1);
      for (int r = 0; r < rest; ++r) {
        int idx = (n * dq + q) * rest + r;
        h(idx, idx) = kTwoPi * f;
      }
    }
  return {space, std::move(h), true};
}

// Raman drive ladder (rad/us) on cavity (x) transmon(2) (x) reservoir(2):
//   sum_n lambda |2n,e,0><2n,g,0| + Omega |2n+1,g,1><2n,e,0| + h.c.
inline Operator drive_hamiltonian(double lam_kHz, double omega_kHz,
                                  const HilbertSpace& space) {
  if (space.subsystems() != 3 || space.dims[1] != 2 || space.dims[2] != 2)
    throw invalid_dimension(
        "drive_hamiltonian: space must be cavity (x) transmon(2) (x) reservoir(2)");
  if (space.dims[0] < 8)
    throw invalid_dimension("drive_hamiltonian: cavity dim must be >= 8");
  const double lam = kTwoPi * lam_kHz * 1e-3;    // rad/us
  const double om = kTwoPi * omega_kHz * 1e-3;   // rad/us
  const int D = space.total();
  auto idx = [&](int n, int q, int r) { return (n * 2 + q) * 2 + r; };
  Mat h = Mat::Zero(D, D);
  for (int n = 0; n <= 6; n += 2) {
    h(idx(n, 1, 0), idx(n, 0, 0)) += lam;
    h(idx(n, 0, 0), idx(n, 1, 0)) += lam;
    h(idx(n + 1, 0, 1), idx(n, 1, 0)) += om;
    h(idx(n, 1, 0), idx(n + 1, 0, 1)) += om;
  }
  return {space, std::move(h), true};
}

namespace detail {

// bracket_n = xi_n - (S/eta) sum_{m;k;l!=k} (xi_m/(l-k)) *
//             (xi_k conj(xi_l) d_{n-m,l-k} - conj(xi_k) xi_l d_{n-m,k-l})
inline std::array<cx, 4> omega_brackets(const std::array<cx, 4>& xi, double s_over_eta) {
  std::array<cx, 4> out{};
  for (int n = 1; n <= 4; ++n) {
    cx sum = 0.0;
    for (int m = 1; m <= 4; ++m)
      for (int k = 1; k <= 4; ++k)
        for (int l = 1; l <= 4; ++l) {
          if (l == k) continue;
          cx t = 0.0;
          if (n - m == l - k) t += xi[k - 1] * std::conj(xi[l - 1]);
          if (n - m == k - l) t -= std::conj(xi[k - 1]) * xi[l - 1];
          sum += xi[m - 1] / static_cast<double>(l - k) * t;
        }
    out[n - 1] = xi[n - 1] - s_over_eta * sum;
  }
  return out;
}

}  // namespace detail

// Omega_n = prefactor_mix * (-sqrt(2n-1)) * bracket_n, in kHz.
inline std::array<cx, 4> mixing_rates(const CombConfig& c) {
  c.validate();
  auto brackets = detail::omega_brackets(c.xi, c.stark_coeff / c.eta);
  std::array<cx, 4> out{};
  for (int n = 1; n <= 4; ++n)
    out[n - 1] = c.prefactor_mix * (-std::sqrt(2.0 * n - 1.0)) * brackets[n - 1];
  return out;
}

// Prefactor that calibrates path 2 to Omega_2 = +target (kHz). Requires the
// uncalibrated path-2 rate to be real up to rounding, which holds for real xi.
inline double calibrate_mixing_prefactor(const CombConfig& c, double target_kHz) {
  auto brackets = detail::omega_brackets(c.xi, c.stark_coeff / c.eta);
  cx w2 = -std::sqrt(3.0) * brackets[1];
  if (std::abs(w2.imag()) > 1e-9 * std::abs(w2))
    throw invalid_input("calibrate_mixing_prefactor: path-2 rate is not real");
  if (w2.real() == 0.0)
    throw invalid_input("calibrate_mixing_prefactor: path-2 rate vanishes");
  return target_kHz / w2.real();
}

// lambda_n = Lambda_n - (2 S/eta_t) sum_{m!=n;k;l!=k} Lambda_m xi_k xi_l
//            d_{n-m,k-l}/(m-n), with eta_t = -eta: the transmon comb steps with
// the same spacing magnitude but opposite sign.
inline std::array<cx, 4> transmon_rates(const CombConfig& c) {
  c.validate();
  const double eta_t = -c.eta;
  std::array<cx, 4> out{};
  for (int n = 1; n <= 4; ++n) {
    cx sum = 0.0;
    for (int m = 1; m <= 4; ++m) {
      if (m == n) continue;
      for (int k = 1; k <= 4; ++k)
        for (int l = 1; l <= 4; ++l) {
          if (l == k) continue;
          if (n - m == k - l)
            sum += c.lambda_bare[m - 1] * c.xi[k - 1] * c.xi[l - 1] /
                   static_cast<double>(m - n);
        }
    }
    out[n - 1] = c.lambda_bare[n - 1] - 2.0 * c.stark_coeff / eta_t * sum;
  }
  return out;
}

struct CombResiduals {
  std::array<double, 4> transmon_tone_kHz{};  // per-tone, after minimax offset
  std::array<double, 4> mixing_tone_kHz{};    // per-tone, after minimax offset
  std::array<double, 4> path_kHz{};           // two-tone pair sums (the Raman
                                              // resonance condition per path)
};

// Residual detunings of an equally spaced comb from the unequally spaced
// transitions. The transmon comb steps by -eta, the mixing comb by +eta, so
// the second-order dispersive shift cancels exactly in each pair sum and the
// pair residuals are set by the Kerr alone. The Raman detuning delta shifts
// the two combs oppositely and cancels everywhere.
inline CombResiduals comb_frequencies(const DeviceParams& p, double eta, double delta) {
  (void)delta;  // cancels in every residual; kept for the call shape
  if (!(eta > 0)) throw invalid_input("comb_frequencies: eta must be positive");
  const double chi = p.chi_q;                // MHz
  const double kerr = p.K * 1e-3;            // MHz
  const double chip = p.chi_q_prime * 1e-3;  // MHz

  auto minimax = [](std::array<double, 4>& r) {
    double lo = r[0], hi = r[0];
    for (double v : r) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double mid = 0.5 * (lo + hi);
    for (double& v : r) v -= mid;
  };

  CombResiduals out;
  std::array<double, 4> tq{}, tm{}, pair{};
  for (int n = 1; n <= 4; ++n) {
    int m = 2 * (n - 1);
    // transmon tone target: g->e at m photons
    tq[n - 1] = -chi * m - 0.5 * chip * m * (m - 1);
    // pair target: photon addition |2n-2> -> |2n-1> in g
    pair[n - 1] = -kerr * m;
    // mixing tone target: the remainder of the two-photon condition
    tm[n - 1] = pair[n - 1] - tq[n - 1];
  }
  for (int n = 0; n < 4; ++n) {
    out.transmon_tone_kHz[n] = (tq[n] - (-eta) * n) * 1e3;
    out.mixing_tone_kHz[n] = (tm[n] - eta * n) * 1e3;
    out.path_kHz[n] = pair[n] * 1e3;
  }
  minimax(out.transmon_tone_kHz);
  minimax(out.mixing_tone_kHz);
  minimax(out.path_kHz);
  return out;
}

// Single-tone ac Stark shift in MHz: 2 alpha_q |xi|^2.
inline double stark_shift(cx xi, const DeviceParams& p) {
  if (std::abs(xi) >= 0.2) throw invalid_input("stark_shift: |xi| must stay below 0.2");
  return 2.0 * p.alpha_q * std::norm(xi);
}

}  // namespace prespa
