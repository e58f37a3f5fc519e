#pragma once
// Lindblad master-equation integrator, vectorized steady states, the
// four-level two-stage Raman rate fit, and the driven heating model.
//
// The right-hand side is evaluated in matrix form,
//   d rho = A rho + rho A^dag + sum_k C_k rho C_k^dag,  A = -iH - 1/2 sum C_k^dag C_k,
// which is algebraically the vectorized generator without materializing the
// D^2 x D^2 matrix; the dense generator is built only for steady-state solves.
#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "circuitmodel.hpp"
#include "fit.hpp"
#include "qalg.hpp"

namespace prespa {

struct Collapse {
  Operator op;        // unscaled; the effective operator is sqrt(rate) * op
  double rate = 0.0;  // 1/us
};

struct NoiseModel {
  std::vector<Collapse> collapse;

  void validate(const HilbertSpace& space) const {
    for (const auto& c : collapse) {
      if (!(c.rate >= 0.0) || !std::isfinite(c.rate))
        throw invalid_input("NoiseModel: rates must be finite and >= 0");
      if (!(c.op.space == space))
        throw invalid_dimension("NoiseModel: collapse operator on wrong space");
    }
  }

  // 1/T2 - 1/(2 T1); negative inputs are unphysical.
  static double pure_dephasing_rate(double t1, double t2) {
    double g = 1.0 / t2 - 0.5 / t1;
    if (g < 0) throw invalid_input("pure_dephasing_rate: T2 > 2 T1");
    return g;
  }

  // Standard device noise on cavity (x) transmon(2) (x) reservoir(2): cavity
  // decay and pure dephasing, transmon decay / dephasing / heating (driven
  // rate), reservoir decay at the angular linewidth.
  static NoiseModel tripartite(const DeviceParams& p, const HilbertSpace& space) {
    if (space.subsystems() != 3 || space.dims[1] != 2 || space.dims[2] != 2)
      throw invalid_dimension(
          "NoiseModel::tripartite: space must be cavity (x) transmon(2) (x) reservoir(2)");
    auto fc = fock_operators(space.dims[0]);
    auto f2 = fock_operators(2);
    Mat pe = Mat::Zero(2, 2);
    pe(1, 1) = 1.0;
    NoiseModel nm;
    nm.collapse.push_back({tensor_embed({single_mode(space.dims[0]), fc.lowering.elements}, space, 0),
                           1.0 / p.T1A});
    nm.collapse.push_back({tensor_embed({single_mode(space.dims[0]), fc.number.elements}, space, 0),
                           2.0 * pure_dephasing_rate(p.T1A, p.T2A)});
    nm.collapse.push_back(
        {tensor_embed({single_mode(2), f2.lowering.elements}, space, 1), 1.0 / p.T1q});
    nm.collapse.push_back({tensor_embed({single_mode(2), pe}, space, 1),
                           2.0 * pure_dephasing_rate(p.T1q, p.T2q_star)});
    nm.collapse.push_back({tensor_embed({single_mode(2), f2.raising.elements}, space, 1),
                           p.gamma_up_driven * 1e-3});
    nm.collapse.push_back(
        {tensor_embed({single_mode(2), f2.lowering.elements}, space, 2), kTwoPi * p.kappa_r});
    return nm;
  }
};

struct MasterEqProblem {
  Operator H;
  NoiseModel noise;
  DensityMatrix rho0;
  std::vector<double> times;  // us, strictly increasing; rho0 sits at times[0]

  void validate() const {
    if (!(H.space == rho0.space))
      throw invalid_dimension("MasterEqProblem: H and rho0 spaces differ");
    noise.validate(H.space);
    if (H.space.total() > 200)
      throw invalid_dimension("MasterEqProblem: total dim must be <= 200");
    if (times.empty()) throw invalid_input("MasterEqProblem: empty time grid");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw invalid_input("MasterEqProblem: times must be strictly increasing");
  }
};

namespace detail {

struct LindbladRhs {
  Mat drift;              // -iH - 1/2 sum C^dag C
  std::vector<Mat> cops;  // sqrt(rate) * op

  LindbladRhs(const Operator& h, const NoiseModel& noise) {
    drift = cx(0, -1) * h.elements;
    for (const auto& c : noise.collapse) {
      if (c.rate == 0.0) continue;
      cops.push_back(std::sqrt(c.rate) * c.op.elements);
      drift -= 0.5 * cops.back().adjoint() * cops.back();
    }
  }

  Mat operator()(const Mat& rho) const {
    Mat d = drift * rho + rho * drift.adjoint();
    for (const Mat& c : cops) d += c * rho * c.adjoint();
    return d;
  }
};

// Dormand-Prince 5(4) step on a matrix ODE; returns the embedded error.
struct Dopri5 {
  static constexpr double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr double e[7] = {71.0 / 57600,      0.0,        -71.0 / 16695, 71.0 / 1920,
                                  -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

  template <class Rhs>
  static double step(const Rhs& rhs, const Mat& y, double h, Mat& out) {
    Mat k[7];
    k[0] = rhs(y);
    for (int s = 1; s < 7; ++s) {
      Mat ys = y;
      for (int j = 0; j < s; ++j)
        if (a[s][j] != 0.0) ys += (h * a[s][j]) * k[j];
      k[s] = rhs(ys);
    }
    out = y;
    for (int j = 0; j < 6; ++j)
      if (a[6][j] != 0.0) out += (h * a[6][j]) * k[j];
    Mat err = Mat::Zero(y.rows(), y.cols());
    for (int j = 0; j < 7; ++j)
      if (e[j] != 0.0) err += (h * e[j]) * k[j];
    return err.cwiseAbs().maxCoeff();
  }
};

// Adaptive solve of d rho/dt = rhs(rho) through a strictly increasing grid;
// returns rho at every grid point (including times[0]).  Local error per step
// is held at 1e-8 relative; the trace is checked at every grid point.
template <class Rhs>
inline std::vector<Mat> integrate_grid(const Rhs& rhs, const Mat& rho0,
                                       const std::vector<double>& times) {
  const double span = times.back() - times.front();
  const double tr0 = rho0.trace().real();

  std::vector<Mat> out;
  out.reserve(times.size());
  out.push_back(rho0);

  Mat rho = rho0;
  double t = times.front();
  double h = std::max(1e-6, span > 0 ? 1e-3 * span : 1e-3);
  const double atol = 1e-10, rtol = 1e-8;
  long evals = 0;

  for (std::size_t i = 1; i < times.size(); ++i) {
    const double tend = times[i];
    while (t < tend) {
      h = std::min(h, tend - t);
      Mat next;
      double err = Dopri5::step(rhs, rho, h, next);
      evals += 7;
      double scale = atol + rtol * rho.cwiseAbs().maxCoeff();
      double ratio = err / scale;
      if (ratio <= 1.0) {
        rho = std::move(next);
        t += h;
        h *= std::clamp(0.9 * std::pow(std::max(ratio, 1e-10), -0.2), 1.0, 5.0);
      } else {
        h *= std::max(0.9 * std::pow(ratio, -0.2), 0.2);
      }
      if (h < 1e-12 * std::max(span, 1.0))
        throw integration_error("integrate_grid: step size collapsed");
      if (evals > 200'000'000)
        throw integration_error("integrate_grid: evaluation budget exhausted");
    }
    t = tend;
    if (std::abs(rho.trace().real() - tr0) > 1e-8 * std::max(1.0, std::abs(tr0)))
      throw integration_error("integrate_grid: trace drift beyond 1e-8");
    out.push_back(rho);
  }
  return out;
}

}  // namespace detail

// Integrate d rho/dt = L[rho] through the grid; returns rho at every grid
// point (including times[0]). Local error per step is held at 1e-8 relative.
inline std::vector<DensityMatrix> lindblad_evolve(const MasterEqProblem& prob) {
  prob.validate();
  const detail::LindbladRhs rhs(prob.H, prob.noise);
  std::vector<Mat> mats = detail::integrate_grid(rhs, prob.rho0.elements, prob.times);
  std::vector<DensityMatrix> out;
  out.reserve(mats.size());
  for (auto& m : mats) out.push_back({prob.H.space, std::move(m)});
  return out;
}

// Null-space steady state of the vectorized generator. Throws when the null
// space is degenerate (second singular value below 1e-8 of the largest).
inline DensityMatrix steady_state(const Operator& H, const NoiseModel& noise) {
  noise.validate(H.space);
  const int d = H.space.total();
  if (d > 32) throw invalid_dimension("steady_state: total dim must be <= 32");
  const int d2 = d * d;
  Mat id = Mat::Identity(d, d);

  // vec is column-stacked: vec(A X B) = (B^T (x) A) vec(X)
  Mat g = cx(0, -1) * (kron(id, H.elements) - kron(Mat(H.elements.transpose()), id));
  for (const auto& c : noise.collapse) {
    if (c.rate == 0.0) continue;
    Mat l = std::sqrt(c.rate) * c.op.elements;
    Mat ldl = l.adjoint() * l;
    g += kron(Mat(l.conjugate()), l);
    g -= 0.5 * kron(id, ldl);
    g -= 0.5 * kron(Mat(ldl.transpose()), id);
  }

  Eigen::BDCSVD<Mat> svd(g, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smax = sv(0);
  if (!(smax > 0)) throw non_unique_steady_state("steady_state: zero generator");
  if (sv(d2 - 2) < 1e-8 * smax)
    throw non_unique_steady_state("steady_state: degenerate null space");

  Vec v = svd.matrixV().col(d2 - 1);
  Mat rho = Eigen::Map<const Mat>(v.data(), d, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  cx tr = rho.trace();
  if (std::abs(tr) < 1e-12)
    throw non_unique_steady_state("steady_state: traceless null vector");
  rho /= tr;

  detail::LindbladRhs rhs(H, noise);
  if (rhs(rho).cwiseAbs().maxCoeff() > 1e-10)
    throw integration_error("steady_state: residual above 1e-10");
  return {H.space, std::move(rho)};
}

// Four-level two-stage Raman ladder (|2n,g,0>, |2n,e,0>, |2n+1,g,1>,
// |2n+1,g,0>) with fixed device noise: reservoir decay, transmon decay and
// pure dephasing on the intermediate level.
struct RamanCurves {
  std::vector<double> times;     // us
  std::vector<double> p_e;       // intermediate transmon population
  std::vector<double> p_target;  // odd-cavity population (converted + settled)
};

namespace detail {

inline MasterEqProblem raman_problem(double lambda_kHz, double omega_kHz,
                                     const DeviceParams& p, std::vector<double> times) {
  HilbertSpace sp({4});
  const double lam = kTwoPi * lambda_kHz * 1e-3;
  const double om = kTwoPi * omega_kHz * 1e-3;
  Mat h = Mat::Zero(4, 4);
  h(1, 0) = lam;
  h(0, 1) = lam;
  h(2, 1) = om;
  h(1, 2) = om;

  NoiseModel nm;
  Mat res = Mat::Zero(4, 4);
  res(3, 2) = 1.0;
  nm.collapse.push_back({{sp, std::move(res)}, kTwoPi * p.kappa_r});
  Mat tdec = Mat::Zero(4, 4);
  tdec(0, 1) = 1.0;
  nm.collapse.push_back({{sp, std::move(tdec)}, 1.0 / p.T1q});
  Mat tphi = Mat::Zero(4, 4);
  tphi(1, 1) = 1.0;
  nm.collapse.push_back(
      {{sp, std::move(tphi)}, 2.0 * NoiseModel::pure_dephasing_rate(p.T1q, p.T2q_star)});

  Mat r0 = Mat::Zero(4, 4);
  r0(0, 0) = 1.0;
  return {{sp, std::move(h), true}, std::move(nm), {sp, std::move(r0)}, std::move(times)};
}

}  // namespace detail

inline RamanCurves simulate_raman_stage(double lambda_kHz, double omega_kHz,
                                        const DeviceParams& p,
                                        const std::vector<double>& times) {
  auto states = lindblad_evolve(detail::raman_problem(lambda_kHz, omega_kHz, p, times));
  RamanCurves out;
  out.times = times;
  for (const auto& r : states) {
    out.p_e.push_back(r.elements(1, 1).real());
    out.p_target.push_back(r.elements(2, 2).real() + r.elements(3, 3).real());
  }
  return out;
}

namespace detail {

// Fixed-step RK4 version of the four-level curves. The fit differentiates the
// model numerically, so the integrator must be a smooth function of the
// parameters; the adaptive controller's accept/reject branches are not.
inline RamanCurves raman_curves_fixed(double lambda_kHz, double omega_kHz,
                                      const DeviceParams& p,
                                      const std::vector<double>& times) {
  auto prob = raman_problem(lambda_kHz, omega_kHz, p, times);
  LindbladRhs rhs(prob.H, prob.noise);
  Mat rho = prob.rho0.elements;
  RamanCurves out;
  out.times = times;
  double t = times.front();
  auto record = [&](const Mat& r) {
    out.p_e.push_back(r(1, 1).real());
    out.p_target.push_back(r(2, 2).real() + r(3, 3).real());
  };
  record(rho);
  const double dt0 = 0.002;
  for (std::size_t i = 1; i < times.size(); ++i) {
    while (t < times[i] - 1e-12) {
      double dt = std::min(dt0, times[i] - t);
      Mat k1 = rhs(rho);
      Mat k2 = rhs(Mat(rho + 0.5 * dt * k1));
      Mat k3 = rhs(Mat(rho + 0.5 * dt * k2));
      Mat k4 = rhs(Mat(rho + dt * k3));
      rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += dt;
    }
    t = times[i];
    record(rho);
  }
  return out;
}

}  // namespace detail

struct RamanFit {
  double omega_kHz = 0.0;
  double lambda_kHz = 0.0;
  double scale = 1.0;
  double rss = 0.0;
};

// Least-squares fit of the four-level model to a pair of population curves.
// Free parameters: Omega, lambda, and a y-axis scale; the scale is kept in
// the physical calibration band (0.5, 1.5) so flat data pins lambda, not the
// scale, to zero.
inline RamanFit raman_fit(const RamanCurves& data, const DeviceParams& p) {
  const int n = static_cast<int>(data.times.size());
  if (n < 4 || static_cast<int>(data.p_e.size()) != n ||
      static_cast<int>(data.p_target.size()) != n)
    throw invalid_input("raman_fit: need matching curves with >= 4 points");

  struct Memo {
    std::vector<std::pair<std::array<double, 2>, RamanCurves>> entries;
  };
  auto memo = std::make_shared<Memo>();
  auto curves_at = [memo, &p, &data](double om, double lam) -> const RamanCurves& {
    std::array<double, 2> key{om, lam};
    for (const auto& e : memo->entries)
      if (e.first == key) return e.second;
    if (memo->entries.size() > 4096) memo->entries.clear();
    memo->entries.push_back({key, detail::raman_curves_fixed(lam, om, p, data.times)});
    return memo->entries.back().second;
  };

  // model index i: [0, n) -> p_e, [n, 2n) -> p_target
  ModelFn model = [&, curves_at](double ti, const Eigen::VectorXd& q) {
    double om = std::abs(q[0]), lam = std::abs(q[1]);
    double scale = 1.0 + 0.5 * std::tanh(q[2]);
    const RamanCurves& c = curves_at(om, lam);
    int i = static_cast<int>(ti);
    return scale * (i < n ? c.p_e[i] : c.p_target[i - n]);
  };

  Eigen::VectorXd tt(2 * n), yy(2 * n);
  for (int i = 0; i < n; ++i) {
    tt[i] = i;
    yy[i] = data.p_e[i];
    tt[n + i] = n + i;
    yy[n + i] = data.p_target[i];
  }
  Eigen::VectorXd p0(3);
  p0 << 80.0, 20.0, 0.0;
  FitResult res = fit_nonlinear(model, tt, yy, p0, 200, 1e-12);
  if (!res.converged) throw fit_error("raman_fit: no convergence");
  if (res.rss / (2 * n) > 1e-4) throw fit_error("raman_fit: residual above threshold");
  return {std::abs(res.params[0]), std::abs(res.params[1]),
          1.0 + 0.5 * std::tanh(res.params[2]), res.rss};
}

// Effective vacuum-escape rate of the single-tone heating model (1/ms):
// transmon heating feeds the mixing tone's |0,e,0> -> |1,g,1> conversion, and
// detailed balance against cavity decay sets P1/P0 = gamma01 * T1A.
inline std::vector<double> heating_scan(const std::vector<double>& omega_kHz_list,
                                        const DeviceParams& p) {
  HilbertSpace sp({2, 2, 2});
  auto f2 = fock_operators(2);
  auto idx = [](int nc, int q, int r) { return (nc * 2 + q) * 2 + r; };

  NoiseModel nm;
  nm.collapse.push_back(
      {tensor_embed({single_mode(2), f2.lowering.elements}, sp, 0), 1.0 / p.T1A});
  nm.collapse.push_back(
      {tensor_embed({single_mode(2), f2.lowering.elements}, sp, 1), 1.0 / p.T1q});
  nm.collapse.push_back({tensor_embed({single_mode(2), f2.raising.elements}, sp, 1),
                         p.gamma_up_idle * 1e-3});
  nm.collapse.push_back(
      {tensor_embed({single_mode(2), f2.lowering.elements}, sp, 2), kTwoPi * p.kappa_r});

  std::vector<double> out;
  out.reserve(omega_kHz_list.size());
  for (double om_kHz : omega_kHz_list) {
    Mat h = Mat::Zero(8, 8);
    double om = kTwoPi * om_kHz * 1e-3;
    h(idx(1, 0, 1), idx(0, 1, 0)) = om;
    h(idx(0, 1, 0), idx(1, 0, 1)) = om;
    auto rho = steady_state({sp, std::move(h), true}, nm);
    double p0 = 0.0, p1 = 0.0;
    for (int q = 0; q < 2; ++q)
      for (int r = 0; r < 2; ++r) {
        p0 += rho.elements(idx(0, q, r), idx(0, q, r)).real();
        p1 += rho.elements(idx(1, q, r), idx(1, q, r)).real();
      }
    out.push_back(p1 / (p0 * p.T1A) * 1e3);
  }
  return out;
}

}  // namespace prespa
