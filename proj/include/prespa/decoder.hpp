#pragma once
// Subspace decomposition of trajectory states, the decode map to the transmon
// qubit, and fidelity metrics. The decode of a trajectory mixture is computed
// by projecting each branch onto the decoding basis; this reproduces the
// explicit 2x2 mixture form (weights (n15)^2/(n37)^2, coherence cos(theta-phi))
// exactly, and generalizes to any mixture supported on the code + error space.
#include <cmath>
#include <vector>

#include "codes.hpp"
#include "dissipator.hpp"
#include "qalg.hpp"
#include "fit.hpp"

namespace prespa {

struct DecodingBasis {
  StateVector u0, u1;  // span of the {1,5} subspace
  StateVector v0, v1;  // span of the {3,7} subspace

  static DecodingBasis from_codewords(const CodeWords& cw, int dim) {
    cw.validate();
    if (dim < 8) throw invalid_dimension("DecodingBasis: dim must be >= 8");
    HilbertSpace sp = single_mode(dim);
    Vec u0 = Vec::Zero(dim), u1 = Vec::Zero(dim);
    Vec v0 = Vec::Zero(dim), v1 = Vec::Zero(dim);
    u0[1] = cw.c1;
    u0[5] = cw.c5;
    u1[1] = cw.c5;
    u1[5] = -cw.c1;
    v0[3] = cw.c3;
    v0[7] = cw.c7;
    v1[3] = cw.c7;
    v1[7] = -cw.c3;
    return {StateVector(sp, u0), StateVector(sp, u1), StateVector(sp, v0),
            StateVector(sp, v1)};
  }

  void validate() const {
    auto check_pair = [](const StateVector& a, const StateVector& b, int lo, int hi,
                         const char* label) {
      const Vec& x = a.amplitudes;
      const Vec& y = b.amplitudes;
      for (int n = 0; n < x.size(); ++n)
        if (n != lo && n != hi && (std::abs(x[n]) > 1e-12 || std::abs(y[n]) > 1e-12))
          throw invalid_input(std::string("DecodingBasis: ") + label +
                              " supported outside its Fock pair");
      if (std::abs(x.norm() - 1) > 1e-12 || std::abs(y.norm() - 1) > 1e-12 ||
          std::abs(x.dot(y)) > 1e-12)
        throw invalid_input(std::string("DecodingBasis: ") + label +
                            " pair not orthonormal");
    };
    check_pair(u0, u1, 1, 5, "u");
    check_pair(v0, v1, 3, 7, "v");
  }
};

struct SubspaceDecomposition {
  double n15 = 0, n37 = 0;    // projection norms onto the two subspaces
  StateVector psi15, psi37;   // normalized components (zero state when norm = 0)
  double leaked = 0;          // weight outside Fock {1,3,5,7}
};

inline SubspaceDecomposition subspace_decompose(const StateVector& psi) {
  const int dim = psi.space.total();
  if (dim < 8) throw invalid_dimension("subspace_decompose: dim must be >= 8");
  Vec p15 = Vec::Zero(dim), p37 = Vec::Zero(dim);
  double leaked = 0.0;
  for (int n = 0; n < dim; ++n) {
    if (n == 1 || n == 5)
      p15[n] = psi.amplitudes[n];
    else if (n == 3 || n == 7)
      p37[n] = psi.amplitudes[n];
    else
      leaked += std::norm(psi.amplitudes[n]);
  }
  if (leaked > 1e-10)
    throw leakage_error("subspace_decompose: weight " + std::to_string(leaked) +
                        " outside Fock levels {1,3,5,7}");
  SubspaceDecomposition out;
  out.leaked = leaked;
  out.n15 = p15.norm();
  out.n37 = p37.norm();
  out.psi15 = {psi.space, out.n15 > 0 ? Vec(p15 / out.n15) : p15};
  out.psi37 = {psi.space, out.n37 > 0 ? Vec(p37 / out.n37) : p37};
  return out;
}

struct DecodingAngles {
  double theta = 0, phi = 0;  // radians
};

// Angles of trajectory j at dimensionless time kt (kappa*t): the rotation of
// each branch away from its code word.
inline DecodingAngles decoding_angles(const CodeWords& cw, int j, double kt) {
  auto jp = JumpProcess::ideal_prespa(8, 1.0);
  auto words = t4c_words(cw, 8);
  auto b15 = trajectory_state(words.zero_L, j, kt, jp);
  auto b37 = trajectory_state(words.one_L, j, kt, jp);
  double c_th = std::abs(words.zero_L.amplitudes.dot(b15.amplitudes));
  double c_ph = std::abs(words.one_L.amplitudes.dot(b37.amplitudes));
  return {std::acos(std::min(1.0, c_th)), std::acos(std::min(1.0, c_ph))};
}

struct DecodedQubit {
  Mat rho_q;  // 2x2, unit trace

  DensityMatrix as_density() const { return {HilbertSpace({2}), rho_q}; }
};

inline DecodedQubit decode_mixture(const TrajectoryMixture& mix,
                                   const DecodingBasis& basis) {
  cx num01 = 0.0;
  double num00 = 0.0, num11 = 0.0;
  for (const auto& term : mix.terms) {
    const Vec& psi = term.state.amplitudes;
    cx c0 = basis.u0.amplitudes.dot(psi);
    cx c1 = basis.u1.amplitudes.dot(psi);
    cx d0 = basis.v0.amplitudes.dot(psi);
    cx d1 = basis.v1.amplitudes.dot(psi);
    double w15 = std::norm(c0) + std::norm(c1);
    double w37 = std::norm(d0) + std::norm(d1);
    double outside = 1.0 - w15 - w37;
    if (outside > 1e-10)
      throw leakage_error("decode_mixture: trajectory term leaks weight " +
                          std::to_string(outside) + " outside the decode subspaces");
    num00 += term.weight * w15;
    num11 += term.weight * w37;
    num01 += term.weight * (c0 * std::conj(d0) + c1 * std::conj(d1));
  }
  double tot = num00 + num11;
  if (tot <= 0) throw invalid_input("decode_mixture: empty mixture");
  Mat rho(2, 2);
  rho << num00 / tot, num01 / tot, std::conj(num01) / tot, num11 / tot;
  return {std::move(rho)};
}

// Decode of the ideal-dissipation channel applied to an encoded state, at
// dimensionless time kt with jump cutoff jmax.
inline DecodedQubit decode_encoded(const CodeWords& cw, const LogicalAmplitudes& xy,
                                   double kt, int jmax, const DecodingBasis& basis) {
  auto psi0 = encode(cw, xy, 8);
  auto jp = JumpProcess::ideal_prespa(8, 1.0);
  return decode_mixture(trajectory_mixture(psi0, kt, jmax, jp), basis);
}

inline double state_fidelity(const DecodedQubit& dq, const LogicalAmplitudes& xy) {
  xy.validate();
  Vec psi(2);
  psi << xy.x, xy.y;
  return (psi.adjoint() * dq.rho_q * psi).value().real();
}

inline double process_fidelity(const std::vector<double>& cardinal_fids) {
  if (cardinal_fids.size() != 6)
    throw invalid_input("process_fidelity: needs exactly six cardinal fidelities");
  double mean = 0.0;
  for (double f : cardinal_fids) {
    if (f < -1e-9 || f > 1.0 + 1e-9)
      throw invalid_input("process_fidelity: fidelity outside [0,1]");
    mean += f;
  }
  mean /= 6.0;
  return 1.5 * mean - 0.5;
}

// Cardinal states in the fixed order +Z, -Z, +X, -X, +Y, -Y.
inline std::vector<LogicalAmplitudes> cardinal_states() {
  const double s = 1.0 / std::sqrt(2.0);
  return {{1.0, 0.0}, {0.0, 1.0},          {s, s},
          {s, -s},    {s, cx(0.0, s)},     {s, cx(0.0, -s)}};
}

// Process fidelity of the ideal-dissipation channel at dimensionless time kt.
inline double ideal_process_fidelity(const CodeWords& cw, double kt, int jmax,
                                     const DecodingBasis& basis) {
  std::vector<double> fids;
  for (const auto& xy : cardinal_states())
    fids.push_back(state_fidelity(decode_encoded(cw, xy, kt, jmax, basis), xy));
  return process_fidelity(fids);
}

struct DecayParams {
  double amplitude = 0, tau = 0;
};

// Least-squares fit of F(t) = 0.25 + A exp(-t/tau).
inline DecayParams fit_decay(const Eigen::VectorXd& times, const Eigen::VectorXd& fids) {
  if (times.size() < 4) throw invalid_input("fit_decay: needs at least 4 points");
  for (int i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw invalid_input("fit_decay: times must be strictly increasing");
  double a0 = std::max(0.05, fids[0] - 0.25);
  // initial tau: first 1/e crossing of the decaying part, else the full span
  double tau0 = times[times.size() - 1];
  for (int i = 0; i < times.size(); ++i)
    if (fids[i] - 0.25 < a0 / std::exp(1.0)) {
      tau0 = std::max(times[i], 1e-6);
      break;
    }
  auto fit = fit_exp_decay(times, fids, 0.25, a0, tau0);
  return {fit.amplitude, fit.tau};
}

// The decode target as a full unitary on cavity (x) transmon(2): the specified
// partial isometry completed by Gram-Schmidt over the standard basis. The
// `completion` flag selects the sweep order (ascending / descending); every
// reported quantity is independent of that choice.
inline Operator decode_unitary(const DecodingBasis& basis, int dim, int completion = 0) {
  if (dim < 8) throw invalid_dimension("decode_unitary: dim must be >= 8");
  const int D = 2 * dim;
  auto cav_q = [&](const Vec& cav, int q) {
    Vec s = Vec::Zero(D);
    for (int n = 0; n < dim; ++n) s[2 * n + q] = cav[n];
    return s;
  };
  auto joint = [&](int n, int q) {
    Vec s = Vec::Zero(D);
    s[2 * n + q] = 1.0;
    return s;
  };
  auto pad = [&](const StateVector& sv) {
    Vec out = Vec::Zero(dim);
    out.head(sv.amplitudes.size()) = sv.amplitudes;
    return out;
  };

  std::vector<std::pair<Vec, Vec>> rows = {
      {cav_q(pad(basis.u0), 0), joint(0, 0)}, {cav_q(pad(basis.u1), 0), joint(1, 0)},
      {joint(0, 0), joint(5, 0)},             {cav_q(pad(basis.v0), 0), joint(0, 1)},
      {cav_q(pad(basis.v1), 0), joint(1, 1)}, {joint(0, 1), cav_q(pad(basis.v0), 0)},
      {joint(1, 1), cav_q(pad(basis.v1), 0)}};

  Mat u = Mat::Zero(D, D);
  std::vector<Vec> dom, img;
  for (auto& [d, i] : rows) {
    u += i * d.adjoint();
    dom.push_back(d);
    img.push_back(i);
  }
  auto complete = [&](std::vector<Vec> vecs) {
    size_t fixed = vecs.size();
    for (int step = 0; step < D; ++step) {
      int k = (completion == 0) ? step : D - 1 - step;
      Vec c = Vec::Zero(D);
      c[k] = 1.0;
      for (const Vec& o : vecs) c -= o * o.dot(c);
      double nrm = c.norm();
      if (nrm > 1e-9) vecs.push_back(c / nrm);
    }
    vecs.erase(vecs.begin(), vecs.begin() + fixed);
    return vecs;
  };
  auto dom_rest = complete(dom);
  auto img_rest = complete(img);
  if (dom_rest.size() != img_rest.size())
    throw invalid_input("decode_unitary: completion rank mismatch");
  for (size_t k = 0; k < dom_rest.size(); ++k)
    u += img_rest[k] * dom_rest[k].adjoint();
  return {HilbertSpace({dim, 2}), std::move(u), false, true};
}

}  // namespace prespa
