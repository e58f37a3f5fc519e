#pragma once
// Dense complex linear algebra over truncated Fock / tensor-product Hilbert
// spaces. Subsystem order is fixed as (cavity A, transmon q, reservoir R);
// Kronecker index of (n, q, r) in dims [dA, dq, dR] is n*dq*dR + q*dR + r.
#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace prespa {

using cx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline constexpr cx kI{0.0, 1.0};

struct HilbertSpace {
  std::vector<int> dims;

  HilbertSpace() = default;
  explicit HilbertSpace(std::vector<int> d) : dims(std::move(d)) {
    for (int n : dims)
      if (n < 1) throw invalid_dimension("HilbertSpace: every dim must be >= 1");
    if (dims.empty()) throw invalid_dimension("HilbertSpace: no subsystems");
  }
  int total() const {
    return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
  }
  int subsystems() const { return static_cast<int>(dims.size()); }
  bool operator==(const HilbertSpace&) const = default;
};

struct StateVector {
  HilbertSpace space;
  Vec amplitudes;

  StateVector() = default;
  StateVector(HilbertSpace s, Vec a) : space(std::move(s)), amplitudes(std::move(a)) {
    if (amplitudes.size() != space.total())
      throw invalid_dimension("StateVector: amplitude length != space dimension");
  }
  double norm() const { return amplitudes.norm(); }
  StateVector normalized() const {
    double n = norm();
    if (n <= 0) throw invalid_input("StateVector: cannot normalize zero vector");
    return {space, amplitudes / n};
  }
};

struct DensityMatrix {
  HilbertSpace space;
  Mat elements;

  DensityMatrix() = default;
  DensityMatrix(HilbertSpace s, Mat m) : space(std::move(s)), elements(std::move(m)) {
    if (elements.rows() != space.total() || elements.cols() != space.total())
      throw invalid_dimension("DensityMatrix: matrix shape != space dimension");
  }
  double trace_real() const { return elements.trace().real(); }
};

struct Operator {
  HilbertSpace space;
  Mat elements;
  bool hermitian = false;  // advisory tags
  bool unitary = false;

  Operator() = default;
  Operator(HilbertSpace s, Mat m, bool herm = false, bool unit = false)
      : space(std::move(s)), elements(std::move(m)), hermitian(herm), unitary(unit) {
    if (elements.rows() != space.total() || elements.cols() != space.total())
      throw invalid_dimension("Operator: matrix shape != space dimension");
  }
};

inline HilbertSpace single_mode(int dim) { return HilbertSpace({dim}); }

// |n> of a single subsystem.
inline Vec fock_vec(int dim, int n) {
  if (n < 0 || n >= dim) throw invalid_dimension("fock_vec: level outside truncation");
  Vec v = Vec::Zero(dim);
  v[n] = 1.0;
  return v;
}

// Basis state |i0, i1, ...> of a product space.
inline StateVector basis_state(const HilbertSpace& space, const std::vector<int>& levels) {
  if (static_cast<int>(levels.size()) != space.subsystems())
    throw invalid_dimension("basis_state: wrong number of subsystem indices");
  int idx = 0;
  for (int s = 0; s < space.subsystems(); ++s) {
    if (levels[s] < 0 || levels[s] >= space.dims[s])
      throw invalid_dimension("basis_state: level outside truncation");
    idx = idx * space.dims[s] + levels[s];
  }
  Vec v = Vec::Zero(space.total());
  v[idx] = 1.0;
  return {space, v};
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vec kron_vec(const Vec& a, const Vec& b) {
  Vec out(a.size() * b.size());
  for (int i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

struct FockOperators {
  Operator lowering;
  Operator raising;
  Operator number;
  Operator parity;
};

inline FockOperators fock_operators(int dim) {
  if (dim < 2) throw invalid_dimension("fock_operators: dim must be >= 2");
  HilbertSpace sp = single_mode(dim);
  Mat a = Mat::Zero(dim, dim);
  Mat n = Mat::Zero(dim, dim);
  Mat p = Mat::Zero(dim, dim);
  for (int k = 1; k < dim; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  for (int k = 0; k < dim; ++k) {
    n(k, k) = k;
    p(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
  }
  Mat ad = a.adjoint();
  return {Operator(sp, a), Operator(sp, ad), Operator(sp, n, true),
          Operator(sp, p, true, true)};
}

// Identity on every slot except `slot`, where `op` acts.
inline Operator tensor_embed(const Operator& op, const HilbertSpace& target, int slot) {
  if (slot < 0 || slot >= target.subsystems())
    throw invalid_dimension("tensor_embed: slot out of range");
  if (op.space.total() != target.dims[slot])
    throw invalid_dimension("tensor_embed: operator dim != target slot dim");
  Mat acc = Mat::Identity(1, 1);
  for (int s = 0; s < target.subsystems(); ++s) {
    if (s == slot)
      acc = kron(acc, op.elements);
    else
      acc = kron(acc, Mat::Identity(target.dims[s], target.dims[s]));
  }
  return {target, std::move(acc), op.hermitian, op.unitary};
}

namespace detail {

inline bool is_hermitian(const Mat& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// exp(iH) for Hermitian H via eigendecomposition.
inline Mat exp_i_hermitian(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Vec phases(h.rows());
  for (int k = 0; k < h.rows(); ++k) phases[k] = std::exp(kI * es.eigenvalues()[k]);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

// Matrix exponential. Hermitian and anti-Hermitian inputs go through an
// eigendecomposition (exact up to solver accuracy); everything else uses
// Pade scaling-and-squaring.
inline Operator expm(const Operator& op) {
  const Mat& m = op.elements;
  if (!m.allFinite()) throw invalid_input("expm: non-finite entries");
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  double tol = 1e-13 * scale;
  if (detail::is_hermitian(m, tol)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    Vec ev(m.rows());
    for (int k = 0; k < m.rows(); ++k) ev[k] = std::exp(cx(es.eigenvalues()[k], 0.0));
    Mat r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    return {op.space, std::move(r), true, false};
  }
  if (detail::is_hermitian(kI * m, tol)) {
    // m = iH with H = -i m Hermitian: exp(m) = exp(iH) is unitary.
    Mat r = detail::exp_i_hermitian((-kI * m).eval());
    return {op.space, std::move(r), false, true};
  }
  Mat r = m.exp();
  return {op.space, std::move(r)};
}

// D(alpha) = exp(alpha a^dag - conj(alpha) a) on a single mode. The generator
// is anti-Hermitian, so the result is unitary up to truncation; the defect
// ||D D^dag - I||_inf is written to *defect when requested.
inline Operator displacement(cx alpha, int dim, double* defect = nullptr) {
  FockOperators f = fock_operators(dim);
  Mat gen = alpha * f.raising.elements - std::conj(alpha) * f.lowering.elements;
  Operator d = expm(Operator(single_mode(dim), std::move(gen)));
  if (defect) {
    Mat dd = d.elements * d.elements.adjoint() - Mat::Identity(dim, dim);
    *defect = dd.cwiseAbs().maxCoeff();
  }
  d.unitary = true;
  return d;
}

// Coherent state |alpha> truncated to dim levels (normalized within truncation).
inline StateVector coherent_state(cx alpha, int dim) {
  Vec v(dim);
  // amp_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!)
  cx amp = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n < dim; ++n) {
    v[n] = amp;
    amp *= alpha / std::sqrt(static_cast<double>(n + 1));
  }
  return {single_mode(dim), std::move(v)};
}

// Trace out every subsystem not listed in `keep` (indices into space.dims,
// strictly increasing). The kept subsystems keep their original order.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  if (keep.empty()) throw invalid_input("partial_trace: keep set is empty");
  const int ns = rho.space.subsystems();
  std::vector<bool> kept(ns, false);
  for (int s : keep) {
    if (s < 0 || s >= ns) throw invalid_input("partial_trace: subsystem index out of range");
    kept[s] = true;
  }
  std::vector<int> keep_dims, drop_dims;
  for (int s = 0; s < ns; ++s) (kept[s] ? keep_dims : drop_dims).push_back(rho.space.dims[s]);
  const int dk = std::accumulate(keep_dims.begin(), keep_dims.end(), 1, std::multiplies<>());
  const int dd = std::accumulate(drop_dims.begin(), drop_dims.end(), 1, std::multiplies<>());

  // Full index from (kept multi-index, dropped multi-index).
  auto full_index = [&](int ik, int id) {
    std::vector<int> lev(ns);
    for (int s = ns - 1; s >= 0; --s) {
      if (kept[s]) {
        lev[s] = ik % rho.space.dims[s];
        ik /= rho.space.dims[s];
      } else {
        lev[s] = id % rho.space.dims[s];
        id /= rho.space.dims[s];
      }
    }
    int idx = 0;
    for (int s = 0; s < ns; ++s) idx = idx * rho.space.dims[s] + lev[s];
    return idx;
  };

  Mat out = Mat::Zero(dk, dk);
  for (int i = 0; i < dk; ++i)
    for (int j = 0; j < dk; ++j) {
      cx sum = 0.0;
      for (int t = 0; t < dd; ++t) sum += rho.elements(full_index(i, t), full_index(j, t));
      out(i, j) = sum;
    }
  return {HilbertSpace(keep_dims), std::move(out)};
}

inline DensityMatrix pure_density(const StateVector& psi) {
  return {psi.space, psi.amplitudes * psi.amplitudes.adjoint()};
}

inline double trace_distance(const Mat& a, const Mat& b) {
  Eigen::SelfAdjointEigenSolver<Mat> es((a - b).eval());
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double state_overlap(const Vec& a, const Vec& b) { return std::norm(a.dot(b)); }

// Uhlmann fidelity between density matrices: (tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double density_fidelity(const Mat& a, const Mat& b) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  Vec sq(a.rows());
  for (int k = 0; k < a.rows(); ++k)
    sq[k] = std::sqrt(std::max(0.0, es.eigenvalues()[k]));
  Mat ra = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Mat> es2((ra * b * ra).eval());
  double tr = 0.0;
  for (int k = 0; k < a.rows(); ++k)
    tr += std::sqrt(std::max(0.0, es2.eigenvalues()[k]));
  return tr * tr;
}

}  // namespace prespa
