#pragma once
// T4C code words on Fock levels {1,5} / {3,7}, logical encodings, cat states,
// and the moment-matched codeword optimum.
#include <cmath>

#include "qalg.hpp"

namespace prespa {

struct CodeWords {
  double c1 = 0, c3 = 0, c5 = 0, c7 = 0;

  static CodeWords experimental() {
    return {std::sqrt(0.35), std::sqrt(0.9), std::sqrt(0.65), std::sqrt(0.1)};
  }
  void validate() const {
    if (c1 < 0 || c3 < 0 || c5 < 0 || c7 < 0)
      throw invalid_input("CodeWords: amplitudes must be nonnegative");
    if (std::abs(c1 * c1 + c5 * c5 - 1.0) > 1e-12 ||
        std::abs(c3 * c3 + c7 * c7 - 1.0) > 1e-12)
      throw invalid_input("CodeWords: branch norms must each equal 1");
  }
};

struct LogicalAmplitudes {
  cx x{1.0, 0.0}, y{0.0, 0.0};

  void validate() const {
    if (std::abs(std::norm(x) + std::norm(y) - 1.0) > 1e-12)
      throw invalid_input("LogicalAmplitudes: |x|^2+|y|^2 must equal 1");
  }
};

struct CatParams {
  cx alpha;
  int parity_sign = 1;  // +1: (|a> - |-a>)/N, odd parity; -1: even
};

struct CodeWordPair {
  StateVector zero_L;
  StateVector one_L;
};

inline CodeWordPair t4c_words(const CodeWords& cw, int dim) {
  if (dim < 8) throw invalid_dimension("t4c_words: dim must be >= 8");
  cw.validate();
  Vec z = Vec::Zero(dim), o = Vec::Zero(dim);
  z[1] = cw.c1;
  z[5] = cw.c5;
  o[3] = cw.c3;
  o[7] = cw.c7;
  HilbertSpace sp = single_mode(dim);
  return {StateVector(sp, std::move(z)), StateVector(sp, std::move(o))};
}

struct CavityMoments {
  double n15, n37, n2_15, n2_37;
};

inline CavityMoments cavity_moments(const CodeWords& cw) {
  cw.validate();
  double a = cw.c1 * cw.c1, b = cw.c3 * cw.c3;
  return {a * 1 + (1 - a) * 5, b * 3 + (1 - b) * 7, a * 1 + (1 - a) * 25,
          b * 9 + (1 - b) * 49};
}

// Moment matching: equal means gives b - a = 1/2, equal second moments gives
// 5b - 3a = 3 (in a = c1^2, b = c3^2); the unique nonnegative solution.
inline CodeWords optimal_codewords() {
  double det = (-1.0) * 5.0 - 1.0 * (-3.0);
  double a = (0.5 * 5.0 - 1.0 * 3.0) / det;
  double b = ((-1.0) * 3.0 - 0.5 * (-3.0)) / det;
  return {std::sqrt(a), std::sqrt(b), std::sqrt(1.0 - a), std::sqrt(1.0 - b)};
}

inline StateVector encode(const CodeWords& cw, const LogicalAmplitudes& xy, int dim) {
  xy.validate();
  auto words = t4c_words(cw, dim);
  Vec v = xy.x * words.zero_L.amplitudes + xy.y * words.one_L.amplitudes;
  return StateVector(single_mode(dim), std::move(v)).normalized();
}

inline StateVector cat_state(const CatParams& p, int dim) {
  // tail weight of |alpha> beyond the truncation
  double n2 = std::norm(p.alpha);
  double term = std::exp(-n2), inside = term;
  for (int n = 1; n < dim; ++n) {
    term *= n2 / n;
    inside += term;
  }
  if (1.0 - inside > 1e-6)
    throw truncation_error("cat_state: coherent tail beyond truncation exceeds 1e-6");
  if (p.parity_sign != 1 && p.parity_sign != -1)
    throw invalid_input("cat_state: parity_sign must be +1 or -1");

  Vec plus = coherent_state(p.alpha, dim).amplitudes;
  Vec minus = coherent_state(-p.alpha, dim).amplitudes;
  Vec v = plus - static_cast<double>(p.parity_sign) * minus;
  double nrm = v.norm();
  if (nrm < 1e-12)
    throw invalid_input("cat_state: degenerate superposition (alpha too small)");
  return {single_mode(dim), v / nrm};
}

}  // namespace prespa
