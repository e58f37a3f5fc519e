#pragma once
// Nonlinear least squares (Levenberg-Marquardt, numeric Jacobian) and the
// decay models shared by the lifetime analyses.
#include <Eigen/Dense>

#include <cmath>
#include <functional>

#include "errors.hpp"

namespace prespa {

using ModelFn = std::function<double(double, const Eigen::VectorXd&)>;

struct FitResult {
  Eigen::VectorXd params;
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline FitResult fit_nonlinear(const ModelFn& model, const Eigen::VectorXd& t,
                               const Eigen::VectorXd& y, Eigen::VectorXd p0,
                               int max_iter = 400, double tol = 1e-14) {
  if (t.size() != y.size()) throw invalid_input("fit_nonlinear: t and y length mismatch");
  if (t.size() < p0.size()) throw invalid_input("fit_nonlinear: fewer points than parameters");
  const int m = static_cast<int>(t.size());
  const int np = static_cast<int>(p0.size());

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) r[i] = y[i] - model(t[i], p);
    return r;
  };

  Eigen::VectorXd p = std::move(p0);
  Eigen::VectorXd r = residuals(p);
  double rss = r.squaredNorm();
  double lambda = 1e-3;
  FitResult out;

  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    Eigen::MatrixXd J(m, np);
    for (int j = 0; j < np; ++j) {
      double h = 1e-7 * std::max(1.0, std::abs(p[j]));
      Eigen::VectorXd pp = p, pm = p;
      pp[j] += h;
      pm[j] -= h;
      for (int i = 0; i < m; ++i) J(i, j) = (model(t[i], pp) - model(t[i], pm)) / (2 * h);
    }
    Eigen::MatrixXd jtj = J.transpose() * J;
    Eigen::VectorXd jtr = J.transpose() * r;

    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (int j = 0; j < np; ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      Eigen::VectorXd delta = a.ldlt().solve(jtr);
      Eigen::VectorXd pn = p + delta;
      Eigen::VectorXd rn = residuals(pn);
      double rssn = rn.squaredNorm();
      if (std::isfinite(rssn) && rssn <= rss) {
        double gain = rss - rssn;
        p = std::move(pn);
        r = std::move(rn);
        rss = rssn;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (gain <= tol * (rss + 1e-30) || delta.cwiseAbs().maxCoeff() < 1e-14) {
          out.params = p;
          out.rss = rss;
          out.converged = true;
          return out;
        }
        break;
      }
      lambda *= 3.0;
      if (lambda > 1e14) break;
    }
    if (!stepped) {
      // No descent direction left: treat the current point as the minimum.
      out.params = p;
      out.rss = rss;
      out.converged = true;
      return out;
    }
  }
  out.params = p;
  out.rss = rss;
  out.converged = false;
  return out;
}

// y(t) = floor + A exp(-t/tau), parameters (A, tau).
inline ModelFn exp_decay_model(double floor) {
  return [floor](double t, const Eigen::VectorXd& p) {
    return floor + p[0] * std::exp(-t / p[1]);
  };
}

struct DecayFit {
  double amplitude = 0.0;
  double tau = 0.0;
  double rss = 0.0;
};

// Fit floor + A exp(-t/tau); throws fit-error when the optimizer fails or the
// recovered time constant is not positive.
inline DecayFit fit_exp_decay(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                              double floor, double amp0, double tau0) {
  Eigen::VectorXd p0(2);
  p0 << amp0, tau0;
  FitResult res = fit_nonlinear(exp_decay_model(floor), t, y, p0);
  if (!res.converged) throw fit_error("fit_exp_decay: no convergence");
  if (!(res.params[1] > 0)) throw fit_error("fit_exp_decay: nonpositive time constant");
  return {res.params[0], res.params[1], res.rss};
}

}  // namespace prespa
