#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bfp/dataset.hpp"

namespace bfp {

inline constexpr double kTwoPi = 6.283185307179586476925287;

struct FitResult {
  Eigen::VectorXd coefficients;  // intercept first (absent for Cox)
  double dispersion = 1.0;       // Gaussian sigma^2 MLE, fixed 1 otherwise
  double loglik = 0.0;
  int p_effective = 0;  // free regression coefficients, intercept excluded
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline void check_full_rank(const Eigen::MatrixXd& design) {
  if (design.cols() == 0) return;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) throw Error("rank-deficient design matrix");
}

}  // namespace detail

// Exact least squares; loglik at the sigma^2 MLE (RSS/n).
inline FitResult fit_gaussian(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  const auto n = y.size();
  if (design.rows() != n) throw Error("design/response size mismatch");
  if (n <= design.cols()) throw Error("need n > p");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) throw Error("rank-deficient design matrix");

  FitResult r;
  r.coefficients = qr.solve(y);
  double rss = (y - design * r.coefficients).squaredNorm();
  double sigma2 = rss / static_cast<double>(n);
  double yscale = y.squaredNorm() / static_cast<double>(n) + 1.0;
  if (sigma2 <= 1e-290 || sigma2 < 1e-30 * yscale) throw Error("degenerate fit");
  r.dispersion = sigma2;
  r.loglik = -0.5 * static_cast<double>(n) * (std::log(kTwoPi * sigma2) + 1.0);
  r.p_effective = static_cast<int>(design.cols()) - 1;  // intercept not counted
  r.converged = true;
  r.iterations = 1;
  return r;
}

// IRLS for the logit link. Separation shows up as diverging linear
// predictors; flagged via converged=false with the loglik clamped.
inline FitResult fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                              int max_iter = 100, double tol = 1e-8) {
  const auto n = y.size();
  if (design.rows() != n) throw Error("design/response size mismatch");
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < n; ++i) (y[i] > 0.5 ? has1 : has0) = true;
  if (!has0 || !has1) throw Error("both classes must be present");
  detail::check_full_rank(design);

  const auto p = design.cols();
  FitResult r;
  r.coefficients = Eigen::VectorXd::Zero(p);
  r.p_effective = static_cast<int>(p) - 1;

  auto loglik_at = [&](const Eigen::VectorXd& beta) {
    Eigen::VectorXd eta = design * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double e = std::min(std::max(eta[i], -30.0), 30.0);
      ll += y[i] * e - std::log1p(std::exp(e));
    }
    return ll;
  };

  bool separated = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    Eigen::VectorXd eta = design * r.coefficients;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double e = std::min(std::max(eta[i], -30.0), 30.0);
      mu[i] = 1.0 / (1.0 + std::exp(-e));
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
    }
    Eigen::MatrixXd H = design.transpose() * w.asDiagonal() * design;
    Eigen::VectorXd g = design.transpose() * (y - mu);
    Eigen::VectorXd step = H.ldlt().solve(g);
    Eigen::VectorXd next = r.coefficients + step;

    double rel = step.cwiseAbs().maxCoeff() / (1.0 + next.cwiseAbs().maxCoeff());
    r.coefficients = next;
    if (rel < tol) {
      ++it;
      break;
    }
    if ((design * next).cwiseAbs().maxCoeff() > 30.0 && it == max_iter - 1)
      separated = true;
  }
  if ((design * r.coefficients).cwiseAbs().maxCoeff() > 30.0) separated = true;

  r.iterations = it;
  r.loglik = loglik_at(r.coefficients);
  r.converged = !separated && it < max_iter;
  if (!std::isfinite(r.loglik)) {
    r.loglik = -1e300;
    r.converged = false;
  }
  return r;
}

// Cox partial likelihood with Breslow tie handling. No intercept column;
// risk sets use time >= t. `design` may have 0 columns (null model).
inline FitResult fit_cox(const Eigen::MatrixXd& design, const std::vector<double>& times,
                         const std::vector<int>& status, int max_iter = 100,
                         double tol = 1e-8) {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (design.rows() != n || static_cast<Eigen::Index>(status.size()) != n)
    throw Error("design/response size mismatch");
  if (std::accumulate(status.begin(), status.end(), 0) == 0) throw Error("no events");
  if (design.cols() > 0) detail::check_full_rank(design);

  // order by ascending time; events grouped by distinct time for Breslow
  std::vector<Eigen::Index> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(),
            [&](Eigen::Index a, Eigen::Index b) { return times[a] < times[b]; });

  const auto p = design.cols();
  FitResult r;
  r.coefficients = Eigen::VectorXd::Zero(p);
  r.p_effective = static_cast<int>(p);

  // log PL, gradient and Hessian by a single reverse sweep over the risk set
  auto eval = [&](const Eigen::VectorXd& beta, Eigen::VectorXd* grad,
                  Eigen::MatrixXd* hess) {
    Eigen::VectorXd eta = p > 0 ? (design * beta).eval() : Eigen::VectorXd::Zero(n);
    double ll = 0.0;
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    if (grad) grad->setZero();
    if (hess) hess->setZero();

    Eigen::Index k = n;
    // iterate distinct times descending, extending the risk set
    Eigen::Index i = n;
    while (i > 0) {
      double t = times[ord[i - 1]];
      // add all subjects with this time to the risk accumulators
      while (k > 0 && times[ord[k - 1]] == t) {
        Eigen::Index idx = ord[k - 1];
        double w = std::exp(eta[idx]);
        s0 += w;
        if (p > 0) {
          s1 += w * design.row(idx).transpose();
          s2 += w * design.row(idx).transpose() * design.row(idx);
        }
        --k;
      }
      // process events at this time
      int d = 0;
      Eigen::VectorXd xsum = Eigen::VectorXd::Zero(p);
      while (i > 0 && times[ord[i - 1]] == t) {
        Eigen::Index idx = ord[i - 1];
        if (status[idx]) {
          ++d;
          ll += eta[idx];
          if (p > 0) xsum += design.row(idx).transpose();
        }
        --i;
      }
      if (d > 0) {
        ll -= d * std::log(s0);
        if (p > 0 && grad) *grad += xsum - d * (s1 / s0);
        if (p > 0 && hess)
          *hess += d * (s2 / s0 - (s1 / s0) * (s1 / s0).transpose());
      }
    }
    return ll;
  };

  if (p == 0) {
    r.loglik = eval(r.coefficients, nullptr, nullptr);
    r.converged = true;
    return r;
  }

  Eigen::VectorXd grad(p);
  Eigen::MatrixXd hess(p, p);
  bool monotone = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    eval(r.coefficients, &grad, &hess);
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) {
      monotone = true;
      break;
    }
    r.coefficients += step;
    if (r.coefficients.cwiseAbs().maxCoeff() > 500.0) {
      monotone = true;
      break;
    }
    double rel = step.cwiseAbs().maxCoeff() / (1.0 + r.coefficients.cwiseAbs().maxCoeff());
    if (rel < tol) {
      ++it;
      break;
    }
  }
  r.iterations = it;
  r.loglik = eval(r.coefficients, nullptr, nullptr);
  // a monotone partial likelihood can also stall the Newton iteration once
  // the gradient underflows; a diverging linear-predictor spread catches it
  Eigen::VectorXd eta_hat = design * r.coefficients;
  if (eta_hat.maxCoeff() - eta_hat.minCoeff() > 30.0) monotone = true;
  r.converged = !monotone && it < max_iter && std::isfinite(r.loglik);
  if (!std::isfinite(r.loglik)) r.loglik = -1e300;
  return r;
}

}  // namespace bfp
