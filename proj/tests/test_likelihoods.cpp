#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bfp/likelihoods.hpp"
#include "bfp/rng.hpp"
#include "oracles.hpp"

using namespace bfp;

namespace {

Eigen::MatrixXd with_intercept(const std::vector<std::vector<double>>& cols,
                               std::size_t n) {
  Eigen::MatrixXd X(n, cols.size() + 1);
  X.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) X(i, j + 1) = cols[j][i];
  return X;
}

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

}  // namespace

TEST_CASE("gaussian fit matches the normal-equation oracle") {
  CounterRng rng(101, 9);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n = 8 + rng.below(40);
    std::size_t p = 1 + rng.below(3);
    std::vector<std::vector<double>> cols(p);
    for (auto& c : cols) {
      c.resize(n);
      for (auto& v : c) v = rng.normal();
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0.5;
      for (std::size_t j = 0; j < p; ++j) y[i] += (j + 1.0) * cols[j][i];
      y[i] += rng.normal();
    }
    Eigen::MatrixXd X = with_intercept(cols, n);
    FitResult r = fit_gaussian(X, vec(y));

    oracle::Matrix ox(n, std::vector<double>(p + 1, 1.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) ox[i][j + 1] = cols[j][i];
    auto [beta, rss] = oracle::ols(ox, y);

    REQUIRE(r.converged);
    CHECK(r.p_effective == static_cast<int>(p));
    for (std::size_t j = 0; j <= p; ++j)
      CHECK(r.coefficients[j] == doctest::Approx(beta[j]).epsilon(1e-8));
    CHECK(r.dispersion == doctest::Approx(rss / n).epsilon(1e-8));
    CHECK(r.loglik == doctest::Approx(oracle::gaussian_loglik(rss, n)).epsilon(1e-10));
  }
}

TEST_CASE("gaussian failure modes") {
  Eigen::MatrixXd X(4, 3);
  X << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8;  // column 3 = 2 * column 2
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 5;
  CHECK_THROWS_AS(fit_gaussian(X, y), Error);

  Eigen::MatrixXd X2(4, 2);
  X2 << 1, 1, 1, 2, 1, 3, 1, 4;
  Eigen::VectorXd exact = X2 * Eigen::Vector2d(0.5, 2.0);
  CHECK_THROWS_AS(fit_gaussian(X2, exact), Error);  // degenerate: rss == 0

  Eigen::MatrixXd X3(2, 2);
  X3 << 1, 1, 1, 2;
  Eigen::VectorXd y3(2);
  y3 << 1, 2;
  CHECK_THROWS_AS(fit_gaussian(X3, y3), Error);  // n <= p
}

TEST_CASE("logistic fit matches a grid-search oracle") {
  // small balanced data, one predictor: maximize over (b0, b1) on a grid
  std::vector<double> x = {-1.2, -0.7, -0.3, 0.1, 0.4, 0.9, 1.3, 1.7};
  std::vector<double> y = {0, 0, 1, 0, 1, 0, 1, 1};
  const std::size_t n = x.size();
  Eigen::MatrixXd X = with_intercept({x}, n);
  FitResult r = fit_logistic(X, vec(y));
  REQUIRE(r.converged);

  auto ll = [&](const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = b[0] + b[1] * x[i];
      s += y[i] * e - std::log1p(std::exp(e));
    }
    return s;
  };
  auto best = oracle::grid_mle(ll, {-5, -5}, {5, 5});
  CHECK(r.coefficients[0] == doctest::Approx(best[0]).epsilon(1e-4));
  CHECK(r.coefficients[1] == doctest::Approx(best[1]).epsilon(1e-4));
  CHECK(r.loglik == doctest::Approx(ll(best)).epsilon(1e-8));
}

TEST_CASE("logistic score is zero at the optimum") {
  CounterRng rng(102, 9);
  int done = 0;
  while (done < 100) {
    std::size_t n = 30 + rng.below(50);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      double pr = 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * x[i])));
      y[i] = rng.uniform() < pr ? 1.0 : 0.0;
    }
    Eigen::MatrixXd X = with_intercept({x}, n);
    FitResult r;
    try {
      r = fit_logistic(X, vec(y));
    } catch (const Error&) {
      continue;  // single-class draw
    }
    if (!r.converged) continue;
    // gradient of the loglik: X' (y - mu)
    Eigen::VectorXd eta = X * r.coefficients;
    Eigen::VectorXd resid(n);
    for (std::size_t i = 0; i < n; ++i)
      resid[i] = y[i] - 1.0 / (1.0 + std::exp(-eta[i]));
    Eigen::VectorXd score = X.transpose() * resid;
    CHECK(score.cwiseAbs().maxCoeff() < 1e-5);
    ++done;
  }
}

TEST_CASE("logistic separation and class checks") {
  std::vector<double> x = {-2, -1, 1, 2};
  std::vector<double> y = {0, 0, 1, 1};  // perfectly separated
  Eigen::MatrixXd X = with_intercept({x}, 4);
  FitResult r = fit_logistic(X, vec(y));
  CHECK_FALSE(r.converged);

  std::vector<double> ones = {1, 1, 1, 1};
  CHECK_THROWS_AS(fit_logistic(X, vec(ones)), Error);
}

TEST_CASE("cox fit matches a grid-search oracle") {
  // 6 subjects, one covariate, ties at t = 3 handled by Breslow
  std::vector<double> t = {1, 2, 3, 3, 4, 5};
  std::vector<int> d = {1, 0, 1, 1, 0, 1};
  std::vector<double> x = {0.5, -0.2, 1.1, -0.9, 0.3, -1.4};
  Eigen::MatrixXd X(6, 1);
  for (int i = 0; i < 6; ++i) X(i, 0) = x[i];
  FitResult r = fit_cox(X, t, d);
  REQUIRE(r.converged);

  auto pl = [&](const std::vector<double>& b) {
    // Breslow: sum over events eta_i - sum over distinct event times
    // d_t * log(sum_{risk} exp(eta))
    double ll = 0.0;
    std::vector<double> distinct = {1, 3, 5};
    for (int i = 0; i < 6; ++i)
      if (d[i]) ll += b[0] * x[i];
    for (double tt : distinct) {
      int events = 0;
      double s0 = 0.0;
      for (int i = 0; i < 6; ++i) {
        if (t[i] >= tt) s0 += std::exp(b[0] * x[i]);
        if (t[i] == tt && d[i]) ++events;
      }
      ll -= events * std::log(s0);
    }
    return ll;
  };
  auto best = oracle::grid_mle(pl, {-4}, {4});
  CHECK(r.coefficients[0] == doctest::Approx(best[0]).epsilon(1e-4));
  CHECK(r.loglik == doctest::Approx(pl(best)).epsilon(1e-8));
}

TEST_CASE("cox null model partial likelihood") {
  // no covariates: ll = -sum_j d_j * log |R(t_j)|
  std::vector<double> t = {1, 2, 3, 4};
  std::vector<int> d = {1, 1, 0, 1};
  Eigen::MatrixXd X(4, 0);
  FitResult r = fit_cox(X, t, d);
  REQUIRE(r.converged);
  double expect = -(std::log(4.0) + std::log(3.0) + std::log(1.0));
  CHECK(r.loglik == doctest::Approx(expect).epsilon(1e-12));
  CHECK(r.p_effective == 0);
}

TEST_CASE("cox score is zero at the optimum") {
  CounterRng rng(103, 9);
  int done = 0;
  while (done < 100) {
    std::size_t n = 25 + rng.below(40);
    std::vector<double> x(n), t(n);
    std::vector<int> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      t[i] = -std::log(rng.uniform() + 1e-12) / std::exp(0.6 * x[i]);
      d[i] = rng.uniform() < 0.75 ? 1 : 0;
    }
    Eigen::MatrixXd X(n, 1);
    for (std::size_t i = 0; i < n; ++i) X(i, 0) = x[i];
    FitResult r = fit_cox(X, t, d);
    if (!r.converged) continue;
    // score: sum over events of x_i - weighted mean over the risk set
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!d[i]) continue;
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (t[j] < t[i]) continue;
        double w = std::exp(r.coefficients[0] * x[j]);
        s0 += w;
        s1 += w * x[j];
      }
      score += x[i] - s1 / s0;
    }
    CHECK(std::abs(score) < 1e-5);
    ++done;
  }
}

TEST_CASE("cox monotone likelihood is flagged") {
  // covariate perfectly orders the event times
  std::vector<double> t = {1, 2, 3, 4, 5};
  std::vector<int> d = {1, 1, 1, 1, 1};
  Eigen::MatrixXd X(5, 1);
  X << 5, 4, 3, 2, 1;
  FitResult r = fit_cox(X, t, d);
  CHECK_FALSE(r.converged);
}

TEST_CASE("cox rejects data with no events") {
  std::vector<double> t = {1, 2, 3};
  std::vector<int> d = {0, 0, 0};
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  CHECK_THROWS_AS(fit_cox(X, t, d), Error);
}
