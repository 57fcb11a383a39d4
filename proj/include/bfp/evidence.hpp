#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "bfp/likelihoods.hpp"
#include "bfp/transforms.hpp"

namespace bfp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Penalty scalars: a_k = exp(-s_k log n) per transform class; interaction
// features pay the product penalty over their factors.
struct PriorConfig {
  int q = 20;                       // max total terms
  int d = 16;                       // max terms per predictor (order-1 terms)
  int order_cap = 1;                // max interaction order I
  bool interactions = false;
  double s0 = 1.0;                  // F0
  double s1 = 1.0 + std::log(2.0);  // F1
  double s2 = 1.0 + std::log(4.0);  // F2

  double s_for(const Transform& t) const {
    switch (t.cls()) {
      case TransformClass::F0: return s0;
      case TransformClass::F1: return s1;
      case TransformClass::F2: return s2;
    }
    return s0;
  }
};

struct Model {
  std::vector<Feature> features;  // canonical sorted, no duplicates

  static Model of(std::vector<Feature> fs) {
    for (auto& f : fs) f.canonicalize();
    std::sort(fs.begin(), fs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
    return Model{std::move(fs)};
  }

  std::size_t size() const { return features.size(); }
  bool contains(const Feature& f) const {
    return std::binary_search(features.begin(), features.end(), f);
  }

  std::string signature(const Dataset& ds) const {
    if (features.empty()) return "1";
    std::string s;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (i) s += "+";
      s += feature_string(features[i], ds);
    }
    return s;
  }

  bool operator==(const Model& o) const { return features == o.features; }
};

// sum of s_k over a feature's factors (the log-scale prior cost / log n)
inline double prior_cost(const Feature& f, const PriorConfig& cfg) {
  double s = 0.0;
  for (const auto& [j, t] : f.factors) s += cfg.s_for(t);
  return s;
}

inline double log_model_prior(const Model& m, const PriorConfig& cfg, std::size_t n) {
  if (static_cast<int>(m.size()) > cfg.q) return kNegInf;
  std::map<int, int> per_predictor;
  double total = 0.0;
  const double logn = std::log(static_cast<double>(n));
  for (const auto& f : m.features) {
    if (static_cast<int>(f.order()) > std::max(cfg.order_cap, 1)) return kNegInf;
    if (f.order() == 1 && ++per_predictor[f.factors[0].first] > cfg.d) return kNegInf;
    total -= prior_cost(f, cfg) * logn;
  }
  return total;
}

// loglik - (|M|/2) log n; exactly BIC/2 up to sign
inline double log_marginal_likelihood(const FitResult& fit, const Model& m,
                                      std::size_t n) {
  return fit.loglik -
         0.5 * static_cast<double>(m.size()) * std::log(static_cast<double>(n));
}

// -2 loglik + p log n with p = |M| + 2 sum s_k; its minimizer is the MAP model
inline double pic(const FitResult& fit, const Model& m, const PriorConfig& cfg,
                  std::size_t n) {
  double p = static_cast<double>(m.size());
  for (const auto& f : m.features) p += 2.0 * prior_cost(f, cfg);
  return -2.0 * fit.loglik + p * std::log(static_cast<double>(n));
}

struct Evidence {
  double log_prior = kNegInf;
  double log_marglik = kNegInf;
  std::shared_ptr<const FitResult> fit;

  double log_posterior_unnorm() const {
    if (log_prior == kNegInf || log_marglik == kNegInf) return kNegInf;
    return log_prior + log_marglik;
  }
};

inline Eigen::MatrixXd build_design(const Model& m, const Dataset& ds,
                                    bool with_intercept) {
  const auto n = static_cast<Eigen::Index>(ds.n);
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(m.size()) + (with_intercept ? 1 : 0));
  Eigen::Index c = 0;
  if (with_intercept) X.col(c++).setOnes();
  for (const auto& f : m.features) {
    std::vector<double> col = evaluate_feature(f, ds);
    for (Eigen::Index i = 0; i < n; ++i) X(i, c) = col[static_cast<std::size_t>(i)];
    ++c;
  }
  return X;
}

// Shared across chains; idempotent values make insert races benign.
class EvidenceCache {
 public:
  bool lookup(const std::string& key, Evidence& out) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) return false;
    out = it->second;
    return true;
  }

  void insert(const std::string& key, const Evidence& ev) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.emplace(key, ev);
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, Evidence> map_;
};

// Prior short-circuit, family dispatch, cache by signature. Fit failures
// score the model out with -inf rather than aborting the search.
inline Evidence evaluate_model(const Model& m, const Dataset& ds, const PriorConfig& cfg,
                               EvidenceCache* cache = nullptr) {
  const std::string key = m.signature(ds);
  Evidence ev;
  if (cache && cache->lookup(key, ev)) return ev;

  ev.log_prior = log_model_prior(m, cfg, ds.n);
  ev.log_marglik = kNegInf;
  if (ev.log_prior > kNegInf) {
    try {
      const bool cox = ds.response.kind == Family::TimeToEvent;
      Eigen::MatrixXd X = build_design(m, ds, /*with_intercept=*/!cox);
      Eigen::VectorXd y =
          Eigen::Map<const Eigen::VectorXd>(ds.response.y.data(),
                                            static_cast<Eigen::Index>(ds.n));
      FitResult fit;
      switch (ds.response.kind) {
        case Family::Gaussian: fit = fit_gaussian(X, y); break;
        case Family::Bernoulli: fit = fit_logistic(X, y); break;
        case Family::TimeToEvent:
          fit = fit_cox(X, ds.response.y, ds.response.status);
          break;
      }
      if (fit.converged) {
        ev.log_marglik = log_marginal_likelihood(fit, m, ds.n);
        ev.fit = std::make_shared<FitResult>(std::move(fit));
      }
    } catch (const Error&) {
      // rank deficiency, degenerate fit, transform domain violation
    }
  }
  if (cache) cache->insert(key, ev);
  return ev;
}

}  // namespace bfp
