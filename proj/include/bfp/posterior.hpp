#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bfp/search.hpp"

namespace bfp {

enum class PredictMode { ModelAveraged, MedianProbability, Best };

struct WeightedModel {
  Model model;
  double weight = 0.0;
  double log_prior = kNegInf;
  double log_marglik = kNegInf;
  std::shared_ptr<const FitResult> fit;
};

struct PosteriorSummary {
  std::vector<WeightedModel> models;          // sorted by weight desc
  std::vector<std::pair<Feature, double>> inclusion;
  std::map<std::string, double> variable_inclusion;  // predictor name -> prob
  Model mpm;   // features with inclusion > 0.5 (strict)
  Model best;  // maximum-a-posteriori visited model
};

// Log-sum-exp renormalization of the visited-model set.
inline PosteriorSummary renormalize(const VisitLog& log, const Dataset& ds) {
  double best_lp = log.best_log_posterior();
  if (best_lp == kNegInf) throw Error("no valid models visited");

  PosteriorSummary out;
  double z = 0.0;
  for (const auto& [sig, entry] : log.entries()) {
    double lp = entry.second.log_posterior_unnorm();
    if (lp == kNegInf) continue;
    z += std::exp(lp - best_lp);
  }
  for (const auto& [sig, entry] : log.entries()) {
    const Evidence& ev = entry.second;
    double lp = ev.log_posterior_unnorm();
    if (lp == kNegInf) continue;
    WeightedModel wm;
    wm.model = entry.first;
    wm.weight = std::exp(lp - best_lp) / z;
    wm.log_prior = ev.log_prior;
    wm.log_marglik = ev.log_marglik;
    wm.fit = ev.fit;
    out.models.push_back(std::move(wm));
  }
  std::sort(out.models.begin(), out.models.end(),
            [&](const WeightedModel& a, const WeightedModel& b) {
              if (a.weight != b.weight) return a.weight > b.weight;
              return a.model.signature(ds) < b.model.signature(ds);
            });
  out.best = out.models.front().model;

  std::map<Feature, double> incl;
  for (const auto& wm : out.models)
    for (const auto& f : wm.model.features) incl[f] += wm.weight;
  std::vector<Feature> mpm_features;
  for (const auto& [f, p] : incl) {
    out.inclusion.emplace_back(f, std::min(p, 1.0));
    if (p > 0.5) mpm_features.push_back(f);
  }
  out.mpm = Model::of(std::move(mpm_features));

  // variable level: mass of models containing any feature of the predictor
  std::set<std::string> names;
  for (const auto& [f, p] : out.inclusion)
    for (const auto& [j, t] : f.factors)
      names.insert(ds.column(static_cast<std::size_t>(j)).name);
  for (const auto& name : names) {
    double mass = 0.0;
    for (const auto& wm : out.models) {
      bool has = false;
      for (const auto& f : wm.model.features)
        for (const auto& [j, t] : f.factors)
          if (ds.column(static_cast<std::size_t>(j)).name == name) has = true;
      if (has) mass += wm.weight;
    }
    out.variable_inclusion[name] = std::min(mass, 1.0);
  }
  return out;
}

inline Model median_probability_model(const PosteriorSummary& s) { return s.mpm; }

namespace detail {

inline Eigen::VectorXd linear_predictor(const WeightedModel& wm, const Dataset& ds,
                                        bool with_intercept) {
  Eigen::MatrixXd X = build_design(wm.model, ds, with_intercept);
  if (!wm.fit) throw Error("model carries no fit");
  return X * wm.fit->coefficients;
}

}  // namespace detail

// Gaussian: averaged means. Bernoulli: averaged probabilities (threshold at
// 0.5 for classes elsewhere). Cox: averaged linear predictors (log relative
// risk).
inline std::vector<double> predict(const PosteriorSummary& summary,
                                   const Dataset& ds_new, Family family,
                                   PredictMode mode = PredictMode::ModelAveraged) {
  std::vector<const WeightedModel*> used;
  std::vector<double> weights;
  if (mode == PredictMode::ModelAveraged) {
    for (const auto& wm : summary.models)
      if (wm.weight > 0.0 && wm.fit) {
        used.push_back(&wm);
        weights.push_back(wm.weight);
      }
  } else {
    const Model target = mode == PredictMode::Best ? summary.best : summary.mpm;
    const WeightedModel* found = nullptr;
    for (const auto& wm : summary.models)
      if (wm.model == target) found = &wm;
    if (!found || !found->fit) throw Error("selected model not present in summary");
    used.push_back(found);
    weights.push_back(1.0);
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;

  std::vector<double> out(ds_new.n, 0.0);
  for (std::size_t k = 0; k < used.size(); ++k) {
    Eigen::VectorXd lp =
        detail::linear_predictor(*used[k], ds_new, family != Family::TimeToEvent);
    for (std::size_t i = 0; i < ds_new.n; ++i) {
      double v = lp[static_cast<Eigen::Index>(i)];
      if (family == Family::Bernoulli) v = 1.0 / (1.0 + std::exp(-v));
      out[i] += weights[k] / wsum * v;
    }
  }
  return out;
}

inline std::vector<int> classify(const std::vector<double>& probs) {
  std::vector<int> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= 0.5 ? 1 : 0;
  return out;
}

// Breslow baseline cumulative hazard on the training data at the MLE.
// Returns (event times, Lambda0 values) as a right-continuous step function.
inline std::pair<std::vector<double>, std::vector<double>> breslow_baseline(
    const WeightedModel& wm, const Dataset& ds_train) {
  Eigen::VectorXd eta =
      wm.model.size() == 0
          ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ds_train.n))
          : detail::linear_predictor(wm, ds_train, /*with_intercept=*/false);

  std::vector<std::size_t> ord(ds_train.n);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    return ds_train.response.y[a] < ds_train.response.y[b];
  });

  std::vector<double> times, lambda;
  double cum = 0.0;
  std::size_t i = 0;
  while (i < ds_train.n) {
    double t = ds_train.response.y[ord[i]];
    int d = 0;
    double risk = 0.0;
    for (std::size_t k = i; k < ds_train.n; ++k)
      risk += std::exp(eta[static_cast<Eigen::Index>(ord[k])]);
    while (i < ds_train.n && ds_train.response.y[ord[i]] == t) {
      if (ds_train.response.status[ord[i]]) ++d;
      ++i;
    }
    if (d > 0) {
      cum += d / risk;
      times.push_back(t);
      lambda.push_back(cum);
    }
  }
  return {std::move(times), std::move(lambda)};
}

// Model-averaged survival matrix S[i][g] over subjects i and grid points g.
// Beyond the last training event time the curve is carried forward flat.
inline std::vector<std::vector<double>> survival_curve(const PosteriorSummary& summary,
                                                       const Dataset& ds_train,
                                                       const Dataset& ds_new,
                                                       const std::vector<double>& grid) {
  if (ds_train.response.kind != Family::TimeToEvent)
    throw Error("survival_curve requires a timetoevent response");
  std::vector<std::vector<double>> surv(ds_new.n, std::vector<double>(grid.size(), 0.0));
  double wsum = 0.0;

  for (const auto& wm : summary.models) {
    if (wm.weight <= 0.0 || (!wm.fit && wm.model.size() > 0)) continue;
    auto [times, lambda] = breslow_baseline(wm, ds_train);
    Eigen::VectorXd lp =
        wm.model.size() == 0
            ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ds_new.n))
            : detail::linear_predictor(wm, ds_new, /*with_intercept=*/false);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      // Lambda0(t): last jump at or before t
      auto it = std::upper_bound(times.begin(), times.end(), grid[g]);
      double L0 = it == times.begin() ? 0.0 : lambda[static_cast<std::size_t>(
                                                  it - times.begin() - 1)];
      for (std::size_t i = 0; i < ds_new.n; ++i)
        surv[i][g] += wm.weight *
                      std::exp(-L0 * std::exp(lp[static_cast<Eigen::Index>(i)]));
    }
    wsum += wm.weight;
  }
  if (wsum <= 0.0) throw Error("no usable models for survival_curve");
  for (auto& row : surv)
    for (auto& v : row) v /= wsum;
  return surv;
}

}  // namespace bfp
