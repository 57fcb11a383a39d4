#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "bfp/evidence.hpp"

namespace bfp {

struct SelectionTruth {
  std::vector<Feature> true_features;  // canonical

  std::set<int> relevant_predictors() const {
    std::set<int> out;
    for (const auto& f : true_features)
      for (const auto& [j, t] : f.factors) out.insert(j);
    return out;
  }
};

enum class SelectionLevel { Functional, Variable };

struct SelectionRates {
  double tpr = 0.0;
  double fdr = 0.0;
};

// Functional level compares exact features; variable level compares the
// predictor sets. FDR of an empty selection is 0.
inline SelectionRates selection_rates(const Model& selected, const SelectionTruth& truth,
                                      SelectionLevel level) {
  SelectionRates r;
  if (level == SelectionLevel::Functional) {
    std::size_t tp = 0;
    for (const auto& f : truth.true_features)
      if (selected.contains(f)) ++tp;
    r.tpr = truth.true_features.empty()
                ? 0.0
                : static_cast<double>(tp) / static_cast<double>(truth.true_features.size());
    r.fdr = selected.size() == 0
                ? 0.0
                : static_cast<double>(selected.size() - tp) /
                      static_cast<double>(selected.size());
  } else {
    std::set<int> truth_vars = truth.relevant_predictors();
    std::set<int> sel_vars;
    for (const auto& f : selected.features)
      for (const auto& [j, t] : f.factors) sel_vars.insert(j);
    std::size_t tp = 0;
    for (int j : sel_vars)
      if (truth_vars.count(j)) ++tp;
    r.tpr = truth_vars.empty()
                ? 0.0
                : static_cast<double>(tp) / static_cast<double>(truth_vars.size());
    r.fdr = sel_vars.empty() ? 0.0
                             : static_cast<double>(sel_vars.size() - tp) /
                                   static_cast<double>(sel_vars.size());
  }
  return r;
}

struct RegressionMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double corr = 0.0;  // NaN when undefined
};

inline RegressionMetrics regression_metrics(const std::vector<double>& yhat,
                                            const std::vector<double>& y) {
  if (yhat.size() != y.size() || y.empty()) throw Error("length mismatch");
  const auto n = static_cast<double>(y.size());
  RegressionMetrics m;
  double se = 0.0, ae = 0.0, my = 0.0, mh = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = yhat[i] - y[i];
    se += d * d;
    ae += std::abs(d);
    my += y[i];
    mh += yhat[i];
  }
  m.rmse = std::sqrt(se / n);
  m.mae = ae / n;
  my /= n;
  mh /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (yhat[i] - mh) * (y[i] - my);
    sxx += (yhat[i] - mh) * (yhat[i] - mh);
    syy += (y[i] - my) * (y[i] - my);
  }
  m.corr = sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy)
                                  : std::numeric_limits<double>::quiet_NaN();
  return m;
}

struct ClassificationMetrics {
  double acc = 0.0;
  double fnr = 0.0;  // NaN when no positives
  double fpr = 0.0;  // NaN when no negatives
};

inline ClassificationMetrics classification_metrics(const std::vector<int>& yhat,
                                                    const std::vector<int>& y) {
  if (yhat.size() != y.size() || y.empty()) throw Error("length mismatch");
  int correct = 0, fn = 0, fp = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    correct += yhat[i] == y[i];
    if (y[i] == 1) {
      ++pos;
      fn += yhat[i] == 0;
    } else {
      ++neg;
      fp += yhat[i] == 1;
    }
  }
  ClassificationMetrics m;
  m.acc = static_cast<double>(correct) / static_cast<double>(y.size());
  m.fnr = pos ? static_cast<double>(fn) / pos : std::numeric_limits<double>::quiet_NaN();
  m.fpr = neg ? static_cast<double>(fp) / neg : std::numeric_limits<double>::quiet_NaN();
  return m;
}

// Kaplan-Meier estimate of the censoring survival function G(t), built with
// the reversed status (censorings are the events).
class CensoringModel {
 public:
  CensoringModel(const std::vector<double>& times, const std::vector<int>& status) {
    std::vector<std::size_t> ord(times.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(),
              [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    double g = 1.0;
    std::size_t i = 0;
    const auto n = times.size();
    while (i < n) {
      double t = times[ord[i]];
      std::size_t at_risk = n - i;
      int d = 0;
      while (i < n && times[ord[i]] == t) {
        if (!status[ord[i]]) ++d;  // censoring event
        ++i;
      }
      if (d > 0) {
        g *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
        times_.push_back(t);
        g_.push_back(g);
      }
    }
  }

  // right-continuous G(t)
  double at(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return it == times_.begin() ? 1.0 : g_[static_cast<std::size_t>(it - times_.begin() - 1)];
  }

  // left limit G(t-)
  double at_left(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    return it == times_.begin() ? 1.0 : g_[static_cast<std::size_t>(it - times_.begin() - 1)];
  }

 private:
  std::vector<double> times_;
  std::vector<double> g_;
};

// IPCW concordance: comparable pairs (T_j < T_i, delta_j = 1) weighted by
// 1/G(T_j-)^2; ties in the linear predictor take 0.5 credit. Higher lp must
// mean higher risk (shorter time).
inline double concordance_index(const std::vector<double>& lp,
                                const std::vector<double>& times,
                                const std::vector<int>& status,
                                const CensoringModel& cens) {
  const std::size_t n = times.size();
  if (lp.size() != n || status.size() != n) throw Error("length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!status[j]) continue;
    double g = cens.at_left(times[j]);
    if (g <= 0.0) continue;
    double w = 1.0 / (g * g);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(times[j] < times[i])) continue;
      den += w;
      if (lp[j] > lp[i])
        num += w;
      else if (lp[j] == lp[i])
        num += 0.5 * w;
    }
  }
  if (den == 0.0) throw Error("no comparable pairs");
  return num / den;
}

// Trapezoidal IPCW Brier score over the grid. surv[i][g] is the predicted
// S_i at grid[g]. Subjects with G = 0 at the needed point get weight 0.
inline double integrated_brier_score(const std::vector<std::vector<double>>& surv,
                                     const std::vector<double>& times,
                                     const std::vector<int>& status,
                                     const CensoringModel& cens,
                                     const std::vector<double>& grid) {
  const std::size_t n = times.size();
  if (surv.size() != n || grid.size() < 2) throw Error("bad IBS inputs");
  std::vector<double> bs(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double t = grid[g];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double w = 0.0, ind = 0.0;
      if (times[i] <= t && status[i]) {
        double gl = cens.at_left(times[i]);
        w = gl > 0.0 ? 1.0 / gl : 0.0;
        ind = 0.0;
      } else if (times[i] > t) {
        double gt = cens.at(t);
        w = gt > 0.0 ? 1.0 / gt : 0.0;
        ind = 1.0;
      }
      double d = ind - surv[i][g];
      total += w * d * d;
    }
    bs[g] = total / static_cast<double>(n);
  }
  double ibs = 0.0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    ibs += 0.5 * (bs[g] + bs[g - 1]) * (grid[g] - grid[g - 1]);
  return ibs;
}

// default IBS grid: 0, the sorted unique test event times, max test time
inline std::vector<double> ibs_grid(const std::vector<double>& times,
                                    const std::vector<int>& status) {
  std::vector<double> grid{0.0};
  for (std::size_t i = 0; i < times.size(); ++i)
    if (status[i]) grid.push_back(times[i]);
  grid.push_back(*std::max_element(times.begin(), times.end()));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace bfp
