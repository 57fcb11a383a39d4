#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "bfp/dataset.hpp"

namespace bfp {

enum class TransformClass { F0, F1, F2 };

// One fractional-polynomial transform x^p (p = 0 meaning log x), optionally
// multiplied by log x (the repeated-power forms).
struct Transform {
  double power = 1.0;  // one of {-2, -1, -0.5, 0, 0.5, 1, 2, 3}
  bool log_multiplier = false;

  TransformClass cls() const {
    if (log_multiplier) return TransformClass::F2;
    return power == 1.0 ? TransformClass::F0 : TransformClass::F1;
  }

  bool is_identity() const { return power == 1.0 && !log_multiplier; }

  // shift is needed whenever a log or a non-integer / nonpositive power
  // touches the column
  bool needs_shift() const {
    return log_multiplier || power <= 0.0 || power != std::floor(power);
  }

  bool operator==(const Transform& o) const {
    return power == o.power && log_multiplier == o.log_multiplier;
  }
  bool operator<(const Transform& o) const {
    if (power != o.power) return power < o.power;
    return log_multiplier < o.log_multiplier;
  }
};

inline const std::vector<double>& fp_powers() {
  static const std::vector<double> p = {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0};
  return p;
}

// identity + 7 simple powers + 8 log-multiplied forms
inline const std::vector<Transform>& fp_transforms() {
  static const std::vector<Transform> all = [] {
    std::vector<Transform> v;
    for (double p : fp_powers()) v.push_back({p, false});
    for (double p : fp_powers()) v.push_back({p, true});
    return v;
  }();
  return all;
}

inline std::vector<double> apply_transform(const std::vector<double>& x,
                                           const Transform& t, double shift) {
  std::vector<double> out(x.size());
  double s = t.needs_shift() ? shift : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = x[i] + s;
    if (v <= 0.0 && (t.log_multiplier || t.power <= 0.0 || t.power != std::floor(t.power)))
      throw Error("transform domain violation: argument " + std::to_string(v) +
                  " with power " + std::to_string(t.power));
    double base = t.power == 0.0 ? std::log(v) : std::pow(v, t.power);
    out[i] = t.log_multiplier ? base * std::log(v) : base;
    if (!std::isfinite(out[i]))
      throw Error("transform produced non-finite value");
  }
  return out;
}

// A term of the linear predictor: a product of (predictor, transform)
// factors, kept sorted so equal features compare equal.
struct Feature {
  std::vector<std::pair<int, Transform>> factors;

  Feature() = default;
  Feature(int j, Transform t) : factors{{j, t}} {}

  std::size_t order() const { return factors.size(); }

  void canonicalize() {
    std::sort(factors.begin(), factors.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;
    });
  }

  static Feature product(const Feature& a, const Feature& b) {
    Feature f;
    f.factors = a.factors;
    f.factors.insert(f.factors.end(), b.factors.begin(), b.factors.end());
    f.canonicalize();
    return f;
  }

  bool operator==(const Feature& o) const { return factors == o.factors; }
  bool operator<(const Feature& o) const { return factors < o.factors; }
};

namespace detail {

inline std::string power_str(double p) {
  char buf[16];
  if (p == std::floor(p))
    std::snprintf(buf, sizeof buf, "%d", static_cast<int>(p));
  else
    std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

}  // namespace detail

// Stable report strings: `x3^(-0.5)`, `log(x6)`, `x3^(-0.5)*log(x3)`,
// interactions joined with `*`.
inline std::string factor_string(const std::string& name, const Transform& t) {
  std::string base;
  if (t.power == 0.0)
    base = "log(" + name + ")";
  else if (t.power == 1.0)
    base = name;
  else
    base = name + "^(" + detail::power_str(t.power) + ")";
  if (t.log_multiplier) base += "*log(" + name + ")";
  return base;
}

inline std::string feature_string(const Feature& f, const Dataset& ds) {
  std::string out;
  for (std::size_t i = 0; i < f.factors.size(); ++i) {
    if (i) out += "*";
    out += factor_string(ds.column(f.factors[i].first).name, f.factors[i].second);
  }
  return out;
}

inline std::vector<double> evaluate_feature(const Feature& f, const Dataset& ds) {
  if (f.factors.empty()) throw Error("empty feature");
  std::vector<double> out(ds.n, 1.0);
  for (const auto& [j, t] : f.factors) {
    const Column& c = ds.column(static_cast<std::size_t>(j));
    std::vector<double> col = apply_transform(c.values, t, c.shift);
    for (std::size_t i = 0; i < ds.n; ++i) out[i] *= col[i];
  }
  return out;
}

// Order-1 feature universe: 16 transforms per continuous predictor, the
// identity only for binary/indicator predictors. Interactions are generated
// lazily by the search's multiplication operator, never pre-enumerated.
inline std::vector<Feature> enumerate_terms(const Dataset& ds) {
  std::vector<Feature> out;
  for (std::size_t j = 0; j < ds.columns.size(); ++j) {
    if (ds.columns[j].kind == ColumnKind::Continuous) {
      for (const Transform& t : fp_transforms())
        out.emplace_back(static_cast<int>(j), t);
    } else {
      out.emplace_back(static_cast<int>(j), Transform{1.0, false});
    }
  }
  return out;
}

inline bool feature_valid_for(const Feature& f, const Dataset& ds) {
  for (const auto& [j, t] : f.factors) {
    if (j < 0 || static_cast<std::size_t>(j) >= ds.columns.size()) return false;
    if (ds.column(static_cast<std::size_t>(j)).kind != ColumnKind::Continuous &&
        !t.is_identity())
      return false;
  }
  return true;
}

}  // namespace bfp
