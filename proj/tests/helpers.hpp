#pragma once

#include <string>
#include <vector>

#include "bfp/dataset.hpp"
#include "bfp/rng.hpp"

#ifndef BFP_SOURCE_DIR
#define BFP_SOURCE_DIR "."
#endif

namespace testutil {

inline std::string data_path(const std::string& name) {
  return std::string(BFP_SOURCE_DIR) + "/data/" + name;
}

inline bfp::Dataset make_gaussian(const std::vector<std::vector<double>>& cols,
                                  const std::vector<double>& y,
                                  const std::vector<std::string>& names = {}) {
  bfp::Dataset ds;
  ds.n = y.size();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    bfp::Column c;
    c.name = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
    c.values = cols[j];
    ds.columns.push_back(std::move(c));
  }
  ds.response.kind = bfp::Family::Gaussian;
  ds.response.y = y;
  ds.compute_shifts();
  return ds;
}

// positive random columns, handy for transform-heavy tests
inline std::vector<double> positive_column(std::size_t n, bfp::CounterRng& rng,
                                           double lo = 0.3, double hi = 4.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

}  // namespace testutil
