#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfp/rng.hpp"

namespace bfp {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ColumnKind { Continuous, Binary, CategoricalLevel };

enum class Family { Gaussian, Bernoulli, TimeToEvent };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Bernoulli: return "bernoulli";
    case Family::TimeToEvent: return "timetoevent";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "gaussian") return Family::Gaussian;
  if (s == "bernoulli") return Family::Bernoulli;
  if (s == "timetoevent") return Family::TimeToEvent;
  throw Error("unknown family: " + s);
}

struct Column {
  std::string name;
  std::vector<double> values;
  ColumnKind kind = ColumnKind::Continuous;
  // positivity shift for FP transforms; set from training data and
  // copied verbatim onto any dataset used for prediction
  double shift = 0.0;
};

struct ResponseSpec {
  Family kind = Family::Gaussian;
  std::vector<double> y;
  std::vector<int> status;  // timetoevent only, 1 = event observed
};

// shift making min(x)+shift = 1e-5 when min(x) <= 0, else 0
inline double required_shift(const std::vector<double>& x) {
  double mn = *std::min_element(x.begin(), x.end());
  return mn > 0.0 ? 0.0 : -mn + 1e-5;
}

struct Dataset {
  std::vector<Column> columns;
  ResponseSpec response;
  std::size_t n = 0;

  const Column& column(std::size_t j) const { return columns.at(j); }

  int column_index(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j].name == name) return static_cast<int>(j);
    return -1;
  }

  void compute_shifts() {
    for (auto& c : columns)
      c.shift = c.kind == ColumnKind::Continuous ? required_shift(c.values) : 0.0;
  }

  // reuse the training-set shifts so prediction applies the identical map
  void adopt_shifts(const Dataset& train) {
    if (train.columns.size() != columns.size())
      throw Error("adopt_shifts: column count mismatch");
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (train.columns[j].name != columns[j].name)
        throw Error("adopt_shifts: column name mismatch at " + columns[j].name);
      columns[j].shift = train.columns[j].shift;
    }
  }

  void validate() const {
    if (n < 2) throw Error("dataset needs at least 2 rows");
    for (const auto& c : columns)
      if (c.values.size() != n) throw Error("column length mismatch: " + c.name);
    if (response.y.size() != n) throw Error("response length mismatch");
    if (response.kind == Family::Bernoulli) {
      for (double v : response.y)
        if (v != 0.0 && v != 1.0) throw Error("bernoulli response must be 0/1");
    }
    if (response.kind == Family::TimeToEvent) {
      if (response.status.size() != n) throw Error("status length mismatch");
      for (double v : response.y)
        if (!(v > 0.0)) throw Error("nonpositive event time");
      for (int s : response.status)
        if (s != 0 && s != 1) throw Error("status must be 0/1");
    }
  }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end && *end == '\0' && std::isfinite(out);
}

}  // namespace detail

// Load a headered CSV. `schema` maps predictor names to a kind string
// ("continuous" | "binary" | "categorical"). Categorical predictors are
// expanded into indicator columns against the first level seen in file
// order; the indicators are named <col>a, <col>b, ... for the non-baseline
// levels. `status_name` names the censoring column for timetoevent data.
inline Dataset load_csv(const std::string& path,
                        const std::map<std::string, std::string>& schema,
                        const std::string& response_name, Family family,
                        const std::string& status_name = "") {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty file: " + path);
  std::vector<std::string> header = detail::split_line(line);

  auto col_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error("missing column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };

  // an empty response name loads predictors only (simulation input); the
  // response is filled with zeros and meant to be overwritten
  std::size_t resp_idx = response_name.empty() ? 0 : col_of(response_name);
  std::size_t status_idx = status_name.empty() ? 0 : col_of(status_name);
  std::vector<std::pair<std::size_t, std::string>> predictors;  // (idx, kind)
  for (const auto& [name, kind] : schema) {
    if (kind != "continuous" && kind != "binary" && kind != "categorical")
      throw Error("unknown column kind '" + kind + "' for " + name);
    predictors.emplace_back(col_of(name), kind);
  }
  std::sort(predictors.begin(), predictors.end());

  // raw cells, categorical kept as strings for level collection
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = detail::split_line(line);
    if (cells.size() != header.size())
      throw Error(path + ":" + std::to_string(lineno) + ": wrong field count");
    rows.push_back(std::move(cells));
  }

  Dataset ds;
  ds.n = rows.size();
  ds.response.kind = family;

  for (const auto& [idx, kind] : predictors) {
    const std::string& name = header[idx];
    if (kind == "categorical") {
      std::vector<std::string> levels;  // file order, first = baseline
      for (const auto& r : rows)
        if (std::find(levels.begin(), levels.end(), r[idx]) == levels.end())
          levels.push_back(r[idx]);
      for (std::size_t l = 1; l < levels.size(); ++l) {
        Column c;
        c.name = name + static_cast<char>('a' + (l - 1));
        c.kind = ColumnKind::Binary;
        c.values.reserve(ds.n);
        for (const auto& r : rows)
          c.values.push_back(r[idx] == levels[l] ? 1.0 : 0.0);
        ds.columns.push_back(std::move(c));
      }
    } else {
      Column c;
      c.name = name;
      c.kind = kind == "binary" ? ColumnKind::Binary : ColumnKind::Continuous;
      c.values.reserve(ds.n);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double v;
        if (!detail::parse_double(rows[i][idx], v))
          throw Error(path + ": non-numeric value '" + rows[i][idx] + "' in column " +
                      name);
        if (c.kind == ColumnKind::Binary && v != 0.0 && v != 1.0)
          throw Error("non-binary value in binary column " + name);
        c.values.push_back(v);
      }
      ds.columns.push_back(std::move(c));
    }
  }

  for (const auto& r : rows) {
    if (response_name.empty()) {
      ds.response.y.push_back(0.0);
      continue;
    }
    double v;
    if (!detail::parse_double(r[resp_idx], v))
      throw Error(path + ": non-numeric response '" + r[resp_idx] + "'");
    ds.response.y.push_back(v);
    if (family == Family::TimeToEvent) {
      if (status_name.empty()) throw Error("timetoevent response needs a status column");
      double s;
      if (!detail::parse_double(r[status_idx], s) || (s != 0.0 && s != 1.0))
        throw Error(path + ": bad status value '" + r[status_idx] + "'");
      ds.response.status.push_back(static_cast<int>(s));
    }
  }

  ds.validate();
  ds.compute_shifts();
  return ds;
}

inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out.precision(17);
  for (const auto& c : ds.columns) out << c.name << ",";
  out << "y";
  if (ds.response.kind == Family::TimeToEvent) out << ",status";
  out << "\n";
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (const auto& c : ds.columns) out << c.values[i] << ",";
    out << ds.response.y[i];
    if (ds.response.kind == Family::TimeToEvent) out << "," << ds.response.status[i];
    out << "\n";
  }
}

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.n = rows.size();
  out.response.kind = ds.response.kind;
  for (const auto& c : ds.columns) {
    Column nc;
    nc.name = c.name;
    nc.kind = c.kind;
    for (auto i : rows) nc.values.push_back(c.values[i]);
    out.columns.push_back(std::move(nc));
  }
  for (auto i : rows) {
    out.response.y.push_back(ds.response.y[i]);
    if (!ds.response.status.empty()) out.response.status.push_back(ds.response.status[i]);
  }
  return out;
}

}  // namespace detail

// Deterministic disjoint row partition. With stratify_on_status the censored
// proportion is preserved up to rounding in each part. Shifts are computed
// on the training part and copied onto the test part.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                         std::uint64_t seed, bool stratify_on_status) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("train_fraction must be in (0,1)");
  if (stratify_on_status && ds.response.kind != Family::TimeToEvent)
    throw Error("stratified split requires a timetoevent response");

  CounterRng rng(seed, /*stream=*/0x517u);  // dedicated split stream
  auto shuffled = [&](std::vector<std::size_t> idx) {
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
  };

  std::vector<std::size_t> train_rows, test_rows;
  auto assign = [&](std::vector<std::size_t> group) {
    group = shuffled(std::move(group));
    auto k = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(group.size()) + 0.5));
    if (k == 0 || k == group.size())
      k = std::min(std::max<std::size_t>(k, 1), group.size() - 1);
    train_rows.insert(train_rows.end(), group.begin(), group.begin() + k);
    test_rows.insert(test_rows.end(), group.begin() + k, group.end());
  };

  if (stratify_on_status) {
    std::vector<std::size_t> censored, events;
    for (std::size_t i = 0; i < ds.n; ++i)
      (ds.response.status[i] ? events : censored).push_back(i);
    if (!censored.empty()) assign(censored);
    if (!events.empty()) assign(events);
  } else {
    std::vector<std::size_t> all(ds.n);
    std::iota(all.begin(), all.end(), 0);
    assign(all);
  }
  if (train_rows.empty() || test_rows.empty())
    throw Error("train_fraction produces an empty partition");

  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  Dataset train = detail::take_rows(ds, train_rows);
  Dataset test = detail::take_rows(ds, test_rows);
  train.compute_shifts();
  test.adopt_shifts(train);
  return {std::move(train), std::move(test)};
}

}  // namespace bfp
