#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bfp/search.hpp"
#include "bfp/simharness.hpp"

namespace bfp {

using Json = nlohmann::ordered_json;

struct RunConfig {
  // dataset
  std::string dataset_path;
  std::map<std::string, std::string> schema;  // column -> kind
  std::string response_name;
  std::string status_name;
  Family family = Family::Gaussian;

  // split (train_fraction = 1 means no held-out split)
  double train_fraction = 1.0;
  bool stratify = false;

  SearchConfig search;

  std::string output_dir = ".";
  PredictMode prediction_mode = PredictMode::ModelAveraged;

  // simulate
  bool ideal = false;
  bool full_grid = false;
  int replicates = 10;
};

namespace detail {

inline void reject_unknown(const Json& j, const std::vector<std::string>& known,
                           const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw Error("unknown config key '" + it.key() + "' in " + where);
}

}  // namespace detail

inline PredictMode parse_predict_mode(const std::string& s) {
  if (s == "model-averaged") return PredictMode::ModelAveraged;
  if (s == "mpm") return PredictMode::MedianProbability;
  if (s == "best") return PredictMode::Best;
  throw Error("unknown prediction mode: " + s);
}

inline RunConfig parse_config(const Json& j) {
  RunConfig cfg;
  detail::reject_unknown(j, {"dataset", "split", "search", "output_dir",
                             "prediction_mode", "ideal", "grid", "replicates"},
                         "config");

  const Json& d = j.at("dataset");
  detail::reject_unknown(d, {"path", "schema", "response", "status", "family"},
                         "dataset");
  cfg.dataset_path = d.at("path").get<std::string>();
  for (auto it = d.at("schema").begin(); it != d.at("schema").end(); ++it)
    cfg.schema[it.key()] = it.value().get<std::string>();
  cfg.response_name = d.at("response").get<std::string>();
  cfg.family = parse_family(d.at("family").get<std::string>());
  if (d.contains("status")) cfg.status_name = d.at("status").get<std::string>();

  if (j.contains("split")) {
    const Json& s = j.at("split");
    detail::reject_unknown(s, {"train_fraction", "stratify"}, "split");
    cfg.train_fraction = s.at("train_fraction").get<double>();
    if (s.contains("stratify")) cfg.stratify = s.at("stratify").get<bool>();
  }

  if (j.contains("search")) {
    const Json& s = j.at("search");
    detail::reject_unknown(
        s,
        {"population_size", "q", "d", "order_cap", "interactions", "s0", "s1", "s2",
         "total_iters", "evolve_period", "last_evolve_iter", "n_chains", "seed",
         "p_mutation", "p_multiplication", "p_modification", "p_projection",
         "rho_jump", "eps", "greedy_flips", "w_min", "delta"},
        "search");
    SearchConfig& sc = cfg.search;
    auto get = [&](const char* key, auto& field) {
      if (s.contains(key)) field = s.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("population_size", sc.population_size);
    get("q", sc.prior.q);
    get("d", sc.prior.d);
    get("order_cap", sc.prior.order_cap);
    get("interactions", sc.prior.interactions);
    get("s0", sc.prior.s0);
    get("s1", sc.prior.s1);
    get("s2", sc.prior.s2);
    get("total_iters", sc.total_iters);
    get("evolve_period", sc.evolve_period);
    get("last_evolve_iter", sc.last_evolve_iter);
    get("n_chains", sc.n_chains);
    get("seed", sc.seed);
    get("p_mutation", sc.operators.p_mutation);
    get("p_multiplication", sc.operators.p_multiplication);
    get("p_modification", sc.operators.p_modification);
    get("p_projection", sc.operators.p_projection);
    get("rho_jump", sc.params.rho_jump);
    get("eps", sc.params.eps);
    get("greedy_flips", sc.params.greedy_flips);
    get("w_min", sc.params.w_min);
    get("delta", sc.params.delta);
    if (sc.prior.interactions && sc.operators.p_multiplication == 0.0) {
      // sensible interaction-mode default mixture
      sc.operators = {0.4, 0.3, 0.3, 0.0};
    }
  }

  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("prediction_mode"))
    cfg.prediction_mode = parse_predict_mode(j.at("prediction_mode").get<std::string>());
  if (j.contains("ideal")) cfg.ideal = j.at("ideal").get<bool>();
  if (j.contains("grid")) {
    std::string g = j.at("grid").get<std::string>();
    if (g != "default" && g != "full") throw Error("grid must be 'default' or 'full'");
    cfg.full_grid = g == "full";
  }
  if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<int>();

  cfg.search.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

// apply a --set key=value override with a dotted path, e.g. search.q=10
inline void apply_override(Json& j, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos) throw Error("--set expects key=value");
  std::string path = kv.substr(0, eq), value = kv.substr(eq + 1);
  Json* node = &j;
  std::size_t pos = 0;
  while (true) {
    auto dot = path.find('.', pos);
    std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (dot == std::string::npos) {
      Json parsed = Json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? Json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

inline Dataset load_dataset(const RunConfig& cfg) {
  return load_csv(cfg.dataset_path, cfg.schema, cfg.response_name, cfg.family,
                  cfg.status_name);
}

}  // namespace bfp
