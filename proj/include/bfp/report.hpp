#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bfp/posterior.hpp"

namespace bfp {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json feature_terms(const Feature& f, const Dataset& ds) {
  Json terms = Json::array();
  for (const auto& [j, t] : f.factors)
    terms.push_back({{"predictor", ds.column(static_cast<std::size_t>(j)).name},
                     {"power", t.power},
                     {"log", t.log_multiplier}});
  return terms;
}

inline Feature feature_from_terms(const Json& terms, const Dataset& ds) {
  Feature f;
  for (const auto& t : terms) {
    int j = ds.column_index(t.at("predictor").get<std::string>());
    if (j < 0) throw Error("report predictor not in dataset: " +
                           t.at("predictor").get<std::string>());
    f.factors.emplace_back(
        j, Transform{t.at("power").get<double>(), t.at("log").get<bool>()});
  }
  f.canonicalize();
  return f;
}

}  // namespace detail

// Weight-zero models are dropped; feature strings are the stable report
// serialization, `terms` the structural form used to reload the report.
inline Json report_json(const PosteriorSummary& summary, const Dataset& ds,
                        Family family, int max_models = 10000) {
  Json models = Json::array();
  int count = 0;
  for (const auto& wm : summary.models) {
    if (wm.weight <= 0.0 || count++ >= max_models) continue;
    Json features = Json::array(), terms = Json::array();
    for (const auto& f : wm.model.features) {
      features.push_back(feature_string(f, ds));
      terms.push_back(detail::feature_terms(f, ds));
    }
    models.push_back({{"features", features},
                      {"terms", terms},
                      {"log_marglik", wm.log_marglik},
                      {"log_prior", wm.log_prior},
                      {"weight", wm.weight}});
  }

  Json inclusion = Json::object(), incl_terms = Json::array();
  for (const auto& [f, p] : summary.inclusion) {
    inclusion[feature_string(f, ds)] = p;
    incl_terms.push_back({{"terms", detail::feature_terms(f, ds)}, {"prob", p}});
  }
  Json variable_inclusion = Json::object();
  for (const auto& [name, p] : summary.variable_inclusion) variable_inclusion[name] = p;
  Json mpm = Json::array();
  for (const auto& f : summary.mpm.features) mpm.push_back(feature_string(f, ds));

  return {{"family", family_name(family)},
          {"models", models},
          {"inclusion", inclusion},
          {"inclusion_terms", incl_terms},
          {"variable_inclusion", variable_inclusion},
          {"mpm", mpm}};
}

// Rebuild the weighted model list from a report, refitting each model on the
// given (training) dataset; evidence values are pure so the fits reproduce.
inline PosteriorSummary summary_from_report(const Json& report, const Dataset& ds_train,
                                            const PriorConfig& prior,
                                            EvidenceCache* cache = nullptr) {
  PosteriorSummary out;
  for (const auto& jm : report.at("models")) {
    WeightedModel wm;
    std::vector<Feature> fs;
    for (const auto& terms : jm.at("terms"))
      fs.push_back(detail::feature_from_terms(terms, ds_train));
    wm.model = Model::of(std::move(fs));
    wm.weight = jm.at("weight").get<double>();
    Evidence ev = evaluate_model(wm.model, ds_train, prior, cache);
    wm.log_prior = ev.log_prior;
    wm.log_marglik = ev.log_marglik;
    wm.fit = ev.fit;
    out.models.push_back(std::move(wm));
  }
  std::sort(out.models.begin(), out.models.end(),
            [](const WeightedModel& a, const WeightedModel& b) {
              return a.weight > b.weight;
            });
  if (out.models.empty()) throw Error("report contains no models");
  out.best = out.models.front().model;

  std::vector<Feature> mpm_features;
  for (const auto& jf : report.at("inclusion_terms")) {
    Feature f = detail::feature_from_terms(jf.at("terms"), ds_train);
    double p = jf.at("prob").get<double>();
    out.inclusion.emplace_back(f, p);
    if (p > 0.5) mpm_features.push_back(f);
  }
  out.mpm = Model::of(std::move(mpm_features));
  for (auto it = report.at("variable_inclusion").begin();
       it != report.at("variable_inclusion").end(); ++it)
    out.variable_inclusion[it.key()] = it.value().get<double>();
  return out;
}

// human-readable table of inclusion probabilities >= 0.1
inline std::string inclusion_table(const PosteriorSummary& summary, const Dataset& ds) {
  std::vector<std::pair<double, std::string>> rows;
  for (const auto& [f, p] : summary.inclusion)
    if (p >= 0.1) rows.emplace_back(p, feature_string(f, ds));
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::ostringstream out;
  out << "feature                                  inclusion\n";
  for (const auto& [p, name] : rows)
    out << std::left << std::setw(40) << name << std::fixed << std::setprecision(4)
        << p << "\n";
  return out.str();
}

}  // namespace bfp
