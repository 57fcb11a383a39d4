#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>

#include "bfp/config.hpp"
#include "bfp/metrics.hpp"
#include "bfp/report.hpp"
#include "bfp/simharness.hpp"

namespace fs = std::filesystem;
using bfp::Json;

namespace {

// outputs written so far; removed if the command fails partway
std::vector<fs::path> g_written;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw bfp::Error("cannot write " + path.string());
  out << text;
  g_written.push_back(path);
}

void cleanup_outputs() {
  for (const auto& p : g_written) {
    std::error_code ec;
    fs::remove(p, ec);
  }
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bfp::Error("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

struct SplitData {
  bfp::Dataset train;
  bfp::Dataset test;
  bool has_test = false;
};

SplitData load_and_split(const bfp::RunConfig& cfg) {
  bfp::Dataset ds = bfp::load_dataset(cfg);
  SplitData out;
  if (cfg.train_fraction < 1.0) {
    auto [train, test] = bfp::split(ds, cfg.train_fraction, cfg.search.seed,
                                    cfg.stratify);
    out.train = std::move(train);
    out.test = std::move(test);
    out.has_test = true;
  } else {
    out.train = std::move(ds);
  }
  return out;
}

void attach_progress(bfp::RunConfig& cfg) {
  static std::mutex mu;
  cfg.search.progress = [](int chain, int epoch, double best, std::size_t omega) {
    std::lock_guard<std::mutex> lock(mu);
    std::fprintf(stderr, "chain %d epoch %d best_lp %.4f |Omega| %zu\n", chain, epoch,
                 best, omega);
  };
}

Json family_metrics(const bfp::RunConfig& cfg, const bfp::PosteriorSummary& summary,
                    const bfp::Dataset& train, const bfp::Dataset& test,
                    const std::vector<double>& pred) {
  Json m = Json::object();
  switch (cfg.family) {
    case bfp::Family::Gaussian: {
      auto r = bfp::regression_metrics(pred, test.response.y);
      m["rmse"] = r.rmse;
      m["mae"] = r.mae;
      m["corr"] = r.corr;
      break;
    }
    case bfp::Family::Bernoulli: {
      std::vector<int> truth(test.n);
      for (std::size_t i = 0; i < test.n; ++i)
        truth[i] = test.response.y[i] > 0.5 ? 1 : 0;
      auto c = bfp::classification_metrics(bfp::classify(pred), truth);
      m["acc"] = c.acc;
      m["fnr"] = c.fnr;
      m["fpr"] = c.fpr;
      break;
    }
    case bfp::Family::TimeToEvent: {
      bfp::CensoringModel cens(train.response.y, train.response.status);
      m["cindex"] = bfp::concordance_index(pred, test.response.y, test.response.status,
                                           cens);
      auto grid = bfp::ibs_grid(test.response.y, test.response.status);
      auto surv = bfp::survival_curve(summary, train, test, grid);
      m["ibs"] = bfp::integrated_brier_score(surv, test.response.y,
                                             test.response.status, cens, grid);
      break;
    }
  }
  return m;
}

void write_predictions_csv(const fs::path& path, const std::vector<double>& pred,
                           bfp::Family family) {
  std::ostringstream out;
  out.precision(12);
  out << (family == bfp::Family::Bernoulli ? "prediction,class\n" : "prediction\n");
  for (double p : pred) {
    out << p;
    if (family == bfp::Family::Bernoulli) out << "," << (p >= 0.5 ? 1 : 0);
    out << "\n";
  }
  write_text(path, out.str());
}

int cmd_fit(const bfp::RunConfig& cfg_in) {
  bfp::RunConfig cfg = cfg_in;
  attach_progress(cfg);
  SplitData data = load_and_split(cfg);

  bfp::EvidenceCache cache;
  bfp::VisitLog log = bfp::run_parallel(data.train, cfg.search, &cache);
  bfp::PosteriorSummary summary = bfp::renormalize(log, data.train);

  fs::create_directories(cfg.output_dir);
  Json report = bfp::report_json(summary, data.train, cfg.family);
  write_text(fs::path(cfg.output_dir) / "report.json", report.dump(2) + "\n");
  write_text(fs::path(cfg.output_dir) / "inclusion.txt",
             bfp::inclusion_table(summary, data.train));
  return 0;
}

int cmd_predict(const bfp::RunConfig& cfg, const std::string& report_path,
                const std::string& test_path) {
  SplitData data = load_and_split(cfg);
  bfp::Dataset test;
  if (!test_path.empty()) {
    bfp::RunConfig tc = cfg;
    tc.dataset_path = test_path;
    test = bfp::load_dataset(tc);
    test.adopt_shifts(data.train);
  } else if (data.has_test) {
    test = std::move(data.test);
  } else {
    throw bfp::Error("no test data: give --test or a split in the config");
  }

  Json report = load_json_file(report_path);
  bfp::EvidenceCache cache;
  bfp::PosteriorSummary summary =
      bfp::summary_from_report(report, data.train, cfg.search.prior, &cache);
  std::vector<double> pred =
      bfp::predict(summary, test, cfg.family, cfg.prediction_mode);

  fs::create_directories(cfg.output_dir);
  write_predictions_csv(fs::path(cfg.output_dir) / "predictions.csv", pred, cfg.family);
  Json metrics = family_metrics(cfg, summary, data.train, test, pred);
  write_text(fs::path(cfg.output_dir) / "metrics.json", metrics.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const bfp::RunConfig& cfg_in) {
  bfp::RunConfig cfg = cfg_in;
  bfp::Dataset predictors = bfp::load_dataset(cfg);

  bfp::ScenarioGrid grid;
  grid.variances = bfp::scenario_variances(cfg.full_grid);
  grid.replicates = cfg.replicates;
  grid.seed = cfg.search.seed;

  bfp::ScenarioResults res = bfp::run_scenario(
      predictors, grid, cfg.search, cfg.ideal, [](const bfp::ScenarioRow& row) {
        std::fprintf(stderr, "sigma2 %.3g rep %d tpr_f %.2f fdr_f %.2f\n", row.sigma2,
                     row.replicate, row.tpr_functional, row.fdr_functional);
      });

  fs::create_directories(cfg.output_dir);
  fs::path out_csv = fs::path(cfg.output_dir) / "scenario_results.csv";
  bfp::write_scenario_csv(res, out_csv.string());
  g_written.push_back(out_csv);
  fs::path trace_csv = fs::path(cfg.output_dir) / "trace.csv";
  bfp::write_trace_csv(res, trace_csv.string());
  g_written.push_back(trace_csv);

  Json agg = Json::array();
  for (const auto& a : res.aggregates)
    agg.push_back({{"sigma2", a.sigma2},
                   {"tpr_functional", a.tpr_functional},
                   {"fdr_functional", a.fdr_functional},
                   {"tpr_variable", a.tpr_variable},
                   {"fdr_variable", a.fdr_variable},
                   {"best_lp", a.best_log_posterior},
                   {"true_lp", a.true_log_posterior}});
  write_text(fs::path(cfg.output_dir) / "aggregate.json", agg.dump(2) + "\n");
  return 0;
}

int cmd_evaluate(const bfp::RunConfig& cfg, const std::string& predictions_path) {
  SplitData data = load_and_split(cfg);
  if (!data.has_test) throw bfp::Error("evaluate needs a split in the config");

  std::ifstream in(predictions_path);
  if (!in) throw bfp::Error("cannot open " + predictions_path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> pred;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    pred.push_back(std::stod(line.substr(0, line.find(','))));
  }
  if (pred.size() != data.test.n) throw bfp::Error("prediction count mismatch");
  if (cfg.family == bfp::Family::TimeToEvent)
    throw bfp::Error("evaluate supports gaussian and bernoulli; use predict for "
                     "timetoevent metrics");

  bfp::PosteriorSummary dummy;
  Json metrics = family_metrics(cfg, dummy, data.train, data.test, pred);
  fs::create_directories(cfg.output_dir);
  write_text(fs::path(cfg.output_dir) / "metrics.json", metrics.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian fractional-polynomial regression via mode-jumping MCMC"};
  app.require_subcommand(1);

  std::string config_path, report_path, test_path, predictions_path, grid_name;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::int64_t seed = -1;
  int chains = 0;
  bool ideal = false, interactions = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run config JSON")->required();
    sub->add_option("--set", overrides, "override a config scalar, key=value");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--chains", chains, "override the chain count");
    sub->add_option("--out", out_dir, "override the output directory");
  };

  CLI::App* fit = app.add_subcommand("fit", "search and write the posterior report");
  add_common(fit);
  fit->add_flag("--interactions", interactions, "enable interaction features");

  CLI::App* predict = app.add_subcommand("predict", "predict from a fitted report");
  add_common(predict);
  predict->add_option("--report", report_path, "report.json from fit")->required();
  predict->add_option("--test", test_path, "test CSV (default: the config split)");

  CLI::App* simulate = app.add_subcommand("simulate", "run the simulation scenarios");
  add_common(simulate);
  simulate->add_flag("--ideal", ideal, "pin the true model into the search");
  simulate->add_option("--grid", grid_name, "default | full");

  CLI::App* evaluate = app.add_subcommand("evaluate", "metrics for a predictions file");
  add_common(evaluate);
  evaluate->add_option("--predictions", predictions_path, "predictions.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    Json j = load_json_file(config_path);
    for (const auto& kv : overrides) bfp::apply_override(j, kv);
    if (seed >= 0) j["search"]["seed"] = seed;
    if (chains > 0) j["search"]["n_chains"] = chains;
    if (!out_dir.empty()) j["output_dir"] = out_dir;
    if (ideal) j["ideal"] = true;
    if (interactions) j["search"]["interactions"] = true;
    if (!grid_name.empty()) j["grid"] = grid_name;

    bfp::RunConfig cfg = bfp::parse_config(j);

    if (fit->parsed()) return cmd_fit(cfg);
    if (predict->parsed()) return cmd_predict(cfg, report_path, test_path);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg, predictions_path);
  } catch (const bfp::Error& e) {
    cleanup_outputs();
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    cleanup_outputs();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
