// rmbs: run the supply-chain analytics pipeline stage by stage.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmbs/pipeline/run.hpp"

using namespace rmbs;

namespace {

std::vector<double> parse_list(const std::string& s, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(field, "not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(field, "empty list");
  return out;
}

ClassThresholds parse_thresholds(const std::string& s, const std::string& field) {
  auto v = parse_list(s, field);
  if (v.size() != 2) throw ConfigError(field, "expected ME_MAX,FE_MIN in basis points");
  return {v[0], v[1]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RMBS supply-chain pipeline"};
  std::string stage = "all", config_path, out, lambda_grid, thr_a, thr_mb;
  std::optional<std::uint64_t> seed;
  std::optional<int> k, folds;
  std::optional<double> alpha, chain_var;

  app.add_option("--stage", stage, "synth, extract, corpus, topics, label, features, fit, toxicity, report or all")
      ->capture_default_str();
  app.add_option("--config", config_path, "JSON configuration file (defaults: bundled synthetic sample)");
  app.add_option("--seed", seed, "seed for every stochastic stage");
  app.add_option("--out", out, "output directory");
  app.add_option("--k", k, "number of topics");
  app.add_option("--alpha", alpha, "document-topic Dirichlet parameter");
  app.add_option("--chain-var", chain_var, "chain variance of the slow dynamic model");
  app.add_option("--lambda-grid", lambda_grid, "comma-separated descending penalty grid");
  app.add_option("--folds", folds, "cross-validation folds");
  app.add_option("--threshold-class-a", thr_a, "ME_MAX,FE_MIN basis points for class A");
  app.add_option("--threshold-class-mb", thr_mb, "ME_MAX,FE_MIN basis points for classes M and B");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  pipeline::PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = pipeline::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    if (k) cfg.topics.model.k = *k;
    if (alpha) cfg.topics.model.alpha = *alpha;
    if (chain_var) cfg.topics.chain_var_slow = *chain_var;
    if (!lambda_grid.empty()) cfg.fit.lasso.lambda_grid = parse_list(lambda_grid, "--lambda-grid");
    if (folds) cfg.fit.lasso.n_folds = *folds;
    if (!thr_a.empty()) cfg.thresholds.a = parse_thresholds(thr_a, "--threshold-class-a");
    if (!thr_mb.empty()) cfg.thresholds.m = cfg.thresholds.b = parse_thresholds(thr_mb, "--threshold-class-mb");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return pipeline::run_stage(stage, cfg, std::cout, std::cerr);
}
