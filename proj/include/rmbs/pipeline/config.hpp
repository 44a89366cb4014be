#pragma once

// Versioned pipeline configuration read from JSON; every error names the
// offending key path.

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmbs/corpus.hpp"
#include "rmbs/error.hpp"
#include "rmbs/features.hpp"
#include "rmbs/glm/lasso.hpp"
#include "rmbs/performance.hpp"
#include "rmbs/synth.hpp"
#include "rmbs/topics/model.hpp"
#include "rmbs/toxicity.hpp"

namespace rmbs::pipeline {

inline constexpr int kConfigVersion = 1;

struct CorpusOptions {
  std::string source = "records";  // records (generator counts) or extracted
  int min_fi_docs = 20;
  int min_pairs = 5;
  long weight_multiplier = 2;
  std::set<std::string> weighted_roles = default_weighted_roles();
};

struct TopicOptions {
  topics::TopicModelConfig model;  // chain_var unused; see the two below
  double chain_var_slow = 0.005;
  double chain_var_fast = 0.75;
  double strong_threshold = 0.7;
  double align_threshold = 0.6;
  double drift_threshold = 0.3;
  std::size_t sankey_terms = 10;
};

struct FitOptions {
  glm::LassoConfig lasso;
  double threshold = 0.5;
};

struct PipelineConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 20160901;
  std::string out = "out";
  std::string bundle;         // input bundle directory; empty: <out>/synth
  std::string flag_registry;  // empty: built-in registry
  synth::SynthConfig synth;
  CorpusOptions corpus;
  TopicOptions topics;
  FitOptions fit;
  PerfThresholds thresholds = default_thresholds();
  FeatureConfig features;
  ToxicityRule toxicity;
  std::size_t toxicity_top_n = 10;

  PipelineConfig() {
    topics.model.k = 10;
    fit.lasso.n_folds = 10;
  }

  std::string bundle_dir() const { return bundle.empty() ? out + "/synth" : bundle; }

  /// Copies the run seed into every stochastic stage and checks each part.
  void finalize() {
    synth.seed = seed;
    synth.thresholds = thresholds;
    topics.model.seed = seed;
    fit.lasso.seed = seed;
    validate();
  }

  void validate() const {
    if (version != kConfigVersion)
      throw ConfigError("version", "unsupported version " + std::to_string(version) + " (expected " +
                                       std::to_string(kConfigVersion) + ")");
    if (out.empty()) throw ConfigError("out", "must not be empty");
    synth.validate();
    if (corpus.source != "records" && corpus.source != "extracted")
      throw ConfigError("corpus.source", "must be 'records' or 'extracted'");
    if (corpus.min_fi_docs < 1) throw ConfigError("corpus.min_fi_docs", "must be >= 1");
    if (corpus.min_pairs < 1) throw ConfigError("corpus.min_pairs", "must be >= 1");
    if (corpus.weight_multiplier < 1) throw ConfigError("corpus.weight_multiplier", "must be >= 1");
    topics.model.validate();
    if (!(topics.chain_var_slow > 0)) throw ConfigError("topics.chain_var_slow", "must be > 0");
    if (!(topics.chain_var_fast > 0)) throw ConfigError("topics.chain_var_fast", "must be > 0");
    if (!(topics.strong_threshold > 0 && topics.strong_threshold <= 1))
      throw ConfigError("topics.strong_threshold", "must be in (0, 1]");
    if (topics.sankey_terms < 1) throw ConfigError("topics.sankey_terms", "must be >= 1");
    try {
      fit.lasso.validate();
    } catch (const ConfigError& e) {
      // report the key as it is spelled in the config file
      std::string f = e.field() == "lasso.n_folds" ? "fit.folds" : "fit." + e.field().substr(e.field().find('.') + 1);
      std::string msg = e.what();
      throw ConfigError(f, msg.substr(msg.find(": ") + 2));
    }
    if (!(fit.threshold > 0 && fit.threshold < 1)) throw ConfigError("fit.threshold", "must be in (0, 1)");
    thresholds.validate();
    if (!(features.principal_unit > 0)) throw ConfigError("features.principal_unit", "must be > 0");
    if (features.last_year < features.first_year) throw ConfigError("features.years", "last year before first year");
    if (toxicity_top_n < 1) throw ConfigError("toxicity.top_n", "must be >= 1");
  }
};

namespace detail {

/// Walks one JSON object; unknown keys and wrong types become ConfigErrors.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "(root)" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(field(key), "wrong type");
    }
  }

  Reader sub(const std::string& key) {
    seen_.insert(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_class_thresholds(Reader r, ClassThresholds& t) {
  r.get("me_max_bps", t.me_max_bps);
  r.get("fe_min_bps", t.fe_min_bps);
  r.finish();
}

inline void read_synth(Reader r, synth::SynthConfig& s) {
  r.get("n_communities", s.n_communities);
  r.get("docs_per_community", s.docs_per_community);
  r.get("first_year", s.first_year);
  r.get("last_year", s.last_year);
  r.get("fis_per_community", s.fis_per_community);
  r.get("roles_per_fi", s.roles_per_fi);
  r.get("shared_pairs", s.shared_pairs);
  r.get("leakage", s.leakage);
  r.get("tokens_per_doc", s.tokens_per_doc);
  r.get("year_profile", s.year_profile);
  r.get("class_mix", s.class_mix);
  r.get("securities_per_doc", s.securities_per_doc);
  r.get("ssup_rate", s.ssup_rate);
  r.get("flag_rate", s.flag_rate);
  r.get("fe_max_bps", s.fe_max_bps);
  if (r.has("tags")) {
    std::vector<std::string> tags;
    r.get("tags", tags);
    s.tags.clear();
    for (std::size_t i = 0; i < tags.size(); ++i) {
      try {
        s.tags.push_back(parse_community_toxicity(tags[i]));
      } catch (const InvalidInput& e) {
        throw ConfigError(r.field("tags") + "[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  auto e = r.sub("effects");
  e.get("intercept", s.effects.intercept);
  e.get("ssup", s.effects.ssup);
  e.get("has_ssup", s.effects.has_ssup);
  e.get("topic", s.effects.topic);
  e.get("noise_sd", s.effects.noise_sd);
  auto cls = e.sub("class");
  cls.get("A", s.effects.cls[0]);
  cls.get("M", s.effects.cls[1]);
  cls.get("B", s.effects.cls[2]);
  cls.finish();
  if (e.has("year")) {
    const auto& y = e.raw("year");
    if (!y.is_object()) throw ConfigError(e.field("year"), "expected an object of year -> effect");
    s.effects.year.clear();
    for (const auto& [k, v] : y.items()) {
      try {
        s.effects.year[std::stoi(k)] = v.get<double>();
      } catch (const std::exception&) {
        throw ConfigError(e.field("year") + "." + k, "expected a year key and a numeric effect");
      }
    }
  }
  e.finish();
  r.finish();
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  detail::Reader r(j, "");
  r.get("version", c.version);
  if (c.version != kConfigVersion)
    throw ConfigError("version", "unsupported version " + std::to_string(c.version) + " (expected " +
                                     std::to_string(kConfigVersion) + ")");
  r.get("seed", c.seed);
  r.get("out", c.out);
  r.get("bundle", c.bundle);
  r.get("flag_registry", c.flag_registry);
  detail::read_synth(r.sub("synth"), c.synth);

  auto co = r.sub("corpus");
  co.get("source", c.corpus.source);
  co.get("min_fi_docs", c.corpus.min_fi_docs);
  co.get("min_pairs", c.corpus.min_pairs);
  co.get("weight_multiplier", c.corpus.weight_multiplier);
  co.get("weighted_roles", c.corpus.weighted_roles);
  co.finish();

  auto t = r.sub("topics");
  t.get("k", c.topics.model.k);
  t.get("alpha", c.topics.model.alpha);
  t.get("iterations", c.topics.model.iterations);
  t.get("convergence_tol", c.topics.model.convergence_tol);
  t.get("chain_var_slow", c.topics.chain_var_slow);
  t.get("chain_var_fast", c.topics.chain_var_fast);
  t.get("strong_threshold", c.topics.strong_threshold);
  t.get("align_threshold", c.topics.align_threshold);
  t.get("drift_threshold", c.topics.drift_threshold);
  t.get("sankey_terms", c.topics.sankey_terms);
  t.finish();

  auto f = r.sub("fit");
  f.get("lambda_grid", c.fit.lasso.lambda_grid);
  f.get("n_lambda", c.fit.lasso.n_lambda);
  f.get("lambda_min_ratio", c.fit.lasso.lambda_min_ratio);
  f.get("folds", c.fit.lasso.n_folds);
  f.get("max_iter", c.fit.lasso.max_iter);
  f.get("tol", c.fit.lasso.tol);
  f.get("standardize", c.fit.lasso.standardize);
  f.get("threshold", c.fit.threshold);
  f.finish();

  auto th = r.sub("thresholds");
  detail::read_class_thresholds(th.sub("A"), c.thresholds.a);
  detail::read_class_thresholds(th.sub("M"), c.thresholds.m);
  detail::read_class_thresholds(th.sub("B"), c.thresholds.b);
  th.finish();

  auto fe = r.sub("features");
  fe.get("principal_unit", c.features.principal_unit);
  fe.get("first_year", c.features.first_year);
  fe.get("last_year", c.features.last_year);
  fe.get("baseline_year", c.features.baseline_year);
  fe.finish();

  auto tx = r.sub("toxicity");
  tx.get("top_n", c.toxicity_top_n);
  tx.get("key_roles", c.toxicity.key_roles);
  tx.get("min_toxic_institutions", c.toxicity.min_toxic_institutions);
  tx.get("many_roles", c.toxicity.many_roles);
  tx.get("multiple_years", c.toxicity.multiple_years);
  tx.get("min_prospectuses", c.toxicity.min_prospectuses);
  tx.finish();
  r.finish();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// The effective configuration, written next to the artifacts.
inline nlohmann::json config_to_json(const PipelineConfig& c) {
  auto ct = [](const ClassThresholds& t) { return nlohmann::json{{"me_max_bps", t.me_max_bps}, {"fe_min_bps", t.fe_min_bps}}; };
  const auto& s = c.synth;
  nlohmann::json year = nlohmann::json::object();
  for (const auto& [y, v] : s.effects.year) year[std::to_string(y)] = v;
  std::vector<std::string> tags;
  for (auto t : s.tags) tags.push_back(to_string(t));
  nlohmann::json j;
  j["version"] = c.version;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["bundle"] = c.bundle;
  j["flag_registry"] = c.flag_registry;
  j["synth"] = {{"n_communities", s.n_communities},
                {"docs_per_community", s.docs_per_community},
                {"first_year", s.first_year},
                {"last_year", s.last_year},
                {"fis_per_community", s.fis_per_community},
                {"roles_per_fi", s.roles_per_fi},
                {"shared_pairs", s.shared_pairs},
                {"leakage", s.leakage},
                {"tokens_per_doc", s.tokens_per_doc},
                {"year_profile", s.year_profile},
                {"class_mix", s.class_mix},
                {"securities_per_doc", s.securities_per_doc},
                {"ssup_rate", s.ssup_rate},
                {"flag_rate", s.flag_rate},
                {"fe_max_bps", s.fe_max_bps},
                {"tags", tags},
                {"effects",
                 {{"intercept", s.effects.intercept},
                  {"ssup", s.effects.ssup},
                  {"has_ssup", s.effects.has_ssup},
                  {"class", {{"A", s.effects.cls[0]}, {"M", s.effects.cls[1]}, {"B", s.effects.cls[2]}}},
                  {"year", year},
                  {"topic", s.effects.topic},
                  {"noise_sd", s.effects.noise_sd}}}};
  j["corpus"] = {{"source", c.corpus.source},
                 {"min_fi_docs", c.corpus.min_fi_docs},
                 {"min_pairs", c.corpus.min_pairs},
                 {"weight_multiplier", c.corpus.weight_multiplier},
                 {"weighted_roles", c.corpus.weighted_roles}};
  j["topics"] = {{"k", c.topics.model.k},
                 {"alpha", c.topics.model.alpha},
                 {"iterations", c.topics.model.iterations},
                 {"convergence_tol", c.topics.model.convergence_tol},
                 {"chain_var_slow", c.topics.chain_var_slow},
                 {"chain_var_fast", c.topics.chain_var_fast},
                 {"strong_threshold", c.topics.strong_threshold},
                 {"align_threshold", c.topics.align_threshold},
                 {"drift_threshold", c.topics.drift_threshold},
                 {"sankey_terms", c.topics.sankey_terms}};
  j["fit"] = {{"lambda_grid", c.fit.lasso.lambda_grid},
              {"n_lambda", c.fit.lasso.n_lambda},
              {"lambda_min_ratio", c.fit.lasso.lambda_min_ratio},
              {"folds", c.fit.lasso.n_folds},
              {"max_iter", c.fit.lasso.max_iter},
              {"tol", c.fit.lasso.tol},
              {"standardize", c.fit.lasso.standardize},
              {"threshold", c.fit.threshold}};
  j["thresholds"] = {{"A", ct(c.thresholds.a)}, {"M", ct(c.thresholds.m)}, {"B", ct(c.thresholds.b)}};
  j["features"] = {{"principal_unit", c.features.principal_unit},
                   {"first_year", c.features.first_year},
                   {"last_year", c.features.last_year},
                   {"baseline_year", c.features.baseline_year}};
  j["toxicity"] = {{"top_n", c.toxicity_top_n},
                   {"key_roles", c.toxicity.key_roles},
                   {"min_toxic_institutions", c.toxicity.min_toxic_institutions},
                   {"many_roles", c.toxicity.many_roles},
                   {"multiple_years", c.toxicity.multiple_years},
                   {"min_prospectuses", c.toxicity.min_prospectuses}};
  return j;
}

}  // namespace rmbs::pipeline
