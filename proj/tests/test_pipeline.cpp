#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rmbs/pipeline/run.hpp"

using namespace rmbs;
using namespace rmbs::pipeline;
namespace fs = std::filesystem;

namespace {

std::string field_of(const nlohmann::json& j) {
  try {
    auto c = config_from_json(j);
    c.finalize();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

PipelineConfig small_config(const fs::path& out) {
  auto j = nlohmann::json::parse(R"({
    "version": 1, "seed": 7,
    "synth": {"n_communities": 4, "docs_per_community": 25, "securities_per_doc": 6,
              "tags": ["toxic", "partial", "non_toxic", "non_toxic"]},
    "corpus": {"min_fi_docs": 10},
    "topics": {"k": 4},
    "fit": {"folds": 3, "n_lambda": 15},
    "toxicity": {"min_prospectuses": 10}
  })");
  auto c = config_from_json(j);
  c.out = out.string();
  return c;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rmbs_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    auto rel = e.path().lexically_relative(root).generic_string();
    if (rel == "config.json" || rel == "run_manifest.json") continue;
    m[rel] = slurp(e.path());
  }
  return m;
}

}  // namespace

TEST(Config, DefaultsValidate) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.finalize());
  EXPECT_EQ(c.synth.seed, c.seed);
  EXPECT_EQ(c.fit.lasso.seed, c.seed);
  EXPECT_EQ(c.topics.model.k, 10);
  EXPECT_EQ(c.fit.lasso.n_folds, 10);
}

TEST(Config, ErrorsNameTheKeyPath) {
  EXPECT_EQ(field_of({{"version", 1}, {"bogus", 1}}), "bogus");
  EXPECT_EQ(field_of({{"version", 1}, {"topics", {{"kk", 3}}}}), "topics.kk");
  EXPECT_EQ(field_of({{"version", 1}, {"topics", {{"k", "ten"}}}}), "topics.k");
  EXPECT_EQ(field_of({{"version", 2}}), "version");
  EXPECT_EQ(field_of({{"version", 1}, {"fit", {{"folds", 1}}}}), "fit.folds");
  EXPECT_EQ(field_of({{"version", 1}, {"thresholds", {{"A", {{"me_max_bps", "x"}}}}}}), "thresholds.A.me_max_bps");
  EXPECT_EQ(field_of({{"version", 1}, {"synth", {{"tags", {"toxic", "maybe"}}}}}), "synth.tags[1]");
  EXPECT_EQ(field_of({{"version", 1}, {"synth", {{"effects", {{"class", {{"C", 1}}}}}}}}), "synth.effects.class.C");
  EXPECT_EQ(field_of({{"version", 1}, {"corpus", {{"source", "web"}}}}), "corpus.source");
  EXPECT_EQ(field_of(nlohmann::json::array()), "(root)");
}

TEST(Config, JsonRoundTrip) {
  PipelineConfig c;
  c.seed = 99;
  c.topics.model.k = 6;
  c.fit.lasso.lambda_grid = {0.1, 0.01};
  c.thresholds.a = {12, 345};
  c.synth.effects.year = {{2006, 0.4}};
  auto j = config_to_json(c);
  auto back = config_from_json(j);
  EXPECT_EQ(config_to_json(back), j);
}

TEST(Config, SampleFileMatchesDefaults) {
  auto c = load_config(std::string(RMBS_SOURCE_DIR) + "/configs/synthetic_sample.json");
  EXPECT_EQ(config_to_json(c), config_to_json(PipelineConfig{}));
}

TEST(Config, MissingOrMalformedFile) {
  auto p = scratch("bad.json");
  EXPECT_THROW(load_config(p.string()), ConfigError);
  { std::ofstream(p) << "{ not json"; }
  try {
    load_config(p.string());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "--config");
  }
  fs::remove(p);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ConfigError("x", "y")), 2);
  EXPECT_EQ(exit_code(MissingDependency("a")), 3);
  EXPECT_EQ(exit_code(NumericFailure("n")), 4);
  EXPECT_EQ(exit_code(InvalidInput("i")), 1);
}

TEST(Runner, UnknownStage) {
  auto out = scratch("unknown");
  std::ostringstream log, err;
  EXPECT_EQ(run_stage("nope", small_config(out), log, err), 2);
  EXPECT_NE(err.str().find("--stage"), std::string::npos);
}

TEST(Runner, FitWithoutFeaturesNamesTheArtifact) {
  auto out = scratch("missing");
  std::ostringstream log, err;
  EXPECT_EQ(run_stage("fit", small_config(out), log, err), 3);
  EXPECT_NE(err.str().find("features/security.csv"), std::string::npos) << err.str();
  fs::remove_all(out);
}

TEST(Runner, AllStagesWriteArtifactsAndManifest) {
  auto out = scratch("all");
  std::ostringstream log, err;
  ASSERT_EQ(run_stage("all", small_config(out), log, err), 0) << err.str();

  for (const char* f : {"config.json", "synth/ground_truth.json", "extract/report.json", "corpus/corpus.jsonl",
                        "topics/doc_topics.csv", "topics/dtm_slow.json", "labels/labels.csv",
                        "features/comprehensive.csv", "fit/folds.csv", "fit/coefficients_comprehensive.csv",
                        "toxicity/communities.csv", "report/metrics.csv", "report/sankey/Topic1.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;

  auto m = pipeline::detail::read_json((out / "run_manifest.json").string());
  ASSERT_EQ(m["stages"].size(), stage_names().size());
  for (std::size_t i = 0; i < stage_names().size(); ++i) {
    const auto& s = m["stages"][i];
    EXPECT_EQ(s["stage"], stage_names()[i]);
    EXPECT_FALSE(s["outputs"].empty());
    for (const auto& o : s["outputs"]) EXPECT_TRUE(fs::exists(out / o.get<std::string>())) << o;
    for (const auto& in : s["inputs"]) EXPECT_TRUE(fs::exists(out / in.get<std::string>())) << in;
  }

  auto report = pipeline::detail::read_json((out / "extract/report.json").string());
  EXPECT_DOUBLE_EQ(report["precision"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report["recall"].get<double>(), 1.0);

  // exact and rounded coefficient tables agree to three decimals
  auto exact = glm::read_coefficients_csv((out / "fit/coefficients_comprehensive.csv").string());
  auto shown = glm::read_coefficients_csv((out / "report/coefficients_comprehensive.csv").string());
  EXPECT_EQ(exact.variables, shown.variables);
  for (const auto& [k, v] : exact.fe) EXPECT_NEAR(shown.fe.at(k), v, 5e-4 + 1e-12);

  // a single stage rerun replaces its manifest entry and keeps the others
  ASSERT_EQ(run_stage("report", small_config(out), log, err), 0) << err.str();
  m = pipeline::detail::read_json((out / "run_manifest.json").string());
  EXPECT_EQ(m["stages"].size(), stage_names().size());
  fs::remove_all(out);
}

TEST(Runner, RepeatedRunsAreByteIdentical) {
  auto a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream log, err;
  ASSERT_EQ(run_stage("all", small_config(a), log, err), 0) << err.str();
  ASSERT_EQ(run_stage("all", small_config(b), log, err), 0) << err.str();
  auto fa = artifacts(a), fb = artifacts(b);
  ASSERT_EQ(fa.size(), fb.size());
  for (const auto& [k, v] : fa) {
    ASSERT_TRUE(fb.count(k)) << k;
    EXPECT_TRUE(v == fb.at(k)) << k;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Runner, SeedChangesTheData) {
  auto a = scratch("seed_a"), b = scratch("seed_b");
  std::ostringstream log, err;
  auto ca = small_config(a), cb = small_config(b);
  cb.seed = 8;
  ASSERT_EQ(run_stage("synth", ca, log, err), 0);
  ASSERT_EQ(run_stage("synth", cb, log, err), 0);
  EXPECT_NE(slurp(a / "synth/securities.csv"), slurp(b / "synth/securities.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}
