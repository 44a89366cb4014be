#pragma once

// Stage runner: each stage reads declared inputs under the output directory
// (or the input bundle) and writes its artifacts plus a run manifest entry.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmbs/corpus.hpp"
#include "rmbs/extraction.hpp"
#include "rmbs/features.hpp"
#include "rmbs/glm/cv.hpp"
#include "rmbs/glm/metrics.hpp"
#include "rmbs/performance.hpp"
#include "rmbs/pipeline/config.hpp"
#include "rmbs/synth.hpp"
#include "rmbs/topics/analysis.hpp"
#include "rmbs/topics/dtm.hpp"
#include "rmbs/topics/io.hpp"
#include "rmbs/topics/lda.hpp"
#include "rmbs/toxicity.hpp"

namespace rmbs::pipeline {

namespace fs = std::filesystem;

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> s = {"synth", "extract", "corpus",   "topics", "label",
                                             "features", "fit",   "toxicity", "report"};
  return s;
}

inline const std::vector<std::string>& tier_names() {
  static const std::vector<std::string> t = {"security", "prospectus", "comprehensive"};
  return t;
}

/// 0 success, 2 configuration, 3 missing dependency, 4 numeric failure, 1 otherwise.
inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const MissingDependency*>(&e)) return 3;
  if (dynamic_cast<const NumericFailure*>(&e)) return 4;
  return 1;
}

struct StageRecord {
  std::string stage;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double duration_s = 0;
};

namespace detail {

struct DocTopicRow {
  std::string doc_id;
  int year = 0;
  bool in_corpus = false;
  std::vector<double> weights;
};

inline void write_doc_topics(std::ostream& out, const std::vector<DocTopicRow>& rows, int k, double strong) {
  std::vector<std::string> h = {"doc_id", "year", "in_corpus", "dominant", "weight", "strong"};
  for (int j = 0; j < k; ++j) h.push_back("w_" + topic_column(j));
  csv::write_row(out, h);
  for (const auto& r : rows) {
    Eigen::Map<const Eigen::VectorXd> w(r.weights.data(), static_cast<Eigen::Index>(r.weights.size()));
    auto d = topics::dominant_topic(w, strong);
    std::vector<std::string> cells = {r.doc_id,        std::to_string(r.year), r.in_corpus ? "1" : "0",
                                      topic_column(d.topic), csv::exact(d.weight), d.strong ? "1" : "0"};
    for (double v : r.weights) cells.push_back(csv::exact(v));
    csv::write_row(out, cells);
  }
}

inline std::vector<DocTopicRow> read_doc_topics(const std::string& path) {
  csv::Table t(csv::read_file(path), path);
  auto id = t.column("doc_id"), year = t.column("year"), in = t.column("in_corpus");
  std::vector<std::size_t> wcols;
  for (std::size_t j = 0; j < t.header().size(); ++j)
    if (t.header()[j].rfind("w_", 0) == 0) wcols.push_back(j);
  std::vector<DocTopicRow> out;
  for (std::size_t r = 0; r < t.rows().size(); ++r) {
    DocTopicRow row{t.cell(r, id), static_cast<int>(csv::parse_int(t.cell(r, year), "year")), csv::parse_flag(t.cell(r, in), "in_corpus"), {}};
    for (auto j : wcols) row.weights.push_back(csv::parse_double(t.cell(r, j), t.header()[j]));
    out.push_back(std::move(row));
  }
  return out;
}

inline int dominant_of(const std::vector<double>& w) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(w.size()); ++j)
    if (w[static_cast<std::size_t>(j)] > w[static_cast<std::size_t>(best)]) best = j;
  return best;
}

inline nlohmann::json fit_to_json(const glm::LassoFit& f) {
  nlohmann::json coefs = nlohmann::json::object();
  for (const auto& [k, v] : f.coefficients) coefs[k] = v;
  return {{"intercept", f.intercept}, {"lambda", f.lambda},   {"converged", f.converged},
          {"n_iter", f.n_iter},       {"columns", f.columns}, {"coefficients", coefs}};
}

inline glm::LassoFit fit_from_json(const nlohmann::json& j) {
  glm::LassoFit f;
  f.intercept = j.at("intercept").get<double>();
  f.lambda = j.at("lambda").get<double>();
  f.converged = j.at("converged").get<bool>();
  f.n_iter = j.at("n_iter").get<int>();
  f.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& [k, v] : j.at("coefficients").items()) f.coefficients[k] = v.get<double>();
  return f;
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingDependency(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

}  // namespace detail

class Runner {
 public:
  explicit Runner(PipelineConfig cfg, std::ostream* log = nullptr) : cfg_(std::move(cfg)), log_(log) {
    cfg_.finalize();
    out_ = cfg_.out;
    bundle_ = cfg_.bundle_dir();
    registry_ = cfg_.flag_registry.empty() ? default_flag_registry() : FlagRegistry::load(cfg_.flag_registry);
  }

  const PipelineConfig& config() const { return cfg_; }

  /// Runs one stage, or every stage in order for "all". Writes the effective
  /// config and updates the run manifest.
  std::vector<StageRecord> run(const std::string& stage) {
    std::vector<std::string> todo;
    if (stage == "all") {
      todo = stage_names();
    } else if (std::find(stage_names().begin(), stage_names().end(), stage) != stage_names().end()) {
      todo = {stage};
    } else {
      throw ConfigError("--stage", "unknown stage '" + stage + "'");
    }
    fs::create_directories(out_);
    {
      std::ofstream c(out_ / "config.json", std::ios::binary);
      c << config_to_json(cfg_).dump(2) << "\n";
    }
    std::vector<StageRecord> done;
    for (const auto& s : todo) {
      cur_ = StageRecord{s, {}, {}, 0};
      auto t0 = std::chrono::steady_clock::now();
      if (log_) *log_ << "[" << s << "] start\n";
      dispatch(s);
      cur_.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (log_) *log_ << "[" << s << "] done in " << cur_.duration_s << " s, " << cur_.outputs.size() << " files\n";
      done.push_back(cur_);
      update_manifest(cur_);
    }
    return done;
  }

 private:
  PipelineConfig cfg_;
  std::ostream* log_ = nullptr;
  fs::path out_, bundle_;
  FlagRegistry registry_ = default_flag_registry();
  StageRecord cur_;

  std::string rel(const fs::path& p) const {
    auto r = p.lexically_relative(out_);
    return r.empty() || r.native().rfind("..", 0) == 0 ? p.generic_string() : r.generic_string();
  }

  std::string need(const fs::path& p) {
    if (!fs::exists(p)) throw MissingDependency(p.generic_string());
    cur_.inputs.push_back(rel(p));
    return p.string();
  }

  std::ofstream write(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream o(p, std::ios::binary);
    if (!o) throw InvalidInput("cannot write " + p.generic_string());
    cur_.outputs.push_back(rel(p));
    return o;
  }

  void dispatch(const std::string& s) {
    if (s == "synth") return stage_synth();
    if (s == "extract") return stage_extract();
    if (s == "corpus") return stage_corpus();
    if (s == "topics") return stage_topics();
    if (s == "label") return stage_label();
    if (s == "features") return stage_features();
    if (s == "fit") return stage_fit();
    if (s == "toxicity") return stage_toxicity();
    if (s == "report") return stage_report();
  }

  void update_manifest(const StageRecord& r) {
    fs::path p = out_ / "run_manifest.json";
    nlohmann::json m;
    if (fs::exists(p)) {
      try {
        m = detail::read_json(p.string());
      } catch (const std::exception&) {
        m = nlohmann::json::object();
      }
    }
    std::map<std::string, nlohmann::json> stages;
    if (m.contains("stages"))
      for (const auto& s : m["stages"]) stages[s.at("stage").get<std::string>()] = s;
    stages[r.stage] = {{"stage", r.stage}, {"inputs", r.inputs}, {"outputs", r.outputs}, {"duration_s", r.duration_s}};
    nlohmann::json list = nlohmann::json::array();
    for (const auto& s : stage_names())
      if (stages.count(s)) list.push_back(stages[s]);
    m = {{"format_version", 1}, {"seed", cfg_.seed}, {"config", "config.json"}, {"stages", list}};
    std::ofstream o(p, std::ios::binary);
    o << m.dump(2) << "\n";
  }

  // -------------------------------------------------------------------------

  void stage_synth() {
    auto data = synth::generate(cfg_.synth, registry_);
    for (const auto& f : synth::write_bundle(bundle_, data, cfg_.seed)) cur_.outputs.push_back(rel(f));
  }

  std::string records_path() {
    return cfg_.corpus.source == "extracted" ? need(out_ / "extract" / "records.jsonl") : need(bundle_ / "records.jsonl");
  }

  void stage_extract() {
    auto dict = std::make_shared<RootSuffixDictionary>(
        RootSuffixDictionary::load(need(bundle_ / "roots.csv"), need(bundle_ / "suffixes.txt")));
    DictionaryExtractor primary(dict, default_role_keywords());
    CapitalizedPhraseExtractor secondary(dict, default_role_keywords());
    std::ifstream index(need(bundle_ / "extraction_truth.jsonl"));
    need(bundle_ / "docs");

    std::vector<DocumentRecord> records;
    std::ostringstream raw;
    std::size_t tp = 0, fp = 0, fn = 0, docs = 0, empty = 0, dropped = 0, unresolved = 0;
    std::string line;
    while (std::getline(index, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      std::string id = j.at("id").get<std::string>();
      int year = j.at("year").get<int>();
      fs::path doc = bundle_ / "docs" / (id + ".txt");
      std::ifstream in(doc);
      if (!in) throw MissingDependency(doc.generic_string());
      std::string text((std::istreambuf_iterator<char>(in)), {});
      auto ex = extract_document(id, text, primary, secondary);
      ++docs;
      dropped += ex.diagnostics.dropped_mentions;
      unresolved += ex.diagnostics.unresolved_names.size();
      raw << extraction_to_json(ex).dump() << "\n";
      std::set<RolePair> got, want;
      for (const auto& p : ex.pairs) got.insert(p.key());
      if (j.contains("pairs"))
        for (const auto& p : j.at("pairs")) want.insert({p.at("role").get<std::string>(), p.at("fi").get<std::string>()});
      for (const auto& p : got) (want.count(p) ? tp : fp) += 1;
      for (const auto& p : want) fn += got.count(p) ? 0 : 1;
      auto rec = to_document_record(ex, year);
      if (rec.pairs.empty()) {
        ++empty;
        continue;
      }
      records.push_back(std::move(rec));
    }
    { auto o = write(out_ / "extract" / "extractions.jsonl"); o << raw.str(); }
    { auto o = write(out_ / "extract" / "records.jsonl"); write_records(o, records); }
    auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 1.0; };
    nlohmann::json rep = {{"documents", docs},           {"documents_without_pairs", empty},
                          {"true_positives", tp},        {"false_positives", fp},
                          {"false_negatives", fn},       {"precision", ratio(tp, tp + fp)},
                          {"recall", ratio(tp, tp + fn)}, {"dropped_mentions", dropped},
                          {"unresolved_names", unresolved}};
    auto o = write(out_ / "extract" / "report.json");
    o << rep.dump(2) << "\n";
  }

  void stage_corpus() {
    auto records = read_records_file(records_path());
    YearRange years{cfg_.features.first_year, cfg_.features.last_year};
    auto full = build_corpus(records, years);
    auto kept = filter_corpus(full, cfg_.corpus.min_fi_docs, cfg_.corpus.min_pairs);
    auto weighted = weight_tokens(kept, cfg_.corpus.weighted_roles, cfg_.corpus.weight_multiplier);
    { auto o = write(out_ / "corpus" / "corpus.jsonl"); write_corpus(o, weighted); }
    { auto o = write(out_ / "corpus" / "vocabulary.csv"); write_vocabulary_csv(o, weighted); }
    nlohmann::json slices = nlohmann::json::object();
    for (const auto& s : weighted.slices()) slices[std::to_string(s.year)] = s.docs.size();
    nlohmann::json summary = {{"documents_in", full.num_docs()},
                              {"documents_kept", weighted.num_docs()},
                              {"vocabulary_in", full.vocabulary().size()},
                              {"vocabulary_kept", weighted.vocabulary().size()},
                              {"token_mass", weighted.total_mass()},
                              {"slices", slices}};
    auto o = write(out_ / "corpus" / "summary.json");
    o << summary.dump(2) << "\n";
  }

  void stage_topics() {
    auto corpus = build_corpus(read_records_file(need(out_ / "corpus" / "corpus.jsonl")),
                               {cfg_.features.first_year, cfg_.features.last_year});
    auto all_docs = read_records_file(records_path());
    auto mc = cfg_.topics.model;
    auto lda = topics::fit_lda(corpus, mc);
    mc.chain_var = cfg_.topics.chain_var_slow;
    auto slow = topics::fit_dtm(corpus, mc);
    mc.chain_var = cfg_.topics.chain_var_fast;
    auto fast = topics::fit_dtm(corpus, mc);
    for (auto [name, j] : {std::pair<const char*, nlohmann::json>{"lda.json", topics::to_json(lda)},
                           {"dtm_slow.json", topics::to_json(slow)},
                           {"dtm_fast.json", topics::to_json(fast)}}) {
      auto o = write(out_ / "topics" / name);
      o << j.dump() << "\n";
    }

    const int k = slow.k();
    {
      auto o = write(out_ / "topics" / "dynamics.csv");
      csv::write_row(o, {"topic", "dynamics", "best_alignment", "drift"});
      for (const auto& d : topics::classify_dynamics(fast, lda, slow, cfg_.topics.align_threshold,
                                                     cfg_.topics.drift_threshold))
        csv::write_row(o, {topic_column(d.topic), to_string(d.label), csv::exact(d.best_alignment), csv::exact(d.drift)});
    }
    {
      auto o = write(out_ / "topics" / "top_terms.csv");
      csv::write_row(o, {"topic", "year", "rank", "role", "fi", "probability"});
      for (int t = 0; t < k; ++t)
        for (int s = 0; s < slow.num_slices(); ++s) {
          auto terms = topics::top_terms(slow, t, s, cfg_.toxicity_top_n);
          for (std::size_t r = 0; r < terms.size(); ++r)
            csv::write_row(o, {topic_column(t), std::to_string(slow.years[static_cast<std::size_t>(s)]), std::to_string(r + 1),
                               terms[r].pair.role, terms[r].pair.fi, csv::exact(terms[r].probability)});
        }
    }

    // every input document: fitted weights when in the corpus, inferred otherwise
    std::map<std::string, Eigen::Index> fitted;
    for (std::size_t d = 0; d < slow.doc_ids.size(); ++d) fitted[slow.doc_ids[d]] = static_cast<Eigen::Index>(d);
    std::vector<detail::DocTopicRow> rows;
    std::vector<std::string> unassigned;
    for (const auto& r : all_docs) {
      detail::DocTopicRow row{r.id, r.year, false, {}};
      auto it = fitted.find(r.id);
      if (it != fitted.end()) {
        row.in_corpus = true;
        for (int j = 0; j < k; ++j) row.weights.push_back(slow.doc_topic(it->second, j));
      } else {
        try {
          auto dt = topics::doc_topics(slow, r.pairs, r.year);
          row.weights.assign(dt.weights.data(), dt.weights.data() + dt.weights.size());
        } catch (const InvalidInput&) {
          unassigned.push_back(r.id);
          continue;
        }
      }
      rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
    { auto o = write(out_ / "topics" / "doc_topics.csv"); detail::write_doc_topics(o, rows, k, cfg_.topics.strong_threshold); }
    std::size_t strong = 0;
    for (const auto& r : rows) {
      Eigen::Map<const Eigen::VectorXd> w(r.weights.data(), k);
      strong += topics::dominant_topic(w, cfg_.topics.strong_threshold).strong;
    }
    nlohmann::json summary = {{"k", k},
                              {"documents", rows.size()},
                              {"strongly_assigned", strong},
                              {"unassigned", unassigned},
                              {"lda_bound", lda.log_likelihood_trace.back()},
                              {"dtm_slow_bound", slow.log_likelihood_trace.back()},
                              {"dtm_fast_bound", fast.log_likelihood_trace.back()}};
    auto o = write(out_ / "topics" / "summary.json");
    o << summary.dump(2) << "\n";
  }

  void stage_label() {
    auto payments = read_payments(need(bundle_ / "payments.csv"));
    std::vector<LabeledSecurity> rows;
    for (const auto& p : payments) rows.push_back({p.security_id, p.cls, 0, label_security(p.cls, p.summary, cfg_.thresholds)});
    auto o = write(out_ / "labels" / "labels.csv");
    write_labels(o, rows);
  }

  void stage_features() {
    auto securities = read_securities(need(bundle_ / "securities.csv"));
    auto doc_topics = detail::read_doc_topics(need(out_ / "topics" / "doc_topics.csv"));
    std::map<std::string, Fragment> topic_frags;
    for (const auto& r : doc_topics)
      topic_frags[r.doc_id] = attach_topic_indicator(r.weights, static_cast<int>(r.weights.size()));
    std::vector<SecurityRecord> kept;
    std::vector<std::string> excluded;
    for (auto& s : securities) {
      if (topic_frags.count(s.prospectus_id)) kept.push_back(std::move(s));
      else excluded.push_back(s.id);
    }
    std::vector<std::string> zero;
    auto pfrags = prospectus_fragments(kept, &zero);
    for (std::size_t t = 0; t < 3; ++t) {
      auto tier = static_cast<Tier>(t);
      auto m = assemble_matrix(kept, registry_, pfrags, topic_frags, tier, cfg_.features);
      { auto o = write(out_ / "features" / (tier_names()[t] + ".csv")); write_matrix_csv(o, m); }
      auto man = matrix_manifest(m, tier, cfg_.features);
      man["excluded_securities"] = excluded;
      man["zero_principal_prospectuses"] = zero;
      auto o = write(out_ / "features" / (tier_names()[t] + ".json"));
      o << man.dump(2) << "\n";
    }
  }

  void stage_fit() {
    std::map<std::string, FeatureMatrix> mats;
    for (const auto& t : tier_names()) mats[t] = read_matrix_csv(need(out_ / "features" / (t + ".csv")), registry_);
    auto outcomes = read_outcomes(need(out_ / "labels" / "labels.csv"));
    std::map<std::string, std::pair<bool, bool>> by_id;
    for (const auto& o : outcomes) by_id[o.security_id] = {o.fe, o.fne};

    const auto& first = mats.at(tier_names().front());
    auto folds = glm::assign_folds(first.groups, cfg_.fit.lasso.n_folds, cfg_.fit.lasso.seed);
    {
      auto o = write(out_ / "fit" / "folds.csv");
      csv::write_row(o, {"prospectus_id", "fold"});
      for (const auto& [g, f] : folds) csv::write_row(o, {g, std::to_string(f)});
    }
    for (const auto& t : tier_names()) {
      const auto& m = mats.at(t);
      if (m.row_ids != first.row_ids) throw InvalidInput("fit: feature tiers cover different securities");
      Eigen::VectorXd fe(static_cast<Eigen::Index>(m.rows())), fne(static_cast<Eigen::Index>(m.rows()));
      for (std::size_t i = 0; i < m.rows(); ++i) {
        auto it = by_id.find(m.row_ids[i]);
        if (it == by_id.end()) throw InvalidInput("fit: no label for security " + m.row_ids[i]);
        fe[static_cast<Eigen::Index>(i)] = it->second.first;
        fne[static_cast<Eigen::Index>(i)] = it->second.second;
      }
      auto cols = m.column_names();
      std::map<std::string, glm::CvResult> res;
      for (auto [name, y] : {std::pair<std::string, const Eigen::VectorXd*>{"FE", &fe}, {"FNE", &fne}}) {
        auto cv = glm::cv_select(m.values, *y, m.groups, cols, cfg_.fit.lasso, &folds);
        auto j = detail::fit_to_json(cv.fit);
        j["tier"] = t;
        j["outcome"] = name;
        j["cv"] = {{"lambdas", cv.lambdas}, {"loss", cv.mean_loss}, {"chosen", cv.chosen}};
        auto o = write(out_ / "fit" / (t + "_" + name + ".json"));
        o << j.dump(1) << "\n";
        res.emplace(name, std::move(cv));
      }
      {
        auto o = write(out_ / "fit" / ("coefficients_" + t + ".csv"));
        glm::write_coefficients_csv(o, glm::coefficient_table(res.at("FE").fit, res.at("FNE").fit), true);
      }
      auto o = write(out_ / "fit" / ("oof_" + t + ".csv"));
      csv::write_row(o, {"security_id", "prospectus_id", "fold", "fe", "fne", "p_fe", "p_fne"});
      for (std::size_t i = 0; i < m.rows(); ++i)
        csv::write_row(o, {m.row_ids[i], m.groups[i], std::to_string(folds.at(m.groups[i])),
                           fe[static_cast<Eigen::Index>(i)] ? "1" : "0", fne[static_cast<Eigen::Index>(i)] ? "1" : "0",
                           csv::exact(res.at("FE").oof_prob[i]), csv::exact(res.at("FNE").oof_prob[i])});
    }
  }

  void stage_toxicity() {
    auto evidence = read_evidence(need(bundle_ / "evidence.csv"));
    auto lda = topics::lda_from_json(detail::read_json(need(out_ / "topics" / "lda.json")));
    auto slow = topics::dtm_from_json(detail::read_json(need(out_ / "topics" / "dtm_slow.json")));
    auto fast = topics::dtm_from_json(detail::read_json(need(out_ / "topics" / "dtm_fast.json")));
    auto doc_topics = detail::read_doc_topics(need(out_ / "topics" / "doc_topics.csv"));
    auto fe = detail::fit_from_json(detail::read_json(need(out_ / "fit" / "comprehensive_FE.json")));
    auto fne = detail::fit_from_json(detail::read_json(need(out_ / "fit" / "comprehensive_FNE.json")));

    auto labels = label_institutions(evidence);
    {
      auto o = write(out_ / "toxicity" / "institutions.csv");
      csv::write_row(o, {"fi_id", "label"});
      for (const auto& [fi, l] : labels) csv::write_row(o, {fi, to_string(l)});
    }
    auto dyn = topics::classify_dynamics(fast, lda, slow, cfg_.topics.align_threshold, cfg_.topics.drift_threshold);
    std::vector<std::size_t> n_docs(static_cast<std::size_t>(slow.k()), 0);
    std::vector<std::set<int>> years(static_cast<std::size_t>(slow.k()));
    for (const auto& r : doc_topics) {
      auto d = static_cast<std::size_t>(detail::dominant_of(r.weights));
      ++n_docs[d];
      years[d].insert(r.year);
    }
    std::vector<CommunityLabel> communities;
    std::vector<CommunitySummary> summaries;
    for (int t = 0; t < slow.k(); ++t) {
      auto prom = prominent_institutions(slow, t, cfg_.toxicity_top_n);
      auto label = label_community(t, prom, labels, n_docs[static_cast<std::size_t>(t)], cfg_.toxicity);
      communities.push_back(label);
      summaries.push_back({label, to_string(dyn[static_cast<std::size_t>(t)].label), n_docs[static_cast<std::size_t>(t)],
                           years[static_cast<std::size_t>(t)], std::move(prom)});
    }
    auto o = write(out_ / "toxicity" / "communities.csv");
    write_community_report(o, summaries, compare_signs(communities, fe, fne));
  }

  void stage_report() {
    auto securities = read_securities(need(bundle_ / "securities.csv"));
    auto outcomes = read_outcomes(need(out_ / "labels" / "labels.csv"));
    auto doc_topics = detail::read_doc_topics(need(out_ / "topics" / "doc_topics.csv"));
    auto slow = topics::dtm_from_json(detail::read_json(need(out_ / "topics" / "dtm_slow.json")));
    std::string communities = need(out_ / "toxicity" / "communities.csv");

    std::map<std::string, const SecurityRecord*> sec;
    for (const auto& s : securities) sec[s.id] = &s;

    // classification metrics from held-out predictions
    std::vector<glm::MetricsRow> metric_rows;
    for (const auto& t : tier_names()) {
      csv::Table oof(csv::read_file(need(out_ / "fit" / ("oof_" + t + ".csv"))));
      auto id = oof.column("security_id");
      for (const char* outcome : {"FE", "FNE"}) {
        auto yc = oof.column(outcome == std::string("FE") ? "fe" : "fne");
        auto pc = oof.column(outcome == std::string("FE") ? "p_fe" : "p_fne");
        std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> subsets;
        for (std::size_t r = 0; r < oof.rows().size(); ++r) {
          int y = csv::parse_flag(oof.cell(r, yc), "label") ? 1 : 0;
          int p = csv::parse_double(oof.cell(r, pc), "probability") >= cfg_.fit.threshold ? 1 : 0;
          auto it = sec.find(oof.cell(r, id));
          if (it == sec.end()) throw InvalidInput("report: unknown security " + oof.cell(r, id));
          for (const std::string& s : {std::string("all"), std::string(to_string(it->second->cls))}) {
            subsets[s].first.push_back(y);
            subsets[s].second.push_back(p);
          }
        }
        for (const std::string s : {"all", "A", "M", "B"}) {
          auto it = subsets.find(s);
          if (it == subsets.end()) continue;
          metric_rows.push_back({t, outcome, s, it->second.first.size(), glm::metrics(it->second.first, it->second.second)});
        }
      }
      auto table = glm::read_coefficients_csv(need(out_ / "fit" / ("coefficients_" + t + ".csv")));
      { auto o = write(out_ / "report" / ("coefficients_" + t + ".csv")); glm::write_coefficients_csv(o, table, false); }
      // normalized by the largest retained magnitude, intercept excluded
      auto norm = [](const std::map<std::string, double>& m) {
        double mx = 0;
        for (const auto& [k, v] : m)
          if (k != "(Intercept)") mx = std::max(mx, std::abs(v));
        std::map<std::string, double> out;
        if (mx > 0)
          for (const auto& [k, v] : m)
            if (k != "(Intercept)") out[k] = v / mx;
        return out;
      };
      glm::CoefficientTable nt{{}, norm(table.fe), norm(table.fne)};
      for (const auto& v : table.variables)
        if (v != "(Intercept)") nt.variables.push_back(v);
      auto o = write(out_ / "report" / ("normalized_" + t + ".csv"));
      glm::write_coefficients_csv(o, nt, false);
    }
    { auto o = write(out_ / "report" / "metrics.csv"); glm::write_metrics_csv(o, metric_rows); }

    std::vector<LabeledSecurity> labeled;
    for (const auto& oc : outcomes) {
      auto it = sec.find(oc.security_id);
      if (it == sec.end()) throw InvalidInput("report: label for unknown security " + oc.security_id);
      Performance p = oc.fe ? Performance::FE : oc.fne ? Performance::NME : Performance::ME;
      labeled.push_back({oc.security_id, it->second->cls, it->second->year, make_label(p)});
    }
    for (auto keys : {std::vector<std::string>{"year"}, {"class"}, {"year", "class"}}) {
      std::string name = "rates";
      for (const auto& k : keys) name += "_" + k;
      auto o = write(out_ / "report" / (name + ".csv"));
      write_rates(o, summarize_rates(labeled, keys), keys);
    }

    std::map<std::string, int> dominant;
    for (const auto& r : doc_topics) dominant[r.doc_id] = detail::dominant_of(r.weights);
    std::vector<int> dom;
    std::vector<PerformanceLabel> labs;
    std::vector<bool> ssup;
    for (const auto& l : labeled) {
      const auto* s = sec.at(l.security_id);
      auto it = dominant.find(s->prospectus_id);
      if (it == dominant.end()) continue;
      dom.push_back(it->second);
      labs.push_back(l.label);
      ssup.push_back(s->flags.count("SSUP") > 0);
    }
    { auto o = write(out_ / "report" / "topic_performance.csv"); write_topic_performance(o, topic_performance(dom, labs, ssup)); }

    for (int t = 0; t < slow.k(); ++t) {
      auto o = write(out_ / "report" / "sankey" / (topic_column(t) + ".csv"));
      topics::write_sankey_csv(o, topics::export_sankey(slow, t, cfg_.topics.sankey_terms));
    }
    std::ifstream in(communities, std::ios::binary);
    auto o = write(out_ / "report" / "communities.csv");
    o << in.rdbuf();
  }
};

/// Runs `stage` and maps failures to exit codes, reporting them on `err`.
inline int run_stage(const std::string& stage, const PipelineConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    Runner r(cfg, &log);
    r.run(stage);
    return 0;
  } catch (const MissingDependency& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  }
}

}  // namespace rmbs::pipeline
