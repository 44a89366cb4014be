#pragma once

// JSON persistence for fitted topic models.

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rmbs/topics/model.hpp"

namespace rmbs::topics {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto R = static_cast<Eigen::Index>(j.size());
  const auto C = R ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(R, C);
  for (Eigen::Index r = 0; r < R; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != C) throw InvalidInput("model file: ragged matrix");
    for (Eigen::Index c = 0; c < C; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json config_to_json(const TopicModelConfig& c) {
  return {{"k", c.k},
          {"alpha", c.alpha},
          {"chain_var", c.chain_var},
          {"iterations", c.iterations},
          {"seed", c.seed},
          {"convergence_tol", c.convergence_tol},
          {"estep_max_iter", c.estep_max_iter},
          {"estep_tol", c.estep_tol},
          {"mstep_max_iter", c.mstep_max_iter},
          {"init_var", c.init_var},
          {"init", c.init == InitMethod::seeded ? "seeded" : "random"}};
}

inline TopicModelConfig config_from_json(const nlohmann::json& j) {
  TopicModelConfig c;
  c.k = j.at("k").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.chain_var = j.at("chain_var").get<double>();
  c.iterations = j.at("iterations").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.convergence_tol = j.value("convergence_tol", c.convergence_tol);
  c.estep_max_iter = j.value("estep_max_iter", c.estep_max_iter);
  c.estep_tol = j.value("estep_tol", c.estep_tol);
  c.mstep_max_iter = j.value("mstep_max_iter", c.mstep_max_iter);
  c.init_var = j.value("init_var", c.init_var);
  c.init = j.value("init", std::string("seeded")) == "random" ? InitMethod::random : InitMethod::seeded;
  return c;
}

inline nlohmann::json vocab_to_json(const Vocabulary& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : v.pairs()) a.push_back({p.role, p.fi});
  return a;
}

inline Vocabulary vocab_from_json(const nlohmann::json& j) {
  std::vector<RolePair> pairs;
  for (const auto& p : j) pairs.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
  return Vocabulary(std::move(pairs));
}

inline void check_header(const nlohmann::json& j, const char* kind) {
  if (j.value("format_version", 0) != kModelFormatVersion)
    throw InvalidInput("model file: unsupported format_version");
  if (j.value("kind", std::string()) != kind) throw InvalidInput(std::string("model file: expected kind ") + kind);
}

}  // namespace detail

inline nlohmann::json to_json(const LdaFit& f) {
  return {{"format_version", kModelFormatVersion},
          {"kind", "lda"},
          {"config", detail::config_to_json(f.config)},
          {"vocabulary", detail::vocab_to_json(f.vocabulary)},
          {"topic_word", detail::matrix_to_json(f.topic_word)},
          {"doc_topic", detail::matrix_to_json(f.doc_topic)},
          {"doc_ids", f.doc_ids},
          {"doc_years", f.doc_years},
          {"log_likelihood_trace", f.log_likelihood_trace}};
}

inline nlohmann::json to_json(const DtmFit& f) {
  nlohmann::json betas = nlohmann::json::array();
  for (const auto& b : f.per_slice_topic_word) betas.push_back(detail::matrix_to_json(b));
  return {{"format_version", kModelFormatVersion},
          {"kind", "dtm"},
          {"config", detail::config_to_json(f.config)},
          {"vocabulary", detail::vocab_to_json(f.vocabulary)},
          {"years", f.years},
          {"per_slice_topic_word", betas},
          {"doc_topic", detail::matrix_to_json(f.doc_topic)},
          {"doc_ids", f.doc_ids},
          {"doc_years", f.doc_years},
          {"log_likelihood_trace", f.log_likelihood_trace}};
}

inline LdaFit lda_from_json(const nlohmann::json& j) {
  detail::check_header(j, "lda");
  LdaFit f;
  f.config = detail::config_from_json(j.at("config"));
  f.vocabulary = detail::vocab_from_json(j.at("vocabulary"));
  f.topic_word = detail::matrix_from_json(j.at("topic_word"));
  f.doc_topic = detail::matrix_from_json(j.at("doc_topic"));
  f.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  f.doc_years = j.at("doc_years").get<std::vector<int>>();
  f.log_likelihood_trace = j.at("log_likelihood_trace").get<std::vector<double>>();
  return f;
}

inline DtmFit dtm_from_json(const nlohmann::json& j) {
  detail::check_header(j, "dtm");
  DtmFit f;
  f.config = detail::config_from_json(j.at("config"));
  f.vocabulary = detail::vocab_from_json(j.at("vocabulary"));
  f.years = j.at("years").get<std::vector<int>>();
  for (const auto& b : j.at("per_slice_topic_word")) f.per_slice_topic_word.push_back(detail::matrix_from_json(b));
  f.doc_topic = detail::matrix_from_json(j.at("doc_topic"));
  f.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  f.doc_years = j.at("doc_years").get<std::vector<int>>();
  f.log_likelihood_trace = j.at("log_likelihood_trace").get<std::vector<double>>();
  return f;
}

template <typename Fit>
void save_model(const std::string& path, const Fit& fit) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << to_json(fit).dump() << '\n';
}

inline nlohmann::json load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingDependency(path);
  return nlohmann::json::parse(in);
}

}  // namespace rmbs::topics
