#pragma once

// Static LDA by mean-field variational EM with a fixed symmetric alpha.

#include <vector>

#include "rmbs/topics/model.hpp"

namespace rmbs::topics {

namespace detail {

struct LdaState {
  Eigen::MatrixXd beta;
  std::vector<Eigen::VectorXd> gammas;
  std::vector<double> trace;
};

/// E-step over `docs`; returns the summed bound and fills `suff`.
inline double lda_estep(const std::vector<BowDoc>& docs, const Eigen::MatrixXd& beta, const TopicModelConfig& cfg,
                        std::vector<Eigen::VectorXd>& gammas, Eigen::MatrixXd& suff) {
  Eigen::MatrixXd log_beta = beta.array().log();
  suff.setZero(beta.rows(), beta.cols());
  double bound = 0;
  for (std::size_t d = 0; d < docs.size(); ++d)
    bound += infer_document(docs[d], log_beta, cfg.alpha, gammas[d], cfg.estep_max_iter, cfg.estep_tol, &suff);
  return bound;
}

inline LdaState run_lda(const std::vector<BowDoc>& docs, int V, const TopicModelConfig& cfg) {
  LdaState st;
  st.beta = initial_topics(docs, V, cfg);
  for (const auto& d : docs) st.gammas.push_back(initial_gamma(d, cfg.k, cfg.alpha));
  Eigen::MatrixXd suff;
  for (int it = 0; it < cfg.iterations; ++it) {
    st.trace.push_back(lda_estep(docs, st.beta, cfg, st.gammas, suff));
    st.beta = suff;
    normalize_rows_with_floor(st.beta);
    if (converged(st.trace, cfg.convergence_tol)) break;
  }
  // Final E-step so that doc-topic weights correspond to the returned topics.
  st.trace.push_back(lda_estep(docs, st.beta, cfg, st.gammas, suff));
  return st;
}

inline Eigen::MatrixXd normalized_gammas(const std::vector<Eigen::VectorXd>& gammas, int K) {
  Eigen::MatrixXd theta(static_cast<Eigen::Index>(gammas.size()), K);
  for (std::size_t d = 0; d < gammas.size(); ++d)
    theta.row(static_cast<Eigen::Index>(d)) = gammas[d].transpose() / gammas[d].sum();
  return theta;
}

}  // namespace detail

inline LdaFit fit_lda(const TimeSlicedCorpus& corpus, const TopicModelConfig& config) {
  config.validate();
  if (corpus.empty()) throw EmptyCorpus("fit_lda: corpus is empty");
  if (static_cast<double>(config.k) > static_cast<double>(corpus.total_mass()))
    throw InvalidInput("fit_lda: k = " + std::to_string(config.k) + " exceeds the total token count " +
                       std::to_string(corpus.total_mass()));

  LdaFit fit;
  fit.config = config;
  fit.vocabulary = corpus.vocabulary();
  auto docs = detail::corpus_docs(corpus, &fit.doc_ids, &fit.doc_years);
  auto st = detail::run_lda(docs, static_cast<int>(corpus.vocabulary().size()), config);
  fit.topic_word = std::move(st.beta);
  fit.doc_topic = detail::normalized_gammas(st.gammas, config.k);
  fit.log_likelihood_trace = std::move(st.trace);
  return fit;
}

}  // namespace rmbs::topics
