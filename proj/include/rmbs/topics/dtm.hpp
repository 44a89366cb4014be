#pragma once

// Dynamic topic model over annual slices. Each topic's natural parameters
// follow a Gaussian random walk across slices,
//   eta[t,k] | eta[t-1,k] ~ N(eta[t-1,k], chain_var * I),
// with beta[t,k] = softmax(eta[t,k]). Inference is variational EM: the E-step
// is the LDA mean-field update against the slice's topics; the M-step is a
// MAP update of eta. Each M-step iteration builds per-word Gaussian
// pseudo-observations from a second-order expansion of the multinomial
// likelihood and runs a forward-filter/backward-smoother across slices; a
// backtracking line search keeps the objective non-decreasing.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rmbs/topics/lda.hpp"
#include "rmbs/topics/model.hpp"

namespace rmbs::topics {

namespace detail {

inline double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  double mx = x.maxCoeff();
  return mx + std::log((x.array() - mx).exp().sum());
}

/// Posterior means of a scalar random walk x[t] = x[t-1] + N(0, q),
/// x[0] ~ N(0, p0), observed as y[t] ~ N(x[t], r[t]).
inline void smooth_random_walk(const std::vector<double>& y, const std::vector<double>& r, double q, double p0,
                               std::vector<double>& out) {
  const std::size_t T = y.size();
  std::vector<double> m(T), P(T), mp(T), Pp(T);
  for (std::size_t t = 0; t < T; ++t) {
    mp[t] = t == 0 ? 0.0 : m[t - 1];
    Pp[t] = t == 0 ? p0 : P[t - 1] + q;
    double gain = Pp[t] / (Pp[t] + r[t]);
    m[t] = mp[t] + gain * (y[t] - mp[t]);
    P[t] = (1 - gain) * Pp[t];
  }
  out.assign(T, 0.0);
  out[T - 1] = m[T - 1];
  for (std::size_t t = T - 1; t-- > 0;) {
    double J = P[t] / Pp[t + 1];
    out[t] = m[t] + J * (out[t + 1] - mp[t + 1]);
  }
}

/// eta is indexed [t](k, w).
struct DtmParams {
  std::vector<Eigen::MatrixXd> eta;
};

inline double topic_log_prior(const DtmParams& p, int k, double chain_var, double init_var) {
  double lp = -p.eta[0].row(k).squaredNorm() / (2 * init_var);
  for (std::size_t t = 1; t < p.eta.size(); ++t)
    lp -= (p.eta[t].row(k) - p.eta[t - 1].row(k)).squaredNorm() / (2 * chain_var);
  return lp;
}

/// Expected complete-data log likelihood of topic k plus its prior.
inline double topic_objective(const std::vector<Eigen::RowVectorXd>& eta_k,
                              const std::vector<Eigen::RowVectorXd>& counts_k, double chain_var, double init_var) {
  double f = -eta_k[0].squaredNorm() / (2 * init_var);
  for (std::size_t t = 0; t < eta_k.size(); ++t) {
    double n = counts_k[t].sum();
    f += counts_k[t].dot(eta_k[t]) - (n > 0 ? n * log_sum_exp(eta_k[t]) : 0.0);
    if (t > 0) f -= (eta_k[t] - eta_k[t - 1]).squaredNorm() / (2 * chain_var);
  }
  return f;
}

inline void mstep_topic(DtmParams& p, int k, const std::vector<Eigen::MatrixXd>& suff, const TopicModelConfig& cfg) {
  const std::size_t T = p.eta.size();
  const Eigen::Index V = p.eta[0].cols();
  std::vector<Eigen::RowVectorXd> eta(T), counts(T);
  for (std::size_t t = 0; t < T; ++t) {
    eta[t] = p.eta[t].row(k);
    counts[t] = suff[t].row(k);
  }
  double f = topic_objective(eta, counts, cfg.chain_var, cfg.init_var);

  std::vector<double> y(T), r(T), smoothed;
  std::vector<Eigen::RowVectorXd> step(T, Eigen::RowVectorXd(V)), trial(T);
  for (int it = 0; it < cfg.mstep_max_iter; ++it) {
    std::vector<Eigen::RowVectorXd> prob(T);
    std::vector<double> total(T);
    for (std::size_t t = 0; t < T; ++t) {
      total[t] = counts[t].sum();
      prob[t] = (eta[t].array() - log_sum_exp(eta[t])).exp();
    }
    for (Eigen::Index w = 0; w < V; ++w) {
      for (std::size_t t = 0; t < T; ++t) {
        // Curvature max(N p, n): exact near the optimum (N p = n), and caps the
        // step at about one nat when the current probability is far off.
        double expected = total[t] * prob[t][w];
        double h = std::max({expected, counts[t][w], 1e-10});
        double g = counts[t][w] - expected;
        y[t] = eta[t][w] + g / h;
        r[t] = 1.0 / h;
      }
      smooth_random_walk(y, r, cfg.chain_var, cfg.init_var, smoothed);
      for (std::size_t t = 0; t < T; ++t) step[t][w] = smoothed[t] - eta[t][w];
    }

    double s = 1.0, f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, s *= 0.5) {
      for (std::size_t t = 0; t < T; ++t) trial[t] = eta[t] + s * step[t];
      f_new = topic_objective(trial, counts, cfg.chain_var, cfg.init_var);
      if (f_new >= f) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    eta.swap(trial);
    double gain = f_new - f;
    f = f_new;
    if (gain <= 1e-10 * std::max(1.0, std::abs(f))) break;
  }
  for (std::size_t t = 0; t < T; ++t) p.eta[t].row(k) = eta[t];
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& eta) {
  Eigen::MatrixXd beta(eta.rows(), eta.cols());
  for (Eigen::Index k = 0; k < eta.rows(); ++k) {
    double lse = log_sum_exp(eta.row(k));
    beta.row(k) = (eta.row(k).array() - lse).exp();
  }
  return beta;
}

}  // namespace detail

inline DtmFit fit_dtm(const TimeSlicedCorpus& corpus, const TopicModelConfig& config) {
  config.validate();
  if (corpus.slices().empty()) throw EmptyCorpus("fit_dtm: corpus has no slices");
  for (const auto& s : corpus.slices())
    if (s.docs.empty()) throw InvalidInput("fit_dtm: slice for year " + std::to_string(s.year) + " is empty");

  DtmFit fit;
  fit.config = config;
  fit.vocabulary = corpus.vocabulary();
  fit.years = corpus.years();
  std::vector<int> slice_of;
  auto docs = detail::corpus_docs(corpus, &fit.doc_ids, &fit.doc_years, &slice_of);
  const int K = config.k;
  const int V = static_cast<int>(corpus.vocabulary().size());
  const std::size_t T = corpus.slices().size();
  if (static_cast<double>(K) > static_cast<double>(corpus.total_mass()))
    throw InvalidInput("fit_dtm: k exceeds the total token count");

  // Start from the static model fitted to the pooled corpus.
  auto init = detail::run_lda(docs, V, config);
  detail::DtmParams params;
  Eigen::MatrixXd log_init = init.beta.array().log();
  params.eta.assign(T, log_init);
  auto gammas = std::move(init.gammas);

  std::vector<Eigen::MatrixXd> suff(T);
  auto estep = [&]() {
    std::vector<Eigen::MatrixXd> log_beta(T);
    for (std::size_t t = 0; t < T; ++t) {
      log_beta[t] = params.eta[t];
      for (int k = 0; k < K; ++k) log_beta[t].row(k).array() -= detail::log_sum_exp(params.eta[t].row(k));
      suff[t].setZero(K, V);
    }
    double bound = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto t = static_cast<std::size_t>(slice_of[d]);
      bound += detail::infer_document(docs[d], log_beta[t], config.alpha, gammas[d], config.estep_max_iter,
                                      config.estep_tol, &suff[t]);
    }
    for (int k = 0; k < K; ++k) bound += detail::topic_log_prior(params, k, config.chain_var, config.init_var);
    return bound;
  };

  for (int it = 0; it < config.iterations; ++it) {
    fit.log_likelihood_trace.push_back(estep());
    for (int k = 0; k < K; ++k) detail::mstep_topic(params, k, suff, config);
    if (detail::converged(fit.log_likelihood_trace, config.convergence_tol)) break;
  }
  fit.log_likelihood_trace.push_back(estep());

  for (std::size_t t = 0; t < T; ++t) {
    Eigen::MatrixXd beta = detail::softmax_rows(params.eta[t]);
    detail::normalize_rows_with_floor(beta);
    fit.per_slice_topic_word.push_back(std::move(beta));
  }
  fit.doc_topic = detail::normalized_gammas(gammas, K);
  return fit;
}

}  // namespace rmbs::topics
