#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include "rmbs/corpus.hpp"
#include "rmbs/error.hpp"

namespace rmbs::topics {

enum class InitMethod { seeded, random };

struct TopicModelConfig {
  int k = 30;
  double alpha = 0.01;        // symmetric, held fixed
  double chain_var = 0.005;   // per-slice random-walk variance of the natural parameters
  int iterations = 50;        // EM iterations
  std::uint64_t seed = 0;
  double convergence_tol = 1e-6;  // relative change of the bound

  int estep_max_iter = 100;
  double estep_tol = 1e-6;
  int mstep_max_iter = 25;
  double init_var = 1e4;  // prior variance of the first slice's natural parameters
  InitMethod init = InitMethod::seeded;

  void validate() const {
    // k == 1 is accepted: the single-topic posterior has a closed form and is a useful check.
    if (k < 1) throw ConfigError("topics.k", "must be >= 1");
    if (!(alpha > 0)) throw ConfigError("topics.alpha", "must be > 0");
    if (!(chain_var > 0)) throw ConfigError("topics.chain_var", "must be > 0");
    if (iterations < 1) throw ConfigError("topics.iterations", "must be >= 1");
    if (!(init_var > 0)) throw ConfigError("topics.init_var", "must be > 0");
  }
};

/// Distributions are smoothed with this floor before normalization.
inline constexpr double kProbabilityFloor = 1e-12;

struct BowDoc {
  std::vector<int> words;
  std::vector<double> counts;

  double total() const {
    double n = 0;
    for (double c : counts) n += c;
    return n;
  }
};

inline BowDoc to_bow(const ProspectusDoc& d) {
  BowDoc b;
  for (const auto& t : d.tokens) {
    b.words.push_back(t.word);
    b.counts.push_back(static_cast<double>(t.count));
  }
  return b;
}

struct LdaFit {
  TopicModelConfig config;
  Vocabulary vocabulary;
  Eigen::MatrixXd topic_word;  // K x V, rows on the simplex
  Eigen::MatrixXd doc_topic;   // D x K, rows on the simplex
  std::vector<std::string> doc_ids;
  std::vector<int> doc_years;
  std::vector<double> log_likelihood_trace;

  int k() const { return static_cast<int>(topic_word.rows()); }
  int num_slices() const { return 1; }
  const Eigen::MatrixXd& beta(int /*slice*/) const { return topic_word; }
};

struct DtmFit {
  TopicModelConfig config;
  Vocabulary vocabulary;
  std::vector<int> years;
  std::vector<Eigen::MatrixXd> per_slice_topic_word;  // T of K x V
  Eigen::MatrixXd doc_topic;                          // D x K
  std::vector<std::string> doc_ids;
  std::vector<int> doc_years;
  std::vector<double> log_likelihood_trace;  // bound + log prior of the natural parameters

  int k() const { return config.k; }
  int num_slices() const { return static_cast<int>(years.size()); }
  const Eigen::MatrixXd& beta(int slice) const {
    return per_slice_topic_word.at(static_cast<std::size_t>(slice));
  }
};

namespace detail {

inline double digamma(double x) { return boost::math::digamma(x); }

/// Mean-field coordinate ascent for one document. `gamma` is a warm start on
/// entry and the Dirichlet posterior on exit. Accumulates expected counts
/// into `suff` (K x V) when given. Returns the document's evidence lower bound.
inline double infer_document(const BowDoc& doc, const Eigen::MatrixXd& log_beta, double alpha,
                             Eigen::VectorXd& gamma, int max_iter, double tol,
                             Eigen::MatrixXd* suff = nullptr) {
  const int K = static_cast<int>(log_beta.rows());
  const std::size_t N = doc.words.size();
  Eigen::MatrixXd phi(K, static_cast<Eigen::Index>(N));
  Eigen::VectorXd dig(K), next(K);

  for (int iter = 0; iter < max_iter; ++iter) {
    for (int k = 0; k < K; ++k) dig[k] = digamma(gamma[k]);
    next.setConstant(alpha);
    for (std::size_t n = 0; n < N; ++n) {
      auto col = phi.col(static_cast<Eigen::Index>(n));
      col = log_beta.col(doc.words[n]) + dig;
      double mx = col.maxCoeff();
      col = (col.array() - mx).exp();
      col /= col.sum();
      next += doc.counts[n] * col;
    }
    double change = (next - gamma).cwiseAbs().maxCoeff();
    gamma = next;
    if (change < tol) break;
  }

  // Bound at (gamma, phi).
  double gsum = gamma.sum();
  double dsum = digamma(gsum);
  for (int k = 0; k < K; ++k) dig[k] = digamma(gamma[k]) - dsum;
  double bound = std::lgamma(K * alpha) - K * std::lgamma(alpha) - std::lgamma(gsum);
  for (int k = 0; k < K; ++k)
    bound += (alpha - 1) * dig[k] + std::lgamma(gamma[k]) - (gamma[k] - 1) * dig[k];
  for (std::size_t n = 0; n < N; ++n) {
    const int w = doc.words[n];
    double s = 0;
    for (int k = 0; k < K; ++k) {
      double p = phi(k, static_cast<Eigen::Index>(n));
      if (p > 0) s += p * (dig[k] - std::log(p) + log_beta(k, w));
    }
    bound += doc.counts[n] * s;
    if (suff) suff->col(w) += doc.counts[n] * phi.col(static_cast<Eigen::Index>(n));
  }
  return bound;
}

inline Eigen::VectorXd initial_gamma(const BowDoc& doc, int K, double alpha) {
  return Eigen::VectorXd::Constant(K, alpha + doc.total() / K);
}

inline void normalize_rows_with_floor(Eigen::MatrixXd& m) {
  m.array() += kProbabilityFloor;
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) /= m.row(r).sum();
}

/// Topic-word starting point. `seeded` starts from a random document, then
/// repeatedly adds the document farthest from every chosen one (normalized
/// count vectors, squared distance), blending each with a little seeded
/// noise; `random` is uniform plus noise.
inline Eigen::MatrixXd initial_topics(const std::vector<BowDoc>& docs, int V, const TopicModelConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int K = cfg.k;
  Eigen::MatrixXd beta(K, V);

  if (cfg.init == InitMethod::random || docs.empty()) {
    for (int k = 0; k < K; ++k)
      for (int w = 0; w < V; ++w) beta(k, w) = 1.0 / V + unif(rng) / V;
  } else {
    auto dense = [&](const BowDoc& d) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(V);
      for (std::size_t n = 0; n < d.words.size(); ++n) x[d.words[n]] += d.counts[n];
      double s = x.sum();
      if (s > 0) x /= s;
      return x;
    };
    std::vector<double> dist2(docs.size(), std::numeric_limits<double>::infinity());
    std::vector<Eigen::VectorXd> centers;
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, docs.size() - 1)(rng);
    centers.push_back(dense(docs[first]));
    while (static_cast<int>(centers.size()) < K) {
      double total = 0;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        double d2 = (dense(docs[i]) - centers.back()).squaredNorm();
        dist2[i] = std::min(dist2[i], d2);
        total += dist2[i];
      }
      std::size_t pick = 0;
      if (total <= 0) {
        pick = std::uniform_int_distribution<std::size_t>(0, docs.size() - 1)(rng);
      } else {
        for (std::size_t i = 1; i < docs.size(); ++i)
          if (dist2[i] > dist2[pick]) pick = i;
      }
      centers.push_back(dense(docs[pick]));
    }
    for (int k = 0; k < K; ++k)
      for (int w = 0; w < V; ++w) beta(k, w) = centers[static_cast<std::size_t>(k)][w] + 0.1 * (0.5 + unif(rng)) / V;
  }
  for (int k = 0; k < K; ++k) beta.row(k) /= beta.row(k).sum();
  return beta;
}

inline std::vector<BowDoc> corpus_docs(const TimeSlicedCorpus& corpus, std::vector<std::string>* ids = nullptr,
                                       std::vector<int>* years = nullptr, std::vector<int>* slice_of = nullptr) {
  std::vector<BowDoc> docs;
  int t = 0;
  for (const auto& s : corpus.slices()) {
    for (const auto& d : s.docs) {
      docs.push_back(to_bow(d));
      if (ids) ids->push_back(d.id);
      if (years) years->push_back(d.year);
      if (slice_of) slice_of->push_back(t);
    }
    ++t;
  }
  return docs;
}

inline bool converged(const std::vector<double>& trace, double tol) {
  if (trace.size() < 2) return false;
  double prev = trace[trace.size() - 2], cur = trace.back();
  return std::abs(cur - prev) <= tol * std::abs(prev);
}

}  // namespace detail
}  // namespace rmbs::topics
