#pragma once

// Post-fit analysis: document inference, dominant topics, dynamics
// classification against static/slow fits, top terms and Sankey edge lists.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "rmbs/csv.hpp"
#include "rmbs/topics/model.hpp"

namespace rmbs::topics {

template <typename Fit>
concept TopicFit = requires(const Fit& f) {
  { f.k() } -> std::convertible_to<int>;
  { f.num_slices() } -> std::convertible_to<int>;
  { f.beta(0) } -> std::convertible_to<const Eigen::MatrixXd&>;
  f.vocabulary;
  f.config;
};

struct DocTopics {
  Eigen::VectorXd weights;
  std::size_t out_of_vocabulary = 0;  // tokens ignored
};

namespace detail {

inline int slice_for_year(const LdaFit&, int) { return 0; }

/// Slice whose year is closest to `year`; ties go to the earlier slice.
inline int slice_for_year(const DtmFit& fit, int year) {
  int best = 0;
  for (int t = 1; t < fit.num_slices(); ++t)
    if (std::abs(fit.years[static_cast<std::size_t>(t)] - year) <
        std::abs(fit.years[static_cast<std::size_t>(best)] - year))
      best = t;
  return best;
}

}  // namespace detail

/// Topic weights for a (possibly unseen) document. Pairs outside the fit's
/// vocabulary are ignored and counted.
template <TopicFit Fit>
DocTopics doc_topics(const Fit& fit, const std::vector<RoleFiToken>& pairs, int year = 0) {
  BowDoc doc;
  DocTopics out;
  std::map<int, double> counts;
  for (const auto& t : pairs) {
    int w = fit.vocabulary.find(t.pair);
    if (w < 0) {
      out.out_of_vocabulary += static_cast<std::size_t>(t.count);
      continue;
    }
    counts[w] += static_cast<double>(t.count);
  }
  if (counts.empty()) throw InvalidInput("doc_topics: document has no in-vocabulary tokens");
  for (const auto& [w, c] : counts) {
    doc.words.push_back(w);
    doc.counts.push_back(c);
  }
  Eigen::MatrixXd log_beta = fit.beta(detail::slice_for_year(fit, year)).array().log();
  Eigen::VectorXd gamma = detail::initial_gamma(doc, fit.k(), fit.config.alpha);
  detail::infer_document(doc, log_beta, fit.config.alpha, gamma, fit.config.estep_max_iter, fit.config.estep_tol);
  out.weights = gamma / gamma.sum();
  return out;
}

struct DominantTopic {
  int topic = 0;
  double weight = 0;
  bool strong = false;
};

/// Argmax with lowest-index tie-break; strong when the weight reaches the threshold.
inline DominantTopic dominant_topic(const Eigen::Ref<const Eigen::VectorXd>& weights, double strong_threshold = 0.7) {
  if (weights.size() == 0) throw InvalidInput("dominant_topic: empty weight vector");
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < weights.size(); ++k)
    if (weights[k] > weights[best]) best = k;
  return {static_cast<int>(best), weights[best], weights[best] >= strong_threshold};
}

inline double total_variation(const Eigen::Ref<const Eigen::RowVectorXd>& p,
                              const Eigen::Ref<const Eigen::RowVectorXd>& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

inline double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& p, const Eigen::Ref<const Eigen::RowVectorXd>& q) {
  double denom = p.norm() * q.norm();
  return denom > 0 ? p.dot(q) / denom : 0.0;
}

/// Topic-word matrix averaged over slices.
template <TopicFit Fit>
Eigen::MatrixXd time_averaged_beta(const Fit& fit) {
  Eigen::MatrixXd avg = fit.beta(0);
  for (int t = 1; t < fit.num_slices(); ++t) avg += fit.beta(t);
  return avg / fit.num_slices();
}

/// Largest total-variation distance between any two slices of one topic.
template <TopicFit Fit>
double cross_slice_drift(const Fit& fit, int topic) {
  double drift = 0;
  for (int a = 0; a < fit.num_slices(); ++a)
    for (int b = a + 1; b < fit.num_slices(); ++b)
      drift = std::max(drift, total_variation(fit.beta(a).row(topic), fit.beta(b).row(topic)));
  return drift;
}

enum class Dynamics { stable, evolving, dynamic };

inline const char* to_string(Dynamics d) {
  switch (d) {
    case Dynamics::stable: return "stable";
    case Dynamics::evolving: return "evolving";
    case Dynamics::dynamic: return "dynamic";
  }
  return "?";
}

struct TopicDynamics {
  int topic = 0;
  Dynamics label = Dynamics::dynamic;
  double best_alignment = 0;  // cosine to the closest static or slow topic
  double drift = 0;
};

/// Labels each fast-evolving topic by how well it aligns with the union of
/// static and slow topics and how far it moves across slices.
template <TopicFit Fast, TopicFit Static, TopicFit Slow>
std::vector<TopicDynamics> classify_dynamics(const Fast& fast, const Static& lda, const Slow& slow,
                                             double align_threshold = 0.6, double drift_threshold = 0.3) {
  if (!(fast.vocabulary == lda.vocabulary) || !(fast.vocabulary == slow.vocabulary))
    throw InvalidInput("classify_dynamics: fits do not share a vocabulary");
  if (fast.k() != lda.k() || fast.k() != slow.k()) throw InvalidInput("classify_dynamics: fits differ in k");

  Eigen::MatrixXd fast_avg = time_averaged_beta(fast);
  Eigen::MatrixXd refs(lda.k() + slow.k(), fast_avg.cols());
  refs << time_averaged_beta(lda), time_averaged_beta(slow);

  std::vector<TopicDynamics> out;
  for (int k = 0; k < fast.k(); ++k) {
    TopicDynamics td{k, Dynamics::dynamic, 0.0, cross_slice_drift(fast, k)};
    for (Eigen::Index r = 0; r < refs.rows(); ++r)
      td.best_alignment = std::max(td.best_alignment, cosine(fast_avg.row(k), refs.row(r)));
    if (td.best_alignment >= align_threshold)
      td.label = td.drift <= drift_threshold ? Dynamics::stable : Dynamics::evolving;
    out.push_back(td);
  }
  return out;
}

struct TermWeight {
  RolePair pair;
  int index = 0;
  double probability = 0;
};

/// Highest-probability pairs of one topic in one slice; ties by vocabulary index.
template <TopicFit Fit>
std::vector<TermWeight> top_terms(const Fit& fit, int topic, int slice, std::size_t n) {
  if (topic < 0 || topic >= fit.k()) throw std::out_of_range("top_terms: topic index out of range");
  if (slice < 0 || slice >= fit.num_slices()) throw std::out_of_range("top_terms: slice index out of range");
  auto row = fit.beta(slice).row(topic);
  std::vector<int> idx(static_cast<std::size_t>(row.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return row[a] > row[b]; });
  idx.resize(std::min(n, idx.size()));
  std::vector<TermWeight> out;
  for (int w : idx) out.push_back({fit.vocabulary.at(w), w, row[w]});
  return out;
}

struct SankeyEdge {
  int year = 0;
  RolePair pair;
  double weight = 0;
};

/// One year node per slice linked to that slice's top pairs.
inline std::vector<SankeyEdge> export_sankey(const DtmFit& fit, int topic, std::size_t n_per_slice) {
  std::vector<SankeyEdge> edges;
  for (int t = 0; t < fit.num_slices(); ++t)
    for (const auto& tw : top_terms(fit, topic, t, n_per_slice))
      edges.push_back({fit.years[static_cast<std::size_t>(t)], tw.pair, tw.probability});
  return edges;
}

inline void write_sankey_csv(std::ostream& out, const std::vector<SankeyEdge>& edges) {
  csv::write_row(out, {"year", "role", "fi", "weight"});
  for (const auto& e : edges) csv::write_row(out, {std::to_string(e.year), e.pair.role, e.pair.fi, csv::exact(e.weight)});
}

/// Minimum-cost one-to-one assignment (Hungarian algorithm) of rows to
/// columns of a square cost matrix. Returns the column assigned to each row.
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw InvalidInput("min_cost_assignment: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1), v(n + 1);
  std::vector<int> p(n + 1), way(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(n);
  for (int j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return assign;
}

/// Matches rows of `a` to rows of `b` minimizing summed total variation.
inline std::vector<int> align_topics(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd cost(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) cost(i, j) = total_variation(a.row(i), b.row(j));
  return min_cost_assignment(cost);
}

/// Fraction of items whose cluster's majority label matches their own label.
inline double purity(const std::vector<int>& clusters, const std::vector<int>& labels) {
  if (clusters.size() != labels.size() || clusters.empty())
    throw InvalidInput("purity: inputs must be non-empty and of equal length");
  std::map<int, std::map<int, int>> table;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][labels[i]];
  int agree = 0;
  for (const auto& [c, counts] : table) {
    int best = 0;
    for (const auto& [l, n] : counts) best = std::max(best, n);
    agree += best;
  }
  return static_cast<double>(agree) / static_cast<double>(clusters.size());
}

}  // namespace rmbs::topics
