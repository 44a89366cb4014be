#pragma once

// Cross-validation with folds over prospectuses rather than securities.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rmbs/glm/lasso.hpp"

namespace rmbs::glm {

using FoldAssignment = std::map<std::string, int>;  // group -> fold

/// Distinct groups in sorted order, shuffled by `seed`, dealt round-robin.
inline FoldAssignment assign_folds(const std::vector<std::string>& groups, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("lasso.n_folds", "must be >= 2");
  std::set<std::string> distinct(groups.begin(), groups.end());
  if (static_cast<int>(distinct.size()) < n_folds)
    throw InvalidInput("cross-validation: " + std::to_string(distinct.size()) + " groups for " +
                       std::to_string(n_folds) + " folds");
  std::vector<std::string> order(distinct.begin(), distinct.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldAssignment out;
  for (std::size_t i = 0; i < order.size(); ++i) out[order[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
  return out;
}

struct CvResult {
  FoldAssignment folds;
  std::vector<double> lambdas;
  std::vector<double> mean_loss;  // pooled held-out squared error per lambda
  std::size_t chosen = 0;
  double lambda = 0;
  std::vector<double> oof_prob;  // held-out probabilities at the chosen lambda
  LassoFit fit;                  // refit on all rows at the chosen lambda
};

namespace detail {

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
  return out;
}

}  // namespace detail

/// Chooses lambda by minimum held-out squared error; ties go to the larger
/// lambda. Standardization is fit on the training rows of each fold.
inline CvResult cv_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& groups,
                          const std::vector<std::string>& columns, const LassoConfig& cfg,
                          const FoldAssignment* shared = nullptr) {
  cfg.validate();
  if (static_cast<Eigen::Index>(groups.size()) != X.rows()) throw InvalidInput("cv_select: one group per row required");
  CvResult res;
  res.folds = shared ? *shared : assign_folds(groups, cfg.n_folds, cfg.seed);
  res.lambdas = resolve_grid(X, y, cfg);
  const std::size_t L = res.lambdas.size();
  std::vector<std::vector<double>> oof(L, std::vector<double>(static_cast<std::size_t>(X.rows())));

  int n_folds = 0;
  for (const auto& [g, f] : res.folds) n_folds = std::max(n_folds, f + 1);
  for (int fold = 0; fold < n_folds; ++fold) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      auto it = res.folds.find(groups[static_cast<std::size_t>(i)]);
      if (it == res.folds.end()) throw InvalidInput("cv_select: group " + groups[static_cast<std::size_t>(i)] + " has no fold");
      (it->second == fold ? test : train).push_back(i);
    }
    if (test.empty()) continue;
    Eigen::MatrixXd Xtr = detail::take_rows(X, train), Xte = detail::take_rows(X, test);
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) ytr[static_cast<Eigen::Index>(r)] = y[train[r]];
    double ybar = ytr.size() ? ytr.mean() : 0.5;
    if (ybar == 0 || ybar == 1) {
      // constant training outcome: the intercept-only limit
      for (std::size_t l = 0; l < L; ++l)
        for (Eigen::Index i : test) oof[l][static_cast<std::size_t>(i)] = ybar;
      continue;
    }
    auto path = fit_path(Xtr, ytr, columns, res.lambdas, cfg);
    for (std::size_t l = 0; l < L; ++l) {
      auto p = predict_prob(path[l], Xte, columns);
      for (std::size_t r = 0; r < test.size(); ++r) oof[l][static_cast<std::size_t>(test[r])] = p[r];
    }
  }

  for (std::size_t l = 0; l < L; ++l) {
    double s = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double d = oof[l][static_cast<std::size_t>(i)] - y[i];
      s += d * d;
    }
    res.mean_loss.push_back(s / static_cast<double>(X.rows()));
  }
  // grid is descending, so the first minimum is the largest lambda; losses
  // within rounding of the minimum count as ties
  double best = *std::min_element(res.mean_loss.begin(), res.mean_loss.end());
  while (res.mean_loss[res.chosen] > best + 1e-12 * std::max(1.0, best)) ++res.chosen;
  res.lambda = res.lambdas[res.chosen];
  res.oof_prob = oof[res.chosen];
  std::vector<double> prefix(res.lambdas.begin(), res.lambdas.begin() + static_cast<std::ptrdiff_t>(res.chosen) + 1);
  res.fit = fit_path(X, y, columns, prefix, cfg).back();
  return res;
}

}  // namespace rmbs::glm
