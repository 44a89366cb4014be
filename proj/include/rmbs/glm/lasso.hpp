#pragma once

// L1-penalized logistic regression by cyclic coordinate descent.
//
// Objective: (1/n) sum_i [log(1 + exp(eta_i)) - y_i eta_i] + lambda * |beta|_1
// with eta = b0 + X beta and an unpenalized intercept.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmbs/error.hpp"

namespace rmbs::glm {

struct LassoConfig {
  std::vector<double> lambda_grid;  // empty: generated from lambda_max
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  int n_folds = 10;
  int max_iter = 1000;  // Newton steps per lambda
  double tol = 1e-7;
  std::uint64_t seed = 1;
  bool standardize = true;

  void validate() const {
    if (n_folds < 2) throw ConfigError("lasso.n_folds", "must be >= 2");
    if (max_iter < 1) throw ConfigError("lasso.max_iter", "must be >= 1");
    if (!(tol > 0)) throw ConfigError("lasso.tol", "must be positive");
    if (lambda_grid.empty() && (n_lambda < 1 || !(lambda_min_ratio > 0 && lambda_min_ratio < 1)))
      throw ConfigError("lasso.lambda_grid", "auto grid needs n_lambda >= 1 and 0 < lambda_min_ratio < 1");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
      if (!(lambda_grid[i] >= 0)) throw ConfigError("lasso.lambda_grid", "values must be non-negative");
      if (i && !(lambda_grid[i] < lambda_grid[i - 1])) throw ConfigError("lasso.lambda_grid", "must be strictly descending");
    }
  }
};

struct LassoFit {
  double intercept = 0;
  std::vector<std::string> columns;             // every input column, in order
  std::map<std::string, double> coefficients;  // nonzero only
  double lambda = 0;
  bool converged = false;
  int n_iter = 0;
  std::vector<double> objective_trace;  // after each Newton step, on the fitted scale

  double coef(const std::string& name) const {
    auto it = coefficients.find(name);
    return it == coefficients.end() ? 0.0 : it->second;
  }
};

inline double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

namespace detail {

inline void check_binary(const Eigen::VectorXd& y) {
  bool zero = false, one = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 0) zero = true;
    else if (y[i] == 1) one = true;
    else throw InvalidInput("outcome values must be 0 or 1");
  }
  if (!(zero && one)) throw InvalidInput("outcome is constant; need both 0 and 1");
}

}  // namespace detail

/// max_j |x_j' (y - ybar)| / n
inline double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size() || X.rows() == 0) throw InvalidInput("lambda_max: shape mismatch or empty input");
  detail::check_binary(y);
  Eigen::VectorXd r = y.array() - y.mean();
  return (X.transpose() * r).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

inline std::vector<double> auto_grid(double lmax, int n, double min_ratio) {
  std::vector<double> g;
  if (n == 1) return {lmax};
  for (int t = 0; t < n; ++t) g.push_back(lmax * std::pow(min_ratio, static_cast<double>(t) / (n - 1)));
  return g;
}

/// Penalized objective at (b0, beta).
inline double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double b0, const Eigen::VectorXd& beta,
                        double lambda) {
  Eigen::VectorXd eta = (X * beta).array() + b0;
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += log1pexp(eta[i]) - y[i] * eta[i];
  return s / static_cast<double>(y.size()) + lambda * beta.lpNorm<1>();
}

/// Largest violation of the optimality conditions: |score| <= lambda at zero
/// coefficients, score = -lambda * sign at nonzero ones, zero intercept score.
inline double kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double b0, const Eigen::VectorXd& beta,
                            double lambda) {
  Eigen::VectorXd eta = (X * beta).array() + b0;
  Eigen::VectorXd r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) r[i] = sigmoid(eta[i]) - y[i];
  double n = static_cast<double>(y.size());
  Eigen::VectorXd g = X.transpose() * r / n;
  double worst = std::abs(r.sum() / n);
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double v = beta[j] == 0 ? std::max(0.0, std::abs(g[j]) - lambda)
                            : std::abs(g[j] + lambda * (beta[j] > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

/// Proximal Newton on a fixed design; no standardization. Each outer step
/// minimizes a weighted quadratic model of the loss by cyclic coordinate
/// descent on its Gram matrix, then backtracks on the true objective.
class CoordinateDescent {
 public:
  CoordinateDescent(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) : y_(y) {
    if (X.rows() != y.size() || X.rows() == 0) throw InvalidInput("lasso: shape mismatch or empty input");
    detail::check_binary(y);
    n_ = static_cast<double>(X.rows());
    p_ = X.cols();
    cols_.resize(static_cast<std::size_t>(p_));
    rows_.resize(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) rows_[static_cast<std::size_t>(i)].push_back({0, 1.0});
    for (Eigen::Index j = 0; j < p_; ++j)
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (X(i, j) != 0) {
          cols_[static_cast<std::size_t>(j)].push_back({i, X(i, j)});
          rows_[static_cast<std::size_t>(i)].push_back({j + 1, X(i, j)});
        }
    beta_ = Eigen::VectorXd::Zero(p_);
    double ybar = y.mean();
    b0_ = std::log(ybar / (1 - ybar));
    eta_ = Eigen::VectorXd::Constant(X.rows(), b0_);
  }

  double intercept() const { return b0_; }
  const Eigen::VectorXd& beta() const { return beta_; }

  struct Result {
    bool converged = false;
    int sweeps = 0;  // Newton steps
    std::vector<double> trace;
  };

  /// Minimize at `lambda` from the current (warm) state.
  Result solve(double lambda, int max_iter, double tol) {
    Result res;
    double obj = current_objective(lambda);
    res.trace.push_back(obj);
    const Eigen::Index n = y_.size(), m = p_ + 1;  // index 0 is the intercept
    Eigen::VectorXd w(n), r(n), g(m), qg(m), d(m);
    Eigen::MatrixXd G(m, m);
    while (res.sweeps < max_iter) {
      ++res.sweeps;
      for (Eigen::Index i = 0; i < n; ++i) {
        double pi = sigmoid(eta_[i]);
        w[i] = std::max(pi * (1 - pi), 1e-10);
        r[i] = y_[i] - pi;
      }
      g.setZero();
      G.setZero();
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows_[static_cast<std::size_t>(i)];
        for (std::size_t a = 0; a < row.size(); ++a) {
          g[row[a].col] -= row[a].x * r[i];
          double wa = w[i] * row[a].x;
          for (std::size_t b = a; b < row.size(); ++b) G(row[b].col, row[a].col) += wa * row[b].x;
        }
      }
      g /= n_;
      G /= n_;
      G.triangularView<Eigen::StrictlyUpper>() = G.transpose();

      // coordinate descent on g'd + d'Gd/2 + lambda |beta + d|_1
      d.setZero();
      qg = g;
      auto coord = [&](Eigen::Index k) {
        double h = G(k, k);
        if (h <= 0) return 0.0;
        double cur = k == 0 ? d[0] : beta_[k - 1] + d[k];
        double next = k == 0 ? cur - qg[0] / h : soft(h * cur - qg[k], lambda) / h;
        double step = next - cur;
        if (step == 0) return 0.0;
        d[k] += step;
        qg += G.col(k) * step;
        return std::abs(step);
      };
      bool full = true;
      for (int inner = 0; inner < 2000; ++inner) {
        double change = 0;
        for (Eigen::Index k = 0; k < m; ++k)
          if (full || k == 0 || beta_[k - 1] + d[k] != 0) change = std::max(change, coord(k));
        if (change < tol * 0.1) {
          if (full) break;
          full = true;
        } else {
          full = false;
        }
      }

      double step = d.cwiseAbs().maxCoeff();
      if (step == 0) {
        res.converged = true;
        break;
      }
      Eigen::VectorXd deta = Eigen::VectorXd::Constant(n, d[0]);
      for (Eigen::Index j = 0; j < p_; ++j)
        if (d[j + 1] != 0)
          for (const auto& [i, x] : cols_[static_cast<std::size_t>(j)]) deta[i] += x * d[j + 1];
      Eigen::VectorXd nb = beta_ + d.tail(p_);

      // backtracking on the true objective
      double t = 1;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        Eigen::VectorXd tb = t == 1 ? nb : Eigen::VectorXd(beta_ + t * d.tail(p_));
        double trial = objective_at(eta_ + t * deta, tb, lambda);
        if (trial <= obj) {
          beta_ = tb;
          b0_ += t * d[0];
          moved = true;
          break;
        }
      }
      if (moved) {
        eta_ = Eigen::VectorXd::Constant(n, b0_);
        for (Eigen::Index j = 0; j < p_; ++j)
          if (beta_[j] != 0)
            for (const auto& [i, x] : cols_[static_cast<std::size_t>(j)]) eta_[i] += x * beta_[j];
        obj = current_objective(lambda);
      }
      res.trace.push_back(obj);
      if (!moved || t * step < tol) {
        res.converged = true;
        break;
      }
    }
    return res;
  }

  double current_objective(double lambda) const { return objective_at(eta_, beta_, lambda); }

 private:
  struct Entry {
    Eigen::Index row;
    double x;
  };
  struct RowEntry {
    Eigen::Index col;
    double x;
  };

  double objective_at(const Eigen::VectorXd& eta, const Eigen::VectorXd& beta, double lambda) const {
    double s = 0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) s += log1pexp(eta[i]) - y_[i] * eta[i];
    return s / n_ + lambda * beta.lpNorm<1>();
  }

  // a coordinate on the lambda_max boundary stays at zero despite rounding
  static double soft(double z, double t) {
    if (std::abs(z) <= t * (1 + 1e-10)) return 0.0;
    return z > 0 ? z - t : z + t;
  }

  const Eigen::VectorXd& y_;
  double n_ = 0;
  Eigen::Index p_ = 0;
  std::vector<std::vector<Entry>> cols_;
  std::vector<std::vector<RowEntry>> rows_;
  Eigen::VectorXd beta_, eta_;
  double b0_ = 0;
};

/// Column centering and scaling; binary columns are left untouched.
struct Standardization {
  Eigen::VectorXd mean, scale;  // identity for binary or constant columns

  static Standardization fit(const Eigen::MatrixXd& X, bool enabled) {
    Standardization s;
    s.mean = Eigen::VectorXd::Zero(X.cols());
    s.scale = Eigen::VectorXd::Ones(X.cols());
    if (!enabled) return s;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      bool binary = true;
      for (Eigen::Index i = 0; i < X.rows() && binary; ++i) binary = X(i, j) == 0 || X(i, j) == 1;
      if (binary) continue;
      double m = X.col(j).mean();
      double sd = std::sqrt((X.col(j).array() - m).square().mean());
      if (sd > 0) {
        s.mean[j] = m;
        s.scale[j] = sd;
      }
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  }
};

/// Fits along `grid` with warm starts; coefficients are reported on the
/// scale of the input columns.
inline std::vector<LassoFit> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const std::vector<std::string>& columns, const std::vector<double>& grid,
                                      const LassoConfig& cfg) {
  if (static_cast<Eigen::Index>(columns.size()) != X.cols()) throw InvalidInput("fit_path: column names != columns");
  if (!X.allFinite()) throw InvalidInput("fit_path: non-finite feature value");
  auto st = Standardization::fit(X, cfg.standardize);
  Eigen::MatrixXd Xs = st.apply(X);
  CoordinateDescent cd(Xs, y);
  std::vector<LassoFit> out;
  for (double lambda : grid) {
    auto res = cd.solve(lambda, cfg.max_iter, cfg.tol);
    LassoFit f;
    f.columns = columns;
    f.lambda = lambda;
    f.converged = res.converged;
    f.n_iter = res.sweeps;
    f.objective_trace = std::move(res.trace);
    f.intercept = cd.intercept();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      double b = cd.beta()[j];
      if (b == 0) continue;
      double orig = b / st.scale[j];
      f.coefficients[columns[static_cast<std::size_t>(j)]] = orig;
      f.intercept -= orig * st.mean[j];
    }
    if (!std::isfinite(f.intercept)) throw NumericFailure("lasso: non-finite intercept at lambda " + std::to_string(lambda));
    out.push_back(std::move(f));
  }
  return out;
}

/// Grid from the configuration, or generated from lambda_max of the
/// standardized design.
inline std::vector<double> resolve_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoConfig& cfg) {
  if (!cfg.lambda_grid.empty()) return cfg.lambda_grid;
  auto st = Standardization::fit(X, cfg.standardize);
  return auto_grid(lambda_max(st.apply(X), y), cfg.n_lambda, cfg.lambda_min_ratio);
}

inline std::vector<double> predict_prob(const LassoFit& fit, const Eigen::MatrixXd& X,
                                        const std::vector<std::string>& columns) {
  if (columns != fit.columns) throw InvalidInput("predict_prob: feature columns do not match the fit");
  if (static_cast<Eigen::Index>(columns.size()) != X.cols()) throw InvalidInput("predict_prob: column count mismatch");
  Eigen::VectorXd beta(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) beta[j] = fit.coef(columns[static_cast<std::size_t>(j)]);
  Eigen::VectorXd eta = (X * beta).array() + fit.intercept;
  std::vector<double> p(static_cast<std::size_t>(eta.size()));
  for (Eigen::Index i = 0; i < eta.size(); ++i) p[static_cast<std::size_t>(i)] = sigmoid(eta[i]);
  return p;
}

inline std::vector<int> classify(const std::vector<double>& prob, double threshold = 0.5) {
  std::vector<int> out;
  for (double p : prob) out.push_back(p >= threshold ? 1 : 0);
  return out;
}

/// Coefficients divided by the largest magnitude; intercept excluded.
inline std::map<std::string, double> normalize_coefs(const LassoFit& fit) {
  double m = 0;
  for (const auto& [k, v] : fit.coefficients) m = std::max(m, std::abs(v));
  if (m == 0) throw InvalidInput("normalize_coefs: all coefficients are zero");
  std::map<std::string, double> out;
  for (const auto& [k, v] : fit.coefficients) out[k] = v / m;
  return out;
}

}  // namespace rmbs::glm
