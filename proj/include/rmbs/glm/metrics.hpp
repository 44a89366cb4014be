#pragma once

// Classification metrics and coefficient / metric tables.

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rmbs/csv.hpp"
#include "rmbs/error.hpp"
#include "rmbs/glm/lasso.hpp"

namespace rmbs::glm {

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

/// F1 is 0 when precision + recall is 0.
inline Metrics metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) throw InvalidInput("metrics: length mismatch");
  if (y_true.empty()) throw InvalidInput("metrics: empty input");
  Metrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    bool t = y_true[i] != 0, p = y_pred[i] != 0;
    if (t && p) ++m.tp;
    else if (!t && p) ++m.fp;
    else if (!t && !p) ++m.tn;
    else ++m.fn;
  }
  auto d = [](std::size_t x) { return static_cast<double>(x); };
  m.accuracy = d(m.tp + m.tn) / d(y_true.size());
  m.precision = m.tp + m.fp ? d(m.tp) / d(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn ? d(m.tp) / d(m.tp + m.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

struct MetricsRow {
  std::string model;    // tier
  std::string outcome;  // FE or FNE
  std::string subset;   // A, M, B or all
  std::size_t n = 0;
  Metrics m;
};

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  csv::write_row(out, {"model", "outcome", "subset", "n", "accuracy", "f1", "precision", "recall", "tp", "fp", "tn", "fn"});
  for (const auto& r : rows)
    csv::write_row(out, {r.model, r.outcome, r.subset, std::to_string(r.n), csv::fixed3(r.m.accuracy),
                         csv::fixed3(r.m.f1), csv::fixed3(r.m.precision), csv::fixed3(r.m.recall),
                         std::to_string(r.m.tp), std::to_string(r.m.fp), std::to_string(r.m.tn), std::to_string(r.m.fn)});
}

/// variable, FE, FNE; a blank cell means the variable was not retained.
struct CoefficientTable {
  std::vector<std::string> variables;
  std::map<std::string, double> fe, fne;
};

inline CoefficientTable coefficient_table(const LassoFit& fe, const LassoFit& fne, bool include_intercept = true) {
  CoefficientTable t;
  if (include_intercept) {
    t.variables.push_back("(Intercept)");
    t.fe["(Intercept)"] = fe.intercept;
    t.fne["(Intercept)"] = fne.intercept;
  }
  for (const auto& c : fe.columns) {
    bool in_fe = fe.coefficients.count(c) > 0, in_fne = fne.coefficients.count(c) > 0;
    if (!in_fe && !in_fne) continue;
    t.variables.push_back(c);
    if (in_fe) t.fe[c] = fe.coefficients.at(c);
    if (in_fne) t.fne[c] = fne.coefficients.at(c);
  }
  return t;
}

/// `exact` writes full precision, otherwise three decimals.
inline void write_coefficients_csv(std::ostream& out, const CoefficientTable& t, bool exact) {
  auto fmt = [&](const std::map<std::string, double>& m, const std::string& k) -> std::string {
    auto it = m.find(k);
    if (it == m.end()) return "";
    return exact ? csv::exact(it->second) : csv::fixed3(it->second);
  };
  csv::write_row(out, {"variable", "FE", "FNE"});
  for (const auto& v : t.variables) csv::write_row(out, {v, fmt(t.fe, v), fmt(t.fne, v)});
}

inline CoefficientTable read_coefficients_csv(const std::string& path) {
  csv::Table tab(csv::read_file(path), path);
  auto v = tab.column("variable"), fe = tab.column("FE"), fne = tab.column("FNE");
  CoefficientTable t;
  for (std::size_t r = 0; r < tab.rows().size(); ++r) {
    std::string name = tab.cell(r, v);
    t.variables.push_back(name);
    if (!tab.cell(r, fe).empty()) t.fe[name] = csv::parse_double(tab.cell(r, fe), "FE");
    if (!tab.cell(r, fne).empty()) t.fne[name] = csv::parse_double(tab.cell(r, fne), "FNE");
  }
  return t;
}

}  // namespace rmbs::glm
