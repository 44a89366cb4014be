#pragma once

// Security outcome labels from basis-point payment summaries.

#include <algorithm>
#include <array>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rmbs/csv.hpp"
#include "rmbs/error.hpp"

namespace rmbs {

enum class SecurityClass { A, M, B };

inline const char* to_string(SecurityClass c) {
  switch (c) {
    case SecurityClass::A: return "A";
    case SecurityClass::M: return "M";
    case SecurityClass::B: return "B";
  }
  return "?";
}

inline SecurityClass parse_class(const std::string& s) {
  if (s == "A") return SecurityClass::A;
  if (s == "M") return SecurityClass::M;
  if (s == "B") return SecurityClass::B;
  throw InvalidInput("unknown security class '" + s + "' (expected A, M or B)");
}

struct PaymentSummary {
  double principal_shortfall_bps = 0;
  double other_shortfall_loss_bps = 0;

  double worst() const { return std::max(principal_shortfall_bps, other_shortfall_loss_bps); }
};

struct ClassThresholds {
  double me_max_bps = 0;
  double fe_min_bps = 0;
};

struct PerfThresholds {
  ClassThresholds a, m, b;

  const ClassThresholds& of(SecurityClass c) const {
    switch (c) {
      case SecurityClass::A: return a;
      case SecurityClass::M: return m;
      case SecurityClass::B: return b;
    }
    return a;
  }

  void validate() const {
    auto check = [](const ClassThresholds& t, const char* field) {
      if (!(t.me_max_bps > 0 && t.me_max_bps < t.fe_min_bps))
        throw ConfigError(field, "require 0 < me_max_bps < fe_min_bps");
    };
    check(a, "thresholds.A");
    check(m, "thresholds.M");
    check(b, "thresholds.B");
  }
};

inline PerfThresholds default_thresholds() { return {{100, 2500}, {500, 5000}, {500, 5000}}; }

enum class Performance { ME, NME, FE };

inline const char* to_string(Performance p) {
  switch (p) {
    case Performance::ME: return "ME";
    case Performance::NME: return "NME";
    case Performance::FE: return "FE";
  }
  return "?";
}

struct PerformanceLabel {
  Performance value = Performance::ME;
  bool fe = false;
  bool fne = false;
};

inline PerformanceLabel make_label(Performance p) { return {p, p == Performance::FE, p != Performance::ME}; }

/// ME at or below me_max, FE at or above fe_min, applied to the worse channel.
inline PerformanceLabel label_security(SecurityClass cls, const PaymentSummary& s,
                                       const PerfThresholds& t = default_thresholds()) {
  if (s.principal_shortfall_bps < 0 || s.other_shortfall_loss_bps < 0)
    throw InvalidInput("payment summary components must be non-negative");
  const auto& ct = t.of(cls);
  double worst = s.worst();
  if (worst <= ct.me_max_bps) return make_label(Performance::ME);
  if (worst >= ct.fe_min_bps) return make_label(Performance::FE);
  return make_label(Performance::NME);
}

struct LabeledSecurity {
  std::string security_id;
  SecurityClass cls = SecurityClass::A;
  int year = 0;
  PerformanceLabel label;
};

struct RateRow {
  std::map<std::string, std::string> key;  // group column -> value
  std::size_t n = 0;
  std::size_t fe = 0;
  std::size_t fne = 0;
  double fe_rate() const { return n ? static_cast<double>(fe) / static_cast<double>(n) : 0.0; }
  double fne_rate() const { return n ? static_cast<double>(fne) / static_cast<double>(n) : 0.0; }
};

/// FE and FNE rates per group; `group_keys` is a non-empty subset of {year, class}.
inline std::vector<RateRow> summarize_rates(const std::vector<LabeledSecurity>& securities,
                                            const std::vector<std::string>& group_keys) {
  if (securities.empty()) throw InvalidInput("summarize_rates: no securities");
  if (group_keys.empty()) throw InvalidInput("summarize_rates: empty group key set");
  for (const auto& k : group_keys)
    if (k != "year" && k != "class") throw InvalidInput("summarize_rates: unknown group key '" + k + "'");

  std::map<std::vector<std::string>, RateRow> groups;
  for (const auto& s : securities) {
    std::vector<std::string> key;
    RateRow proto;
    for (const auto& k : group_keys) {
      key.push_back(k == "year" ? std::to_string(s.year) : to_string(s.cls));
      proto.key[k] = key.back();
    }
    auto [it, fresh] = groups.emplace(key, proto);
    auto& row = it->second;
    ++row.n;
    row.fe += s.label.fe;
    row.fne += s.label.fne;
  }
  std::vector<RateRow> out;
  for (auto& [k, row] : groups) out.push_back(std::move(row));
  return out;
}

struct TopicPerformance {
  int topic = 0;
  std::size_t n = 0;
  double fe_rate = 0;
  double ssup_fraction = 0;
};

/// Per dominant topic: share of securities that fail expectations and share
/// carrying the SSUP flag. Topics without securities are omitted.
inline std::vector<TopicPerformance> topic_performance(const std::vector<int>& dominant,
                                                       const std::vector<PerformanceLabel>& labels,
                                                       const std::vector<bool>& ssup) {
  if (dominant.size() != labels.size() || dominant.size() != ssup.size())
    throw InvalidInput("topic_performance: input lengths differ");
  std::map<int, std::array<std::size_t, 3>> acc;  // n, fe, ssup
  for (std::size_t i = 0; i < dominant.size(); ++i) {
    auto& a = acc[dominant[i]];
    ++a[0];
    a[1] += labels[i].fe;
    a[2] += ssup[i];
  }
  std::vector<TopicPerformance> out;
  for (const auto& [t, a] : acc)
    out.push_back({t, a[0], static_cast<double>(a[1]) / static_cast<double>(a[0]),
                   static_cast<double>(a[2]) / static_cast<double>(a[0])});
  return out;
}

struct PaymentRow {
  std::string security_id;
  SecurityClass cls = SecurityClass::A;
  PaymentSummary summary;
};

/// security_id, class, principal_shortfall_bps, other_shortfall_loss_bps
inline std::vector<PaymentRow> read_payments(const std::string& path) {
  csv::Table t(csv::read_file(path), path);
  auto id = t.column("security_id"), cls = t.column("class"), p = t.column("principal_shortfall_bps"),
       o = t.column("other_shortfall_loss_bps");
  std::vector<PaymentRow> out;
  for (std::size_t r = 0; r < t.rows().size(); ++r)
    out.push_back({t.cell(r, id), parse_class(t.cell(r, cls)),
                   {csv::parse_double(t.cell(r, p), "principal_shortfall_bps"),
                    csv::parse_double(t.cell(r, o), "other_shortfall_loss_bps")}});
  return out;
}

inline void write_payments(std::ostream& out, const std::vector<PaymentRow>& rows) {
  csv::write_row(out, {"security_id", "class", "principal_shortfall_bps", "other_shortfall_loss_bps"});
  for (const auto& r : rows)
    csv::write_row(out, {r.security_id, to_string(r.cls), csv::exact(r.summary.principal_shortfall_bps),
                         csv::exact(r.summary.other_shortfall_loss_bps)});
}

/// security_id, label, fe, fne
inline void write_labels(std::ostream& out, const std::vector<LabeledSecurity>& rows) {
  csv::write_row(out, {"security_id", "label", "fe", "fne"});
  for (const auto& r : rows)
    csv::write_row(out, {r.security_id, to_string(r.label.value), r.label.fe ? "1" : "0", r.label.fne ? "1" : "0"});
}

struct OutcomeRow {
  std::string security_id;
  bool fe = false;
  bool fne = false;
};

inline std::vector<OutcomeRow> read_outcomes(const std::string& path) {
  csv::Table t(csv::read_file(path), path);
  auto id = t.column("security_id"), fe = t.column("fe"), fne = t.column("fne");
  std::vector<OutcomeRow> out;
  for (std::size_t r = 0; r < t.rows().size(); ++r)
    out.push_back({t.cell(r, id), csv::parse_flag(t.cell(r, fe), "fe"), csv::parse_flag(t.cell(r, fne), "fne")});
  return out;
}

inline void write_rates(std::ostream& out, const std::vector<RateRow>& rows, const std::vector<std::string>& keys) {
  std::vector<std::string> header = keys;
  for (const char* h : {"n", "fe_rate", "fne_rate"}) header.push_back(h);
  csv::write_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    for (const auto& k : keys) cells.push_back(r.key.at(k));
    cells.push_back(std::to_string(r.n));
    cells.push_back(csv::fixed3(r.fe_rate()));
    cells.push_back(csv::fixed3(r.fne_rate()));
    csv::write_row(out, cells);
  }
}

inline void write_topic_performance(std::ostream& out, const std::vector<TopicPerformance>& rows) {
  csv::write_row(out, {"topic", "n", "fe_rate", "ssup_fraction"});
  for (const auto& r : rows)
    csv::write_row(out, {"Topic" + std::to_string(r.topic + 1), std::to_string(r.n), csv::fixed3(r.fe_rate),
                         csv::fixed3(r.ssup_fraction)});
}

}  // namespace rmbs
