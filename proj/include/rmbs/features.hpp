#pragma once

// Security, prospectus and topic feature tiers assembled into one named
// column matrix.

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rmbs/csv.hpp"
#include "rmbs/error.hpp"
#include "rmbs/performance.hpp"

namespace rmbs {

// ---------------------------------------------------------------------------
// Moody's initial rating

enum class MirLevel { Aaa, Aa, A, Baa, Ba, B, Caa, Ca, C, NR, null };

inline constexpr std::array<MirLevel, 11> kMirLevels = {MirLevel::Aaa, MirLevel::Aa, MirLevel::A,  MirLevel::Baa,
                                                        MirLevel::Ba,  MirLevel::B,  MirLevel::Caa, MirLevel::Ca,
                                                        MirLevel::C,   MirLevel::NR, MirLevel::null};

inline const char* to_string(MirLevel m) {
  static const char* names[] = {"Aaa", "Aa", "A", "Baa", "Ba", "B", "Caa", "Ca", "C", "NR", "null"};
  return names[static_cast<int>(m)];
}

/// Letter grade of a raw rating: provisional "(P)", "(sf)", watch markers
/// and numeric modifiers are dropped. "NR"/"WR" are evaluated but unrated;
/// empty or absent is null.
inline MirLevel aggregate_mir(const std::optional<std::string>& raw) {
  if (!raw) return MirLevel::null;
  std::string s;
  for (char c : *raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) return MirLevel::null;
  auto strip_prefix = [&](const std::string& p) {
    if (s.rfind(p, 0) == 0) s.erase(0, p.size());
  };
  auto strip_suffix = [&](const std::string& p) {
    if (s.size() >= p.size() && s.compare(s.size() - p.size(), p.size(), p) == 0) s.resize(s.size() - p.size());
  };
  strip_prefix("(P)");
  strip_suffix("(sf)");
  strip_suffix("*-");
  strip_suffix("*+");
  strip_suffix("(sf)");
  while (!s.empty() && std::isdigit(static_cast<unsigned char>(s.back()))) s.pop_back();

  std::string upper;
  for (char c : s) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "NR" || upper == "WR" || upper == "NOTRATED") return MirLevel::NR;
  for (MirLevel m : kMirLevels)
    if (m != MirLevel::NR && m != MirLevel::null && s == to_string(m)) return m;
  throw InvalidInput("unrecognized initial rating '" + *raw + "'");
}

// ---------------------------------------------------------------------------
// Tranche flag registry

inline constexpr std::size_t kFlagCount = 73;

class FlagRegistry {
 public:
  explicit FlagRegistry(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() != kFlagCount)
      throw ConfigError("flag_registry", "expected " + std::to_string(kFlagCount) + " flags, got " +
                                             std::to_string(names_.size()));
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i].empty() || !index_.emplace(names_[i], i).second)
        throw ConfigError("flag_registry", "empty or duplicate flag name '" + names_[i] + "'");
  }

  /// One flag name per line; blank lines and lines starting with '#' are skipped.
  static FlagRegistry load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingDependency(path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      names.push_back(line);
    }
    return FlagRegistry(std::move(names));
  }

  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& n) const { return index_.count(n) > 0; }
  std::size_t index(const std::string& n) const {
    auto it = index_.find(n);
    if (it == index_.end()) throw InvalidInput("unknown tranche flag '" + n + "'");
    return it->second;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

/// Named flags from the reference coefficient tables, then placeholders.
inline FlagRegistry default_flag_registry() {
  std::vector<std::string> names = {"AD",   "AFC",  "AS",   "CMPLX", "CPT",       "CSTR",    "DGT",       "DLY",
                                    "EXCH", "EXE",  "FLT",  "FTV",   "INV",       "IRC",     "MEZ",       "MR",
                                    "NAS",  "NTL",  "OC",   "PAC1",  "PIP",       "PT",      "R",         "RAKE",
                                    "RSTP", "RTL",  "SC",   "SEQ",   "SSNR",      "SSUP",    "STEP",      "SUB",
                                    "SUP",  "TAC.1.22.", "TAC.11.", "TAC.2.22.", "TAC.22.", "TAC.33.", "W", "Z"};
  for (std::size_t i = names.size() + 1; i <= kFlagCount; ++i) names.push_back("FLAG_" + std::to_string(i));
  return FlagRegistry(std::move(names));
}

// ---------------------------------------------------------------------------
// Records and fragments

struct SecurityRecord {
  std::string id;
  std::string prospectus_id;
  SecurityClass cls = SecurityClass::A;
  int year = 0;
  std::optional<std::string> mir_raw;
  std::set<std::string> flags;  // names of set flags
  double original_principal = 0;  // USD
};

struct FeatureConfig {
  double principal_unit = 1e8;
  int first_year = 2002;
  int last_year = 2007;
  int baseline_year = 2005;
};

/// Named values for one row.
struct Fragment {
  std::vector<std::string> names;
  std::vector<double> values;

  void add(std::string n, double v) {
    names.push_back(std::move(n));
    values.push_back(v);
  }
};

inline std::string year_column(int y) { return "Y" + std::to_string(y); }
inline std::string mir_column(MirLevel m) { return std::string("MIR_") + to_string(m); }
inline std::string topic_column(int k) { return "Topic" + std::to_string(k + 1); }

/// IsA, IsB, MTG.ORIG.AMT, the registry flags, eleven MIR indicators and
/// the non-baseline year indicators, in that order.
inline Fragment build_security_features(const SecurityRecord& r, const FlagRegistry& registry,
                                        const FeatureConfig& cfg = {}) {
  if (r.original_principal < 0) throw InvalidInput("security " + r.id + ": negative principal");
  if (r.year < cfg.first_year || r.year > cfg.last_year)
    throw InvalidInput("security " + r.id + ": year " + std::to_string(r.year) + " outside the configured range");
  for (const auto& f : r.flags)
    if (!registry.contains(f)) throw InvalidInput("security " + r.id + ": unknown tranche flag '" + f + "'");

  Fragment f;
  f.add("IsA", r.cls == SecurityClass::A);
  f.add("IsB", r.cls == SecurityClass::B);
  f.add("MTG.ORIG.AMT", r.original_principal / cfg.principal_unit);
  for (const auto& name : registry.names()) f.add(name, r.flags.count(name) ? 1.0 : 0.0);
  MirLevel mir = aggregate_mir(r.mir_raw);
  for (MirLevel m : kMirLevels) f.add(mir_column(m), m == mir);
  for (int y = cfg.first_year; y <= cfg.last_year; ++y)
    if (y != cfg.baseline_year) f.add(year_column(y), y == r.year);
  return f;
}

inline const std::vector<std::string>& prospectus_columns() {
  static const std::vector<std::string> cols = {"Count_A", "Count_M",   "Count_B",   "Frac_A",    "Frac_M",
                                                "Frac_B",  "Vol_A",     "Vol_M",     "Vol_B",     "VolFrac_A",
                                                "VolFrac_M", "VolFrac_B", "HasSSUP"};
  return cols;
}

/// Composition of one prospectus by class: counts, count fractions, volumes
/// (USD) and volume fractions, plus HasSSUP. With zero total
/// principal the volume fractions are 0 and `zero_principal` is set.
inline Fragment build_prospectus_features(const std::vector<const SecurityRecord*>& securities,
                                          bool* zero_principal = nullptr) {
  if (securities.empty()) throw InvalidInput("build_prospectus_features: prospectus has no securities");
  std::array<double, 3> count{}, vol{};
  bool ssup = false;
  for (const auto* s : securities) {
    auto c = static_cast<std::size_t>(s->cls);
    count[c] += 1;
    vol[c] += s->original_principal;
    ssup |= s->flags.count("SSUP") > 0;
  }
  double n = count[0] + count[1] + count[2], v = vol[0] + vol[1] + vol[2];
  if (zero_principal) *zero_principal = v <= 0;
  Fragment f;
  const char* cls[] = {"A", "M", "B"};
  for (int c = 0; c < 3; ++c) f.add(std::string("Count_") + cls[c], count[static_cast<std::size_t>(c)]);
  for (int c = 0; c < 3; ++c) f.add(std::string("Frac_") + cls[c], count[static_cast<std::size_t>(c)] / n);
  for (int c = 0; c < 3; ++c) f.add(std::string("Vol_") + cls[c], vol[static_cast<std::size_t>(c)]);
  for (int c = 0; c < 3; ++c)
    f.add(std::string("VolFrac_") + cls[c], v > 0 ? vol[static_cast<std::size_t>(c)] / v : 0.0);
  f.add("HasSSUP", ssup);
  return f;
}

/// One-hot of the largest topic weight; ties go to the lowest index.
inline Fragment attach_topic_indicator(const std::vector<double>& weights, int k) {
  if (static_cast<int>(weights.size()) != k) throw InvalidInput("attach_topic_indicator: weight vector length != k");
  if (k < 1) throw InvalidInput("attach_topic_indicator: k must be >= 1");
  int best = 0;
  for (int j = 1; j < k; ++j)
    if (weights[static_cast<std::size_t>(j)] > weights[static_cast<std::size_t>(best)]) best = j;
  Fragment f;
  for (int j = 0; j < k; ++j) f.add(topic_column(j), j == best);
  return f;
}

// ---------------------------------------------------------------------------
// Matrix

enum class Tier { security, prospectus, comprehensive };

inline const char* to_string(Tier t) {
  switch (t) {
    case Tier::security: return "security";
    case Tier::prospectus: return "prospectus";
    case Tier::comprehensive: return "comprehensive";
  }
  return "?";
}

inline Tier parse_tier(const std::string& s) {
  if (s == "security") return Tier::security;
  if (s == "prospectus") return Tier::prospectus;
  if (s == "comprehensive") return Tier::comprehensive;
  throw InvalidInput("unknown tier '" + s + "'");
}

struct ColumnInfo {
  std::string name;
  Tier tier = Tier::security;
  std::string type;   // binary, continuous, fraction, count
  std::string group;  // one-hot group or feature family
};

struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> groups;  // prospectus id per row
  std::vector<ColumnInfo> columns;
  Eigen::MatrixXd values;

  std::size_t rows() const { return row_ids.size(); }
  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns) out.push_back(c.name);
    return out;
  }
  int column(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j].name == name) return static_cast<int>(j);
    return -1;
  }
};

namespace detail {

inline ColumnInfo describe_column(const std::string& name, const FlagRegistry& registry) {
  if (name == "IsA" || name == "IsB") return {name, Tier::security, "binary", "class"};
  if (name == "MTG.ORIG.AMT") return {name, Tier::security, "continuous", "amount"};
  if (name.rfind("MIR_", 0) == 0) return {name, Tier::security, "binary", "mir"};
  if (registry.contains(name)) return {name, Tier::security, "binary", "flag"};
  if (name.size() == 5 && name[0] == 'Y') return {name, Tier::security, "binary", "year"};
  if (name.rfind("Topic", 0) == 0) return {name, Tier::comprehensive, "binary", "topic"};
  if (name == "HasSSUP") return {name, Tier::prospectus, "binary", "prospectus"};
  if (name.rfind("Count_", 0) == 0) return {name, Tier::prospectus, "count", "prospectus"};
  if (name.rfind("Frac_", 0) == 0 || name.rfind("VolFrac_", 0) == 0)
    return {name, Tier::prospectus, "fraction", "prospectus"};
  if (name.rfind("Vol_", 0) == 0) return {name, Tier::prospectus, "continuous", "prospectus"};
  throw InvalidInput("unknown feature column '" + name + "'");
}

}  // namespace detail

/// Rows follow `records`. Prospectus fragments are keyed by prospectus id and
/// required from the prospectus tier up; topic fragments likewise at the
/// comprehensive tier.
inline FeatureMatrix assemble_matrix(const std::vector<SecurityRecord>& records, const FlagRegistry& registry,
                                     const std::map<std::string, Fragment>& prospectus_fragments,
                                     const std::map<std::string, Fragment>& topic_fragments, Tier tier,
                                     const FeatureConfig& cfg = {}) {
  if (records.empty()) throw InvalidInput("assemble_matrix: no security records");
  FeatureMatrix m;
  std::vector<Fragment> rows;
  for (const auto& r : records) {
    Fragment f = build_security_features(r, registry, cfg);
    auto append = [&](const std::map<std::string, Fragment>& frags, const char* what) {
      auto it = frags.find(r.prospectus_id);
      if (it == frags.end())
        throw InvalidInput("security " + r.id + ": no " + what + " features for prospectus " + r.prospectus_id);
      f.names.insert(f.names.end(), it->second.names.begin(), it->second.names.end());
      f.values.insert(f.values.end(), it->second.values.begin(), it->second.values.end());
    };
    if (tier != Tier::security) append(prospectus_fragments, "prospectus");
    if (tier == Tier::comprehensive) append(topic_fragments, "topic");
    if (!rows.empty() && f.names != rows.front().names)
      throw InvalidInput("security " + r.id + ": inconsistent feature columns");
    m.row_ids.push_back(r.id);
    m.groups.push_back(r.prospectus_id);
    rows.push_back(std::move(f));
  }
  std::set<std::string> seen;
  for (const auto& n : rows.front().names) {
    if (!seen.insert(n).second) throw InvalidInput("duplicate feature column '" + n + "'");
    m.columns.push_back(detail::describe_column(n, registry));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < m.columns.size(); ++j)
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
  return m;
}

/// Prospectus fragments for every prospectus referenced by `records`.
inline std::map<std::string, Fragment> prospectus_fragments(const std::vector<SecurityRecord>& records,
                                                            std::vector<std::string>* zero_principal = nullptr) {
  std::map<std::string, std::vector<const SecurityRecord*>> by_prospectus;
  for (const auto& r : records) by_prospectus[r.prospectus_id].push_back(&r);
  std::map<std::string, Fragment> out;
  for (const auto& [pid, secs] : by_prospectus) {
    bool zero = false;
    out[pid] = build_prospectus_features(secs, &zero);
    if (zero && zero_principal) zero_principal->push_back(pid);
  }
  return out;
}

// ---------------------------------------------------------------------------
// I/O

/// security_id, prospectus_id, class, year, mir, principal, flags (';'-separated)
inline std::vector<SecurityRecord> read_securities(const std::string& path) {
  csv::Table t(csv::read_file(path), path);
  auto id = t.column("security_id"), pid = t.column("prospectus_id"), cls = t.column("class"),
       year = t.column("year"), mir = t.column("mir"), amt = t.column("principal"), flags = t.column("flags");
  std::vector<SecurityRecord> out;
  for (std::size_t r = 0; r < t.rows().size(); ++r) {
    SecurityRecord s;
    s.id = t.cell(r, id);
    s.prospectus_id = t.cell(r, pid);
    s.cls = parse_class(t.cell(r, cls));
    s.year = static_cast<int>(csv::parse_int(t.cell(r, year), "year"));
    if (!t.cell(r, mir).empty()) s.mir_raw = t.cell(r, mir);
    s.original_principal = csv::parse_double(t.cell(r, amt), "principal");
    std::string fl = t.cell(r, flags);
    std::size_t start = 0;
    while (start <= fl.size() && !fl.empty()) {
      auto end = fl.find(';', start);
      if (end == std::string::npos) end = fl.size();
      if (end > start) s.flags.insert(fl.substr(start, end - start));
      start = end + 1;
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_securities(std::ostream& out, const std::vector<SecurityRecord>& records) {
  csv::write_row(out, {"security_id", "prospectus_id", "class", "year", "mir", "principal", "flags"});
  for (const auto& s : records) {
    std::string fl;
    for (const auto& f : s.flags) fl += (fl.empty() ? "" : ";") + f;
    csv::write_row(out, {s.id, s.prospectus_id, to_string(s.cls), std::to_string(s.year), s.mir_raw.value_or(""),
                         csv::exact(s.original_principal), fl});
  }
}

inline void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
  std::vector<std::string> header = {"security_id", "prospectus_id"};
  for (const auto& c : m.columns) header.push_back(c.name);
  csv::write_row(out, header);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row = {m.row_ids[i], m.groups[i]};
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) row.push_back(csv::exact(m.values(static_cast<Eigen::Index>(i), j)));
    csv::write_row(out, row);
  }
}

inline nlohmann::json matrix_manifest(const FeatureMatrix& m, Tier tier, const FeatureConfig& cfg) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : m.columns) {
    nlohmann::json j = {{"name", c.name}, {"tier", to_string(c.tier)}, {"type", c.type}, {"group", c.group}};
    if (c.group == "class") j["baseline"] = "M";
    if (c.group == "year") j["baseline"] = year_column(cfg.baseline_year);
    cols.push_back(j);
  }
  return {{"format_version", 1},
          {"tier", to_string(tier)},
          {"rows", m.rows()},
          {"principal_unit", cfg.principal_unit},
          {"columns", cols}};
}

inline FeatureMatrix read_matrix_csv(const std::string& path, const FlagRegistry& registry) {
  csv::Table t(csv::read_file(path), path);
  const auto& h = t.header();
  if (h.size() < 3 || h[0] != "security_id" || h[1] != "prospectus_id")
    throw InvalidInput(path + ": expected security_id, prospectus_id, then feature columns");
  FeatureMatrix m;
  for (std::size_t j = 2; j < h.size(); ++j) m.columns.push_back(detail::describe_column(h[j], registry));
  m.values.resize(static_cast<Eigen::Index>(t.rows().size()), static_cast<Eigen::Index>(h.size() - 2));
  for (std::size_t r = 0; r < t.rows().size(); ++r) {
    m.row_ids.push_back(t.cell(r, 0));
    m.groups.push_back(t.cell(r, 1));
    for (std::size_t j = 2; j < h.size(); ++j)
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j - 2)) = csv::parse_double(t.cell(r, j), h[j]);
  }
  return m;
}

}  // namespace rmbs
