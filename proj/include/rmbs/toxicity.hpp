#pragma once

// Institution and community toxicity labels, and their agreement with the
// signs of fitted topic coefficients.

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "rmbs/csv.hpp"
#include "rmbs/error.hpp"
#include "rmbs/features.hpp"
#include "rmbs/glm/lasso.hpp"
#include "rmbs/topics/analysis.hpp"

namespace rmbs {

struct InstitutionEvidence {
  std::string fi;
  bool bankruptcy_or_fines = false;
  bool involuntary_merger = false;
  bool tarp_funds = false;
  bool subprime_distress = false;
  std::string notes;
};

enum class InstitutionToxicity { toxic, partial, none };

inline const char* to_string(InstitutionToxicity t) {
  switch (t) {
    case InstitutionToxicity::toxic: return "toxic";
    case InstitutionToxicity::partial: return "partial";
    case InstitutionToxicity::none: return "none";
  }
  return "?";
}

inline InstitutionToxicity label_institution(const InstitutionEvidence& e) {
  if (e.bankruptcy_or_fines || e.involuntary_merger) return InstitutionToxicity::toxic;
  if (e.tarp_funds || e.subprime_distress) return InstitutionToxicity::partial;
  return InstitutionToxicity::none;
}

/// fi_id, bankruptcy_or_fines, involuntary_merger, tarp_funds, subprime_distress, notes
inline std::vector<InstitutionEvidence> read_evidence(const std::string& path) {
  csv::Table t(csv::read_file(path), path);
  auto fi = t.column("fi_id"), b = t.column("bankruptcy_or_fines"), m = t.column("involuntary_merger"),
       tarp = t.column("tarp_funds"), s = t.column("subprime_distress");
  std::size_t notes = t.has_column("notes") ? t.column("notes") : static_cast<std::size_t>(-1);
  std::vector<InstitutionEvidence> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows().size(); ++r) {
    InstitutionEvidence e;
    e.fi = t.cell(r, fi);
    if (e.fi.empty()) throw InvalidInput(path + ": empty fi_id on data row " + std::to_string(r + 1));
    if (!seen.insert(e.fi).second) throw InvalidInput(path + ": duplicate fi_id " + e.fi);
    e.bankruptcy_or_fines = csv::parse_flag(t.cell(r, b), "bankruptcy_or_fines");
    e.involuntary_merger = csv::parse_flag(t.cell(r, m), "involuntary_merger");
    e.tarp_funds = csv::parse_flag(t.cell(r, tarp), "tarp_funds");
    e.subprime_distress = csv::parse_flag(t.cell(r, s), "subprime_distress");
    if (notes != static_cast<std::size_t>(-1)) e.notes = t.cell(r, notes);
    out.push_back(std::move(e));
  }
  return out;
}

inline void write_evidence(std::ostream& out, const std::vector<InstitutionEvidence>& rows) {
  csv::write_row(out, {"fi_id", "bankruptcy_or_fines", "involuntary_merger", "tarp_funds", "subprime_distress", "notes"});
  for (const auto& e : rows)
    csv::write_row(out, {e.fi, e.bankruptcy_or_fines ? "1" : "0", e.involuntary_merger ? "1" : "0",
                         e.tarp_funds ? "1" : "0", e.subprime_distress ? "1" : "0", e.notes});
}

inline std::map<std::string, InstitutionToxicity> label_institutions(const std::vector<InstitutionEvidence>& ev) {
  std::map<std::string, InstitutionToxicity> out;
  for (const auto& e : ev) out[e.fi] = label_institution(e);
  return out;
}

// ---------------------------------------------------------------------------
// Communities

enum class CommunityToxicity { toxic, partial, non_toxic, excluded };

inline const char* to_string(CommunityToxicity t) {
  switch (t) {
    case CommunityToxicity::toxic: return "toxic";
    case CommunityToxicity::partial: return "partial";
    case CommunityToxicity::non_toxic: return "non_toxic";
    case CommunityToxicity::excluded: return "excluded";
  }
  return "?";
}

inline CommunityToxicity parse_community_toxicity(const std::string& s) {
  for (auto t : {CommunityToxicity::toxic, CommunityToxicity::partial, CommunityToxicity::non_toxic,
                 CommunityToxicity::excluded})
    if (s == to_string(t)) return t;
  throw InvalidInput("unknown community toxicity '" + s + "'");
}

/// An institution among a topic's top terms, with the roles and years it
/// appears in.
struct ProminentInstitution {
  std::string fi;
  std::set<std::string> roles;
  std::set<int> years;
};

struct ToxicityRule {
  std::set<std::string> key_roles = {"issuer", "originator"};
  std::size_t min_toxic_institutions = 2;
  std::size_t many_roles = 3;
  std::size_t multiple_years = 2;
  std::size_t min_prospectuses = 40;
};

struct CommunityLabel {
  int topic = 0;  // zero-based
  CommunityToxicity value = CommunityToxicity::excluded;
  std::vector<std::string> evidence;  // "fi:label" for toxic and partial institutions
};

/// Toxic: two or more toxic institutions in a key role, or one in a key role
/// that also holds many roles over multiple years. Non-toxic: no toxic or
/// partial institution at all. Partial otherwise.
inline CommunityLabel label_community(int topic, const std::vector<ProminentInstitution>& prominent,
                                      const std::map<std::string, InstitutionToxicity>& labels,
                                      std::size_t n_prospectuses, const ToxicityRule& rule = {}) {
  CommunityLabel out;
  out.topic = topic;
  if (n_prospectuses < rule.min_prospectuses || prominent.empty()) return out;

  auto label_of = [&](const std::string& fi) {
    auto it = labels.find(fi);
    return it == labels.end() ? InstitutionToxicity::none : it->second;
  };
  std::set<std::string> key_toxic;
  bool broad = false, any_flagged = false;
  for (const auto& p : prominent) {
    auto l = label_of(p.fi);
    if (l == InstitutionToxicity::none) continue;
    any_flagged = true;
    out.evidence.push_back(p.fi + ":" + to_string(l));
    if (l != InstitutionToxicity::toxic) continue;
    bool key = std::any_of(p.roles.begin(), p.roles.end(), [&](const auto& r) { return rule.key_roles.count(r) > 0; });
    if (!key) continue;
    key_toxic.insert(p.fi);
    if (p.roles.size() >= rule.many_roles && p.years.size() >= rule.multiple_years) broad = true;
  }
  if (key_toxic.size() >= rule.min_toxic_institutions || broad) out.value = CommunityToxicity::toxic;
  else if (!any_flagged) out.value = CommunityToxicity::non_toxic;
  else out.value = CommunityToxicity::partial;
  return out;
}

/// Institutions behind a topic's `n` most probable time-averaged terms; years
/// are the slices in which the term is among the slice's top `n`.
inline std::vector<ProminentInstitution> prominent_institutions(const topics::DtmFit& fit, int topic, std::size_t n = 10) {
  using topics::time_averaged_beta;
  Eigen::MatrixXd avg = time_averaged_beta(fit);
  if (topic < 0 || topic >= avg.rows()) throw std::out_of_range("prominent_institutions: topic index");
  auto top_of = [&](const Eigen::RowVectorXd& row) {
    std::vector<int> idx(static_cast<std::size_t>(row.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return row[a] > row[b]; });
    idx.resize(std::min(n, idx.size()));
    return idx;
  };
  std::map<std::string, ProminentInstitution> by_fi;
  for (int w : top_of(avg.row(topic))) {
    const auto& pair = fit.vocabulary.at(w);
    auto& p = by_fi[pair.fi];
    p.fi = pair.fi;
    p.roles.insert(pair.role);
    for (int t = 0; t < fit.num_slices(); ++t) {
      auto top = top_of(fit.beta(t).row(topic));
      if (std::find(top.begin(), top.end(), w) != top.end()) p.years.insert(fit.years[static_cast<std::size_t>(t)]);
    }
  }
  std::vector<ProminentInstitution> out;
  for (auto& [fi, p] : by_fi) out.push_back(std::move(p));
  return out;
}

// ---------------------------------------------------------------------------
// Coefficient signs

struct SignRow {
  int topic = 0;
  CommunityToxicity toxicity = CommunityToxicity::excluded;
  int fe_sign = 0;
  int fne_sign = 0;
  bool consistent = true;
};

inline const char* sign_symbol(int s) { return s > 0 ? "+" : s < 0 ? "-" : "0"; }

/// Non-toxic topics should not raise risk and toxic ones should not lower it;
/// partial and excluded topics are not constrained.
inline bool sign_consistent(CommunityToxicity t, int fe, int fne) {
  switch (t) {
    case CommunityToxicity::non_toxic: return fe <= 0 && fne <= 0;
    case CommunityToxicity::toxic: return fe >= 0 && fne >= 0;
    default: return true;
  }
}

inline std::vector<SignRow> compare_signs(const std::vector<CommunityLabel>& communities, const glm::LassoFit& fe,
                                          const glm::LassoFit& fne) {
  std::vector<SignRow> out;
  for (const auto& c : communities) {
    std::string col = topic_column(c.topic);
    for (const auto* f : {&fe, &fne})
      if (std::find(f->columns.begin(), f->columns.end(), col) == f->columns.end())
        throw InvalidInput("compare_signs: fit has no column " + col);
    auto sign = [](double v) { return v > 0 ? 1 : v < 0 ? -1 : 0; };
    SignRow r{c.topic, c.value, sign(fe.coef(col)), sign(fne.coef(col)), true};
    r.consistent = sign_consistent(c.value, r.fe_sign, r.fne_sign);
    out.push_back(r);
  }
  return out;
}

struct CommunitySummary {
  CommunityLabel label;
  std::string dynamics;  // stable, evolving, dynamic
  std::size_t prospectuses = 0;
  std::set<int> years;
  std::vector<ProminentInstitution> prominent;
};

/// topic, type, prospectuses, years, supply_chain, toxic, evidence, fe, fne, consistent
inline void write_community_report(std::ostream& out, const std::vector<CommunitySummary>& rows,
                                   const std::vector<SignRow>& signs) {
  std::map<int, const SignRow*> by_topic;
  for (const auto& s : signs) by_topic[s.topic] = &s;
  csv::write_row(out, {"topic", "type", "prospectuses", "years", "supply_chain", "toxic", "evidence", "fe", "fne",
                       "consistent"});
  for (const auto& r : rows) {
    std::string years, chain, ev;
    for (int y : r.years) years += (years.empty() ? "" : ";") + std::to_string(y);
    for (const auto& p : r.prominent)
      for (const auto& role : p.roles)
        if (role == "issuer" || role == "originator") chain += (chain.empty() ? "" : ";") + p.fi + " " + role;
    for (const auto& e : r.label.evidence) ev += (ev.empty() ? "" : ";") + e;
    auto it = by_topic.find(r.label.topic);
    const SignRow* s = it == by_topic.end() ? nullptr : it->second;
    csv::write_row(out, {topic_column(r.label.topic), r.dynamics, std::to_string(r.prospectuses), years, chain,
                         to_string(r.label.value), ev, s ? sign_symbol(s->fe_sign) : "",
                         s ? sign_symbol(s->fne_sign) : "", s ? (s->consistent ? "1" : "0") : ""});
  }
}

}  // namespace rmbs
