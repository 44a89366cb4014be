#pragma once

// Dictionary NER over prospectus text, entity resolution to standardized
// institution names, role keyword extraction, role-to-institution pairing,
// and agreement filtering between two independent extractors.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmbs/corpus.hpp"
#include "rmbs/csv.hpp"
#include "rmbs/error.hpp"

namespace rmbs {

namespace text {

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

/// Lowercase, drop punctuation, collapse whitespace, trim.
inline std::string normalize_name(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else if (is_word_char(c)) {
      if (pending_space) out += ' ';
      pending_space = false;
      out += lower(c);
    }
  }
  return out;
}

/// Case-insensitive match of `term` at `pos`; a space in `term` matches one or
/// more whitespace characters. Returns the end offset, or npos.
inline std::size_t match_term(std::string_view s, std::size_t pos, std::string_view term) {
  std::size_t i = pos;
  for (std::size_t j = 0; j < term.size(); ++j) {
    if (term[j] == ' ') {
      if (i >= s.size() || !is_space(s[i])) return std::string_view::npos;
      while (i < s.size() && is_space(s[i])) ++i;
      continue;
    }
    if (i >= s.size() || lower(s[i]) != lower(term[j])) return std::string_view::npos;
    ++i;
  }
  return i;
}

inline bool boundary_before(std::string_view s, std::size_t pos) {
  return pos == 0 || !is_word_char(s[pos - 1]) || !is_word_char(s[pos]);
}
inline bool boundary_after(std::string_view s, std::size_t end) {
  return end >= s.size() || end == 0 || !is_word_char(s[end]) || !is_word_char(s[end - 1]);
}

/// Offsets where blank-line-delimited blocks begin.
inline std::vector<std::size_t> block_starts(std::string_view s) {
  std::vector<std::size_t> starts{0};
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '\n') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != '\n' && is_space(s[j])) ++j;
      if (j < s.size() && s[j] == '\n') {
        while (j < s.size() && is_space(s[j])) ++j;
        starts.push_back(j);
        i = j;
        continue;
      }
    }
    ++i;
  }
  return starts;
}

inline std::size_t block_of(const std::vector<std::size_t>& starts, std::size_t pos) {
  auto it = std::upper_bound(starts.begin(), starts.end(), pos);
  return static_cast<std::size_t>(it - starts.begin()) - 1;
}

}  // namespace text

/// Root and suffix term dictionaries plus the root -> standardized name map.
class RootSuffixDictionary {
 public:
  RootSuffixDictionary() = default;

  /// `roots` maps a root surface form to a standardized institution id.
  RootSuffixDictionary(const std::vector<std::pair<std::string, std::string>>& roots,
                       const std::vector<std::string>& suffixes,
                       const std::map<std::string, std::string>& display_names = {}) {
    if (roots.empty()) throw InvalidInput("root dictionary is empty");
    if (suffixes.empty()) throw InvalidInput("suffix dictionary is empty");
    for (const auto& [root, id] : roots) {
      if (root.empty() || id.empty()) throw InvalidInput("empty root or standardized id");
      auto dn = display_names.find(id);
      institutions_.emplace(id, FinancialInstitution{id, dn == display_names.end() ? id : dn->second});
      roots_.push_back(collapse(root));
      standard_names_[text::normalize_name(root)] = id;
    }
    std::sort(roots_.begin(), roots_.end());
    roots_.erase(std::unique(roots_.begin(), roots_.end()), roots_.end());
    for (const auto& s : suffixes) {
      if (s.empty()) continue;
      suffixes_.push_back(collapse(s));
      normalized_suffixes_.push_back(text::normalize_name(s));
    }
    // Longest suffix first so stripping and matching prefer the longest form.
    auto by_len = [](const std::string& a, const std::string& b) {
      return a.size() != b.size() ? a.size() > b.size() : a < b;
    };
    std::sort(suffixes_.begin(), suffixes_.end(), by_len);
    std::sort(normalized_suffixes_.begin(), normalized_suffixes_.end(), by_len);
  }

  /// Roots CSV (root, standardized_id[, display_name]) and one suffix per line.
  static RootSuffixDictionary load(const std::string& roots_csv, const std::string& suffix_file) {
    csv::Table t(csv::read_file(roots_csv), roots_csv);
    auto rc = t.column("root");
    auto ic = t.column("standardized_id");
    std::optional<std::size_t> dc;
    if (t.has_column("display_name")) dc = t.column("display_name");
    std::vector<std::pair<std::string, std::string>> roots;
    std::map<std::string, std::string> names;
    for (std::size_t r = 0; r < t.rows().size(); ++r) {
      roots.emplace_back(t.cell(r, rc), t.cell(r, ic));
      if (dc) names[t.cell(r, ic)] = t.cell(r, *dc);
    }
    std::ifstream in(suffix_file);
    if (!in) throw InvalidInput("cannot open " + suffix_file);
    std::vector<std::string> suffixes;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) suffixes.push_back(line);
    }
    return {roots, suffixes, names};
  }

  const std::vector<std::string>& roots() const { return roots_; }
  const std::vector<std::string>& suffixes() const { return suffixes_; }
  const std::vector<std::string>& normalized_suffixes() const { return normalized_suffixes_; }
  const std::map<std::string, std::string>& standard_names() const { return standard_names_; }

  const FinancialInstitution& institution(const std::string& id) const {
    auto it = institutions_.find(id);
    if (it == institutions_.end()) throw InvalidInput("unknown institution id: " + id);
    return it->second;
  }

 private:
  static std::string collapse(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (text::is_space(c)) {
        if (!out.empty() && out.back() != ' ') out += ' ';
      } else {
        out += c;
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
  }

  std::vector<std::string> roots_;
  std::vector<std::string> suffixes_;
  std::vector<std::string> normalized_suffixes_;
  std::map<std::string, std::string> standard_names_;
  std::map<std::string, FinancialInstitution> institutions_;
};

struct MentionSpan {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string raw_text;
  std::string matched_root;
  std::optional<std::string> matched_suffix;
};

struct ExtractedPair {
  Role role;
  std::string raw_name;
  FinancialInstitution standardized;

  RolePair key() const { return {role.name, standardized.id}; }
};

/// All non-overlapping longest matches of root [+ separator + suffix].
/// Overlaps resolve to the longer span, then the earlier start.
inline std::vector<MentionSpan> ner_match(std::string_view doc, const RootSuffixDictionary& dict,
                                          const std::string& doc_id = {}) {
  struct Candidate {
    std::size_t start, end;
    const std::string* root;
    const std::string* suffix;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!text::is_word_char(doc[i]) || !text::boundary_before(doc, i)) continue;
    std::optional<Candidate> best;
    for (const auto& root : dict.roots()) {
      if (text::lower(root[0]) != text::lower(doc[i])) continue;
      std::size_t rend = text::match_term(doc, i, root);
      if (rend == std::string_view::npos || !text::boundary_after(doc, rend)) continue;
      Candidate c{i, rend, &root, nullptr};
      // optional separator: whitespace and at most one comma
      std::size_t j = rend;
      bool comma = false;
      while (j < doc.size() && (doc[j] == ' ' || doc[j] == '\t' || (doc[j] == ',' && !comma))) {
        comma |= doc[j] == ',';
        ++j;
      }
      if (j > rend) {
        for (const auto& suf : dict.suffixes()) {
          std::size_t send = text::match_term(doc, j, suf);
          if (send == std::string_view::npos || !text::boundary_after(doc, send)) continue;
          if (send > c.end) {
            c.end = send;
            c.suffix = &suf;
          }
        }
      }
      if (!best || c.end > best->end ||
          (c.end == best->end && c.root->size() > best->root->size()))
        best = c;
    }
    if (best) cands.push_back(*best);
  }

  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    auto la = a.end - a.start, lb = b.end - b.start;
    return la != lb ? la > lb : a.start < b.start;
  });
  std::vector<Candidate> chosen;
  for (const auto& c : cands) {
    bool overlaps = std::any_of(chosen.begin(), chosen.end(), [&](const Candidate& o) {
      return c.start < o.end && o.start < c.end;
    });
    if (!overlaps) chosen.push_back(c);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const Candidate& a, const Candidate& b) { return a.start < b.start; });

  std::vector<MentionSpan> out;
  for (const auto& c : chosen) {
    MentionSpan m{doc_id, c.start, c.end, std::string(doc.substr(c.start, c.end - c.start)), *c.root, {}};
    if (c.suffix) m.matched_suffix = *c.suffix;
    out.push_back(std::move(m));
  }
  return out;
}

/// Normalized lookup: the full name, then the name with trailing suffixes
/// stripped, then the longest root that prefixes the name at a word boundary.
inline FinancialInstitution resolve_entity(std::string_view raw_name, const RootSuffixDictionary& dict) {
  std::string norm = text::normalize_name(raw_name);
  const auto& names = dict.standard_names();
  auto lookup = [&](const std::string& key) -> std::optional<FinancialInstitution> {
    auto it = names.find(key);
    if (it == names.end()) return std::nullopt;
    return dict.institution(it->second);
  };
  if (norm.empty()) throw UnresolvedEntity(std::string(raw_name));
  if (auto fi = lookup(norm)) return *fi;

  std::string stem = norm;
  for (bool stripped = true; stripped;) {
    stripped = false;
    for (const auto& suf : dict.normalized_suffixes()) {
      if (suf.empty() || stem.size() <= suf.size() + 1) continue;
      if (stem.compare(stem.size() - suf.size(), suf.size(), suf) == 0 &&
          stem[stem.size() - suf.size() - 1] == ' ') {
        stem.resize(stem.size() - suf.size() - 1);
        if (auto fi = lookup(stem)) return *fi;
        stripped = true;
        break;
      }
    }
  }

  const std::string* best = nullptr;
  for (const auto& [root, id] : names) {
    if (norm.size() > root.size() && norm.compare(0, root.size(), root) == 0 && norm[root.size()] == ' ' &&
        (!best || root.size() > best->size()))
      best = &root;
  }
  if (best) return dict.institution(names.at(*best));
  throw UnresolvedEntity(std::string(raw_name));
}

/// Role keyword surface forms (lowercase) -> canonical role.
using KeywordMap = std::map<std::string, Role>;

inline KeywordMap default_role_keywords() {
  KeywordMap m;
  auto add = [&](std::initializer_list<const char*> words, const char* role) {
    for (const char* w : words) m[w] = Role{role};
  };
  add({"issuer", "issuers", "issuing entity", "issuing entities"}, "issuer");
  add({"originator", "originators", "mortgage loan originator"}, "originator");
  add({"seller", "sellers"}, "seller");
  add({"trustee", "indenture trustee", "owner trustee"}, "trustee");
  add({"servicer", "servicers", "master servicer", "primary servicer", "special servicer", "subservicer",
       "sub-servicer"},
      "servicer");
  add({"depositor"}, "depositor");
  add({"sponsor", "sponsors"}, "sponsor");
  add({"securities administrator", "securities administrators"}, "securities administrator");
  add({"custodian", "custodians"}, "custodian");
  add({"swap counterparty", "swap provider"}, "swap counterparty");
  add({"cap counterparty", "cap provider"}, "cap counterparty");
  add({"insurer", "certificate insurer", "note insurer"}, "insurer");
  add({"underwriter", "underwriters"}, "underwriter");
  return m;
}

struct RoleAnchor {
  Role role;
  std::size_t offset = 0;
  std::size_t end = 0;
};

/// Every keyword occurrence at word boundaries; overlapping keywords resolve
/// to the longest, then earliest.
inline std::vector<RoleAnchor> extract_roles(std::string_view doc, const KeywordMap& keywords) {
  std::vector<RoleAnchor> cands;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!text::is_word_char(doc[i]) || !text::boundary_before(doc, i)) continue;
    std::optional<RoleAnchor> best;
    for (const auto& [kw, role] : keywords) {
      if (kw.empty() || text::lower(kw[0]) != text::lower(doc[i])) continue;
      std::size_t end = text::match_term(doc, i, kw);
      if (end == std::string_view::npos || !text::boundary_after(doc, end)) continue;
      if (!best || end > best->end) best = RoleAnchor{role, i, end};
    }
    if (best) cands.push_back(*best);
  }
  std::vector<RoleAnchor> out;
  std::stable_sort(cands.begin(), cands.end(), [](const RoleAnchor& a, const RoleAnchor& b) {
    auto la = a.end - a.offset, lb = b.end - b.offset;
    return la != lb ? la > lb : a.offset < b.offset;
  });
  for (const auto& c : cands) {
    bool overlaps = std::any_of(out.begin(), out.end(),
                                [&](const RoleAnchor& o) { return c.offset < o.end && o.offset < c.end; });
    if (!overlaps) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const RoleAnchor& a, const RoleAnchor& b) { return a.offset < b.offset; });
  return out;
}

struct PairingDiagnostics {
  std::size_t dropped_mentions = 0;
  std::vector<std::string> unresolved_names;
};

struct PairingResult {
  std::vector<ExtractedPair> pairs;
  PairingDiagnostics diagnostics;
};

/// Pairs each mention with the nearest preceding role anchor in its
/// blank-line-delimited block. Mentions without an anchor are dropped;
/// mentions that fail resolution are reported as unresolved.
inline PairingResult pair_roles(std::string_view doc, const std::vector<MentionSpan>& mentions,
                                const std::vector<RoleAnchor>& anchors, const RootSuffixDictionary& dict) {
  auto blocks = text::block_starts(doc);
  // Anchors inside a mention are part of a name, not a role label.
  std::vector<RoleAnchor> usable;
  for (const auto& a : anchors) {
    bool inside = std::any_of(mentions.begin(), mentions.end(),
                              [&](const MentionSpan& m) { return a.offset < m.end && m.start < a.end; });
    if (!inside) usable.push_back(a);
  }
  PairingResult out;
  for (const auto& m : mentions) {
    const RoleAnchor* nearest = nullptr;
    for (const auto& a : usable) {
      if (a.end > m.start) break;
      if (text::block_of(blocks, a.offset) == text::block_of(blocks, m.start)) nearest = &a;
    }
    if (!nearest) {
      ++out.diagnostics.dropped_mentions;
      continue;
    }
    try {
      out.pairs.push_back({nearest->role, m.raw_text, resolve_entity(m.raw_text, dict)});
    } catch (const UnresolvedEntity& e) {
      out.diagnostics.unresolved_names.push_back(e.raw_name());
    }
  }
  return out;
}

/// Pairs of `a` whose (role, standardized id) also occurs in `b`, in `a`'s order.
inline std::vector<ExtractedPair> agreement_filter(const std::vector<ExtractedPair>& a,
                                                   const std::vector<ExtractedPair>& b) {
  std::set<RolePair> keys;
  for (const auto& p : b) keys.insert(p.key());
  std::vector<ExtractedPair> out;
  for (const auto& p : a)
    if (keys.count(p.key())) out.push_back(p);
  return out;
}

/// Pluggable extractor; the pipeline intersects the output of two of them.
class PairExtractor {
 public:
  virtual ~PairExtractor() = default;
  virtual PairingResult extract(const std::string& doc_id, std::string_view doc) const = 0;
};

class DictionaryExtractor : public PairExtractor {
 public:
  DictionaryExtractor(std::shared_ptr<const RootSuffixDictionary> dict, KeywordMap keywords)
      : dict_(std::move(dict)), keywords_(std::move(keywords)) {}

  PairingResult extract(const std::string& doc_id, std::string_view doc) const override {
    return pair_roles(doc, ner_match(doc, *dict_, doc_id), extract_roles(doc, keywords_), *dict_);
  }

 private:
  std::shared_ptr<const RootSuffixDictionary> dict_;
  KeywordMap keywords_;
};

/// Second-opinion extractor: maximal runs of capitalized words become
/// candidate names, kept when resolution succeeds.
class CapitalizedPhraseExtractor : public PairExtractor {
 public:
  CapitalizedPhraseExtractor(std::shared_ptr<const RootSuffixDictionary> dict, KeywordMap keywords)
      : dict_(std::move(dict)), keywords_(std::move(keywords)) {}

  std::vector<MentionSpan> phrases(const std::string& doc_id, std::string_view doc) const {
    std::vector<MentionSpan> out;
    std::size_t i = 0;
    auto word_end = [&](std::size_t p) {
      while (p < doc.size() && (text::is_word_char(doc[p]) || doc[p] == '.' || doc[p] == '&' ||
                                doc[p] == '-' || doc[p] == '\''))
        ++p;
      return p;
    };
    while (i < doc.size()) {
      if (!std::isupper(static_cast<unsigned char>(doc[i])) || !text::boundary_before(doc, i)) {
        ++i;
        continue;
      }
      std::size_t start = i, end = word_end(i);
      for (;;) {
        std::size_t j = end;
        while (j < doc.size() && (doc[j] == ' ' || doc[j] == '\t')) ++j;
        // a gap of two or more blanks is a table column boundary
        if (j == end || j - end > 1 || j >= doc.size()) break;
        bool cap = std::isupper(static_cast<unsigned char>(doc[j])) || doc[j] == '&';
        bool connector = doc.compare(j, 3, "of ") == 0;
        if (!cap && !connector) break;
        end = word_end(j);
      }
      std::size_t trimmed = end;
      while (trimmed > start && (doc[trimmed - 1] == '.' || doc[trimmed - 1] == '-') &&
             !(trimmed >= 2 && std::isupper(static_cast<unsigned char>(doc[trimmed - 2]))))
        --trimmed;
      out.push_back({doc_id, start, trimmed, std::string(doc.substr(start, trimmed - start)), {}, {}});
      i = end;
    }
    return out;
  }

  PairingResult extract(const std::string& doc_id, std::string_view doc) const override {
    std::vector<MentionSpan> resolvable;
    PairingResult out;
    for (auto& m : phrases(doc_id, doc)) {
      try {
        resolve_entity(m.raw_text, *dict_);
        resolvable.push_back(std::move(m));
      } catch (const UnresolvedEntity&) {
        // Role labels and ordinary capitalized prose land here.
      }
    }
    auto anchors = extract_roles(doc, keywords_);
    return pair_roles(doc, resolvable, anchors, *dict_);
  }

 private:
  std::shared_ptr<const RootSuffixDictionary> dict_;
  KeywordMap keywords_;
};

struct DocumentExtraction {
  std::string doc_id;
  std::vector<ExtractedPair> pairs;
  PairingDiagnostics diagnostics;
};

/// Runs both extractors and keeps the pairs they agree on; diagnostics come
/// from the primary extractor.
inline DocumentExtraction extract_document(const std::string& doc_id, std::string_view doc,
                                           const PairExtractor& primary, const PairExtractor& secondary) {
  auto a = primary.extract(doc_id, doc);
  auto b = secondary.extract(doc_id, doc);
  return {doc_id, agreement_filter(a.pairs, b.pairs), std::move(a.diagnostics)};
}

inline nlohmann::json extraction_to_json(const DocumentExtraction& d) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : d.pairs)
    pairs.push_back({{"role", p.role.name}, {"raw_name", p.raw_name}, {"fi", p.standardized.id}});
  return {{"doc_id", d.doc_id}, {"pairs", pairs}};
}

/// Collapses an extraction to a corpus record: one token per occurrence.
inline DocumentRecord to_document_record(const DocumentExtraction& d, int year) {
  std::map<RolePair, long> counts;
  for (const auto& p : d.pairs) ++counts[p.key()];
  DocumentRecord r{d.doc_id, year, {}, {}};
  for (const auto& [k, c] : counts) r.pairs.push_back({k, c});
  return r;
}

}  // namespace rmbs
