#pragma once

// Document/corpus model: prospectuses as bags of (role, institution) pairs,
// grouped into annual slices over a shared vocabulary.

#include <algorithm>
#include <compare>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmbs/csv.hpp"
#include "rmbs/error.hpp"

namespace rmbs {

struct FinancialInstitution {
  std::string id;
  std::string display_name;

  friend bool operator==(const FinancialInstitution& a, const FinancialInstitution& b) {
    return a.id == b.id;
  }
};

/// Canonical lowercase role token ("issuer", "servicer", ...).
struct Role {
  std::string name;

  auto operator<=>(const Role&) const = default;
};

/// The thirteen roles of the prospectus role distribution table; the registry
/// is extensible by callers that need more.
inline const std::vector<std::string>& seeded_roles() {
  static const std::vector<std::string> roles = {
      "issuer",   "originator",      "seller",    "trustee",
      "servicer", "depositor",       "sponsor",   "securities administrator",
      "custodian", "swap counterparty", "cap counterparty", "insurer",
      "underwriter"};
  return roles;
}

class RoleRegistry {
 public:
  RoleRegistry() : names_(seeded_roles().begin(), seeded_roles().end()) {}

  void add(const std::string& name) { names_.insert(name); }
  bool contains(const std::string& name) const { return names_.count(name) > 0; }
  const std::set<std::string>& names() const { return names_; }

 private:
  std::set<std::string> names_;
};

/// A vocabulary entry: one institution acting in one role.
struct RolePair {
  std::string role;
  std::string fi;

  auto operator<=>(const RolePair&) const = default;
};

struct RoleFiToken {
  RolePair pair;
  long count = 1;
};

/// Index into a Vocabulary plus its (possibly weighted) occurrence count.
struct TokenCount {
  int word = 0;
  long count = 0;

  friend bool operator==(const TokenCount&, const TokenCount&) = default;
};

struct ProspectusDoc {
  std::string id;
  int year = 0;
  std::vector<TokenCount> tokens;  // sorted by word index, unique
  std::vector<std::string> security_ids;

  long total_count() const {
    long n = 0;
    for (const auto& t : tokens) n += t.count;
    return n;
  }
};

/// Ordered set of role pairs; index order is lexicographic on (role, fi).
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<RolePair> pairs) : pairs_(std::move(pairs)) {
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
    for (std::size_t i = 0; i < pairs_.size(); ++i) index_.emplace(pairs_[i], static_cast<int>(i));
  }

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const RolePair& at(int i) const { return pairs_.at(static_cast<std::size_t>(i)); }
  const std::vector<RolePair>& pairs() const { return pairs_; }

  /// -1 when absent.
  int find(const RolePair& p) const {
    auto it = index_.find(p);
    return it == index_.end() ? -1 : it->second;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.pairs_ == b.pairs_; }

 private:
  std::vector<RolePair> pairs_;
  std::map<RolePair, int> index_;
};

struct TimeSlice {
  int year = 0;
  std::vector<ProspectusDoc> docs;
};

class TimeSlicedCorpus {
 public:
  TimeSlicedCorpus() = default;
  TimeSlicedCorpus(std::vector<TimeSlice> slices, Vocabulary vocab)
      : slices_(std::move(slices)), vocab_(std::move(vocab)) {}

  const std::vector<TimeSlice>& slices() const { return slices_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  std::size_t num_docs() const {
    std::size_t n = 0;
    for (const auto& s : slices_) n += s.docs.size();
    return n;
  }
  bool empty() const { return num_docs() == 0; }

  std::vector<int> years() const {
    std::vector<int> ys;
    for (const auto& s : slices_) ys.push_back(s.year);
    return ys;
  }

  /// All documents in slice order.
  std::vector<const ProspectusDoc*> documents() const {
    std::vector<const ProspectusDoc*> out;
    for (const auto& s : slices_)
      for (const auto& d : s.docs) out.push_back(&d);
    return out;
  }

  long total_mass() const {
    long n = 0;
    for (const auto& s : slices_)
      for (const auto& d : s.docs) n += d.total_count();
    return n;
  }

 private:
  std::vector<TimeSlice> slices_;
  Vocabulary vocab_;
};

/// One input line: a document with its extracted pairs.
struct DocumentRecord {
  std::string id;
  int year = 0;
  std::vector<RoleFiToken> pairs;
  std::vector<std::string> security_ids;
};

struct YearRange {
  int first = 2002;
  int last = 2007;

  bool contains(int y) const { return y >= first && y <= last; }
};

namespace detail {

inline std::vector<TokenCount> merge_tokens(std::map<int, long> counts) {
  std::vector<TokenCount> out;
  out.reserve(counts.size());
  for (const auto& [w, c] : counts) out.push_back({w, c});
  return out;
}

}  // namespace detail

/// Groups records into ascending annual slices over the union vocabulary.
/// Years without documents get no slice.
inline TimeSlicedCorpus build_corpus(const std::vector<DocumentRecord>& records,
                                     YearRange years = {}) {
  std::unordered_set<std::string> seen;
  std::vector<RolePair> all_pairs;
  for (const auto& r : records) {
    if (r.id.empty()) throw InvalidInput("document with empty id");
    if (!seen.insert(r.id).second) throw DuplicateDocument(r.id);
    if (!years.contains(r.year))
      throw InvalidInput("document " + r.id + ": year " + std::to_string(r.year) +
                         " outside [" + std::to_string(years.first) + ", " +
                         std::to_string(years.last) + "]");
    if (r.pairs.empty()) throw InvalidInput("document " + r.id + " has no (role, fi) pairs");
    for (const auto& t : r.pairs) {
      if (t.count < 1) throw InvalidInput("document " + r.id + ": token count must be >= 1");
      if (t.pair.role.empty() || t.pair.fi.empty())
        throw InvalidInput("document " + r.id + ": empty role or fi");
      all_pairs.push_back(t.pair);
    }
  }
  Vocabulary vocab(std::move(all_pairs));

  std::map<int, std::vector<ProspectusDoc>> by_year;
  for (const auto& r : records) {
    std::map<int, long> counts;
    for (const auto& t : r.pairs) counts[vocab.find(t.pair)] += t.count;
    by_year[r.year].push_back({r.id, r.year, detail::merge_tokens(std::move(counts)), r.security_ids});
  }
  std::vector<TimeSlice> slices;
  for (auto& [y, docs] : by_year) slices.push_back({y, std::move(docs)});
  return {std::move(slices), std::move(vocab)};
}

namespace detail {

/// Rebuilds a corpus keeping only listed documents and used pairs.
inline TimeSlicedCorpus compact(const TimeSlicedCorpus& corpus,
                                const std::vector<std::vector<ProspectusDoc>>& kept) {
  std::vector<RolePair> used;
  for (const auto& docs : kept)
    for (const auto& d : docs)
      for (const auto& t : d.tokens) used.push_back(corpus.vocabulary().at(t.word));
  Vocabulary vocab(std::move(used));
  std::vector<TimeSlice> slices;
  for (std::size_t s = 0; s < kept.size(); ++s) {
    if (kept[s].empty()) continue;
    TimeSlice slice{corpus.slices()[s].year, {}};
    for (const auto& d : kept[s]) {
      std::map<int, long> counts;
      for (const auto& t : d.tokens) counts[vocab.find(corpus.vocabulary().at(t.word))] += t.count;
      slice.docs.push_back({d.id, d.year, merge_tokens(std::move(counts)), d.security_ids});
    }
    slices.push_back(std::move(slice));
  }
  return {std::move(slices), std::move(vocab)};
}

}  // namespace detail

/// Drops institutions seen in fewer than `min_fi_docs` documents, then
/// documents with fewer than `min_pairs` distinct pairs, repeating until
/// neither rule removes anything.
inline TimeSlicedCorpus filter_corpus(const TimeSlicedCorpus& corpus, int min_fi_docs = 20,
                                      int min_pairs = 5) {
  if (corpus.empty()) throw EmptyCorpus("filter_corpus: input corpus is empty");
  const Vocabulary& vocab = corpus.vocabulary();

  std::vector<std::vector<ProspectusDoc>> kept;
  for (const auto& s : corpus.slices()) kept.push_back(s.docs);

  bool changed = true;
  while (changed) {
    changed = false;

    std::unordered_map<std::string, int> fi_docs;
    for (const auto& docs : kept)
      for (const auto& d : docs) {
        std::unordered_set<std::string> fis;
        for (const auto& t : d.tokens) fis.insert(vocab.at(t.word).fi);
        for (const auto& f : fis) ++fi_docs[f];
      }

    for (auto& docs : kept)
      for (auto& d : docs) {
        auto before = d.tokens.size();
        std::erase_if(d.tokens, [&](const TokenCount& t) {
          return fi_docs[vocab.at(t.word).fi] < min_fi_docs;
        });
        changed |= d.tokens.size() != before;
      }

    for (auto& docs : kept) {
      auto before = docs.size();
      std::erase_if(docs, [&](const ProspectusDoc& d) {
        return d.tokens.empty() || static_cast<int>(d.tokens.size()) < min_pairs;
      });
      changed |= docs.size() != before;
    }
  }

  TimeSlicedCorpus out = detail::compact(corpus, kept);
  if (out.empty()) throw EmptyCorpus("filter_corpus: filtering removed every document");
  return out;
}

inline const std::set<std::string>& default_weighted_roles() {
  static const std::set<std::string> roles = {"issuer", "originator"};
  return roles;
}

/// Multiplies the counts of tokens whose role is in `roles`.
inline TimeSlicedCorpus weight_tokens(const TimeSlicedCorpus& corpus,
                                      const std::set<std::string>& roles = default_weighted_roles(),
                                      long multiplier = 2) {
  if (multiplier < 1) throw InvalidInput("weight_tokens: multiplier must be >= 1");
  std::vector<TimeSlice> slices = corpus.slices();
  for (auto& s : slices)
    for (auto& d : s.docs)
      for (auto& t : d.tokens)
        if (roles.count(corpus.vocabulary().at(t.word).role)) t.count *= multiplier;
  return {std::move(slices), corpus.vocabulary()};
}

// ---------------------------------------------------------------------------
// JSON-lines I/O

inline DocumentRecord record_from_json(const nlohmann::json& j) {
  DocumentRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.year = j.at("year").get<int>();
    for (const auto& p : j.at("pairs")) {
      RoleFiToken t{{p.at("role").get<std::string>(), p.at("fi").get<std::string>()}, 1};
      if (p.contains("count")) t.count = p.at("count").get<long>();
      r.pairs.push_back(std::move(t));
    }
    if (j.contains("security_ids")) r.security_ids = j.at("security_ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed document record: ") + e.what());
  }
  return r;
}

inline nlohmann::json record_to_json(const DocumentRecord& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& t : r.pairs)
    pairs.push_back({{"role", t.pair.role}, {"fi", t.pair.fi}, {"count", t.count}});
  nlohmann::json j = {{"id", r.id}, {"year", r.year}, {"pairs", pairs}};
  if (!r.security_ids.empty()) j["security_ids"] = r.security_ids;
  return j;
}

inline std::vector<DocumentRecord> read_records(std::istream& in) {
  std::vector<DocumentRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput("line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

inline std::vector<DocumentRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_records(in);
}

inline std::vector<DocumentRecord> to_records(const TimeSlicedCorpus& corpus) {
  std::vector<DocumentRecord> out;
  for (const auto& s : corpus.slices())
    for (const auto& d : s.docs) {
      DocumentRecord r{d.id, d.year, {}, d.security_ids};
      for (const auto& t : d.tokens) r.pairs.push_back({corpus.vocabulary().at(t.word), t.count});
      out.push_back(std::move(r));
    }
  return out;
}

inline void write_records(std::ostream& out, const std::vector<DocumentRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline void write_corpus(std::ostream& out, const TimeSlicedCorpus& corpus) {
  write_records(out, to_records(corpus));
}

/// index, role, fi, doc_frequency
inline void write_vocabulary_csv(std::ostream& out, const TimeSlicedCorpus& corpus) {
  std::vector<long> df(corpus.vocabulary().size(), 0);
  for (const auto& s : corpus.slices())
    for (const auto& d : s.docs)
      for (const auto& t : d.tokens) ++df[static_cast<std::size_t>(t.word)];
  csv::write_row(out, {"index", "role", "fi", "doc_frequency"});
  for (std::size_t i = 0; i < corpus.vocabulary().size(); ++i) {
    const auto& p = corpus.vocabulary().at(static_cast<int>(i));
    csv::write_row(out, {std::to_string(i), p.role, p.fi, std::to_string(df[i])});
  }
}

}  // namespace rmbs
