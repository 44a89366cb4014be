#pragma once

// Seeded synthetic data: community corpora, waterfall-ordered securities and
// payment summaries with planted effects, plus the ground truth behind them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmbs/corpus.hpp"
#include "rmbs/error.hpp"
#include "rmbs/features.hpp"
#include "rmbs/glm/lasso.hpp"
#include "rmbs/performance.hpp"
#include "rmbs/toxicity.hpp"

namespace rmbs::synth {

/// Planted logit effects.
struct Effects {
  double intercept = -1.5;
  double ssup = 1.5;
  double has_ssup = 0.5;
  std::array<double, 3> cls = {0.0, 0.5, 1.0};  // A, M, B
  std::map<int, double> year;                   // absent years contribute 0
  std::vector<double> topic;                    // per community; empty: +1 for toxic communities
  double noise_sd = 0;
};

struct SynthConfig {
  int n_communities = 10;
  int docs_per_community = 50;
  int first_year = 2002;
  int last_year = 2007;

  int fis_per_community = 4;
  int roles_per_fi = 3;
  int shared_pairs = 0;  // leading pairs of the next community added to each support
  double leakage = 0;    // chance a token comes from another community
  int tokens_per_doc = 40;
  std::vector<std::vector<double>> year_profile;    // per community, weights over years
  std::vector<std::array<double, 3>> class_mix;     // per community, fractions of A, M, B

  int securities_per_doc = 10;
  double ssup_rate = 0.15;  // per A-class security
  double flag_rate = 0.05;  // every other registry flag

  std::vector<CommunityToxicity> tags;  // empty: community 0 toxic, 1 partial, rest non_toxic
  Effects effects;
  PerfThresholds thresholds = default_thresholds();
  double fe_max_bps = 10000;

  std::optional<std::uint64_t> seed;

  int n_years() const { return last_year - first_year + 1; }
  int n_docs() const { return n_communities * docs_per_community; }

  void validate() const {
    if (!seed) throw ConfigError("synth.seed", "required");
    if (n_communities < 1) throw ConfigError("synth.n_communities", "must be >= 1");
    if (docs_per_community < 1) throw ConfigError("synth.docs_per_community", "must be >= 1");
    if (last_year < first_year) throw ConfigError("synth.years", "last year before first year");
    if (fis_per_community < 1) throw ConfigError("synth.fis_per_community", "empty support");
    if (roles_per_fi < 1 || roles_per_fi > 3) throw ConfigError("synth.roles_per_fi", "must be in [1, 3]");
    if (shared_pairs < 0 || shared_pairs > fis_per_community * roles_per_fi)
      throw ConfigError("synth.shared_pairs", "must be in [0, support size]");
    if (!(leakage >= 0 && leakage <= 1)) throw ConfigError("synth.leakage", "must be in [0, 1]");
    if (leakage > 0 && n_communities < 2) throw ConfigError("synth.leakage", "needs two or more communities");
    if (tokens_per_doc < 1) throw ConfigError("synth.tokens_per_doc", "must be >= 1");
    if (securities_per_doc < 1) throw ConfigError("synth.securities_per_doc", "must be >= 1");
    if (!(ssup_rate >= 0 && ssup_rate <= 1)) throw ConfigError("synth.ssup_rate", "must be in [0, 1]");
    if (!(flag_rate >= 0 && flag_rate <= 1)) throw ConfigError("synth.flag_rate", "must be in [0, 1]");
    if (!year_profile.empty()) {
      if (static_cast<int>(year_profile.size()) != n_communities)
        throw ConfigError("synth.year_profile", "one profile per community");
      for (const auto& p : year_profile) {
        if (static_cast<int>(p.size()) != n_years()) throw ConfigError("synth.year_profile", "one weight per year");
        double s = 0;
        for (double w : p) {
          if (!(w >= 0)) throw ConfigError("synth.year_profile", "weights must be >= 0");
          s += w;
        }
        if (!(s > 0)) throw ConfigError("synth.year_profile", "all-zero profile");
      }
    }
    if (!class_mix.empty() && static_cast<int>(class_mix.size()) != n_communities)
      throw ConfigError("synth.class_mix", "one mix per community");
    for (const auto& m : class_mix) check_mix(m, "synth.class_mix");
    if (!tags.empty() && static_cast<int>(tags.size()) != n_communities)
      throw ConfigError("synth.tags", "one tag per community");
    if (!effects.topic.empty() && static_cast<int>(effects.topic.size()) != n_communities)
      throw ConfigError("synth.effects.topic", "one effect per community");
    if (!(effects.noise_sd >= 0)) throw ConfigError("synth.effects.noise_sd", "must be >= 0");
    thresholds.validate();
    if (!(fe_max_bps > thresholds.a.fe_min_bps && fe_max_bps > thresholds.m.fe_min_bps &&
          fe_max_bps > thresholds.b.fe_min_bps))
      throw ConfigError("synth.fe_max_bps", "must exceed every fe_min_bps");
  }

  static void check_mix(const std::array<double, 3>& m, const char* field) {
    double s = 0;
    for (double v : m) {
      if (!(v >= 0)) throw ConfigError(field, "fractions must be >= 0");
      s += v;
    }
    if (std::abs(s - 1) > 1e-9) throw ConfigError(field, "fractions must sum to 1");
  }

  CommunityToxicity tag(int c) const {
    if (!tags.empty()) return tags[static_cast<std::size_t>(c)];
    return c == 0 ? CommunityToxicity::toxic : c == 1 ? CommunityToxicity::partial : CommunityToxicity::non_toxic;
  }

  double topic_effect(int c) const {
    if (!effects.topic.empty()) return effects.topic[static_cast<std::size_t>(c)];
    return tag(c) == CommunityToxicity::toxic ? 1.0 : 0.0;
  }

  std::vector<double> profile(int c) const {
    if (!year_profile.empty()) return year_profile[static_cast<std::size_t>(c)];
    // activity peaks move through the window across communities
    double peak = n_communities > 1 ? static_cast<double>(c) * (n_years() - 1) / (n_communities - 1) : 0;
    std::vector<double> w;
    for (int y = 0; y < n_years(); ++y) w.push_back(std::exp(-0.8 * std::abs(y - peak)));
    return w;
  }

  std::array<double, 3> mix(int c) const {
    if (!class_mix.empty()) return class_mix[static_cast<std::size_t>(c)];
    static const std::array<std::array<double, 3>, 4> cycle = {
        {{0.7, 0.2, 0.1}, {0.5, 0.3, 0.2}, {0.6, 0.3, 0.1}, {0.4, 0.4, 0.2}}};
    return cycle[static_cast<std::size_t>(c) % cycle.size()];
  }
};

struct GroundTruth {
  std::map<std::string, int> doc_community;
  std::map<std::string, int> doc_year;
  std::map<std::string, double> security_logit;
  std::map<std::string, Performance> security_label;
  std::vector<CommunityToxicity> community_tag;
  std::vector<std::vector<RolePair>> community_support;
  std::vector<std::vector<std::string>> community_fis;
};

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                  static_cast<std::uint32_t>(id)};
  return std::mt19937_64(s);
}

inline double uniform(std::mt19937_64& rng) { return std::generate_canonical<double, 53>(rng); }

inline const std::array<std::array<const char*, 3>, 4>& role_sets() {
  static const std::array<std::array<const char*, 3>, 4> sets = {{{"issuer", "depositor", "sponsor"},
                                                                  {"originator", "seller", "servicer"},
                                                                  {"trustee", "custodian", "securities administrator"},
                                                                  {"underwriter", "swap counterparty", "insurer"}}};
  return sets;
}

inline std::string institution_name(int i) {
  static const char* first[] = {"Alder", "Birch",  "Cedar",  "Dogwood",  "Elm",    "Fir",   "Ginkgo",
                                "Hawthorn", "Juniper", "Larch", "Maple", "Oak", "Pine", "Rowan",
                                "Spruce", "Sycamore", "Tamarack", "Walnut", "Willow", "Yew"};
  static const char* second[] = {"Funding", "Capital", "Lending", "Financial"};
  if (i >= 80) throw ConfigError("synth.fis_per_community", "at most 80 institutions in total");
  return std::string(first[i % 20]) + " " + second[i / 20];
}

}  // namespace detail

/// Support of community `c`: (role, fi) pairs in descending weight order.
inline std::vector<std::pair<RolePair, double>> community_support(const SynthConfig& cfg, int c) {
  std::vector<std::pair<RolePair, double>> out;
  auto own = [&](int k) {
    std::vector<RolePair> pairs;
    for (int j = 0; j < cfg.fis_per_community; ++j)
      for (int r = 0; r < cfg.roles_per_fi; ++r)
        pairs.push_back({detail::role_sets()[static_cast<std::size_t>(j % 4)][static_cast<std::size_t>(r)],
                         detail::institution_name(k * cfg.fis_per_community + j)});
    return pairs;
  };
  auto pairs = own(c);
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back({pairs[i], 1.0 / (1.0 + 0.25 * static_cast<double>(i))});
  if (cfg.shared_pairs > 0 && cfg.n_communities > 1) {
    auto next = own((c + 1) % cfg.n_communities);
    double w = out.back().second;
    for (int i = 0; i < cfg.shared_pairs; ++i) out.push_back({next[static_cast<std::size_t>(i)], w});
  }
  return out;
}

/// Documents grouped by community, with their tokens drawn from the
/// community's support.
inline std::vector<DocumentRecord> generate_documents(const SynthConfig& cfg, GroundTruth& truth) {
  cfg.validate();
  auto rng = detail::stream(*cfg.seed, 1);
  std::vector<std::vector<std::pair<RolePair, double>>> supports;
  std::vector<std::discrete_distribution<int>> pick;
  truth.community_support.clear();
  truth.community_fis.clear();
  truth.community_tag.clear();
  for (int c = 0; c < cfg.n_communities; ++c) {
    supports.push_back(community_support(cfg, c));
    std::vector<double> w;
    std::vector<RolePair> pairs;
    for (const auto& [p, x] : supports.back()) {
      w.push_back(x);
      pairs.push_back(p);
    }
    std::vector<std::string> fis;
    for (int j = 0; j < cfg.fis_per_community; ++j) fis.push_back(detail::institution_name(c * cfg.fis_per_community + j));
    pick.emplace_back(w.begin(), w.end());
    truth.community_support.push_back(std::move(pairs));
    truth.community_fis.push_back(std::move(fis));
    truth.community_tag.push_back(cfg.tag(c));
  }

  std::vector<DocumentRecord> out;
  int serial = 0;
  for (int c = 0; c < cfg.n_communities; ++c) {
    auto prof = cfg.profile(c);
    std::discrete_distribution<int> year_of(prof.begin(), prof.end());
    for (int d = 0; d < cfg.docs_per_community; ++d) {
      char id[16];
      std::snprintf(id, sizeof id, "SYN%05d", ++serial);
      DocumentRecord r{id, cfg.first_year + year_of(rng), {}, {}};
      std::map<RolePair, long> counts;
      for (int t = 0; t < cfg.tokens_per_doc; ++t) {
        int src = c;
        if (cfg.leakage > 0 && detail::uniform(rng) < cfg.leakage) {
          src = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.n_communities - 1));
          if (src >= c) ++src;
        }
        ++counts[supports[static_cast<std::size_t>(src)][static_cast<std::size_t>(pick[static_cast<std::size_t>(src)](rng))].first];
      }
      for (const auto& [p, n] : counts) r.pairs.push_back({p, n});
      truth.doc_community[r.id] = c;
      truth.doc_year[r.id] = r.year;
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline std::pair<TimeSlicedCorpus, GroundTruth> generate_corpus(const SynthConfig& cfg) {
  GroundTruth truth;
  auto records = generate_documents(cfg, truth);
  return {build_corpus(records, {cfg.first_year, cfg.last_year}), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Securities

struct ProspectusTemplate {
  std::string prospectus_id;
  int year = 2005;
  int n_securities = 10;
  double ssup_rate = 0.15;
  std::map<std::string, double> flag_rates;  // SSUP is governed by ssup_rate
};

/// Counts per class by largest remainder; ties go to the more senior class.
inline std::array<int, 3> class_counts(const std::array<double, 3>& mix, int n) {
  SynthConfig::check_mix(mix, "class_mix");
  std::array<int, 3> counts{};
  std::array<double, 3> rem{};
  int used = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    double exact = mix[c] * n;
    counts[c] = static_cast<int>(std::floor(exact + 1e-9));
    rem[c] = exact - counts[c];
    used += counts[c];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t i = 0; used < n; ++i, ++used) ++counts[order[i % 3]];
  return counts;
}

namespace detail {

inline std::optional<std::string> draw_mir(SecurityClass cls, std::mt19937_64& rng) {
  static const std::array<std::vector<const char*>, 3> grades = {
      {{"Aaa", "Aaa", "Aaa", "(P)Aaa", "Aa1", "Aa2", "NR"},
       {"Aa3", "A1", "A2", "A3", "Baa1", "Baa2", "Baa3 (sf)"},
       {"Ba1", "Ba2", "B1", "B3", "Caa1", "NR", "WR"}}};
  const auto& g = grades[static_cast<std::size_t>(cls)];
  std::size_t i = rng() % (g.size() + 1);
  if (i == g.size()) return std::nullopt;
  return std::string(g[i]);
}

}  // namespace detail

/// Securities of one prospectus ordered A, M, B. SSUP only appears on A.
inline std::vector<SecurityRecord> waterfall_compose(const ProspectusTemplate& t, const std::array<double, 3>& mix,
                                                     std::mt19937_64& rng) {
  auto counts = class_counts(mix, t.n_securities);
  static const std::array<double, 3> median = {5e7, 5e6, 1e6};
  std::vector<SecurityRecord> out;
  for (std::size_t c = 0; c < 3; ++c) {
    auto cls = static_cast<SecurityClass>(c);
    std::lognormal_distribution<double> principal(std::log(median[c]), 0.5);
    for (int i = 0; i < counts[c]; ++i) {
      SecurityRecord r;
      r.id = t.prospectus_id + "-" + to_string(cls) + std::to_string(i + 1);
      r.prospectus_id = t.prospectus_id;
      r.cls = cls;
      r.year = t.year;
      r.mir_raw = detail::draw_mir(cls, rng);
      r.original_principal = std::round(principal(rng));
      for (const auto& [flag, rate] : t.flag_rates)
        if (flag != "SSUP" && detail::uniform(rng) < rate) r.flags.insert(flag);
      if (cls == SecurityClass::A && detail::uniform(rng) < t.ssup_rate) r.flags.insert("SSUP");
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline std::vector<SecurityRecord> waterfall_compose(const ProspectusTemplate& t, const std::array<double, 3>& mix,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return waterfall_compose(t, mix, rng);
}

/// Securities for every document; fills each record's security_ids.
inline std::vector<SecurityRecord> generate_securities(const SynthConfig& cfg, std::vector<DocumentRecord>& docs,
                                                       const GroundTruth& truth,
                                                       const FlagRegistry& registry = default_flag_registry()) {
  cfg.validate();
  auto rng = detail::stream(*cfg.seed, 2);
  ProspectusTemplate t;
  t.n_securities = cfg.securities_per_doc;
  t.ssup_rate = cfg.ssup_rate;
  for (const auto& f : registry.names())
    if (f != "SSUP") t.flag_rates[f] = cfg.flag_rate;
  std::vector<SecurityRecord> out;
  for (auto& d : docs) {
    t.prospectus_id = d.id;
    t.year = d.year;
    auto recs = waterfall_compose(t, cfg.mix(truth.doc_community.at(d.id)), rng);
    d.security_ids.clear();
    for (auto& r : recs) {
      d.security_ids.push_back(r.id);
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Outcomes

/// Generative logit of each security given its prospectus community.
inline std::vector<double> planted_logits(const std::vector<SecurityRecord>& records, const GroundTruth& truth,
                                          const SynthConfig& cfg) {
  std::map<std::string, bool> has_ssup;
  for (const auto& r : records) has_ssup[r.prospectus_id] |= r.flags.count("SSUP") > 0;
  std::vector<double> out;
  for (const auto& r : records) {
    auto it = truth.doc_community.find(r.prospectus_id);
    if (it == truth.doc_community.end()) throw InvalidInput("security " + r.id + ": prospectus has no community");
    const auto& e = cfg.effects;
    auto y = e.year.find(r.year);
    out.push_back(e.intercept + e.cls[static_cast<std::size_t>(r.cls)] + (y == e.year.end() ? 0.0 : y->second) +
                  e.ssup * (r.flags.count("SSUP") > 0) + e.has_ssup * has_ssup[r.prospectus_id] +
                  cfg.topic_effect(it->second));
  }
  return out;
}

/// FE by a Bernoulli draw on the logit; non-FE securities are NME or ME by a
/// second draw. Magnitudes are uniform within the label's band.
inline std::vector<PaymentRow> generate_outcomes(const std::vector<SecurityRecord>& records, GroundTruth& truth,
                                                 const SynthConfig& cfg) {
  cfg.validate();
  auto rng = detail::stream(*cfg.seed, 3);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto logits = planted_logits(records, truth, cfg);
  std::vector<PaymentRow> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    double z = logits[i];
    if (cfg.effects.noise_sd > 0) z += cfg.effects.noise_sd * noise(rng);
    double p = glm::sigmoid(z);
    Performance label = detail::uniform(rng) < p      ? Performance::FE
                        : detail::uniform(rng) < p    ? Performance::NME
                                                      : Performance::ME;
    const auto& ct = cfg.thresholds.of(r.cls);
    double u = detail::uniform(rng), v = 0;
    switch (label) {
      case Performance::ME: v = std::min(ct.me_max_bps * u, ct.me_max_bps); break;
      case Performance::NME:
        v = std::clamp(ct.me_max_bps + (ct.fe_min_bps - ct.me_max_bps) * u,
                       std::nextafter(ct.me_max_bps, ct.fe_min_bps), std::nextafter(ct.fe_min_bps, ct.me_max_bps));
        break;
      case Performance::FE: v = ct.fe_min_bps + (cfg.fe_max_bps - ct.fe_min_bps) * u; break;
    }
    double other = v * detail::uniform(rng);
    PaymentSummary s = detail::uniform(rng) < 0.5 ? PaymentSummary{v, other} : PaymentSummary{other, v};
    truth.security_logit[r.id] = z;
    truth.security_label[r.id] = label;
    out.push_back({r.id, r.cls, s});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evidence, texts and the full bundle

/// Toxic communities: the first two institutions failed. Partial: the first
/// took TARP funds. Non-toxic: clean.
inline std::vector<InstitutionEvidence> generate_evidence(const SynthConfig& cfg, const GroundTruth& truth) {
  std::vector<InstitutionEvidence> out;
  for (int c = 0; c < cfg.n_communities; ++c)
    for (int j = 0; j < cfg.fis_per_community; ++j) {
      InstitutionEvidence e;
      e.fi = truth.community_fis[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      auto tag = truth.community_tag[static_cast<std::size_t>(c)];
      e.bankruptcy_or_fines = tag == CommunityToxicity::toxic && j < 2;
      e.tarp_funds = tag == CommunityToxicity::partial && j == 0;
      e.notes = "community " + std::to_string(c + 1);
      out.push_back(std::move(e));
    }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.fi < b.fi; });
  return out;
}

inline const std::vector<std::string>& text_suffixes() {
  static const std::vector<std::string> s = {"Corporation", "LLC", "Inc.", "Bank, N.A.", "Bank, National Association",
                                             "Company"};
  return s;
}

namespace detail {

inline const std::map<std::string, std::string>& role_labels() {
  static const std::map<std::string, std::string> m = {
      {"issuer", "Issuing Entity"},   {"originator", "Originators"},
      {"seller", "Seller"},           {"trustee", "Trustee"},
      {"servicer", "Master Servicer"}, {"depositor", "Depositor"},
      {"sponsor", "Sponsor"},         {"securities administrator", "Securities Administrator"},
      {"custodian", "Custodian"},     {"swap counterparty", "Swap Counterparty"},
      {"cap counterparty", "Cap Counterparty"}, {"insurer", "Certificate Insurer"},
      {"underwriter", "Underwriters"}};
  return m;
}

}  // namespace detail

/// A summary-of-terms section naming each distinct (role, fi) pair once.
inline std::string render_document(const DocumentRecord& r, std::mt19937_64& rng) {
  std::map<std::string, std::vector<std::string>> by_role;
  for (const auto& t : r.pairs) by_role[t.pair.role].push_back(t.pair.fi);
  std::string out = "Mortgage Pass-Through Certificates, Series " + std::to_string(r.year) + "-" + r.id.substr(3) +
                    "\nSummary of Terms\n\n";
  for (const auto& role : seeded_roles()) {
    auto it = by_role.find(role);
    if (it == by_role.end()) continue;
    std::string line = detail::role_labels().at(role) + ":";
    line.resize(std::max<std::size_t>(line.size() + 2, 28), ' ');
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      if (i) line += ", ";
      line += it->second[i] + " " + text_suffixes()[rng() % text_suffixes().size()];
    }
    out += line + "\n";
  }
  return out;
}

struct SynthData {
  std::vector<DocumentRecord> documents;
  std::vector<SecurityRecord> securities;
  std::vector<PaymentRow> payments;
  std::vector<InstitutionEvidence> evidence;
  GroundTruth truth;
};

inline SynthData generate(const SynthConfig& cfg, const FlagRegistry& registry = default_flag_registry()) {
  SynthData d;
  d.documents = generate_documents(cfg, d.truth);
  d.securities = generate_securities(cfg, d.documents, d.truth, registry);
  d.payments = generate_outcomes(d.securities, d.truth, cfg);
  d.evidence = generate_evidence(cfg, d.truth);
  return d;
}

inline nlohmann::json truth_to_json(const GroundTruth& t) {
  nlohmann::json j;
  j["doc_community"] = t.doc_community;
  j["doc_year"] = t.doc_year;
  nlohmann::json logit = nlohmann::json::object(), label = nlohmann::json::object();
  for (const auto& [id, z] : t.security_logit) logit[id] = z;
  for (const auto& [id, l] : t.security_label) label[id] = to_string(l);
  j["security_logit"] = logit;
  j["security_label"] = label;
  nlohmann::json comms = nlohmann::json::array();
  for (std::size_t c = 0; c < t.community_tag.size(); ++c) {
    nlohmann::json support = nlohmann::json::array();
    for (const auto& p : t.community_support[c]) support.push_back({{"role", p.role}, {"fi", p.fi}});
    comms.push_back({{"community", c}, {"tag", to_string(t.community_tag[c])}, {"fis", t.community_fis[c]},
                     {"support", support}});
  }
  j["communities"] = comms;
  return j;
}

/// Files written by write_bundle, relative to its directory.
inline const std::vector<std::string>& bundle_files() {
  static const std::vector<std::string> f = {"records.jsonl", "securities.csv",  "payments.csv",
                                             "evidence.csv",  "roots.csv",       "suffixes.txt",
                                             "extraction_truth.jsonl", "ground_truth.json"};
  return f;
}

/// Writes the bundle plus one rendered text per document under docs/.
/// Returns every path written.
inline std::vector<std::string> write_bundle(const std::filesystem::path& dir, const SynthData& d, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "docs");
  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    written.push_back((dir / name).string());
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + (dir / name).string());
    return out;
  };
  { auto o = open("records.jsonl"); write_records(o, d.documents); }
  { auto o = open("securities.csv"); write_securities(o, d.securities); }
  { auto o = open("payments.csv"); write_payments(o, d.payments); }
  { auto o = open("evidence.csv"); write_evidence(o, d.evidence); }
  {
    auto o = open("roots.csv");
    csv::write_row(o, {"root", "standardized_id", "display_name"});
    std::set<std::string> fis;
    for (const auto& fl : d.truth.community_fis) fis.insert(fl.begin(), fl.end());
    for (const auto& fi : fis) csv::write_row(o, {fi, fi, fi + " Corporation"});
  }
  {
    auto o = open("suffixes.txt");
    for (const auto& s : text_suffixes()) o << s << "\n";
    o << "Bank\n";
  }
  auto rng = detail::stream(seed, 4);
  {
    auto o = open("extraction_truth.jsonl");
    for (const auto& r : d.documents) {
      nlohmann::json pairs = nlohmann::json::array();
      for (const auto& t : r.pairs) pairs.push_back({{"role", t.pair.role}, {"fi", t.pair.fi}});
      o << nlohmann::json{{"id", r.id}, {"year", r.year}, {"pairs", pairs}}.dump() << "\n";
      auto txt = open("docs/" + r.id + ".txt");
      txt << render_document(r, rng);
    }
  }
  { auto o = open("ground_truth.json"); o << truth_to_json(d.truth).dump(1) << "\n"; }
  return written;
}

}  // namespace rmbs::synth
