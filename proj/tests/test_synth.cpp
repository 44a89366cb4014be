#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "rmbs/extraction.hpp"
#include "rmbs/synth.hpp"

using namespace rmbs;
using namespace rmbs::synth;

namespace {

SynthConfig small(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  return c;
}

std::set<RolePair> support_of(const GroundTruth& t, int c) {
  return {t.community_support[static_cast<std::size_t>(c)].begin(), t.community_support[static_cast<std::size_t>(c)].end()};
}

}  // namespace

TEST(Config, Validation) {
  SynthConfig c;
  EXPECT_THROW(c.validate(), ConfigError);  // no seed
  c.seed = 1;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.fis_per_community = 0;
  EXPECT_THROW(generate_corpus(bad), ConfigError);
  bad = c;
  bad.class_mix.assign(10, {0.5, 0.5, 0.5});
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.year_profile.assign(10, std::vector<double>(6, 0.0));
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.leakage = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  try {
    bad.validate();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "synth.leakage");
  }
}

TEST(Corpus, ZeroLeakageDisjointSupports) {
  auto c = small(3);
  c.n_communities = 2;
  auto [corpus, truth] = generate_corpus(c);
  auto s0 = support_of(truth, 0), s1 = support_of(truth, 1);
  for (const auto& p : s0) EXPECT_EQ(s1.count(p), 0u);
  for (const auto* d : corpus.documents()) {
    const auto& own = truth.doc_community.at(d->id) == 0 ? s0 : s1;
    for (const auto& t : d->tokens) EXPECT_EQ(own.count(corpus.vocabulary().at(t.word)), 1u) << d->id;
    EXPECT_EQ(d->total_count(), c.tokens_per_doc);
  }
}

TEST(Corpus, LeakageReachesOtherSupports) {
  auto c = small(3);
  c.leakage = 0.3;
  auto [corpus, truth] = generate_corpus(c);
  long foreign = 0, total = 0;
  for (const auto* d : corpus.documents()) {
    auto own = support_of(truth, truth.doc_community.at(d->id));
    for (const auto& t : d->tokens) {
      total += t.count;
      if (!own.count(corpus.vocabulary().at(t.word))) foreign += t.count;
    }
  }
  double rate = static_cast<double>(foreign) / static_cast<double>(total);
  EXPECT_NEAR(rate, 0.3, 0.02);
}

TEST(Corpus, SharedPairsOverlapNextCommunity) {
  auto c = small(5);
  c.shared_pairs = 2;
  auto [corpus, truth] = generate_corpus(c);
  auto s0 = support_of(truth, 0), s1 = support_of(truth, 1);
  std::size_t common = 0;
  for (const auto& p : s0) common += s1.count(p);
  EXPECT_EQ(common, 2u);
}

TEST(Corpus, Deterministic) {
  auto [a, ta] = generate_corpus(small(9));
  auto [b, tb] = generate_corpus(small(9));
  std::ostringstream sa, sb;
  write_corpus(sa, a);
  write_corpus(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(ta.doc_community, tb.doc_community);
  auto [d, td] = generate_corpus(small(10));
  std::ostringstream sd;
  write_corpus(sd, d);
  EXPECT_NE(sa.str(), sd.str());
}

TEST(Corpus, CommunitySizesExact) {
  auto [corpus, truth] = generate_corpus(small(1));
  EXPECT_EQ(corpus.num_docs(), 500u);
  std::map<int, int> sizes;
  for (const auto& [id, c] : truth.doc_community) ++sizes[c];
  ASSERT_EQ(sizes.size(), 10u);
  for (const auto& [c, n] : sizes) EXPECT_EQ(n, 50);
}

TEST(Waterfall, Examples) {
  ProspectusTemplate t{"P1", 2005, 10, 1.0, {{"SEQ", 0.5}}};
  auto all_a = waterfall_compose(t, {1, 0, 0}, 4);
  for (const auto& r : all_a) EXPECT_EQ(r.cls, SecurityClass::A);
  auto mixed = waterfall_compose(t, {0.5, 0.3, 0.2}, 4);
  std::array<int, 3> n{};
  for (const auto& r : mixed) ++n[static_cast<std::size_t>(r.cls)];
  EXPECT_EQ(n, (std::array<int, 3>{5, 3, 2}));
  for (std::size_t i = 1; i < mixed.size(); ++i) EXPECT_LE(mixed[i - 1].cls, mixed[i].cls);
  EXPECT_EQ(mixed.front().id, "P1-A1");
  EXPECT_EQ(mixed.back().id, "P1-B2");
}

TEST(Waterfall, SsupOnlyOnSeniorClass) {
  ProspectusTemplate t{"P", 2004, 12, 1.0, {{"SSUP", 1.0}, {"Z", 0.3}}};
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (const auto& r : waterfall_compose(t, {0.4, 0.4, 0.2}, seed)) {
      if (r.cls == SecurityClass::A) {
        EXPECT_TRUE(r.flags.count("SSUP"));
      } else {
        EXPECT_FALSE(r.flags.count("SSUP"));
      }
    }
}

TEST(Waterfall, LargestRemainderMatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<double, 3> m{};
    double s = 0;
    for (auto& v : m) s += (v = synth::detail::uniform(rng));
    for (auto& v : m) v /= s;
    m[2] = 1 - m[0] - m[1];
    if (m[2] < 0) continue;
    int n = 1 + static_cast<int>(rng() % 30);
    auto got = class_counts(m, n);
    // oracle: among all triples summing to n, the smallest total deviation from the quotas
    double best = 1e9;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b) {
        int c = n - a - b;
        best = std::min(best, std::abs(a - m[0] * n) + std::abs(b - m[1] * n) + std::abs(c - m[2] * n));
      }
    double dev = std::abs(got[0] - m[0] * n) + std::abs(got[1] - m[1] * n) + std::abs(got[2] - m[2] * n);
    EXPECT_NEAR(dev, best, 1e-9);
    EXPECT_EQ(got[0] + got[1] + got[2], n);
  }
}

TEST(Outcomes, LabelConsistentWithThresholds) {
  for (std::uint64_t seed : {1u, 2u}) {
    auto c = small(seed);
    c.effects.intercept = -0.5;
    c.effects.noise_sd = 0.7;
    if (seed == 2) c.thresholds = {{50, 1000}, {200, 3000}, {300, 4000}};
    auto d = generate(c);
    ASSERT_EQ(d.payments.size(), d.securities.size());
    std::map<Performance, int> seen;
    for (const auto& p : d.payments) {
      auto l = label_security(p.cls, p.summary, c.thresholds);
      EXPECT_EQ(l.value, d.truth.security_label.at(p.security_id)) << p.security_id;
      ++seen[l.value];
    }
    EXPECT_EQ(seen.size(), 3u);
  }
}

TEST(Outcomes, SaturatedLogitsAreDeterministic) {
  for (double intercept : {12.0, -12.0}) {
    auto c = small(8);
    c.n_communities = 2;
    c.docs_per_community = 20;
    c.effects = Effects{};
    c.effects.intercept = intercept;
    c.effects.ssup = c.effects.has_ssup = 0;
    c.effects.cls = {0, 0, 0};
    c.effects.topic = {0, 0};
    auto d = generate(c);
    for (const auto& p : d.payments) {
      bool fe = d.truth.security_label.at(p.security_id) == Performance::FE;
      EXPECT_EQ(fe, d.truth.security_logit.at(p.security_id) > 0);
    }
  }
}

TEST(Outcomes, PlantedTopicHasHighestFailureRate) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    auto c = small(seed);
    c.effects.ssup = c.effects.has_ssup = 0;
    c.effects.cls = {0, 0, 0};
    c.effects.topic.assign(10, 0.0);
    c.effects.topic[4] = 2.0;
    auto d = generate(c);
    std::map<int, std::pair<int, int>> rate;  // community -> (fe, n)
    for (const auto& s : d.securities) {
      auto& r = rate[d.truth.doc_community.at(s.prospectus_id)];
      r.first += d.truth.security_label.at(s.id) == Performance::FE;
      ++r.second;
    }
    double planted = static_cast<double>(rate[4].first) / rate[4].second;
    for (const auto& [k, r] : rate) {
      if (k == 4) continue;
      EXPECT_LT(static_cast<double>(r.first) / r.second, planted) << "seed " << seed << " community " << k;
    }
  }
}

TEST(Outcomes, BaseRateConcentration) {
  auto c = small(2024);
  c.docs_per_community = 100;  // 10 x 100 x 10 = 10,000 securities
  c.effects.intercept = std::log(0.3 / 0.7);
  c.effects.ssup = c.effects.has_ssup = 0;
  c.effects.cls = {0, 0, 0};
  c.effects.topic.assign(10, 0.0);
  auto d = generate(c);
  ASSERT_EQ(d.securities.size(), 10000u);
  std::size_t fe = 0;
  for (const auto& [id, l] : d.truth.security_label) fe += l == Performance::FE;
  EXPECT_NEAR(static_cast<double>(fe) / 10000.0, 0.30, 0.03);
}

TEST(Outcomes, DeterministicAndComplete) {
  auto a = generate(small(77)), b = generate(small(77));
  std::ostringstream pa, pb, sa, sb;
  write_payments(pa, a.payments);
  write_payments(pb, b.payments);
  write_securities(sa, a.securities);
  write_securities(sb, b.securities);
  EXPECT_EQ(pa.str(), pb.str());
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.truth.security_logit.size(), a.securities.size());
  EXPECT_EQ(a.truth.doc_community.size(), a.documents.size());
  std::set<std::string> listed;
  for (const auto& d : a.documents) listed.insert(d.security_ids.begin(), d.security_ids.end());
  for (const auto& s : a.securities) EXPECT_TRUE(listed.count(s.id));
}

TEST(Evidence, CommunityTagsReproducedByToxicityRules) {
  auto c = small(5);
  c.tags = {CommunityToxicity::toxic,     CommunityToxicity::partial,   CommunityToxicity::non_toxic,
            CommunityToxicity::toxic,     CommunityToxicity::non_toxic, CommunityToxicity::partial,
            CommunityToxicity::non_toxic, CommunityToxicity::non_toxic, CommunityToxicity::non_toxic,
            CommunityToxicity::non_toxic};
  auto d = generate(c);
  auto labels = label_institutions(d.evidence);
  for (int k = 0; k < c.n_communities; ++k) {
    // prominent institutions straight from the planted support's ten heaviest pairs
    std::map<std::string, ProminentInstitution> by_fi;
    const auto& sup = d.truth.community_support[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < std::min<std::size_t>(10, sup.size()); ++i) {
      auto& p = by_fi[sup[i].fi];
      p.fi = sup[i].fi;
      p.roles.insert(sup[i].role);
      p.years = {2005};
    }
    std::vector<ProminentInstitution> prom;
    for (auto& [fi, p] : by_fi) prom.push_back(p);
    EXPECT_EQ(label_community(k, prom, labels, 50).value, c.tags[static_cast<std::size_t>(k)]) << k;
  }
}

TEST(Bundle, RenderedTextsExtractExactly) {
  auto c = small(12);
  c.n_communities = 4;
  c.docs_per_community = 8;
  c.shared_pairs = 3;
  auto d = generate(c);
  auto dir = std::filesystem::temp_directory_path() / "rmbs_synth_bundle";
  std::filesystem::remove_all(dir);
  auto written = write_bundle(dir, d, *c.seed);
  EXPECT_EQ(written.size(), bundle_files().size() + d.documents.size());
  auto dict = std::make_shared<RootSuffixDictionary>(
      RootSuffixDictionary::load((dir / "roots.csv").string(), (dir / "suffixes.txt").string()));
  DictionaryExtractor primary(dict, default_role_keywords());
  CapitalizedPhraseExtractor secondary(dict, default_role_keywords());
  for (const auto& r : d.documents) {
    std::ifstream in(dir / "docs" / (r.id + ".txt"));
    std::string text((std::istreambuf_iterator<char>(in)), {});
    auto ex = extract_document(r.id, text, primary, secondary);
    std::set<RolePair> got, want;
    for (const auto& p : ex.pairs) got.insert(p.key());
    for (const auto& t : r.pairs) want.insert(t.pair);
    EXPECT_EQ(got, want) << r.id;
  }
  std::filesystem::remove_all(dir);
}
