#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rmbs/corpus.hpp"

using namespace rmbs;

namespace {

DocumentRecord rec(std::string id, int year, std::vector<std::pair<std::string, std::string>> pairs) {
  DocumentRecord r{std::move(id), year, {}, {}};
  for (auto& [role, fi] : pairs) r.pairs.push_back({{role, fi}, 1});
  return r;
}

// n documents; each holds pairs with the listed institutions plus its own filler.
std::vector<DocumentRecord> random_records(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> fi(0, 11), role(0, 4), len(1, 9), year(2002, 2007);
  std::vector<DocumentRecord> out;
  for (int i = 0; i < n; ++i) {
    DocumentRecord r{"d" + std::to_string(i), year(rng), {}, {}};
    int m = len(rng);
    for (int j = 0; j < m; ++j)
      r.pairs.push_back({{seeded_roles()[static_cast<std::size_t>(role(rng))], "FI" + std::to_string(fi(rng))}, 1});
    out.push_back(std::move(r));
  }
  return out;
}

long total_mass(const TimeSlicedCorpus& c) { return c.total_mass(); }

}  // namespace

TEST(BuildCorpus, Singleton) {
  auto c = build_corpus({rec("p1", 2002, {{"issuer", "X"}})});
  EXPECT_EQ(c.slices().size(), 1u);
  EXPECT_EQ(c.vocabulary().size(), 1u);
}

TEST(BuildCorpus, SparseYearsGetNoEmptySlice) {
  auto c = build_corpus({rec("a", 2002, {{"issuer", "X"}}), rec("b", 2004, {{"issuer", "Y"}})});
  ASSERT_EQ(c.slices().size(), 2u);
  EXPECT_EQ(c.slices()[0].year, 2002);
  EXPECT_EQ(c.slices()[1].year, 2004);
}

TEST(BuildCorpus, WachoviaSummaryRecord) {
  auto c = build_corpus({rec("wach-2006", 2006,
                             {{"issuer", "Wachovia"},
                              {"originator", "National City"},
                              {"sponsor", "Wachovia"},
                              {"servicer", "Wells Fargo"},
                              {"trustee", "U.S. Bank"}})});
  EXPECT_EQ(c.num_docs(), 1u);
  EXPECT_GE(c.vocabulary().find({"issuer", "Wachovia"}), 0);
  EXPECT_GE(c.vocabulary().find({"originator", "National City"}), 0);
  EXPECT_EQ(c.vocabulary().size(), 5u);
}

TEST(BuildCorpus, RejectsDuplicateIdNamingIt) {
  try {
    build_corpus({rec("dup", 2003, {{"issuer", "X"}}), rec("dup", 2004, {{"issuer", "X"}})});
    FAIL();
  } catch (const DuplicateDocument& e) {
    EXPECT_EQ(e.id(), "dup");
  }
}

TEST(BuildCorpus, RejectsYearOutOfRange) {
  EXPECT_THROW(build_corpus({rec("a", 2001, {{"issuer", "X"}})}), InvalidInput);
  EXPECT_THROW(build_corpus({rec("a", 2008, {{"issuer", "X"}})}), InvalidInput);
  EXPECT_NO_THROW(build_corpus({rec("a", 2008, {{"issuer", "X"}})}, {2002, 2010}));
}

TEST(BuildCorpus, RejectsEmptyPairs) { EXPECT_THROW(build_corpus({rec("a", 2003, {})}), InvalidInput); }

TEST(BuildCorpus, EveryTokenInVocabularyAndSlicesAscending) {
  std::mt19937_64 rng(3);
  auto c = build_corpus(random_records(rng, 80));
  for (std::size_t s = 1; s < c.slices().size(); ++s) EXPECT_LT(c.slices()[s - 1].year, c.slices()[s].year);
  for (const auto* d : c.documents())
    for (const auto& t : d->tokens) {
      ASSERT_GE(t.word, 0);
      ASSERT_LT(static_cast<std::size_t>(t.word), c.vocabulary().size());
    }
}

TEST(FilterCorpus, InstitutionInNineteenDocumentsIsRemoved) {
  std::vector<DocumentRecord> rs;
  for (int i = 0; i < 25; ++i) {
    std::vector<std::pair<std::string, std::string>> p = {
        {"issuer", "Big"}, {"trustee", "Big"}, {"servicer", "Big"}, {"seller", "Big"}, {"depositor", "Big"}};
    if (i < 19) p.push_back({"originator", "Rare"});
    rs.push_back(rec("d" + std::to_string(i), 2004, p));
  }
  auto f = filter_corpus(build_corpus(rs));
  EXPECT_EQ(f.num_docs(), 25u);
  for (const auto& p : f.vocabulary().pairs()) EXPECT_NE(p.fi, "Rare");
  EXPECT_EQ(f.vocabulary().size(), 5u);
}

TEST(FilterCorpus, DocumentWithFourPairsDropped) {
  std::vector<DocumentRecord> rs;
  for (int i = 0; i < 20; ++i) {
    std::vector<std::pair<std::string, std::string>> p = {
        {"issuer", "Big"}, {"trustee", "Big"}, {"servicer", "Big"}, {"seller", "Big"}};
    if (i > 0) p.push_back({"depositor", "Big"});
    rs.push_back(rec("d" + std::to_string(i), 2004, p));
  }
  // d0 keeps Big's document count at 20 in the first pass; it is then dropped for
  // having four pairs, after which Big falls to 19 documents and everything goes.
  EXPECT_THROW(filter_corpus(build_corpus(rs)), EmptyCorpus);
  auto f = filter_corpus(build_corpus(rs), 19, 5);
  EXPECT_EQ(f.num_docs(), 19u);
  for (const auto* d : f.documents()) EXPECT_NE(d->id, "d0");
}

TEST(FilterCorpus, ZeroThresholdsAreIdentity) {
  std::mt19937_64 rng(7);
  auto c = build_corpus(random_records(rng, 60));
  auto f = filter_corpus(c, 0, 0);
  std::ostringstream a, b;
  write_corpus(a, c);
  write_corpus(b, f);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_TRUE(f.vocabulary() == c.vocabulary());
}

TEST(FilterCorpus, PostconditionsAndIdempotenceOnRandomCorpora) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    auto c = build_corpus(random_records(rng, 120));
    TimeSlicedCorpus f;
    try {
      f = filter_corpus(c, 15, 3);
    } catch (const EmptyCorpus&) {
      continue;
    }
    std::map<std::string, std::set<std::string>> fi_docs;
    for (const auto* d : f.documents()) {
      EXPECT_GE(d->tokens.size(), 3u);
      for (const auto& t : d->tokens) fi_docs[f.vocabulary().at(t.word).fi].insert(d->id);
    }
    for (const auto& [fi, docs] : fi_docs) EXPECT_GE(docs.size(), 15u) << fi;

    auto g = filter_corpus(f, 15, 3);
    std::ostringstream a, b;
    write_corpus(a, f);
    write_corpus(b, g);
    EXPECT_EQ(a.str(), b.str());
  }
}

TEST(FilterCorpus, RejectsEmptyInput) { EXPECT_THROW(filter_corpus(TimeSlicedCorpus{}), EmptyCorpus); }

TEST(WeightTokens, DoublesIssuerLeavesServicer) {
  DocumentRecord r{"a", 2005, {{{"issuer", "X"}, 1}, {{"servicer", "Y"}, 3}}, {}};
  auto w = weight_tokens(build_corpus({r}));
  const auto& v = w.vocabulary();
  for (const auto& t : w.slices()[0].docs[0].tokens) {
    if (v.at(t.word).role == "issuer") { EXPECT_EQ(t.count, 2); }
    if (v.at(t.word).role == "servicer") { EXPECT_EQ(t.count, 3); }
  }
}

TEST(WeightTokens, UnitMultiplierIsIdentity) {
  std::mt19937_64 rng(11);
  auto c = build_corpus(random_records(rng, 40));
  std::ostringstream a, b;
  write_corpus(a, c);
  write_corpus(b, weight_tokens(c, default_weighted_roles(), 1));
  EXPECT_EQ(a.str(), b.str());
}

TEST(WeightTokens, MassIncreasesByExtraCountsOfAffectedRoles) {
  std::mt19937_64 rng(13);
  auto c = build_corpus(random_records(rng, 70));
  long extra = 0;
  for (const auto* d : c.documents())
    for (const auto& t : d->tokens)
      if (default_weighted_roles().count(c.vocabulary().at(t.word).role)) extra += t.count * 2;
  auto w = weight_tokens(c, default_weighted_roles(), 3);
  EXPECT_EQ(total_mass(w), total_mass(c) + extra);
  EXPECT_EQ(w.num_docs(), c.num_docs());
  EXPECT_TRUE(w.vocabulary() == c.vocabulary());
  EXPECT_THROW(weight_tokens(c, default_weighted_roles(), 0), InvalidInput);
}

TEST(Vocabulary, IndexPairBijection) {
  std::mt19937_64 rng(17);
  auto c = build_corpus(random_records(rng, 50));
  const auto& v = c.vocabulary();
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.find(v.at(static_cast<int>(i))), static_cast<int>(i));
  EXPECT_EQ(v.find({"issuer", "nobody"}), -1);
}

TEST(Serialization, RoundTripPreservesCounts) {
  std::mt19937_64 rng(19);
  auto c = weight_tokens(build_corpus(random_records(rng, 90)));
  std::ostringstream out;
  write_corpus(out, c);
  std::istringstream in(out.str());
  auto back = build_corpus(read_records(in));
  std::ostringstream again;
  write_corpus(again, back);
  EXPECT_EQ(out.str(), again.str());
  EXPECT_EQ(back.total_mass(), c.total_mass());
}

TEST(Serialization, DefaultCountIsOne) {
  std::istringstream in(R"({"id":"x","year":2003,"pairs":[{"role":"issuer","fi":"A"}]})");
  auto rs = read_records(in);
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0].pairs[0].count, 1);
}

TEST(Serialization, MalformedLineReportsLineNumber) {
  std::istringstream in("{\"id\":\"x\",\"year\":2003,\"pairs\":[{\"role\":\"issuer\",\"fi\":\"A\"}]}\n{oops\n");
  try {
    read_records(in);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Serialization, VocabularyCsvHasDocumentFrequency) {
  auto c = build_corpus({rec("a", 2003, {{"issuer", "A"}, {"trustee", "B"}}), rec("b", 2004, {{"issuer", "A"}})});
  std::ostringstream out;
  write_vocabulary_csv(out, c);
  EXPECT_EQ(out.str(), "index,role,fi,doc_frequency\n0,issuer,A,2\n1,trustee,B,1\n");
}
