#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support/toxicity_fixture.hpp"

using namespace rmbs;

namespace {

ProminentInstitution pi(std::string fi, std::set<std::string> roles, std::set<int> years) {
  return {std::move(fi), std::move(roles), std::move(years)};
}

int rank(CommunityToxicity t) {
  return t == CommunityToxicity::non_toxic ? 0 : t == CommunityToxicity::partial ? 1 : 2;
}

}  // namespace

TEST(Institution, Examples) {
  InstitutionEvidence e{"indymac", true, false, false, false, ""};
  EXPECT_EQ(label_institution(e), InstitutionToxicity::toxic);
  EXPECT_EQ(label_institution({"boa", false, false, true, false, ""}), InstitutionToxicity::partial);
  EXPECT_EQ(label_institution({"x", false, false, false, false, ""}), InstitutionToxicity::none);
}

TEST(Institution, TruthTable) {
  for (int bits = 0; bits < 16; ++bits) {
    InstitutionEvidence e{"x", (bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0, (bits & 8) != 0, ""};
    auto want = (bits & 3) ? InstitutionToxicity::toxic : (bits & 12) ? InstitutionToxicity::partial
                                                                      : InstitutionToxicity::none;
    EXPECT_EQ(label_institution(e), want) << bits;
  }
}

TEST(Community, Rules) {
  std::map<std::string, InstitutionToxicity> l = {{"a", InstitutionToxicity::toxic},
                                                  {"b", InstitutionToxicity::toxic},
                                                  {"p", InstitutionToxicity::partial}};
  auto two = label_community(2, {pi("a", {"issuer"}, {2005}), pi("b", {"issuer"}, {2006})}, l, 50);
  EXPECT_EQ(two.value, CommunityToxicity::toxic);
  EXPECT_EQ(label_community(0, {pi("a", {"issuer"}, {2005})}, l, 50).value, CommunityToxicity::partial);
  EXPECT_EQ(label_community(0, {pi("clean", {"issuer"}, {2005})}, l, 50).value, CommunityToxicity::non_toxic);
  EXPECT_EQ(label_community(0, {pi("p", {"issuer"}, {2005})}, l, 50).value, CommunityToxicity::partial);
  // one toxic institution in many roles over several years
  EXPECT_EQ(label_community(0, {pi("a", {"issuer", "servicer", "seller"}, {2005, 2006})}, l, 50).value,
            CommunityToxicity::toxic);
  EXPECT_EQ(label_community(0, {pi("a", {"issuer", "servicer", "seller"}, {2005})}, l, 50).value,
            CommunityToxicity::partial);
  // toxic institutions outside issuer and originator roles
  EXPECT_EQ(label_community(0, {pi("a", {"servicer"}, {2005}), pi("b", {"trustee"}, {2006})}, l, 50).value,
            CommunityToxicity::partial);
  EXPECT_EQ(label_community(0, {pi("a", {"issuer"}, {2005}), pi("b", {"issuer"}, {2006})}, l, 39).value,
            CommunityToxicity::excluded);
  EXPECT_EQ(label_community(0, {}, l, 400).value, CommunityToxicity::excluded);
  EXPECT_EQ(two.evidence, (std::vector<std::string>{"a:toxic", "b:toxic"}));
}

TEST(Community, AddingToxicInstitutionIsMonotone) {
  std::mt19937_64 rng(31);
  const std::vector<std::string> roles = {"issuer", "originator", "servicer", "trustee", "seller", "depositor"};
  std::map<std::string, InstitutionToxicity> labels;
  for (int f = 0; f < 30; ++f) labels["f" + std::to_string(f)] = static_cast<InstitutionToxicity>(rng() % 3);
  for (int f = 0; f < 10; ++f) labels["t" + std::to_string(f)] = InstitutionToxicity::toxic;
  auto random_inst = [&](const std::string& fi) {
    ProminentInstitution p{fi, {}, {}};
    for (std::size_t r = 0, n = 1 + rng() % 4; r < n; ++r) p.roles.insert(roles[rng() % roles.size()]);
    for (std::size_t y = 0, n = 1 + rng() % 3; y < n; ++y) p.years.insert(2002 + static_cast<int>(rng() % 6));
    return p;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<ProminentInstitution> prom;
    for (std::size_t i = 0, n = 1 + rng() % 5; i < n; ++i) prom.push_back(random_inst("f" + std::to_string(rng() % 30)));
    auto before = label_community(0, prom, labels, 100);
    prom.push_back(random_inst("t" + std::to_string(rng() % 10)));
    auto after = label_community(0, prom, labels, 100);
    EXPECT_GE(rank(after.value), rank(before.value));
    EXPECT_NE(after.value, CommunityToxicity::non_toxic);
  }
}

TEST(Fixtures, EvidenceLabels) {
  auto ev = read_evidence(fixture::toxicity_dir() + "/evidence.csv");
  auto l = label_institutions(ev);
  EXPECT_EQ(l.at("indymac"), InstitutionToxicity::toxic);
  EXPECT_EQ(l.at("weyerhaeuser"), InstitutionToxicity::toxic);
  EXPECT_EQ(l.at("banc_of_america"), InstitutionToxicity::partial);
  EXPECT_EQ(l.at("first_horizon"), InstitutionToxicity::partial);
  EXPECT_EQ(l.at("countrywide"), InstitutionToxicity::none);
  std::size_t counted = 0;
  for (auto t : {InstitutionToxicity::toxic, InstitutionToxicity::partial, InstitutionToxicity::none})
    counted += static_cast<std::size_t>(std::count_if(l.begin(), l.end(), [&](const auto& kv) { return kv.second == t; }));
  EXPECT_EQ(counted, ev.size());
}

TEST(Fixtures, CommunityLabelsMatchReferenceClassification) {
  auto labels = label_institutions(read_evidence(fixture::toxicity_dir() + "/evidence.csv"));
  auto comms = fixture::load_communities();
  ASSERT_EQ(comms.size(), 30u);
  std::map<CommunityToxicity, std::set<int>> got;
  for (const auto& c : comms) {
    auto l = label_community(c.topic, c.prominent, labels, c.prospectuses);
    EXPECT_EQ(l.value, c.expected) << "Topic" << c.topic + 1;
    got[l.value].insert(c.topic + 1);
  }
  EXPECT_EQ(got[CommunityToxicity::toxic], (std::set<int>{3, 7, 12, 26, 27}));
  EXPECT_EQ(got[CommunityToxicity::partial], (std::set<int>{8, 9, 10, 11, 14, 18, 20, 22, 25}));
  EXPECT_EQ(got[CommunityToxicity::non_toxic], (std::set<int>{2, 4, 5, 6, 16, 17, 28, 30}));
  EXPECT_EQ(got[CommunityToxicity::excluded].size(), 8u);
}

TEST(Signs, Examples) {
  glm::LassoFit fe, fne;
  fe.columns = fne.columns = {"Topic1", "Topic2", "Topic3"};
  fe.coefficients = {{"Topic2", -0.662}, {"Topic3", 0.5}};
  fne.coefficients = {{"Topic3", 0.1}};
  std::vector<CommunityLabel> c = {{1, CommunityToxicity::non_toxic, {}},
                                   {2, CommunityToxicity::toxic, {}},
                                   {0, CommunityToxicity::partial, {}}};
  auto rows = compare_signs(c, fe, fne);
  EXPECT_EQ(rows[0].fe_sign, -1);
  EXPECT_EQ(rows[0].fne_sign, 0);
  EXPECT_TRUE(rows[0].consistent);
  EXPECT_EQ(rows[1].fe_sign, 1);
  EXPECT_EQ(rows[1].fne_sign, 1);
  EXPECT_TRUE(rows[1].consistent);
  EXPECT_EQ(rows[2].fe_sign, 0);
  EXPECT_EQ(rows[2].fne_sign, 0);
  std::vector<CommunityLabel> missing = {{7, CommunityToxicity::toxic, {}}};
  EXPECT_THROW(compare_signs(missing, fe, fne), InvalidInput);
  EXPECT_FALSE(sign_consistent(CommunityToxicity::non_toxic, 0, 1));
  EXPECT_FALSE(sign_consistent(CommunityToxicity::toxic, -1, 0));
  EXPECT_TRUE(sign_consistent(CommunityToxicity::partial, -1, 1));
}

TEST(Signs, ReferenceCoefficients) {
  auto labels = label_institutions(read_evidence(fixture::toxicity_dir() + "/evidence.csv"));
  std::vector<CommunityLabel> c;
  for (const auto& f : fixture::load_communities()) c.push_back(label_community(f.topic, f.prominent, labels, f.prospectuses));
  auto [fe, fne] = fixture::reference_topic_fits();
  auto rows = compare_signs(c, fe, fne);
  std::set<int> inconsistent;
  for (const auto& r : rows) {
    if (!r.consistent) inconsistent.insert(r.topic + 1);
    if (r.topic + 1 == 2) {
      EXPECT_EQ(r.fe_sign, -1);
      EXPECT_EQ(r.toxicity, CommunityToxicity::non_toxic);
    }
    for (int t : {3, 7, 26, 27})
      if (r.topic + 1 == t) {
        EXPECT_EQ(r.fe_sign, 1);
        EXPECT_EQ(r.fne_sign, 1);
      }
    if (r.topic + 1 == 12) {
      EXPECT_EQ(r.fe_sign, 0);
      EXPECT_EQ(r.fne_sign, 0);
    }
  }
  // the non-toxic Topic 6 carries a small positive FNE coefficient
  EXPECT_EQ(inconsistent, (std::set<int>{6}));

  auto again = compare_signs(c, fe, fne);
  ASSERT_EQ(again.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(again[i].fe_sign, rows[i].fe_sign);
    EXPECT_EQ(again[i].fne_sign, rows[i].fne_sign);
  }
}

TEST(Prominent, FromDynamicFit) {
  topics::DtmFit fit;
  fit.vocabulary = Vocabulary(std::vector<RolePair>{{"issuer", "a"}, {"originator", "b"}, {"servicer", "a"}, {"trustee", "c"}});
  fit.years = {2005, 2006};
  fit.config.k = 1;
  Eigen::MatrixXd b0(1, 4), b1(1, 4);
  // vocabulary order: (issuer,a) (originator,b) (servicer,a) (trustee,c)
  b0 << 0.5, 0.3, 0.15, 0.05;
  b1 << 0.5, 0.05, 0.15, 0.3;
  fit.per_slice_topic_word = {b0, b1};
  auto p = prominent_institutions(fit, 0, 2);
  // time-averaged top two: (issuer,a) 0.5 and (originator,b)/(trustee,c) tie at 0.175 -> lower index
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].fi, "a");
  EXPECT_EQ(p[0].roles, (std::set<std::string>{"issuer"}));
  EXPECT_EQ(p[0].years, (std::set<int>{2005, 2006}));
  EXPECT_EQ(p[1].fi, "b");
  EXPECT_EQ(p[1].years, (std::set<int>{2005}));
  EXPECT_THROW(prominent_institutions(fit, 1), std::out_of_range);
}

TEST(Report, Layout) {
  CommunitySummary s;
  s.label = {2, CommunityToxicity::toxic, {"ameriquest:toxic"}};
  s.dynamics = "dynamic";
  s.prospectuses = 41;
  s.years = {2005, 2006};
  s.prominent = {pi("ameriquest", {"issuer"}, {2005})};
  std::ostringstream out;
  write_community_report(out, {s}, {{2, CommunityToxicity::toxic, 1, 1, true}});
  EXPECT_EQ(out.str(),
            "topic,type,prospectuses,years,supply_chain,toxic,evidence,fe,fne,consistent\n"
            "Topic3,dynamic,41,2005;2006,ameriquest issuer,toxic,ameriquest:toxic,+,+,1\n");
}
