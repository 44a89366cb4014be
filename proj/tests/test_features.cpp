#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rmbs/features.hpp"

using namespace rmbs;

namespace {

// Letter grade by dropping trailing modifier digits.
std::string grade_oracle(std::string s) {
  while (!s.empty() && s.back() >= '0' && s.back() <= '9') s.pop_back();
  return s;
}

SecurityRecord rec(std::string id, std::string pid, SecurityClass c, int year, double amt,
                   std::set<std::string> flags = {}, std::optional<std::string> mir = "Aaa") {
  SecurityRecord r;
  r.id = std::move(id);
  r.prospectus_id = std::move(pid);
  r.cls = c;
  r.year = year;
  r.original_principal = amt;
  r.flags = std::move(flags);
  r.mir_raw = std::move(mir);
  return r;
}

double value(const Fragment& f, const std::string& name) {
  for (std::size_t i = 0; i < f.names.size(); ++i)
    if (f.names[i] == name) return f.values[i];
  ADD_FAILURE() << "no column " << name;
  return -1;
}

double row_sum(const FeatureMatrix& m, Eigen::Index i, const std::string& group) {
  double s = 0;
  for (std::size_t j = 0; j < m.columns.size(); ++j)
    if (m.columns[j].group == group) s += m.values(i, static_cast<Eigen::Index>(j));
  return s;
}

}  // namespace

TEST(AggregateMir, Examples) {
  EXPECT_EQ(aggregate_mir("Aa2"), MirLevel::Aa);
  EXPECT_EQ(aggregate_mir("Aaa"), MirLevel::Aaa);
  EXPECT_EQ(aggregate_mir(""), MirLevel::null);
  EXPECT_EQ(aggregate_mir(std::nullopt), MirLevel::null);
  EXPECT_EQ(aggregate_mir("NR"), MirLevel::NR);
  EXPECT_EQ(aggregate_mir("WR"), MirLevel::NR);
  EXPECT_EQ(aggregate_mir("(P)Baa1"), MirLevel::Baa);
  EXPECT_EQ(aggregate_mir("Caa1 (sf)"), MirLevel::Caa);
  EXPECT_EQ(aggregate_mir("Ba3 *-"), MirLevel::Ba);
  EXPECT_EQ(aggregate_mir("C"), MirLevel::C);
}

TEST(AggregateMir, GrammarOracle) {
  const std::vector<std::string> grades = {"Aaa", "Aa", "A", "Baa", "Ba", "B", "Caa", "Ca", "C"};
  for (const auto& g : grades)
    for (const std::string mod : {"", "1", "2", "3"}) {
      std::string raw = g + mod;
      EXPECT_EQ(to_string(aggregate_mir(raw)), grade_oracle(raw)) << raw;
    }
}

TEST(AggregateMir, ErrorsNameTheValue) {
  for (const std::string bad : {"AAA+", "Aaaa", "D", "xyz"}) {
    try {
      aggregate_mir(bad);
      ADD_FAILURE() << bad;
    } catch (const InvalidInput& e) {
      EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
    }
  }
  EXPECT_EQ(kMirLevels.size(), 11u);
}

TEST(FlagRegistry, DefaultMatchesFile) {
  auto def = default_flag_registry();
  auto file = FlagRegistry::load(std::string(RMBS_SOURCE_DIR) + "/data/flag_registry.txt");
  EXPECT_EQ(def.names(), file.names());
  EXPECT_EQ(def.names().size(), 73u);
  for (const char* f : {"SSUP", "SSNR", "SEQ", "OC", "EXE", "SC", "RTL", "Z", "CPT", "NAS", "SUB", "MEZ", "AD",
                        "AFC", "AS", "FLT", "NTL", "PAC1", "RAKE", "PT"})
    EXPECT_TRUE(def.contains(f)) << f;
}

TEST(FlagRegistry, RejectsWrongSizeOrDuplicates) {
  auto names = default_flag_registry().names();
  auto short_list = names;
  short_list.pop_back();
  EXPECT_THROW(FlagRegistry{short_list}, ConfigError);
  auto dup = names;
  dup.back() = dup.front();
  EXPECT_THROW(FlagRegistry{dup}, ConfigError);
  EXPECT_THROW(FlagRegistry::load("/nonexistent/flags.txt"), MissingDependency);
}

TEST(SecurityFeatures, ClassAndFlags) {
  auto reg = default_flag_registry();
  auto a = build_security_features(rec("s", "p", SecurityClass::A, 2004, 5e7, {"SSUP"}), reg);
  EXPECT_EQ(value(a, "IsA"), 1);
  EXPECT_EQ(value(a, "IsB"), 0);
  EXPECT_EQ(value(a, "SSUP"), 1);
  EXPECT_EQ(value(a, "SEQ"), 0);
  EXPECT_DOUBLE_EQ(value(a, "MTG.ORIG.AMT"), 0.5);
  EXPECT_EQ(value(a, "Y2004"), 1);
  EXPECT_EQ(value(a, "MIR_Aaa"), 1);

  auto m = build_security_features(rec("s", "p", SecurityClass::M, 2005, 0), reg);
  EXPECT_EQ(value(m, "IsA"), 0);
  EXPECT_EQ(value(m, "IsB"), 0);
  for (int y : {2002, 2003, 2004, 2006, 2007}) EXPECT_EQ(value(m, year_column(y)), 0);
  EXPECT_EQ(std::count(m.names.begin(), m.names.end(), "Y2005"), 0);
  EXPECT_EQ(a.names.size(), 3u + 73u + 11u + 5u);

  EXPECT_THROW(build_security_features(rec("s", "p", SecurityClass::A, 2004, 1, {"NOPE"}), reg), InvalidInput);
  EXPECT_THROW(build_security_features(rec("s", "p", SecurityClass::A, 2004, -1), reg), InvalidInput);
  EXPECT_THROW(build_security_features(rec("s", "p", SecurityClass::A, 2004, 1, {}, "Q7"), reg), InvalidInput);
}

TEST(ProspectusFeatures, Composition) {
  auto a1 = rec("1", "p", SecurityClass::A, 2004, 1e6), a2 = rec("2", "p", SecurityClass::A, 2004, 1e6),
       b = rec("3", "p", SecurityClass::B, 2004, 2e6);
  auto f = build_prospectus_features({&a1, &a2, &b});
  EXPECT_EQ(f.names, prospectus_columns());
  EXPECT_DOUBLE_EQ(value(f, "Frac_A"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(value(f, "VolFrac_A"), 0.5);
  EXPECT_DOUBLE_EQ(value(f, "Count_A"), 2);
  EXPECT_DOUBLE_EQ(value(f, "Vol_B"), 2e6);
  EXPECT_EQ(value(f, "HasSSUP"), 0);

  auto only_a = build_prospectus_features({&a1});
  EXPECT_EQ(value(only_a, "Frac_A"), 1);
  EXPECT_EQ(value(only_a, "Frac_M"), 0);
  EXPECT_EQ(value(only_a, "Frac_B"), 0);

  auto s = rec("4", "p", SecurityClass::A, 2004, 1e6, {"SSUP"});
  EXPECT_EQ(value(build_prospectus_features({&a1, &s, &b}), "HasSSUP"), 1);

  auto z = rec("5", "p", SecurityClass::M, 2004, 0);
  bool zero = false;
  auto fz = build_prospectus_features({&z}, &zero);
  EXPECT_TRUE(zero);
  EXPECT_EQ(value(fz, "VolFrac_M"), 0);
  EXPECT_THROW(build_prospectus_features({}), InvalidInput);
}

TEST(TopicIndicator, ArgmaxLowestTie) {
  auto f = attach_topic_indicator({0.6, 0.4}, 2);
  EXPECT_EQ(f.values, (std::vector<double>{1, 0}));
  EXPECT_EQ(f.names, (std::vector<std::string>{"Topic1", "Topic2"}));
  EXPECT_EQ(attach_topic_indicator({0.25, 0.25, 0.25, 0.25}, 4).values[0], 1);
  std::vector<double> w(30, 1.0 / 30);
  w[17] += 0.01;
  auto g = attach_topic_indicator(w, 30);
  EXPECT_EQ(std::accumulate(g.values.begin(), g.values.end(), 0.0), 1.0);
  EXPECT_EQ(g.values[17], 1);
  EXPECT_THROW(attach_topic_indicator({1.0}, 2), InvalidInput);
}

TEST(AssembleMatrix, Tiers) {
  auto reg = default_flag_registry();
  std::vector<SecurityRecord> recs = {rec("s1", "p1", SecurityClass::A, 2003, 1e8),
                                      rec("s2", "p1", SecurityClass::M, 2003, 1e7),
                                      rec("s3", "p2", SecurityClass::B, 2006, 1e7, {}, std::nullopt)};
  auto pf = prospectus_fragments(recs);
  std::map<std::string, Fragment> tf;
  std::vector<double> w(30, 0.0);
  w[3] = 1;
  tf["p1"] = attach_topic_indicator(w, 30);
  w[3] = 0;
  w[29] = 1;
  tf["p2"] = attach_topic_indicator(w, 30);

  auto sec = assemble_matrix(recs, reg, pf, tf, Tier::security);
  EXPECT_EQ(sec.column("HasSSUP"), -1);
  EXPECT_EQ(sec.values.cols(), 92);
  auto pro = assemble_matrix(recs, reg, pf, tf, Tier::prospectus);
  EXPECT_EQ(pro.values.cols(), 92 + 13);
  EXPECT_GE(pro.column("HasSSUP"), 0);
  auto com = assemble_matrix(recs, reg, pf, tf, Tier::comprehensive);
  EXPECT_EQ(com.values.cols(), 92 + 13 + 30);
  EXPECT_EQ(com.values(2, com.column("Topic30")), 1);
  EXPECT_EQ(com.values(2, com.column("MIR_null")), 1);
  EXPECT_EQ(com.groups, (std::vector<std::string>{"p1", "p1", "p2"}));

  EXPECT_THROW(assemble_matrix({}, reg, pf, tf, Tier::security), InvalidInput);
  pf.erase("p2");
  EXPECT_NO_THROW(assemble_matrix(recs, reg, pf, tf, Tier::security));
  EXPECT_THROW(assemble_matrix(recs, reg, pf, tf, Tier::prospectus), InvalidInput);
}

TEST(AssembleMatrix, RandomInvariants) {
  auto reg = default_flag_registry();
  std::mt19937_64 rng(7);
  const std::vector<std::string> mirs = {"Aaa", "Aa1", "A2", "Baa3", "Ba1", "B2", "Caa1", "Ca", "C", "NR", ""};
  std::vector<SecurityRecord> recs;
  for (int i = 0; i < 300; ++i) {
    auto c = static_cast<SecurityClass>(rng() % 3);
    std::set<std::string> flags;
    for (int f = 0; f < 4; ++f) flags.insert(reg.names()[rng() % 73]);
    if (c != SecurityClass::A) flags.erase("SSUP");
    double amt = (rng() % 4 == 0) ? 0.0 : static_cast<double>(rng() % 100000000);
    recs.push_back(rec("s" + std::to_string(i), "p" + std::to_string(rng() % 40), c, 2002 + static_cast<int>(rng() % 6),
                       amt, flags, mirs[rng() % mirs.size()]));
  }
  auto pf = prospectus_fragments(recs);
  std::map<std::string, Fragment> tf;
  for (const auto& [pid, _] : pf) {
    std::vector<double> w(7);
    for (auto& x : w) x = static_cast<double>(rng() % 1000);
    tf[pid] = attach_topic_indicator(w, 7);
  }
  auto m = assemble_matrix(recs, reg, pf, tf, Tier::comprehensive);
  std::set<std::string> names;
  for (const auto& c : m.columns) EXPECT_TRUE(names.insert(c.name).second);
  int fa = m.column("Frac_A"), fm = m.column("Frac_M"), fb = m.column("Frac_B");
  int va = m.column("VolFrac_A"), vm = m.column("VolFrac_M"), vb = m.column("VolFrac_B");
  std::map<std::string, Eigen::RowVectorXd> seen;
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    EXPECT_EQ(row_sum(m, i, "mir"), 1);
    EXPECT_LE(row_sum(m, i, "year"), 1);
    EXPECT_EQ(row_sum(m, i, "year") == 0, recs[static_cast<std::size_t>(i)].year == 2005);
    EXPECT_EQ(row_sum(m, i, "topic"), 1);
    EXPECT_LE(row_sum(m, i, "class"), 1);
    EXPECT_NEAR(m.values(i, fa) + m.values(i, fm) + m.values(i, fb), 1.0, 1e-12);
    double vs = m.values(i, va) + m.values(i, vm) + m.values(i, vb);
    EXPECT_TRUE(std::abs(vs - 1.0) < 1e-12 || vs == 0.0);
    for (std::size_t j = 0; j < m.columns.size(); ++j)
      if (m.columns[j].type == "binary") {
        double v = m.values(i, static_cast<Eigen::Index>(j));
        EXPECT_TRUE(v == 0 || v == 1);
      }
    // prospectus block identical across securities of one prospectus
    Eigen::RowVectorXd block = m.values.row(i).segment(92, 13);
    auto [it, fresh] = seen.emplace(m.groups[static_cast<std::size_t>(i)], block);
    if (!fresh) {
      EXPECT_EQ(it->second, block);
    }
  }
}

TEST(Io, MatrixRoundTripAndManifest) {
  auto reg = default_flag_registry();
  std::vector<SecurityRecord> recs = {rec("s1", "p1", SecurityClass::A, 2003, 123456789.123, {"SSUP", "Z"}),
                                      rec("s2", "p1", SecurityClass::M, 2007, 1.0 / 3.0)};
  auto pf = prospectus_fragments(recs);
  auto m = assemble_matrix(recs, reg, pf, {}, Tier::prospectus);
  std::string path = ::testing::TempDir() + "/features.csv";
  {
    std::ofstream out(path);
    write_matrix_csv(out, m);
  }
  auto back = read_matrix_csv(path, reg);
  EXPECT_EQ(back.row_ids, m.row_ids);
  EXPECT_EQ(back.groups, m.groups);
  EXPECT_EQ(back.column_names(), m.column_names());
  EXPECT_EQ(back.values, m.values);  // bitwise

  auto j = matrix_manifest(m, Tier::prospectus, {});
  EXPECT_EQ(j["columns"].size(), m.columns.size());
  EXPECT_EQ(j["columns"][0]["name"], "IsA");
  EXPECT_EQ(j["columns"][0]["baseline"], "M");

  std::ostringstream sec;
  write_securities(sec, recs);
  std::string spath = ::testing::TempDir() + "/securities.csv";
  {
    std::ofstream out(spath);
    out << sec.str();
  }
  auto r2 = read_securities(spath);
  ASSERT_EQ(r2.size(), 2u);
  EXPECT_EQ(r2[0].flags, recs[0].flags);
  EXPECT_EQ(r2[0].original_principal, recs[0].original_principal);
  EXPECT_EQ(r2[1].mir_raw, recs[1].mir_raw);
  std::remove(path.c_str());
  std::remove(spath.c_str());
}
