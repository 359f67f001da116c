#include <gtest/gtest.h>

#include <cstdio>
#include <sstream>

#include "cli.hpp"
#include "hpelm/csv.hpp"
#include "hpelm/data.hpp"
#include "hpelm/model.hpp"
#include "test_support.hpp"

using namespace hpelm;
using hpelm::testing::read_file;
using hpelm::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_rows(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  std::size_t line = 0;
  while (csv::read_record(in, fields, line)) rows.push_back(fields);
  return rows;
}

// CSV report rows without the wall_time_ms column.
std::vector<std::vector<std::string>> without_timing(const std::string& csv_text) {
  auto rows = read_rows(csv_text);
  for (auto& r : rows) r.erase(r.begin() + 6);
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  TempDir dir;
  std::string data;

  void SetUp() override {
    data = dir.file("gauss.csv");
    const Result r = run({"synth", "--kind", "two_gaussians", "--n", "300", "--d", "4", "--offset", "1",
                          "--seed", "5", "--out", data});
    ASSERT_EQ(r.code, 0) << r.err;
  }
};

}  // namespace

TEST_F(CliTest, TrainThenScoreTrainingRows) {
  const std::string model = dir.file("m.json"), report = dir.file("r.csv"), split = dir.file("s.csv");
  const Result t = run({"train", "--data", data, "--combo", "sigmoid:100", "--budget", "0", "--seed", "3",
                        "--out", model, "--report", report, "--split-out", split});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("sigmoid(100)"), std::string::npos);
  const auto rows = read_rows(read_file(report));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][3], "train_accuracy");
  EXPECT_GE(std::stod(rows[1][4]), 0.8);

  const Result s = run({"score", "--model", model, "--data", data, "--split", split, "--subset", "train"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(s.err.find("accuracy " + rows[1][3]), std::string::npos) << s.err << " vs " << rows[1][3];
  const auto preds = read_rows(s.out);
  EXPECT_EQ(preds[0], (std::vector<std::string>{"row", "label", "score_0", "score_1"}));
  EXPECT_EQ(preds.size(), 1u + 210u);
}

TEST_F(CliTest, ScoresMatchInMemoryModelBitForBit) {
  const std::string model = dir.file("m.json");
  ASSERT_EQ(run({"train", "--data", data, "--combo", "tanh:20,rbf_linf:20", "--budget", "40", "--out", model}).code,
            0);
  const Result s = run({"score", "--model", model, "--data", data});
  ASSERT_EQ(s.code, 0) << s.err;
  const ElmModel m = load_model(std::filesystem::path(model));
  const DenseMatrix scores = predict_scores(m, m.encoding.transform(load_csv(data, "label")));
  const auto rows = read_rows(s.out);
  ASSERT_EQ(rows.size(), scores.rows() + 1);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(std::strtod(rows[i + 1][2 + c].c_str(), nullptr), scores(i, c));
  }
}

TEST_F(CliTest, TrainIsDeterministic) {
  const auto once = [&](const std::string& name) {
    const std::string path = dir.file(name);
    EXPECT_EQ(run({"train", "--data", data, "--combo", "rbf_l2:30", "--budget", "30", "--seed", "8", "--report", path})
                  .code,
              0);
    return without_timing(read_file(path));
  };
  EXPECT_EQ(once("a.csv"), once("b.csv"));
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  EXPECT_EQ(run({"train", "--data", data, "--combo", "tanh:1000,rbf_l1:999"}).code, 2);
  EXPECT_EQ(run({"train", "--data", data, "--combo", "relu:2000"}).code, 2);
  EXPECT_EQ(run({"train", "--data", data}).code, 2);
  EXPECT_EQ(run({"grid", "--data", data}).code, 2);
  EXPECT_EQ(run({"grid", "--data", data, "--combo", "tanh:2000", "--jobs", "0"}).code, 2);
  EXPECT_EQ(run({"train", "--data", data, "--combo", "tanh:2000", "--ridge", "lots"}).code, 2);
  EXPECT_EQ(run({"train", "--bogus"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"grid", "--config", dir.file("missing.grid")}).code, 2);
  const Result r = run({"train", "--data", data, "--combo", "tanh:2000", "--positive-class", "zz"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("zz"), std::string::npos);
}

TEST_F(CliTest, DataErrorsExitThree) {
  const std::string ragged = dir.write("ragged.csv", "a,b,label\n1,2,x\n3,4,y\n5,x\n");
  const Result r = run({"rank", "--data", ragged});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
  EXPECT_EQ(run({"train", "--data", dir.file("nope.csv"), "--combo", "tanh:2000"}).code, 3);
  const Result m = run({"score", "--model", dir.file("none.json"), "--data", data});
  EXPECT_EQ(m.code, 3);
}

TEST_F(CliTest, NumericFailureExitsFour) {
  const std::string model = dir.file("m.json");
  ASSERT_EQ(run({"train", "--data", data, "--combo", "linear:50", "--budget", "0", "--out", model}).code, 0);
  // inputs near the double limit overflow the linear projections
  const std::string huge = dir.write("huge.csv", "f0,f1,f2,f3\n1.7e308,1.7e308,1.7e308,1.7e308\n");
  const Result r = run({"score", "--model", model, "--data", huge});
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST_F(CliTest, ScoreReportsSchemaMismatchByName) {
  const std::string model = dir.file("m.json");
  ASSERT_EQ(run({"train", "--data", data, "--combo", "tanh:10", "--budget", "10", "--out", model}).code, 0);
  const std::string missing = dir.write("missing.csv", "f0,f1,f3,label\n1,2,3,0\n");
  const Result r = run({"score", "--model", model, "--data", missing});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("'f2'"), std::string::npos) << r.err;
  const std::string extra = dir.write("extra.csv", "f0,f1,f2,f3,f9\n1,2,3,4,5\n");
  const Result e = run({"score", "--model", model, "--data", extra});
  EXPECT_EQ(e.code, 3);
  EXPECT_NE(e.err.find("'f9'"), std::string::npos) << e.err;
  EXPECT_EQ(run({"score", "--model", model, "--data", data, "--subset", "test"}).code, 2);
}

TEST_F(CliTest, UnseenCategoryIsScored) {
  const std::string cat = dir.write("cat.csv",
                                    "proto,bytes,label\ntcp,10,b\nudp,300,m\ntcp,12,b\nudp,280,m\ntcp,9,b\n"
                                    "udp,310,m\ntcp,11,b\nudp,305,m\ntcp,14,b\nudp,290,m\n");
  const std::string model = dir.file("m.json");
  ASSERT_EQ(run({"train", "--data", cat, "--combo", "sigmoid:6", "--budget", "6", "--out", model}).code, 0);
  const std::string fresh = dir.write("fresh.csv", "bytes,proto\n295,gre\n11,tcp\n");
  const Result r = run({"score", "--model", model, "--data", fresh});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_rows(r.out).size(), 3u);
}

TEST_F(CliTest, RankPrintsPriorityList) {
  const std::string planted = dir.file("planted.csv");
  ASSERT_EQ(run({"synth", "--kind", "planted_feature", "--n", "200", "--d", "5", "--seed", "4", "--out", planted}).code,
            0);
  SynthOptions o;
  o.kind = SynthKind::planted_feature;
  o.n = 200;
  o.d = 5;
  o.seed = 4;
  const std::size_t informative = *synth_dataset(o).informative_feature;

  const Result top = run({"rank", "--data", planted, "--k", "3"});
  ASSERT_EQ(top.code, 0) << top.err;
  EXPECT_EQ(top.out.rfind("Top 3 Features [" + std::to_string(informative) + " ", 0), 0u) << top.out;
  const auto rows = read_rows(top.out.substr(top.out.find('\n') + 1));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"feature_index", "feature_name", "method", "score", "rank"}));
  EXPECT_EQ(rows[1][2], "f_score");

  const Result all = run({"rank", "--data", planted, "--method", "fisher"});
  ASSERT_EQ(all.code, 0) << all.err;
  EXPECT_EQ(all.out.rfind("All Features [" + std::to_string(informative) + " ", 0), 0u) << all.out;
  EXPECT_EQ(read_rows(all.out.substr(all.out.find('\n') + 1)).size(), 6u);
  EXPECT_EQ(run({"rank", "--data", planted, "--k", "6"}).code, 2);
}

TEST_F(CliTest, GridCsvAndConfigPrecedence) {
  const std::string cfg = dir.write("exp.grid",
                                    "data = gauss.csv\nseed = 1\nbudget = 20\nfeatures = all\nfeatures = top:2\n"
                                    "combo = linear:20\ncombo = sigmoid:10,rbf_l1:10\n");
  const Result a = run({"grid", "--config", cfg});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto rows = without_timing(a.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[1][0], "all");
  EXPECT_EQ(rows[3][0], "top:2");
  EXPECT_EQ(rows[2][2], "sigmoid(10)+rbf_l1(10)");

  // a command-line seed overrides the file
  const Result b = run({"grid", "--config", cfg, "--seed", "2"});
  ASSERT_EQ(b.code, 0);
  EXPECT_NE(without_timing(b.out), rows);
  const Result c = run({"grid", "--config", cfg, "--seed", "1", "--jobs", "3"});
  EXPECT_EQ(without_timing(c.out), rows);
  const Result one = run({"grid", "--config", cfg, "--combo", "tanh:20"});
  EXPECT_EQ(without_timing(one.out).size(), 3u);
}

TEST_F(CliTest, GridRowFailuresAreReported) {
  const Result r = run({"grid", "--data", data, "--features", "top:9", "--features", "all", "--combo", "tanh:8",
                        "--budget", "8"});
  ASSERT_EQ(r.code, 0);
  const auto rows = read_rows(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[1][8].empty());
  EXPECT_TRUE(rows[2][8].empty());
  EXPECT_NE(r.err.find("1 of 2"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  const Result r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("grid"), std::string::npos);
}
