#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "hpelm/data.hpp"
#include "hpelm/error.hpp"

using namespace hpelm;

namespace {

RawTable parse(const std::string& text, const TypeOverrides& overrides = {}) {
  std::istringstream in(text);
  return read_csv(in, "label", overrides);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

double column_mean(const DenseMatrix& x, std::size_t j, const std::vector<std::size_t>& rows) {
  double s = 0;
  for (std::size_t r : rows) s += x(r, j);
  return s / static_cast<double>(rows.size());
}

double column_pstdev(const DenseMatrix& x, std::size_t j, const std::vector<std::size_t>& rows) {
  const double m = column_mean(x, j, rows);
  double s = 0;
  for (std::size_t r : rows) s += (x(r, j) - m) * (x(r, j) - m);
  return std::sqrt(s / static_cast<double>(rows.size()));
}

}  // namespace

TEST(ReadCsv, InfersColumnTypes) {
  const RawTable t = parse("Dur,Proto,label\n1.5,tcp,a\n2,udp,b\n,tcp,a\n");
  ASSERT_EQ(t.feature_names, (std::vector<std::string>{"Dur", "Proto"}));
  EXPECT_EQ(t.types, (std::vector<ColumnType>{ColumnType::numeric, ColumnType::categorical}));
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.labels, (std::vector<std::string>{"a", "b", "a"}));
  EXPECT_EQ(t.columns[0][2], "");
}

TEST(ReadCsv, LabelColumnAnywhereAndQuotedFields) {
  const RawTable t = parse("label,\"Src, Addr\",n\nx,\"10.0.0.1\",3\ny,\"a \"\"b\"\"\",4\n");
  EXPECT_EQ(t.feature_names, (std::vector<std::string>{"Src, Addr", "n"}));
  EXPECT_EQ(t.columns[0][1], "a \"b\"");
  EXPECT_EQ(t.labels, (std::vector<std::string>{"x", "y"}));
}

TEST(ReadCsv, OverrideForcesCategorical) {
  TypeOverrides o;
  add_type_override(o, "port=categorical");
  const RawTable t = parse("port,label\n80,a\n443,b\n80,a\n", o);
  EXPECT_EQ(t.types[0], ColumnType::categorical);
  EXPECT_THROW(add_type_override(o, "port=text"), ConfigError);
  EXPECT_THROW(add_type_override(o, "port"), ConfigError);
  TypeOverrides unknown;
  add_type_override(unknown, "nope=numeric");
  EXPECT_THROW(parse("port,label\n80,a\n", unknown), ConfigError);
}

TEST(ReadCsv, NonFiniteTextIsCategorical) {
  const RawTable t = parse("v,label\n1,a\ninf,b\n");
  EXPECT_EQ(t.types[0], ColumnType::categorical);
}

TEST(ReadCsv, ErrorsCarryLineNumbers) {
  try {
    parse("a,b,label\n1,2,x\n3,4\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  try {
    parse("a,label\n1,x\n2,\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("a,b\n1,2\n"), DataError);
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("a,a,label\n1,2,x\n"), ParseError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", "label"), DataError);
}

TEST(ReadCsv, LabelOptional) {
  std::istringstream in("a,b\n1,2\n");
  const RawTable t = read_csv(in, "label", {}, true);
  EXPECT_FALSE(t.labelled);
  EXPECT_EQ(t.feature_names.size(), 2u);
}

TEST(SplitStratified, FiveFiveGivesSevenTrain) {
  const std::vector<std::string> labels{"a", "a", "a", "a", "a", "b", "b", "b", "b", "b"};
  const SplitAssignment s = split_stratified(labels, 0.7, 3);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.test.size(), 3u);
  std::size_t a = 0;
  for (std::size_t i : s.train) a += labels[i] == "a";
  EXPECT_TRUE(a == 3 || a == 4);
}

TEST(SplitStratified, PartitionAndStratificationBounds) {
  std::vector<std::string> labels;
  const std::map<std::string, std::size_t> sizes{{"x", 13}, {"y", 7}, {"z", 42}, {"w", 2}};
  for (const auto& [k, n] : sizes) labels.insert(labels.end(), n, k);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SplitAssignment s = split_stratified(labels, 0.7, seed);
    EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::floor(0.7 * labels.size() + 0.5)));
    std::vector<int> seen(labels.size(), 0);
    for (std::size_t i : s.train) ++seen[i];
    for (std::size_t i : s.test) ++seen[i];
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
    for (const auto& [k, n] : sizes) {
      double in_train = 0;
      for (std::size_t i : s.train) in_train += labels[i] == k;
      EXPECT_LE(std::abs(in_train - 0.7 * static_cast<double>(n)), 1.0) << k;
      EXPECT_GE(in_train, 1.0);
      EXPECT_LE(in_train, static_cast<double>(n) - 1.0);
    }
  }
}

TEST(SplitStratified, DeterministicAndSeedDependent) {
  std::vector<std::string> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i % 3 ? "p" : "q");
  const auto a = split_stratified(labels, 0.7, 9), b = split_stratified(labels, 0.7, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, split_stratified(labels, 0.7, 10).train);
}

TEST(SplitStratified, Errors) {
  EXPECT_THROW(split_stratified(std::vector<std::string>(6, "a"), 0.7, 1), DataError);
  EXPECT_THROW(split_stratified(std::vector<std::string>{"a", "a", "a", "b"}, 0.7, 1), DataError);
  EXPECT_THROW(split_stratified(std::vector<std::string>{"a", "a", "b", "b"}, 1.0, 1), ConfigError);
}

TEST(SplitManifest, RoundTrip) {
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 2 ? "m" : "b");
  const SplitAssignment s = split_stratified(labels, 0.7, 4);
  std::stringstream io;
  write_split_manifest(io, s);
  EXPECT_EQ(io.str().substr(0, 13), "index,subset\n");
  const SplitAssignment back = read_split_manifest(io);
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.test, s.test);

  std::istringstream gap("index,subset\n0,train\n2,test\n");
  EXPECT_THROW(read_split_manifest(gap), DataError);
  std::istringstream bad("index,subset\n0,valid\n");
  EXPECT_THROW(read_split_manifest(bad), ParseError);
}

TEST(Encoding, FrequencyRankCodes) {
  std::string text = "Proto,label\n";
  for (const char* p : {"udp", "tcp", "icmp", "tcp", "udp", "tcp", "tcp", "udp", "tcp", "gre"}) {
    text += std::string(p) + ",a\n";
  }
  const RawTable t = parse(text);
  std::vector<std::size_t> train = all_rows(9);
  const Encoding enc = Encoding::fit(t, train);
  const ColumnEncoder& c = enc.columns[0];
  EXPECT_EQ(c.vocabulary, (std::vector<std::string>{"tcp", "udp", "icmp"}));
  EXPECT_EQ(c.code("tcp"), 0.0);
  EXPECT_EQ(c.code("udp"), 1.0);
  EXPECT_EQ(c.code("icmp"), 2.0);
  EXPECT_EQ(c.code("gre"), 3.0);
  // training codes 0×5, 1×3, 2×1
  const double mean = 5.0 / 9.0;
  const double sd = std::sqrt((5 * mean * mean + 3 * (1 - mean) * (1 - mean) + (2 - mean) * (2 - mean)) / 9.0);
  EXPECT_NEAR(c.mean, mean, 1e-15);
  EXPECT_NEAR(c.stdev, sd, 1e-15);
  EXPECT_NEAR(enc.transform(t)(9, 0), (3.0 - mean) / sd, 1e-12);
}

TEST(Encoding, FrequencyTiesAreLexicographic) {
  const RawTable t = parse("s,label\nb,x\na,x\nc,x\nb,x\na,x\n");
  const Encoding enc = Encoding::fit(t, all_rows(5));
  EXPECT_EQ(enc.columns[0].vocabulary, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Encoding, MissingValues) {
  const RawTable t = parse("n,s,label\n1,,x\n,u,x\n5,u,x\n9,,x\n,v,x\n");
  const std::vector<std::size_t> train{0, 1, 2, 3};
  const Encoding enc = Encoding::fit(t, train);
  EXPECT_EQ(enc.columns[0].median, 5.0);
  EXPECT_EQ(enc.columns[0].code(""), 5.0);
  // two each; bytewise "u" sorts before the UTF-8 "∅"
  EXPECT_EQ(enc.columns[1].vocabulary, (std::vector<std::string>{"u", std::string(kMissingCategory)}));
  EXPECT_EQ(enc.columns[1].code(""), 1.0);
  EXPECT_EQ(enc.columns[1].code("v"), 2.0);
}

TEST(Encoding, ConstantColumnMapsToZero) {
  const RawTable t = parse("c,v,label\n7,1,x\n7,2,y\n7,3,x\n7,4,y\n");
  const Dataset ds = encode_and_normalize(t, SplitAssignment{{0, 1, 2}, {3}, 0, 0.7});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ds.x(i, 0), 0.0);
  EXPECT_EQ(ds.encoding.columns[0].stdev, 0.0);
}

TEST(Encoding, TrainingColumnsAreStandardized) {
  std::string text = "a,b,c,label\n";
  for (int i = 0; i < 50; ++i) {
    text += std::to_string(i * i * 0.37 - 4) + "," + std::to_string((i * 7) % 11) + "," +
            (i % 3 ? "red" : "blue") + "," + (i % 2 ? "m" : "b") + "\n";
  }
  const RawTable t = parse(text);
  const SplitAssignment split = split_stratified(t.labels, 0.7, 2);
  const Dataset ds = encode_and_normalize(t, split);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_LE(std::abs(column_mean(ds.x, j, split.train)), 1e-9) << j;
    EXPECT_LE(std::abs(column_pstdev(ds.x, j, split.train) - 1.0), 1e-9) << j;
  }
  // statistics come from training rows only
  RawTable train_only = t;
  for (auto& col : train_only.columns) {
    std::vector<std::string> kept;
    for (std::size_t r : split.train) kept.push_back(col[r]);
    col = kept;
  }
  train_only.row_count = split.train.size();
  const Encoding refit = Encoding::fit(train_only, all_rows(split.train.size()));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(refit.columns[j].mean, ds.encoding.columns[j].mean);
    EXPECT_EQ(refit.columns[j].stdev, ds.encoding.columns[j].stdev);
    EXPECT_EQ(refit.columns[j].vocabulary, ds.encoding.columns[j].vocabulary);
  }
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"b", "m"}));
  EXPECT_EQ(ds.train_x().rows(), split.train.size());
}

TEST(Encoding, RenormalizingIsIdempotent) {
  std::string text = "a,b,label\n";
  for (int i = 0; i < 40; ++i) text += std::to_string(i * 1.7 + 3) + "," + std::to_string(i % 7 * 100) + ",x\n";
  const RawTable t = parse(text);
  const std::vector<std::size_t> train = all_rows(40);
  const Dataset ds = encode_and_normalize(t, SplitAssignment{train, {}, 0, 1.0});
  std::ostringstream again;
  again << "a,b,label\n";
  again.precision(17);
  for (std::size_t i = 0; i < 40; ++i) again << ds.x(i, 0) << ',' << ds.x(i, 1) << ",x\n";
  const Dataset twice = encode_and_normalize(parse(again.str()), SplitAssignment{train, {}, 0, 1.0});
  for (std::size_t i = 0; i < ds.x.size(); ++i) EXPECT_NEAR(twice.x.values()[i], ds.x.values()[i], 1e-12);
}

TEST(Encoding, TransformChecksSchema) {
  const RawTable t = parse("a,b,label\n1,2,x\n3,4,y\n");
  const Encoding enc = Encoding::fit(t, all_rows(2));
  try {
    enc.transform(parse("a,label\n1,x\n"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  try {
    enc.transform(parse("b,a,z,label\n1,2,3,x\n"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
  }
  // columns are matched by name, not position
  const DenseMatrix swapped = enc.transform(parse("b,a,label\n2,1,x\n"));
  EXPECT_EQ(swapped(0, 0), enc.transform(t)(0, 0));
  EXPECT_THROW(enc.transform(parse("a,b,label\n1,zz,x\n")), DataError);
}

TEST(Synth, DeterministicAndBalanced) {
  SynthOptions o;
  o.n = 400;
  o.d = 2;
  o.seed = 7;
  const SyntheticData a = synth_dataset(o), b = synth_dataset(o);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), "0"), 200);
  EXPECT_EQ(a.feature_names, (std::vector<std::string>{"f0", "f1"}));
  o.seed = 8;
  EXPECT_NE(synth_dataset(o).x, a.x);
}

TEST(Synth, ClassMeansSitAtOffset) {
  SynthOptions o;
  o.n = 4000;
  o.d = 3;
  o.offset = 2.0;
  const SyntheticData s = synth_dataset(o);
  for (std::size_t j = 0; j < 3; ++j) {
    double m0 = 0, m1 = 0;
    for (std::size_t i = 0; i < s.x.rows(); ++i) (s.labels[i] == "0" ? m0 : m1) += s.x(i, j);
    m0 /= 2000, m1 /= 2000;
    EXPECT_NEAR(std::abs(m1 - m0), 4.0, 0.15);
  }
}

TEST(Synth, XorLayoutAndCsv) {
  SynthOptions o;
  o.kind = SynthKind::xor_gaussians;
  o.n = 40;
  o.d = 3;
  o.offset = 4.0;
  const SyntheticData s = synth_dataset(o);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < s.x.rows(); ++i) {
    const bool same_sign = (s.x(i, 0) > 0) == (s.x(i, 1) > 0);
    agree += (same_sign ? "0" : "1") == s.labels[i];
  }
  EXPECT_GE(agree, 38u);
  std::ostringstream out;
  s.write_csv(out, "cls");
  std::istringstream in(out.str());
  const RawTable t = read_csv(in, "cls");
  EXPECT_EQ(t.rows(), 40u);
  EXPECT_EQ(t.columns[1][5], [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", s.x(5, 1));
    return std::string(buf);
  }());
  EXPECT_EQ(parse_synth_kind("xor"), SynthKind::xor_gaussians);
  EXPECT_THROW(parse_synth_kind("moons"), ConfigError);
}

TEST(Synth, Preconditions) {
  SynthOptions o;
  o.n = 19;
  EXPECT_THROW(synth_dataset(o), ConfigError);
  o.n = 20;
  o.d = 1;
  EXPECT_THROW(synth_dataset(o), ConfigError);
}
