#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ragfce/dataset.hpp"
#include "ragfce/error.hpp"
#include "support.hpp"

namespace ragfce {
namespace {

using testing::make_sample;
using testing::TempDir;

LoadedDataset parse(const std::string& body, Schema schema = Schema::Generic, LoadOptions opts = {}) {
  std::istringstream in(body);
  return parse_dataset(in, schema, opts, "mem");
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

TEST(Dataset, ParsesGenericRecords) {
  auto d = parse(
      R"({"id":"a","question":"q","reference":"r","answer":"答案","label":"consistent","source":"GPT-4"})"
      "\n\n"
      R"({"id":"b","question":"q","reference":"r","answer":"x","label":"inconsistent","error_types":["KInve","LCaus."]})"
      "\n");
  ASSERT_EQ(d.samples.size(), 2u);
  EXPECT_EQ(d.samples[0].source, "GPT-4");
  EXPECT_EQ(d.samples[0].line, 1u);
  EXPECT_EQ(d.samples[1].line, 3u);
  EXPECT_EQ(d.samples[1].source, "unknown");
  EXPECT_EQ(d.samples[1].error_types, (ErrorTypeSet{ErrorType::KInve, ErrorType::LCaus}));
}

TEST(Dataset, LabelEncodings) {
  const std::string head = R"({"question":"q","reference":"r","answer":"a","label":)";
  EXPECT_EQ(parse(head + "true}").samples[0].label, Polarity::Consistent);
  EXPECT_EQ(parse(head + "1}").samples[0].label, Polarity::Consistent);
  EXPECT_EQ(parse(head + "\"一致\"}").samples[0].label, Polarity::Consistent);
  EXPECT_EQ(parse(head + "0,\"error_types\":\"Hallu\"}").samples[0].label, Polarity::Inconsistent);
  EXPECT_EQ(code_of([&] { parse(head + "\"maybe\"}"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([&] { parse(head + "2}"); }), ErrorCode::Parse);
}

TEST(Dataset, MissingIdIsSynthesizedFromLine) {
  auto d = parse("\n" R"({"question":"q","reference":"r","answer":"a","label":1})" "\n");
  EXPECT_EQ(d.samples[0].id, "L2");
}

TEST(Dataset, Rejections) {
  EXPECT_EQ(code_of([] { parse(""); }), ErrorCode::EmptyFile);
  EXPECT_EQ(code_of([] { parse("\n  \n"); }), ErrorCode::EmptyFile);
  EXPECT_EQ(code_of([] { parse("{not json}\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] {
              parse(R"({"id":"a","question":"q","reference":"r","answer":"a","label":1})"
                    "\n"
                    R"({"id":"a","question":"q","reference":"r","answer":"b","label":1})");
            }),
            ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([] { parse(R"({"question":"q","reference":"r","answer":"  ","label":1})"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse(R"({"question":"q","reference":"r","answer":"a","label":1,"error_types":["Hallu"]})"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse(R"({"question":"q","reference":"r","answer":"a","label":0,"error_types":["Bogus"]})"); }),
            ErrorCode::UnknownCode);
}

TEST(Dataset, ParseErrorsNameTheLine) {
  try {
    parse(R"({"question":"q","reference":"r","answer":"a","label":1})" "\n" R"({"question":"q"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Dataset, UntypedNegativeIsWarningForGenericErrorForFace4rag) {
  const std::string row = R"({"question":"q","reference":"r","answer":"a","label":0})";
  auto d = parse(row);
  EXPECT_EQ(d.samples.size(), 1u);
  EXPECT_EQ(d.warnings.size(), 1u);
  EXPECT_EQ(code_of([&] { parse(row, Schema::Face4RAG); }), ErrorCode::Parse);
}

TEST(Dataset, Face4ragAdapterReadsAliasedKeysAndNames) {
  auto d = parse(
      R"({"问题":"q","参考资料":"r","答案":"a","标签":"不一致","错误类型":"Causal Confusion Error、Other Errors"})",
      Schema::Face4RAG);
  ASSERT_EQ(d.samples.size(), 1u);
  EXPECT_EQ(d.samples[0].error_types, (ErrorTypeSet{ErrorType::LCaus, ErrorType::Other}));
  EXPECT_EQ(d.samples[0].source, "synthetic");
  // Generic schema does not accept descriptive names.
  EXPECT_EQ(code_of([] {
              parse(R"({"question":"q","reference":"r","answer":"a","label":0,"error_types":"Other Errors"})");
            }),
            ErrorCode::UnknownCode);
}

TEST(Dataset, FieldOverridesTakePrecedence) {
  LoadOptions opts;
  auto mapping = SchemaMapping::for_schema(Schema::Generic);
  mapping.prefer("answer", "response");
  opts.mapping = mapping;
  auto d = parse(R"({"question":"q","reference":"r","response":"resp","label":1})", Schema::Generic, opts);
  EXPECT_EQ(d.samples[0].answer, "resp");
}

TEST(Dataset, GranularityAndAnswerLevelFilter) {
  LoadOptions opts;
  opts.granularity = Granularity::Segment;
  auto d = parse(R"({"question":"q","reference":"r","answer":"a","label":0})" "\n"
                 R"({"question":"q","reference":"r","answer":"b","label":0,"granularity":"answer","error_types":"Hallu"})",
                 Schema::Generic, opts);
  EXPECT_TRUE(d.warnings.empty());
  EXPECT_EQ(answer_level(d.samples).size(), 1u);
}

TEST(Dataset, WriteThenLoadRoundTrips) {
  TempDir dir;
  std::vector<Sample> samples{make_sample("a", Polarity::Consistent, {}, "GPT-4", "第一句。\n第二句。"),
                              make_sample("b", Polarity::Inconsistent, {ErrorType::Hallu, ErrorType::LOver})};
  write_dataset(dir / "d.jsonl", samples);
  auto loaded = load_dataset(dir / "d.jsonl", Schema::Generic);
  ASSERT_EQ(loaded.samples.size(), 2u);
  EXPECT_EQ(dataset_digest(loaded.samples), dataset_digest(samples));
  EXPECT_EQ(loaded.samples[0].answer, samples[0].answer);
  EXPECT_EQ(loaded.samples[1].error_types, samples[1].error_types);
}

TEST(Dataset, DigestIsOrderSensitive) {
  std::vector<Sample> a{make_sample("a", Polarity::Consistent), make_sample("b", Polarity::Consistent)};
  std::vector<Sample> b{a[1], a[0]};
  EXPECT_NE(dataset_digest(a), dataset_digest(b));
}

TEST(Dataset, StatsHandCounted) {
  std::vector<Sample> s{make_sample("a", Polarity::Consistent, {}, "m", "青花瓷"),
                        make_sample("b", Polarity::Inconsistent, {ErrorType::Hallu}, "m", "abcde"),
                        make_sample("c", Polarity::Consistent, {}, "m", "x")};
  auto st = compute_stats(s);
  EXPECT_EQ(st.num_samples, 3u);
  EXPECT_EQ(st.num_positive, 2u);
  EXPECT_DOUBLE_EQ(st.avg_length, 3.0);
  EXPECT_DOUBLE_EQ(st.positive_rate, 2.0 / 3.0);
  EXPECT_EQ(code_of([] { compute_stats(std::vector<Sample>{}); }), ErrorCode::EmptyInput);
}

TEST(Dataset, StatsTableRows) {
  DatasetStats st{1299, 394, 289.3, 394.0 / 1299.0};
  auto table = render_stats_table({{"synthetic", st}});
  EXPECT_NE(table.find("Num. Samples"), std::string::npos);
  EXPECT_NE(table.find("1299"), std::string::npos);
  EXPECT_NE(table.find("289.3"), std::string::npos);
  EXPECT_NE(table.find("30.3%"), std::string::npos);
}

TEST(Dataset, DistributionMultiLabel) {
  std::vector<Sample> s{
      make_sample("a", Polarity::Inconsistent, {ErrorType::Hallu, ErrorType::KCont}),
      make_sample("b", Polarity::Inconsistent, {ErrorType::Hallu}),
      make_sample("c", Polarity::Inconsistent, {ErrorType::KInve, ErrorType::KConf}),
      make_sample("d", Polarity::Inconsistent, {ErrorType::LCaus}),
      make_sample("e", Polarity::Consistent),
  };
  auto rows = error_distribution(s);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].category, Category::Hallucination);
  EXPECT_EQ(rows[0].count, 2u);
  EXPECT_DOUBLE_EQ(rows[0].fraction, 0.5);
  // c carries two knowledge types but counts once for the category.
  EXPECT_EQ(rows[1].category, Category::Knowledge);
  EXPECT_EQ(rows[1].count, 2u);
  EXPECT_EQ(rows[2].count, 1u);
  double sum = 0;
  for (const auto& r : rows) sum += r.fraction;
  EXPECT_GT(sum, 1.0);
  EXPECT_EQ(code_of([] {
              std::vector<Sample> pos{make_sample("a", Polarity::Consistent)};
              error_distribution(pos);
            }),
            ErrorCode::NoInconsistentSamples);
}

TEST(Dataset, PerSourcePartitionKeepsFirstAppearanceOrder) {
  std::vector<Sample> s{make_sample("1", Polarity::Consistent, {}, "Qwen"),
                        make_sample("2", Polarity::Consistent, {}, "GPT-4"),
                        make_sample("3", Polarity::Consistent, {}, "Qwen")};
  auto parts = per_source_partition(s);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].source, "Qwen");
  EXPECT_EQ(parts[0].samples.size(), 2u);
  EXPECT_EQ(parts[0].samples[1].id, "3");
  EXPECT_EQ(parts[1].source, "GPT-4");
}

TEST(Dataset, ManifestResolvesRelativePaths) {
  TempDir dir;
  std::filesystem::create_directories(dir / "data");
  testing::write_file(dir / "data" / "x.jsonl",
                      R"({"q":"q","reference":"r","answer":"a","label":1})" "\n");
  testing::write_file(dir / "manifest.json", R"({"datasets":[{"name":"x","path":"data/x.jsonl","schema":"generic",
      "granularity":"answer","fields":{"question":"q"}}]})");
  auto entries = load_manifest(dir / "manifest.json");
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].path, dir / "data" / "x.jsonl");
  auto loaded = load_manifest_entry(entries[0]);
  EXPECT_EQ(loaded.samples[0].question, "q");
}

// Independent oracle: UTF-8 scalar count = bytes that are not continuation bytes.
std::size_t oracle_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

TEST(DatasetProperty, StatsMatchOracleOnRandomCorpora) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces{"a", "文", "é", "😀", " ", "。"};
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<Sample> samples;
    std::size_t chars = 0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::string answer = "x";
      for (std::size_t k = rng() % 30; k > 0; --k) answer += pieces[rng() % pieces.size()];
      const bool consistent = rng() % 2 == 0;
      samples.push_back(make_sample(std::to_string(i), consistent ? Polarity::Consistent : Polarity::Inconsistent,
                                    consistent ? ErrorTypeSet{} : ErrorTypeSet{ErrorType::Hallu}, "m", answer));
      chars += oracle_length(answer);
      pos += consistent;
    }
    auto st = compute_stats(samples);
    ASSERT_EQ(st.num_samples, n);
    ASSERT_EQ(st.num_positive, pos);
    ASSERT_DOUBLE_EQ(st.avg_length, static_cast<double>(chars) / static_cast<double>(n));
  }
}

}  // namespace
}  // namespace ragfce
