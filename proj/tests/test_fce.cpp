#include <gtest/gtest.h>

#include <random>

#include "parser_fixtures.hpp"
#include "ragfce/error.hpp"
#include "ragfce/fce.hpp"
#include "scripted_judge.hpp"
#include "support.hpp"

namespace ragfce {
namespace {

using testing::make_sample;
using testing::TableJudge;
using testing::zh_prompts;

TEST(Variants, ConfigsAndLabels) {
  EXPECT_EQ(variant_of(variant_config("full")), "full");
  EXPECT_EQ(variant_of(variant_config("ad")), "ad");
  EXPECT_EQ(variant_of(variant_config("no-cot")), "no-cot");
  EXPECT_EQ(variant_of(variant_config("no-logic")), "no-logic");
  EXPECT_EQ(variant_config("ad").decomposition, DecompositionMode::Conventional);
  EXPECT_FALSE(variant_config("no-cot").use_cot);
  EXPECT_FALSE(variant_config("no-logic").use_logic_stage);
  EXPECT_THROW(variant_config("bogus"), Error);
  EXPECT_EQ(variant_label("full"), "L-Face4RAG");
  EXPECT_EQ(variant_label("ad"), "A.D.");
  EXPECT_EQ(variant_label("no-cot"), "w/o COT");
  EXPECT_EQ(variant_label("no-logic"), "w/o logi.eval");
}

TEST(EvalConfig, DigestIgnoresConcurrency) {
  EvalConfig a;
  EvalConfig b;
  b.concurrency = 32;
  EXPECT_EQ(a.digest(), b.digest());
  b.judge_model = "gpt-3.5";
  EXPECT_NE(a.digest(), b.digest());
  EXPECT_NE(variant_config("full").digest(), variant_config("no-cot").digest());
}

TEST(VerdictParsing, FixtureSuite) {
  for (const auto& c : testing::load_parser_fixtures(testing::data_dir() / "parser_fixtures.json")) {
    if (c.at("parser") == "segments") continue;
    auto failure = testing::check_parser_case(c);
    EXPECT_FALSE(failure.has_value()) << c.at("name").get<std::string>() << ": " << failure.value_or("");
  }
}

TEST(VerdictParsing, FactPointsAndRationale) {
  const std::string raw =
      "步骤1：抽取信息点。\n```json\n{\"points\": [{\"point\": \"甲\", \"evidence\": \"原文甲\", \"consistent\": true},"
      " {\"point\": \"乙\", \"evidence\": \"原文乙\", \"consistent\": false}]}\n```\nVERDICT: INCONSISTENT";
  auto v = parse_fact_verdict(raw);
  EXPECT_FALSE(v.consistent);
  ASSERT_EQ(v.points.size(), 2u);
  EXPECT_EQ(v.points[0].evidence, "原文甲");
  EXPECT_TRUE(v.points[0].consistent);
  EXPECT_EQ(v.rationale, "步骤1：抽取信息点。");
}

TEST(VerdictParsing, LogicStructures) {
  auto v = parse_logic_verdict(
      "```json\n{\"answer_structure\": \"因→果\", \"reference_structure\": \"果→因\", \"verdict\": \"不一致\"}\n```");
  EXPECT_FALSE(v.consistent);
  EXPECT_EQ(v.answer_structure, "因→果");
  EXPECT_EQ(v.reference_structure, "果→因");
}

// An LCaus-style transcript: the answer reverses the causal direction.
TEST(VerdictParsing, CausalReversalTranscript) {
  const std::string raw =
      "步骤1 上下文定位：参考资料提到“大数据技术的快速发展推动了信息技术的进步”。\n"
      "步骤2 逻辑结构分析：答案片段为“信息技术的进步导致大数据技术的快速发展”，原因是信息技术，结果是大数据；"
      "参考资料中原因是大数据，结果是信息技术。\n"
      "步骤3 逻辑结构比对：因果方向颠倒。\n"
      "```json\n{\"answer_structure\": \"信息技术 → 大数据\", \"reference_structure\": \"大数据 → 信息技术\", "
      "\"verdict\": \"INCONSISTENT\"}\n```\nVERDICT: INCONSISTENT";
  auto v = parse_logic_verdict(raw);
  EXPECT_FALSE(v.consistent);
  EXPECT_NE(v.rationale.find("因果方向颠倒"), std::string::npos);
}

TEST(Prompts, CotAndDirectTemplates) {
  Segment seg{0, "片段", "a"};
  auto cot = build_fact_prompt(seg, "参考", variant_config("full"), zh_prompts());
  auto direct = build_fact_prompt(seg, "参考", variant_config("no-cot"), zh_prompts());
  auto logic_direct = build_logic_prompt(seg, "参考", variant_config("no-cot"), zh_prompts());
  EXPECT_NE(cot.messages[1].content.find("步骤"), std::string::npos);
  for (const auto& m : testing::step_markers()) {
    EXPECT_EQ(direct.messages[1].content.find(m), std::string::npos) << m;
    EXPECT_EQ(logic_direct.messages[1].content.find(m), std::string::npos) << m;
  }
  EXPECT_EQ(cot.temperature, 0.0);
  EXPECT_THROW(build_fact_prompt(Segment{0, " ", "a"}, "参考", EvalConfig{}, zh_prompts()), Error);
}

TEST(Stages, RetryOnceThenFail) {
  ScriptedMock mock;
  MockRule reminder;
  reminder.target = MockTarget::LastMessage;
  reminder.prefix = "【格式提醒：一致性评估】";
  reminder.response = "VERDICT: CONSISTENT";
  mock.add_rule(reminder);
  mock.add_rule(MockRule::glob("*", "我觉得还行"));
  auto out = evaluate_fact(Segment{0, "片段", "a"}, "参考", mock, EvalConfig{}, zh_prompts());
  EXPECT_TRUE(out.verdict.consistent);
  EXPECT_EQ(out.cost.calls, 2u);
  EXPECT_EQ(out.transcript.size(), 2u);

  ScriptedMock never({MockRule::glob("*", "我觉得还行")});
  try {
    evaluate_logic(Segment{0, "片段", "a"}, "参考", never, EvalConfig{}, zh_prompts());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnparseableVerdict);
  }
  EXPECT_EQ(never.call_count(), 2u);
}

TEST(Aggregate, EmptyAndMixed) {
  EXPECT_TRUE(aggregate("a", {}, {}).consistent);
  std::vector<SegmentVerdict> v(3);
  v[0].passed = true;
  v[1].passed = false;
  v[2].passed = false;
  auto out = aggregate("a", v, {});
  EXPECT_FALSE(out.consistent);
  EXPECT_EQ(out.failing_indices, (std::vector<std::size_t>{1, 2}));
}

TEST(AggregateProperty, ConsistentIffNoFailingSegment) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 500; ++round) {
    std::vector<SegmentVerdict> v(rng() % 9);
    bool all = true;
    for (auto& s : v) {
      s.fact.consistent = rng() % 4 != 0;
      if (rng() % 2) s.logic = LogicVerdict{rng() % 4 != 0, "", "", ""};
      s.passed = segment_passed(s.fact, s.logic);
      all = all && s.fact.consistent && (!s.logic || s.logic->consistent);
    }
    auto out = aggregate("x", v, {});
    ASSERT_EQ(out.consistent, all);
    ASSERT_EQ(out.consistent, out.failing_indices.empty());
  }
}

Sample judged_sample(TableJudge& judge, const std::string& id, const std::vector<std::pair<std::string, TableJudge::Outcome>>& segs) {
  std::string answer;
  std::vector<std::string> texts;
  for (const auto& [t, o] : segs) {
    answer += t;
    texts.push_back(t);
    judge.set_outcome(t, o);
  }
  judge.add_answer(answer, texts);
  auto s = make_sample(id, Polarity::Consistent, {}, "m", answer);
  s.reference = "参考资料全文。";
  return s;
}

TEST(EvaluateAnswer, LogicRunsOnlyAfterFactPasses) {
  TableJudge judge;
  auto s = judged_sample(judge, "a", {{"甲。", {true, true}}, {"乙。", {false, true}}, {"丙。", {true, false}}});
  auto ev = evaluate_answer(s, judge, variant_config("full"), zh_prompts(), {});
  EXPECT_FALSE(ev.verdict.consistent);
  EXPECT_EQ(ev.verdict.failing_indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(judge.decompose_calls, 1);
  EXPECT_EQ(judge.fact_calls, 3);
  EXPECT_EQ(judge.logic_calls, 2);
  EXPECT_FALSE(ev.verdict.segment_verdicts[1].logic.has_value());
  EXPECT_EQ(ev.verdict.cost.calls, 6u);
  EXPECT_EQ(ev.transcript.size(), 6u);
}

TEST(EvaluateAnswer, ForceBothStagesKeepsVerdict) {
  TableJudge judge;
  auto s = judged_sample(judge, "a", {{"甲。", {false, true}}});
  auto cfg = variant_config("full");
  cfg.force_both_stages = true;
  auto ev = evaluate_answer(s, judge, cfg, zh_prompts(), {});
  EXPECT_FALSE(ev.verdict.consistent);
  EXPECT_EQ(judge.logic_calls, 1);
  EXPECT_TRUE(ev.verdict.segment_verdicts[0].logic.has_value());
}

TEST(EvaluateAnswer, NoLogicVariantMakesNoLogicCalls) {
  TableJudge judge;
  auto s = judged_sample(judge, "a", {{"甲。", {true, false}}, {"乙。", {true, false}}});
  auto ev = evaluate_answer(s, judge, variant_config("no-logic"), zh_prompts(), {});
  EXPECT_TRUE(ev.verdict.consistent);
  EXPECT_EQ(judge.logic_calls, 0);
}

TEST(EvaluateAnswer, ConventionalVariantSkipsModelDecomposition) {
  TableJudge judge;
  judge.set_outcome("甲。", {true, true});
  judge.set_outcome("乙。", {true, true});
  auto s = make_sample("a", Polarity::Consistent, {}, "m", "甲。乙。");
  auto ev = evaluate_answer(s, judge, variant_config("ad"), zh_prompts(), {});
  EXPECT_TRUE(ev.verdict.consistent);
  EXPECT_EQ(judge.decompose_calls, 0);
  EXPECT_EQ(ev.verdict.segment_verdicts.size(), 2u);
  EXPECT_EQ(ev.decomposition.mode, DecompositionMode::Conventional);
}

TEST(EvaluateAnswer, SegmentFailureCarriesPartialVerdicts) {
  TableJudge judge;
  auto s = judged_sample(judge, "a", {{"甲。", {true, true}}, {"乙。", {true, true}}});
  // Second segment exists in the decomposition but not in the outcome table.
  judge.add_answer(s.answer + "丙。", {"甲。", "丙。"});
  s.answer += "丙。";
  try {
    evaluate_answer(s, judge, variant_config("full"), zh_prompts(), {});
    FAIL();
  } catch (const PartialAnswerError& e) {
    EXPECT_EQ(e.code(), ErrorCode::PartialResult);
    EXPECT_EQ(e.cause(), ErrorCode::MockMiss);
    EXPECT_EQ(e.partial().segment_verdicts.size(), 1u);
  }
}

TEST(Records, JsonRoundTrip) {
  TableJudge judge;
  auto s = judged_sample(judge, "a", {{"甲。", {true, true}}, {"乙。", {false, true}}});
  const auto cfg = variant_config("full");
  auto ev = evaluate_answer(s, judge, cfg, zh_prompts(), {});
  auto rec = make_record(s, ev, cfg, zh_prompts());
  EXPECT_EQ(rec.config_digest, cfg.digest());
  EXPECT_EQ(rec.answer_digest, answer_digest(s));
  EXPECT_TRUE(rec.prompt_digests.contains("fce/fact_cot"));
  EXPECT_FALSE(rec.prompt_digests.contains("synth/system"));
  const auto j = record_to_json(rec);
  const auto back = record_from_json(j);
  EXPECT_EQ(back.verdict, rec.verdict);
  EXPECT_EQ(record_to_json(back).dump(), j.dump());
}

}  // namespace
}  // namespace ragfce
