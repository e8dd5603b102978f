#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragfce/dataset.hpp"
#include "ragfce/decompose.hpp"
#include "ragfce/error.hpp"
#include "ragfce/llm_client.hpp"
#include "ragfce/prompts.hpp"

// Two-stage fact/logic consistency evaluation over decomposed segments.
namespace ragfce {

enum class Stage { Fact, Logic };
enum class DecompositionMode { LogicPreserving, Conventional };

struct FactPoint {
  std::string text;
  /// Located context in the reference; absent when none was found.
  std::optional<std::string> evidence;
  bool consistent = false;

  friend bool operator==(const FactPoint&, const FactPoint&) = default;
};

struct FactVerdict {
  /// Conjunction of the point flags whenever points are present.
  bool consistent = false;
  std::vector<FactPoint> points;
  std::string rationale;

  friend bool operator==(const FactVerdict&, const FactVerdict&) = default;
};

struct LogicVerdict {
  bool consistent = false;
  std::string answer_structure;
  std::string reference_structure;
  std::string rationale;

  friend bool operator==(const LogicVerdict&, const LogicVerdict&) = default;
};

struct SegmentVerdict {
  Segment segment;
  FactVerdict fact;
  /// Absent when the logic stage was skipped.
  std::optional<LogicVerdict> logic;
  bool passed = false;

  friend bool operator==(const SegmentVerdict&, const SegmentVerdict&) = default;
};

struct AnswerVerdict {
  std::string answer_id;
  bool consistent = false;
  std::vector<SegmentVerdict> segment_verdicts;
  std::vector<std::size_t> failing_indices;
  CallCost cost;

  friend bool operator==(const AnswerVerdict&, const AnswerVerdict&) = default;
};

struct EvalConfig {
  DecompositionMode decomposition = DecompositionMode::LogicPreserving;
  bool use_cot = true;
  bool use_logic_stage = true;
  /// Run the logic stage even after a failed fact stage (diagnostics only;
  /// the answer verdict is unchanged).
  bool force_both_stages = false;
  std::string judge_model = "gpt-4";
  std::size_t concurrency = 4;

  /// Identity of the judging setup. The worker bound is excluded because it
  /// never changes verdicts.
  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::string digest() const;
};

/// Ablation variants: "full", "ad" (conventional decomposition), "no-cot",
/// "no-logic".
EvalConfig variant_config(std::string_view variant);
/// Column header used in ablation tables, e.g. "w/o COT".
std::string variant_label(std::string_view variant);
std::string_view variant_of(const EvalConfig& cfg);

// ---------------------------------------------------------------------------
// Verdict parsing
// ---------------------------------------------------------------------------

/// Reads the terminal machine-readable part of a judge reply: a fenced JSON
/// object, or a last "VERDICT: CONSISTENT|INCONSISTENT" line (一致/不一致 and
/// LOGIC_/FACT_ prefixed tokens accepted, a bare token line too). Text before
/// it is kept as the rationale. Throws Error(UnparseableVerdict).
std::variant<FactVerdict, LogicVerdict> parse_verdict(std::string_view raw, Stage stage);
FactVerdict parse_fact_verdict(std::string_view raw);
LogicVerdict parse_logic_verdict(std::string_view raw);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

ChatRequest build_fact_prompt(const Segment& segment, std::string_view reference, const EvalConfig& cfg,
                              const PromptSet& prompts);
ChatRequest build_logic_prompt(const Segment& segment, std::string_view reference, const EvalConfig& cfg,
                               const PromptSet& prompts);

template <typename Verdict>
struct StageOutcome {
  Verdict verdict;
  CallCost cost;
  std::vector<Exchange> transcript;
};

/// One call, plus one strict-format retry when the verdict is unparseable.
StageOutcome<FactVerdict> evaluate_fact(const Segment& segment, std::string_view reference, ChatBackend& backend,
                                        const EvalConfig& cfg, const PromptSet& prompts);
StageOutcome<LogicVerdict> evaluate_logic(const Segment& segment, std::string_view reference, ChatBackend& backend,
                                          const EvalConfig& cfg, const PromptSet& prompts);

/// passed = fact.consistent && (logic skipped || logic.consistent)
bool segment_passed(const FactVerdict& fact, const std::optional<LogicVerdict>& logic);

/// Pure fold: consistent iff every segment passed; failing indices are the
/// positions (in segment order) of segments that did not.
AnswerVerdict aggregate(std::string answer_id, std::vector<SegmentVerdict> verdicts, CallCost cost);

struct DecompositionTrace {
  DecompositionMode mode = DecompositionMode::LogicPreserving;
  std::string raw;
  std::vector<std::string> warnings;
};

struct AnswerEvaluation {
  AnswerVerdict verdict;
  DecompositionTrace decomposition;
  std::vector<Exchange> transcript;
};

/// A segment-level failure aborted the answer; `partial` holds the segment
/// verdicts completed before it.
class PartialAnswerError : public Error {
 public:
  PartialAnswerError(const Error& cause, AnswerVerdict partial)
      : Error(ErrorCode::PartialResult, "answer '" + partial.answer_id + "' aborted after " +
                                            std::to_string(partial.segment_verdicts.size()) +
                                            " segment(s): " + cause.what()),
        cause_(cause.code()),
        partial_(std::move(partial)) {}

  [[nodiscard]] ErrorCode cause() const noexcept { return cause_; }
  [[nodiscard]] const AnswerVerdict& partial() const noexcept { return partial_; }

 private:
  ErrorCode cause_;
  AnswerVerdict partial_;
};

/// Decompose, then per segment the fact stage and (when enabled and the fact
/// stage passed) the logic stage, then aggregate.
AnswerEvaluation evaluate_answer(const Sample& sample, ChatBackend& backend, const EvalConfig& cfg,
                                 const PromptSet& prompts, std::span<const FewShotExample> examples);

// ---------------------------------------------------------------------------
// Judgment records (one JSON line per answer)
// ---------------------------------------------------------------------------

struct JudgmentRecord {
  std::string sample_id;
  std::string answer_digest;
  std::string config_digest;
  std::map<std::string, std::string> prompt_digests;
  nlohmann::json config;
  DecompositionTrace decomposition;
  AnswerVerdict verdict;
  std::vector<Exchange> transcript;
};

/// Digests of the decomposition and judging prompt assets.
std::map<std::string, std::string> evaluation_prompt_digests(const PromptSet& prompts);

/// Digest over question, reference and answer.
std::string answer_digest(const Sample& s);

JudgmentRecord make_record(const Sample& sample, const AnswerEvaluation& evaluation, const EvalConfig& cfg,
                           const PromptSet& prompts);
nlohmann::json record_to_json(const JudgmentRecord& r);
JudgmentRecord record_from_json(const nlohmann::json& j);

nlohmann::json verdict_to_json(const AnswerVerdict& v);
AnswerVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace ragfce
