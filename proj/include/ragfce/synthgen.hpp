#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ragfce/dataset.hpp"
#include "ragfce/llm_client.hpp"
#include "ragfce/prompts.hpp"
#include "ragfce/typology.hpp"

// Synthetic error injection: per-type negative rewrites of consistent
// answers and meaning-preserving positive augmentation.
namespace ragfce {

enum class KContGranularity { Word, Sentence };

struct GenerationSpec {
  ErrorType error_type = ErrorType::Hallu;
  /// 1 off-topic, 2 on-topic but ungrounded, 3 grounded content mixed with
  /// ungrounded content. Required iff error_type is Hallu.
  std::optional<int> hallu_difficulty;
  /// Required iff error_type is KCont.
  std::optional<KContGranularity> kcont_granularity;
  std::uint64_t seed = 0;

  /// Throws Error(InvalidArgument) when the conditional fields do not match
  /// the error type or the type is Other.
  void validate() const;
  /// Prompt asset, e.g. "synth/neg_kcont_word".
  [[nodiscard]] std::string template_name() const;
  /// Short tag used in generated ids, e.g. "Hallu-2", "KCont-word".
  [[nodiscard]] std::string tag() const;

  friend bool operator==(const GenerationSpec&, const GenerationSpec&) = default;
};

enum class AugmentMode { SynonymReplace, Paraphrase, Summarize };

std::string_view to_string(AugmentMode m) noexcept;
AugmentMode parse_augment_mode(std::string_view s);

struct AugmentSpec {
  AugmentMode mode = AugmentMode::Paraphrase;
  std::uint64_t seed = 0;

  [[nodiscard]] std::string template_name() const;
  [[nodiscard]] std::string tag() const;

  friend bool operator==(const AugmentSpec&, const AugmentSpec&) = default;
};

struct GeneratedSample {
  std::string base_id;
  std::string perturbed_answer;
  Polarity label = Polarity::Inconsistent;
  ErrorTypeSet error_types;
  /// The model's account of what it changed and why.
  std::string reasoning;
  std::variant<GenerationSpec, AugmentSpec> spec;
  CallCost cost;
  std::string raw;
};

struct ParsedGeneration {
  std::string reasoning;
  std::string answer;
};

/// Accepts a JSON object {"reasoning", "answer"} (optionally fenced) or
/// labelled sections ("REASONING:"/"思考过程：" then "ANSWER:"/"新答案：").
/// Both parts must be non-empty; throws Error(UnparseableOutput).
ParsedGeneration parse_generation(std::string_view raw);

ChatRequest build_negative_prompt(const Sample& sample, const GenerationSpec& spec, const PromptSet& prompts,
                                  const std::string& model);
/// Summarize prompts carry the reference as source text, not the answer.
ChatRequest build_positive_prompt(const Sample& sample, const AugmentSpec& spec, const PromptSet& prompts,
                                  const std::string& model);

/// Requires a consistent sample. Error(DegenerateOutput) when the rewrite
/// equals the original answer.
GeneratedSample generate_negative(const Sample& sample, const GenerationSpec& spec, ChatBackend& backend,
                                  const PromptSet& prompts, const std::string& model);
GeneratedSample augment_positive(const Sample& sample, const AugmentSpec& spec, ChatBackend& backend,
                                 const PromptSet& prompts, const std::string& model);

struct PlanItem {
  std::size_t sample_index = 0;
  std::string sample_id;
  GenerationSpec spec;
};

struct AugmentPlanItem {
  std::size_t sample_index = 0;
  std::string sample_id;
  AugmentSpec spec;
};

/// Deterministic in (corpus, coverage, seed). Only consistent answer-level
/// samples are rewritten; each type walks its own seeded permutation of
/// them, cycling when the count exceeds the corpus. Hallu cycles through
/// difficulties 1..3 and KCont through word/sentence, so quotas split as
/// evenly as possible.
std::vector<PlanItem> build_generation_plan(std::span<const Sample> corpus,
                                            const std::map<ErrorType, std::size_t>& coverage, std::uint64_t seed);
std::vector<AugmentPlanItem> build_augment_plan(std::span<const Sample> corpus,
                                                const std::map<AugmentMode, std::size_t>& counts, std::uint64_t seed);

/// "Hallu=3,KCont=2"
std::map<ErrorType, std::size_t> parse_coverage(std::string_view s);
std::map<AugmentMode, std::size_t> parse_augment_counts(std::string_view s);
/// `per_type` of each generable type (all but Other).
std::map<ErrorType, std::size_t> uniform_coverage(std::size_t per_type);

/// Dataset row for a generated sample (source "synthetic").
Sample to_sample(const GeneratedSample& g, const Sample& base, std::string id);

}  // namespace ragfce
