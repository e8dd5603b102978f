#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragfce/llm_client.hpp"
#include "ragfce/prompts.hpp"

namespace ragfce {

struct Segment {
  std::size_t index = 0;
  std::string text;
  std::string answer_id;

  friend bool operator==(const Segment&, const Segment&) = default;
};

enum class FewShotKind { LogicalConnection, PronounSubstitution, UniqueFormat };

std::string_view to_string(FewShotKind k) noexcept;
FewShotKind parse_fewshot_kind(std::string_view s);

struct FewShotExample {
  FewShotKind kind = FewShotKind::LogicalConnection;
  /// Localized name of the kind shown in the prompt.
  std::string label;
  std::string input;
  std::vector<std::string> expected_segments;
};

/// Reads decompose/fewshot/{logical_connection,pronoun_substitution,
/// unique_format} in that order.
std::vector<FewShotExample> load_fewshot_examples(const PromptSet& prompts);

struct ParsedSegments {
  std::vector<std::string> items;
  std::vector<std::string> warnings;
};

/// Accepts numbered lines ("1. x", "2）x", "３．x", "(4) x") or a JSON array
/// of strings, optionally inside a code fence. Numbering is stripped, empty
/// items are dropped with a warning, order is preserved. Indented lines
/// continue the previous item. Throws Error(UnparseableOutput) when nothing
/// is recovered.
ParsedSegments parse_segments(std::string_view raw);

/// "1. a\n2. b"; continuation lines of multi-line items are indented.
std::string render_numbered(std::span<const std::string> items);

ChatRequest build_decomposition_prompt(std::string_view answer, std::span<const FewShotExample> examples,
                                       const PromptSet& prompts, const std::string& model);

struct DecompositionResult {
  std::vector<Segment> segments;
  /// Verbatim model output the segments were parsed from.
  std::string raw;
  std::vector<std::string> warnings;
  CallCost cost;
  std::vector<Exchange> transcript;
};

/// Logic-preserving decomposition through the judge model. On an
/// unparseable reply the exchange is retried once with a format reminder.
DecompositionResult decompose(std::string_view answer, ChatBackend& backend,
                              std::span<const FewShotExample> examples, const PromptSet& prompts,
                              const std::string& model, const std::string& answer_id = {});

/// Rule-based sentence split after 。！？!?.;； (delimiter kept with its
/// sentence, a '.' between digits is not a delimiter) and at newlines.
std::vector<Segment> conventional_decompose(std::string_view answer, const std::string& answer_id = {});

}  // namespace ragfce
