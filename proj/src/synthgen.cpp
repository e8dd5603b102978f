#include "ragfce/synthgen.hpp"

#include <array>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "ragfce/error.hpp"
#include "ragfce/text.hpp"

namespace ragfce {

using nlohmann::json;

void GenerationSpec::validate() const {
  if (error_type == ErrorType::Other) {
    throw Error(ErrorCode::InvalidArgument, "Other is an annotation label and cannot be generated");
  }
  const bool hallu = error_type == ErrorType::Hallu;
  const bool kcont = error_type == ErrorType::KCont;
  if (hallu != hallu_difficulty.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "hallucination difficulty is required for Hallu and only for Hallu");
  }
  if (hallu && (*hallu_difficulty < 1 || *hallu_difficulty > 3)) {
    throw Error(ErrorCode::InvalidArgument, "hallucination difficulty must be 1, 2 or 3");
  }
  if (kcont != kcont_granularity.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "contradiction granularity is required for KCont and only for KCont");
  }
}

std::string GenerationSpec::template_name() const {
  validate();
  auto code = text::ascii_lower(to_string(error_type));
  if (error_type == ErrorType::Hallu) return "synth/neg_hallu_" + std::to_string(*hallu_difficulty);
  if (error_type == ErrorType::KCont) {
    return std::string("synth/neg_kcont_") + (*kcont_granularity == KContGranularity::Word ? "word" : "sentence");
  }
  return "synth/neg_" + code;
}

std::string GenerationSpec::tag() const {
  std::string t(to_string(error_type));
  if (hallu_difficulty) t += "-" + std::to_string(*hallu_difficulty);
  if (kcont_granularity) t += *kcont_granularity == KContGranularity::Word ? "-word" : "-sentence";
  return t;
}

std::string_view to_string(AugmentMode m) noexcept {
  switch (m) {
    case AugmentMode::SynonymReplace: return "SynonymReplace";
    case AugmentMode::Paraphrase: return "Paraphrase";
    case AugmentMode::Summarize: return "Summarize";
  }
  return "Paraphrase";
}

AugmentMode parse_augment_mode(std::string_view s) {
  const auto v = text::ascii_lower(s);
  if (v == "synonymreplace" || v == "synonym") return AugmentMode::SynonymReplace;
  if (v == "paraphrase") return AugmentMode::Paraphrase;
  if (v == "summarize") return AugmentMode::Summarize;
  throw Error(ErrorCode::InvalidArgument, "unknown augmentation mode '" + std::string(s) + "'");
}

std::string AugmentSpec::template_name() const {
  switch (mode) {
    case AugmentMode::SynonymReplace: return "synth/pos_synonym";
    case AugmentMode::Paraphrase: return "synth/pos_paraphrase";
    case AugmentMode::Summarize: return "synth/pos_summarize";
  }
  return "synth/pos_paraphrase";
}

std::string AugmentSpec::tag() const { return "pos-" + text::ascii_lower(to_string(mode)); }

// ---------------------------------------------------------------------------

namespace {

std::optional<json> find_json_object(std::string_view raw) {
  auto t = text::trim(raw);
  if (t.starts_with("```")) {
    const auto nl = t.find('\n');
    const auto close = t.rfind("```");
    if (nl != std::string::npos && close > nl) t = text::trim(std::string_view(t).substr(nl + 1, close - nl - 1));
  }
  if (!t.starts_with('{')) return std::nullopt;
  try {
    auto doc = json::parse(t);
    if (doc.is_object()) return doc;
  } catch (const json::parse_error&) {
  }
  return std::nullopt;
}

std::string first_string(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    const auto it = j.find(k);
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

// Returns the label length when `line` starts with one of `labels`.
std::size_t label_at(std::string_view line, std::span<const std::string_view> labels) {
  const auto upper = text::ascii_upper(line);
  for (auto label : labels) {
    if (std::string_view(upper).starts_with(label)) return label.size();
  }
  return 0;
}

}  // namespace

ParsedGeneration parse_generation(std::string_view raw) {
  ParsedGeneration out;
  if (auto doc = find_json_object(raw)) {
    out.reasoning = text::trim(first_string(*doc, {"reasoning", "thinking", "thought", "思考过程"}));
    out.answer = text::trim(first_string(*doc, {"answer", "new_answer", "rewritten_answer", "新答案"}));
  } else {
    static constexpr std::array<std::string_view, 5> kReasoning{"REASONING:", "THINKING:", "思考过程：",
                                                                       "思考过程:", "修改思路："};
    static constexpr std::array<std::string_view, 5> kAnswer{"ANSWER:", "NEW ANSWER:", "新答案：",
                                                                    "新答案:", "改写后的答案："};
    enum class Section { None, Reasoning, Answer } section = Section::None;
    std::string reasoning;
    std::string answer;
    for (const auto& line : text::split_lines(raw)) {
      const auto stripped = text::trim(line);
      std::string_view rest = stripped;
      if (auto n = label_at(stripped, kAnswer); n > 0) {
        section = Section::Answer;
        answer.clear();
        rest = rest.substr(n);
      } else if (auto m = label_at(stripped, kReasoning); m > 0) {
        section = Section::Reasoning;
        rest = rest.substr(m);
      }
      auto& target = section == Section::Answer ? answer : reasoning;
      if (section == Section::None) continue;
      if (!target.empty()) target += "\n";
      target += text::trim(rest);
    }
    out.reasoning = text::trim(reasoning);
    out.answer = text::trim(answer);
  }
  if (out.answer.empty()) throw Error(ErrorCode::UnparseableOutput, "generation output has no rewritten answer");
  if (out.reasoning.empty()) throw Error(ErrorCode::UnparseableOutput, "generation output has no reasoning");
  return out;
}

namespace {

ChatRequest generation_request(const Sample& sample, const std::string& asset, const PromptSet& prompts,
                               const std::string& model) {
  ChatRequest req;
  req.model = model;
  req.temperature = 0.0;
  req.messages.push_back({Role::System, prompts.text("synth/system")});
  req.messages.push_back({Role::User, prompts.render(asset, {{"question", sample.question},
                                                             {"reference", sample.reference},
                                                             {"answer", sample.answer}})});
  return req;
}

void require_consistent(const Sample& sample) {
  if (!sample.consistent()) {
    throw Error(ErrorCode::InvalidArgument, "sample '" + sample.id + "' is not consistent; only clean answers are rewritten");
  }
}

GeneratedSample run_generation(const Sample& sample, const ChatRequest& req, ChatBackend& backend) {
  GeneratedSample g;
  g.base_id = sample.id;
  const auto resp = backend.complete(req);
  g.cost.add(resp);
  g.raw = resp.content;
  auto parsed = parse_generation(resp.content);
  if (parsed.answer == text::trim(sample.answer)) {
    throw Error(ErrorCode::DegenerateOutput, "rewrite of '" + sample.id + "' is identical to the original answer");
  }
  g.perturbed_answer = std::move(parsed.answer);
  g.reasoning = std::move(parsed.reasoning);
  return g;
}

}  // namespace

ChatRequest build_negative_prompt(const Sample& sample, const GenerationSpec& spec, const PromptSet& prompts,
                                  const std::string& model) {
  return generation_request(sample, spec.template_name(), prompts, model);
}

ChatRequest build_positive_prompt(const Sample& sample, const AugmentSpec& spec, const PromptSet& prompts,
                                  const std::string& model) {
  return generation_request(sample, spec.template_name(), prompts, model);
}

GeneratedSample generate_negative(const Sample& sample, const GenerationSpec& spec, ChatBackend& backend,
                                  const PromptSet& prompts, const std::string& model) {
  require_consistent(sample);
  spec.validate();
  auto g = run_generation(sample, build_negative_prompt(sample, spec, prompts, model), backend);
  g.label = Polarity::Inconsistent;
  g.error_types = {spec.error_type};
  g.spec = spec;
  return g;
}

GeneratedSample augment_positive(const Sample& sample, const AugmentSpec& spec, ChatBackend& backend,
                                 const PromptSet& prompts, const std::string& model) {
  require_consistent(sample);
  auto g = run_generation(sample, build_positive_prompt(sample, spec, prompts, model), backend);
  g.label = Polarity::Consistent;
  g.error_types.clear();
  g.spec = spec;
  return g;
}

// ---------------------------------------------------------------------------

namespace {

// Uniform draw in [0, bound) from the raw engine output. The distribution
// adaptors in <random> are implementation-defined, the engine is not.
std::size_t bounded(std::mt19937_64& rng, std::size_t bound) {
  const std::uint64_t b = bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % b);
}

std::vector<std::size_t> shuffled(std::vector<std::size_t> v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
  return v;
}

std::vector<std::size_t> eligible_indices(std::span<const Sample> corpus) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "generation corpus is empty");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].consistent() && corpus[i].granularity == Granularity::Answer) idx.push_back(i);
  }
  if (idx.empty()) throw Error(ErrorCode::EmptyCorpus, "generation corpus has no consistent answer-level samples");
  return idx;
}

}  // namespace

std::vector<PlanItem> build_generation_plan(std::span<const Sample> corpus,
                                            const std::map<ErrorType, std::size_t>& coverage, std::uint64_t seed) {
  const auto eligible = eligible_indices(corpus);
  std::mt19937_64 rng(seed);
  std::vector<PlanItem> plan;
  for (ErrorType t : kAllErrorTypes) {
    const auto it = coverage.find(t);
    if (it == coverage.end() || it->second == 0) continue;
    if (t == ErrorType::Other) throw Error(ErrorCode::InvalidArgument, "Other cannot be generated");
    const auto order = shuffled(eligible, rng);
    for (std::size_t i = 0; i < it->second; ++i) {
      PlanItem item;
      item.sample_index = order[i % order.size()];
      item.sample_id = corpus[item.sample_index].id;
      item.spec.error_type = t;
      if (t == ErrorType::Hallu) item.spec.hallu_difficulty = static_cast<int>(i % 3) + 1;
      if (t == ErrorType::KCont) {
        item.spec.kcont_granularity = i % 2 == 0 ? KContGranularity::Word : KContGranularity::Sentence;
      }
      item.spec.seed = seed + plan.size();
      plan.push_back(std::move(item));
    }
  }
  return plan;
}

std::vector<AugmentPlanItem> build_augment_plan(std::span<const Sample> corpus,
                                                const std::map<AugmentMode, std::size_t>& counts, std::uint64_t seed) {
  const auto eligible = eligible_indices(corpus);
  // offset so positives do not reuse the negative plan's permutations
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<AugmentPlanItem> plan;
  for (auto mode : {AugmentMode::SynonymReplace, AugmentMode::Paraphrase, AugmentMode::Summarize}) {
    const auto it = counts.find(mode);
    if (it == counts.end() || it->second == 0) continue;
    const auto order = shuffled(eligible, rng);
    for (std::size_t i = 0; i < it->second; ++i) {
      AugmentPlanItem item;
      item.sample_index = order[i % order.size()];
      item.sample_id = corpus[item.sample_index].id;
      item.spec = {mode, seed + plan.size()};
      plan.push_back(std::move(item));
    }
  }
  return plan;
}

namespace {

template <typename Key, typename ParseKey>
std::map<Key, std::size_t> parse_pairs(std::string_view s, ParseKey parse_key) {
  std::map<Key, std::size_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string_view::npos) comma = s.size();
    const auto item = text::trim(s.substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected key=count, got '" + item + "'");
    const auto key = parse_key(text::trim(std::string_view(item).substr(0, eq)));
    const auto count_text = text::trim(std::string_view(item).substr(eq + 1));
    std::size_t count = 0;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(count_text, &used);
      if (used != count_text.size() || v < 0) throw std::invalid_argument("count");
      count = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "invalid count in '" + item + "'");
    }
    out[key] += count;
  }
  return out;
}

}  // namespace

std::map<ErrorType, std::size_t> parse_coverage(std::string_view s) {
  auto out = parse_pairs<ErrorType>(s, [](std::string_view k) { return parse_error_type(k); });
  if (out.contains(ErrorType::Other) && out[ErrorType::Other] > 0) {
    throw Error(ErrorCode::InvalidArgument, "Other cannot be generated");
  }
  return out;
}

std::map<AugmentMode, std::size_t> parse_augment_counts(std::string_view s) {
  return parse_pairs<AugmentMode>(s, [](std::string_view k) { return parse_augment_mode(k); });
}

std::map<ErrorType, std::size_t> uniform_coverage(std::size_t per_type) {
  std::map<ErrorType, std::size_t> out;
  for (ErrorType t : kAllErrorTypes) {
    if (t != ErrorType::Other) out[t] = per_type;
  }
  return out;
}

Sample to_sample(const GeneratedSample& g, const Sample& base, std::string id) {
  Sample s;
  s.id = std::move(id);
  s.question = base.question;
  s.reference = base.reference;
  s.answer = g.perturbed_answer;
  s.label = g.label;
  s.error_types = g.error_types;
  s.source = "synthetic";
  s.granularity = Granularity::Answer;
  return s;
}

}  // namespace ragfce
