#include "ragfce/decompose.hpp"

#include <nlohmann/json.hpp>

#include "ragfce/error.hpp"
#include "ragfce/text.hpp"

namespace ragfce {

using nlohmann::json;

std::string_view to_string(FewShotKind k) noexcept {
  switch (k) {
    case FewShotKind::LogicalConnection: return "logical_connection";
    case FewShotKind::PronounSubstitution: return "pronoun_substitution";
    case FewShotKind::UniqueFormat: return "unique_format";
  }
  return "logical_connection";
}

FewShotKind parse_fewshot_kind(std::string_view s) {
  for (auto k : {FewShotKind::LogicalConnection, FewShotKind::PronounSubstitution, FewShotKind::UniqueFormat}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::Parse, "unknown few-shot kind '" + std::string(s) + "'");
}

std::vector<FewShotExample> load_fewshot_examples(const PromptSet& prompts) {
  std::vector<FewShotExample> out;
  for (auto kind : {FewShotKind::LogicalConnection, FewShotKind::PronounSubstitution, FewShotKind::UniqueFormat}) {
    const auto name = "decompose/fewshot/" + std::string(to_string(kind));
    if (!prompts.has(name)) continue;
    json doc;
    try {
      doc = json::parse(prompts.text(name));
      const auto label = doc.at("label").get<std::string>();
      for (const auto& e : doc.at("examples")) {
        FewShotExample ex;
        ex.kind = kind;
        ex.label = label;
        ex.input = e.at("input").get<std::string>();
        ex.expected_segments = e.at("segments").get<std::vector<std::string>>();
        if (ex.expected_segments.empty()) throw Error(ErrorCode::Template, name + ": example without segments");
        out.push_back(std::move(ex));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Template, name + ": " + e.what());
    }
  }
  return out;
}

namespace {

bool is_digit(char32_t c) { return (c >= U'0' && c <= U'9') || (c >= 0xFF10 && c <= 0xFF19); }

int digit_value(char32_t c) { return c <= U'9' ? static_cast<int>(c - U'0') : static_cast<int>(c - 0xFF10); }

bool is_list_delimiter(char32_t c) {
  return c == U'.' || c == 0xFF0E || c == U')' || c == 0xFF09 || c == 0x3001 || c == U':' || c == 0xFF1A;
}

struct NumberedLine {
  long number = 0;
  std::string body;
};

// "12. body", "１２．body", "(3) body", "（3）body"
std::optional<NumberedLine> match_numbered(const std::u32string& line) {
  std::size_t i = 0;
  while (i < line.size() && text::is_space(line[i])) ++i;
  bool paren = false;
  if (i < line.size() && (line[i] == U'(' || line[i] == 0xFF08)) {
    paren = true;
    ++i;
  }
  const std::size_t digits_start = i;
  long number = 0;
  while (i < line.size() && is_digit(line[i]) && i - digits_start < 4) {
    number = number * 10 + digit_value(line[i]);
    ++i;
  }
  if (i == digits_start) return std::nullopt;
  if (paren) {
    if (i >= line.size() || (line[i] != U')' && line[i] != 0xFF09)) return std::nullopt;
    ++i;
  } else {
    if (i >= line.size() || !is_list_delimiter(line[i])) return std::nullopt;
    // "3.14 ..." is a decimal, not list numbering
    if (line[i] == U'.' && i + 1 < line.size() && line[i + 1] >= U'0' && line[i + 1] <= U'9') return std::nullopt;
    ++i;
  }
  return NumberedLine{number, text::trim(text::encode_utf8(line.substr(i)))};
}

std::string strip_code_fence(std::string_view s) {
  auto t = text::trim(s);
  if (!t.starts_with("```")) return t;
  const auto first_nl = t.find('\n');
  if (first_nl == std::string::npos) return t;
  t.erase(0, first_nl + 1);
  const auto fence = t.rfind("```");
  if (fence != std::string::npos) t.erase(fence);
  return text::trim(t);
}

std::optional<ParsedSegments> parse_json_array(const std::string& s) {
  if (!s.starts_with('[')) return std::nullopt;
  json doc;
  try {
    doc = json::parse(s);
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
  if (!doc.is_array()) return std::nullopt;
  ParsedSegments out;
  std::size_t pos = 0;
  for (const auto& item : doc) {
    ++pos;
    if (!item.is_string()) return std::nullopt;
    auto t = text::trim(item.get<std::string>());
    if (t.empty()) {
      out.warnings.push_back("dropped empty item #" + std::to_string(pos));
      continue;
    }
    out.items.push_back(std::move(t));
  }
  return out;
}

}  // namespace

ParsedSegments parse_segments(std::string_view raw) {
  const auto body = strip_code_fence(raw);
  if (auto arr = parse_json_array(body)) {
    if (arr->items.empty()) throw Error(ErrorCode::UnparseableOutput, "segment array holds no non-empty items");
    return *arr;
  }

  ParsedSegments out;
  std::vector<std::string> items;
  std::vector<long> numbers;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(body)) {
    ++line_no;
    const auto decoded = text::decode_utf8(line);
    if (auto numbered = match_numbered(decoded)) {
      items.push_back(numbered->body);
      numbers.push_back(numbered->number);
      continue;
    }
    if (text::trim_view(line).empty()) continue;
    if (items.empty()) continue;  // preamble before the list
    if (text::is_space(decoded.front())) {
      auto& last = items.back();
      if (!last.empty()) last += "\n";
      last += text::trim(line);
    } else {
      out.warnings.push_back("ignored non-list line " + std::to_string(line_no));
    }
  }
  for (std::size_t k = 0; k < numbers.size(); ++k) {
    if (numbers[k] != static_cast<long>(k + 1)) {
      out.warnings.push_back("list numbering is not 1..n");
      break;
    }
  }
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k].empty()) {
      out.warnings.push_back("dropped empty item #" + std::to_string(k + 1));
    } else {
      out.items.push_back(std::move(items[k]));
    }
  }
  if (out.items.empty()) throw Error(ErrorCode::UnparseableOutput, "no list items found in model output");
  return out;
}

std::string render_numbered(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += "\n";
    out += std::to_string(i + 1) + ". ";
    const auto lines = text::split_lines(items[i]);
    for (std::size_t l = 0; l < lines.size(); ++l) {
      if (l > 0) out += "\n   ";
      out += lines[l];
    }
  }
  return out;
}

ChatRequest build_decomposition_prompt(std::string_view answer, std::span<const FewShotExample> examples,
                                       const PromptSet& prompts, const std::string& model) {
  if (text::trim_view(answer).empty()) throw Error(ErrorCode::InvalidArgument, "answer is empty");
  std::string rendered;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (i > 0) rendered += "\n\n";
    rendered += prompts.render("decompose/example", {{"index", std::to_string(i + 1)},
                                                     {"kind", examples[i].label},
                                                     {"input", examples[i].input},
                                                     {"output", render_numbered(examples[i].expected_segments)}});
  }
  if (examples.empty()) rendered = prompts.text("decompose/no_examples");

  ChatRequest req;
  req.model = model;
  req.temperature = 0.0;
  req.messages.push_back({Role::System, prompts.text("decompose/system")});
  req.messages.push_back(
      {Role::User, prompts.render("decompose/instruction", {{"examples", rendered}, {"answer", std::string(answer)}})});
  return req;
}

DecompositionResult decompose(std::string_view answer, ChatBackend& backend,
                              std::span<const FewShotExample> examples, const PromptSet& prompts,
                              const std::string& model, const std::string& answer_id) {
  auto req = build_decomposition_prompt(answer, examples, prompts, model);
  DecompositionResult result;

  auto resp = backend.complete(req);
  result.cost.add(resp);
  result.transcript.push_back({"decompose", std::nullopt, req, resp.content});

  ParsedSegments parsed;
  try {
    parsed = parse_segments(resp.content);
    result.raw = resp.content;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnparseableOutput) throw;
    req.messages.push_back({Role::Assistant, resp.content});
    req.messages.push_back({Role::User, prompts.text("decompose/format_reminder")});
    auto retry = backend.complete(req);
    result.cost.add(retry);
    result.transcript.push_back({"decompose", std::nullopt, req, retry.content});
    try {
      parsed = parse_segments(retry.content);
    } catch (const Error& again) {
      if (again.code() != ErrorCode::UnparseableOutput) throw;
      throw Error(ErrorCode::UnparseableOutput, "decomposition output unparseable after retry");
    }
    result.raw = retry.content;
    result.warnings.push_back("decomposition needed a format retry");
  }

  result.warnings.insert(result.warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
  std::string joined;
  for (std::size_t i = 0; i < parsed.items.size(); ++i) {
    result.segments.push_back({i, parsed.items[i], answer_id});
    joined += parsed.items[i];
  }
  // pronoun substitution legitimately rewrites text, so coverage is only a warning
  if (const double overlap = text::trigram_overlap(answer, joined); overlap < 0.5) {
    result.warnings.push_back("segments share only " + text::fixed(overlap * 100.0, 1) +
                              "% of the answer's character trigrams");
  }
  return result;
}

std::vector<Segment> conventional_decompose(std::string_view answer, const std::string& answer_id) {
  if (text::trim_view(answer).empty()) throw Error(ErrorCode::InvalidArgument, "answer is empty");
  const auto s = text::decode_utf8(answer);
  auto is_terminal = [&](std::size_t i) {
    const char32_t c = s[i];
    if (c == U'.') {
      const bool digit_before = i > 0 && s[i - 1] >= U'0' && s[i - 1] <= U'9';
      const bool digit_after = i + 1 < s.size() && s[i + 1] >= U'0' && s[i + 1] <= U'9';
      return !(digit_before && digit_after);
    }
    return c == 0x3002 || c == 0xFF01 || c == 0xFF1F || c == U'!' || c == U'?' || c == U';' || c == 0xFF1B;
  };
  auto is_closer = [](char32_t c) {
    return c == 0x201D || c == 0x2019 || c == U'"' || c == U'\'' || c == 0x300D || c == 0x300F || c == U')' ||
           c == 0xFF09 || c == 0x3011 || c == 0x300B;
  };

  std::vector<Segment> out;
  std::u32string current;
  auto flush = [&] {
    auto t = text::trim(text::encode_utf8(current));
    if (!t.empty()) out.push_back({out.size(), std::move(t), answer_id});
    current.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == U'\n') {
      flush();
      continue;
    }
    current.push_back(s[i]);
    if (!is_terminal(i)) continue;
    while (i + 1 < s.size() && (is_terminal(i + 1) || is_closer(s[i + 1]))) current.push_back(s[++i]);
    flush();
  }
  flush();
  return out;
}

}  // namespace ragfce
