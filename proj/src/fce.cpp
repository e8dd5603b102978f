#include "ragfce/fce.hpp"

#include "ragfce/text.hpp"

namespace ragfce {

using nlohmann::json;

namespace {

std::string_view to_string(DecompositionMode m) {
  return m == DecompositionMode::LogicPreserving ? "logic_preserving" : "conventional";
}

DecompositionMode parse_mode(std::string_view s) {
  if (s == "logic_preserving") return DecompositionMode::LogicPreserving;
  if (s == "conventional") return DecompositionMode::Conventional;
  throw Error(ErrorCode::Parse, "unknown decomposition mode '" + std::string(s) + "'");
}

}  // namespace

json EvalConfig::to_json() const {
  return json{{"decomposition", std::string(to_string(decomposition))},
              {"use_cot", use_cot},
              {"use_logic_stage", use_logic_stage},
              {"force_both_stages", force_both_stages},
              {"judge_model", judge_model}};
}

std::string EvalConfig::digest() const { return text::sha256_hex(to_json().dump()); }

EvalConfig variant_config(std::string_view variant) {
  EvalConfig cfg;
  if (variant == "full") return cfg;
  if (variant == "ad") {
    cfg.decomposition = DecompositionMode::Conventional;
  } else if (variant == "no-cot") {
    cfg.use_cot = false;
  } else if (variant == "no-logic") {
    cfg.use_logic_stage = false;
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "unknown variant '" + std::string(variant) + "' (expected full, ad, no-cot, no-logic)");
  }
  return cfg;
}

std::string variant_label(std::string_view variant) {
  if (variant == "full") return "L-Face4RAG";
  if (variant == "ad") return "A.D.";
  if (variant == "no-cot") return "w/o COT";
  if (variant == "no-logic") return "w/o logi.eval";
  return std::string(variant);
}

std::string_view variant_of(const EvalConfig& cfg) {
  const bool lp = cfg.decomposition == DecompositionMode::LogicPreserving;
  if (lp && cfg.use_cot && cfg.use_logic_stage) return "full";
  if (!lp && cfg.use_cot && cfg.use_logic_stage) return "ad";
  if (lp && !cfg.use_cot && cfg.use_logic_stage) return "no-cot";
  if (lp && cfg.use_cot && !cfg.use_logic_stage) return "no-logic";
  return "custom";
}

// ---------------------------------------------------------------------------
// Verdict parsing
// ---------------------------------------------------------------------------

namespace {

std::string strip_decoration(std::string_view line) {
  std::string s = text::trim(line);
  auto strip_chars = [](std::string& t, std::string_view chars) {
    while (!t.empty() && chars.find(t.front()) != std::string_view::npos) t.erase(0, 1);
    while (!t.empty() && chars.find(t.back()) != std::string_view::npos) t.pop_back();
  };
  strip_chars(s, "*`#> \t");
  for (std::string_view tail : {"。", ".", "!", "！"}) {
    if (s.ends_with(tail)) s.erase(s.size() - tail.size());
  }
  strip_chars(s, "*` \t");
  return s;
}

std::optional<bool> token_value(std::string_view raw_token) {
  const auto t = text::ascii_upper(text::trim(raw_token));
  if (t == "CONSISTENT" || t == "LOGIC_CONSISTENT" || t == "FACT_CONSISTENT" || t == "一致") return true;
  if (t == "INCONSISTENT" || t == "LOGIC_INCONSISTENT" || t == "FACT_INCONSISTENT" || t == "NOT_CONSISTENT" ||
      t == "不一致") {
    return false;
  }
  return std::nullopt;
}

// "VERDICT: X", "结论：X" or a bare token.
std::optional<bool> verdict_from_line(std::string_view line) {
  const auto s = strip_decoration(line);
  if (s.empty()) return std::nullopt;
  if (auto v = token_value(s)) return v;
  for (std::string_view sep : {":", "："}) {
    const auto at = s.find(sep);
    if (at == std::string::npos) continue;
    const auto label = text::ascii_upper(text::trim(std::string_view(s).substr(0, at)));
    static const std::vector<std::string> kLabels{"VERDICT", "FINAL VERDICT", "FACT VERDICT", "LOGIC VERDICT",
                                                  "结论", "最终结论", "判定", "判断", "最终判断"};
    if (std::find(kLabels.begin(), kLabels.end(), label) == kLabels.end()) continue;
    return token_value(strip_decoration(std::string_view(s).substr(at + sep.size())));
  }
  return std::nullopt;
}

struct MachineBlock {
  std::optional<json> object;
  std::size_t object_start = std::string::npos;
  std::optional<bool> line_verdict;
  std::size_t line_start = std::string::npos;
};

MachineBlock find_machine_block(std::string_view raw) {
  MachineBlock block;

  std::vector<std::size_t> fences;
  for (auto pos = raw.find("```"); pos != std::string_view::npos; pos = raw.find("```", pos + 3)) {
    fences.push_back(pos);
  }
  for (std::size_t k = 0; k + 1 < fences.size(); k += 2) {
    const auto open = fences[k];
    const auto body_start = raw.find('\n', open);
    if (body_start == std::string_view::npos || body_start > fences[k + 1]) continue;
    const auto body = raw.substr(body_start + 1, fences[k + 1] - body_start - 1);
    try {
      auto doc = json::parse(body);
      if (doc.is_object()) {
        block.object = std::move(doc);
        block.object_start = open;
      }
    } catch (const json::parse_error&) {
    }
  }
  if (!block.object) {
    const auto t = text::trim_view(raw);
    if (t.starts_with('{') && t.ends_with('}')) {
      try {
        auto doc = json::parse(t);
        if (doc.is_object()) {
          block.object = std::move(doc);
          block.object_start = static_cast<std::size_t>(t.data() - raw.data());
        }
      } catch (const json::parse_error&) {
      }
    }
  }

  // last verdict line, scanning upwards
  std::size_t end = raw.size();
  while (end > 0) {
    auto start = raw.rfind('\n', end - 1);
    start = start == std::string_view::npos ? 0 : start + 1;
    const auto line = raw.substr(start, end - start);
    if (auto v = verdict_from_line(line)) {
      block.line_verdict = v;
      block.line_start = start;
      break;
    }
    if (start == 0) break;
    end = start - 1;
  }
  return block;
}

std::optional<bool> json_flag(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    const auto it = j.find(k);
    if (it == j.end() || it->is_null()) continue;
    if (it->is_boolean()) return it->get<bool>();
    if (it->is_string()) {
      if (auto v = token_value(it->get<std::string>())) return v;
      if (auto v = verdict_from_line(it->get<std::string>())) return v;
    }
  }
  return std::nullopt;
}

std::string json_text(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    const auto it = j.find(k);
    if (it == j.end() || it->is_null()) continue;
    return it->is_string() ? it->get<std::string>() : it->dump();
  }
  return {};
}

std::string rationale_before(std::string_view raw, std::size_t cut) {
  auto r = text::trim(raw.substr(0, std::min(cut, raw.size())));
  return r.empty() ? text::trim(raw) : r;
}

struct Resolved {
  MachineBlock block;
  std::optional<bool> final_verdict;
  std::string rationale;
};

Resolved resolve(std::string_view raw) {
  Resolved r;
  r.block = find_machine_block(raw);
  const auto json_verdict =
      r.block.object ? json_flag(*r.block.object, {"verdict", "consistent", "final_verdict"}) : std::nullopt;
  // whichever machine-readable part comes last is terminal
  const bool line_is_last =
      r.block.line_verdict && (!json_verdict || r.block.line_start > r.block.object_start);
  r.final_verdict = line_is_last ? r.block.line_verdict : json_verdict;
  const auto cut = std::min(r.block.object ? r.block.object_start : raw.size(),
                            r.block.line_verdict ? r.block.line_start : raw.size());
  r.rationale = rationale_before(raw, cut);
  return r;
}

}  // namespace

FactVerdict parse_fact_verdict(std::string_view raw) {
  auto r = resolve(raw);
  FactVerdict v;
  v.rationale = r.rationale;
  if (r.block.object) {
    const auto it = r.block.object->find("points");
    if (it != r.block.object->end() && it->is_array()) {
      for (const auto& p : *it) {
        if (!p.is_object()) throw Error(ErrorCode::UnparseableVerdict, "informational point is not an object");
        FactPoint point;
        point.text = json_text(p, {"point", "text", "informational_point", "信息点"});
        const auto ev = json_text(p, {"evidence", "context", "reference", "依据"});
        if (!text::trim_view(ev).empty()) point.evidence = ev;
        const auto flag = json_flag(p, {"consistent", "verdict", "point_consistent"});
        if (!flag) throw Error(ErrorCode::UnparseableVerdict, "informational point without a verdict");
        // nothing located in the reference: the point is unverifiable
        point.consistent = *flag && point.evidence.has_value();
        v.points.push_back(std::move(point));
      }
    }
  }
  if (!v.points.empty()) {
    v.consistent = std::all_of(v.points.begin(), v.points.end(), [](const FactPoint& p) { return p.consistent; });
    return v;
  }
  if (!r.final_verdict) throw Error(ErrorCode::UnparseableVerdict, "no verdict found in fact-stage output");
  v.consistent = *r.final_verdict;
  return v;
}

LogicVerdict parse_logic_verdict(std::string_view raw) {
  auto r = resolve(raw);
  if (!r.final_verdict) throw Error(ErrorCode::UnparseableVerdict, "no verdict found in logic-stage output");
  LogicVerdict v;
  v.consistent = *r.final_verdict;
  v.rationale = r.rationale;
  if (r.block.object) {
    v.answer_structure = json_text(*r.block.object, {"answer_structure", "答案逻辑结构"});
    v.reference_structure = json_text(*r.block.object, {"reference_structure", "参考逻辑结构"});
  }
  return v;
}

std::variant<FactVerdict, LogicVerdict> parse_verdict(std::string_view raw, Stage stage) {
  if (stage == Stage::Fact) return parse_fact_verdict(raw);
  return parse_logic_verdict(raw);
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

namespace {

ChatRequest stage_request(std::string_view asset, const Segment& segment, std::string_view reference,
                          const EvalConfig& cfg, const PromptSet& prompts) {
  if (text::trim_view(segment.text).empty()) throw Error(ErrorCode::InvalidArgument, "segment is empty");
  if (text::trim_view(reference).empty()) throw Error(ErrorCode::InvalidArgument, "reference is empty");
  ChatRequest req;
  req.model = cfg.judge_model;
  req.temperature = 0.0;
  req.messages.push_back({Role::System, prompts.text("fce/system")});
  req.messages.push_back(
      {Role::User, prompts.render(asset, {{"reference", std::string(reference)}, {"segment", segment.text}})});
  return req;
}

template <typename Verdict, typename Parse>
StageOutcome<Verdict> run_stage(const char* stage_name, ChatRequest req, const Segment& segment,
                                ChatBackend& backend, const PromptSet& prompts, Parse parse) {
  StageOutcome<Verdict> out;
  auto resp = backend.complete(req);
  out.cost.add(resp);
  out.transcript.push_back({stage_name, segment.index, req, resp.content});
  try {
    out.verdict = parse(resp.content);
    return out;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnparseableVerdict) throw;
  }
  req.messages.push_back({Role::Assistant, resp.content});
  req.messages.push_back({Role::User, prompts.text("fce/format_reminder")});
  auto retry = backend.complete(req);
  out.cost.add(retry);
  out.transcript.push_back({stage_name, segment.index, req, retry.content});
  out.verdict = parse(retry.content);
  return out;
}

}  // namespace

ChatRequest build_fact_prompt(const Segment& segment, std::string_view reference, const EvalConfig& cfg,
                              const PromptSet& prompts) {
  return stage_request(cfg.use_cot ? "fce/fact_cot" : "fce/fact_direct", segment, reference, cfg, prompts);
}

ChatRequest build_logic_prompt(const Segment& segment, std::string_view reference, const EvalConfig& cfg,
                               const PromptSet& prompts) {
  return stage_request(cfg.use_cot ? "fce/logic_cot" : "fce/logic_direct", segment, reference, cfg, prompts);
}

StageOutcome<FactVerdict> evaluate_fact(const Segment& segment, std::string_view reference, ChatBackend& backend,
                                        const EvalConfig& cfg, const PromptSet& prompts) {
  return run_stage<FactVerdict>("fact", build_fact_prompt(segment, reference, cfg, prompts), segment, backend,
                                prompts, [](std::string_view raw) { return parse_fact_verdict(raw); });
}

StageOutcome<LogicVerdict> evaluate_logic(const Segment& segment, std::string_view reference, ChatBackend& backend,
                                          const EvalConfig& cfg, const PromptSet& prompts) {
  return run_stage<LogicVerdict>("logic", build_logic_prompt(segment, reference, cfg, prompts), segment, backend,
                                 prompts, [](std::string_view raw) { return parse_logic_verdict(raw); });
}

bool segment_passed(const FactVerdict& fact, const std::optional<LogicVerdict>& logic) {
  return fact.consistent && (!logic || logic->consistent);
}

AnswerVerdict aggregate(std::string answer_id, std::vector<SegmentVerdict> verdicts, CallCost cost) {
  AnswerVerdict out;
  out.answer_id = std::move(answer_id);
  out.cost = cost;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (!verdicts[i].passed) out.failing_indices.push_back(i);
  }
  out.consistent = out.failing_indices.empty();
  out.segment_verdicts = std::move(verdicts);
  return out;
}

AnswerEvaluation evaluate_answer(const Sample& sample, ChatBackend& backend, const EvalConfig& cfg,
                                 const PromptSet& prompts, std::span<const FewShotExample> examples) {
  AnswerEvaluation out;
  CallCost cost;
  std::vector<Segment> segments;
  out.decomposition.mode = cfg.decomposition;
  if (cfg.decomposition == DecompositionMode::LogicPreserving) {
    auto d = decompose(sample.answer, backend, examples, prompts, cfg.judge_model, sample.id);
    segments = std::move(d.segments);
    out.decomposition.raw = std::move(d.raw);
    out.decomposition.warnings = std::move(d.warnings);
    cost += d.cost;
    out.transcript = std::move(d.transcript);
  } else {
    segments = conventional_decompose(sample.answer, sample.id);
  }

  std::vector<SegmentVerdict> verdicts;
  for (const auto& segment : segments) {
    try {
      auto fact = evaluate_fact(segment, sample.reference, backend, cfg, prompts);
      cost += fact.cost;
      out.transcript.insert(out.transcript.end(), fact.transcript.begin(), fact.transcript.end());
      std::optional<LogicVerdict> logic;
      if (cfg.use_logic_stage && (fact.verdict.consistent || cfg.force_both_stages)) {
        auto lg = evaluate_logic(segment, sample.reference, backend, cfg, prompts);
        cost += lg.cost;
        out.transcript.insert(out.transcript.end(), lg.transcript.begin(), lg.transcript.end());
        logic = std::move(lg.verdict);
      }
      const bool passed = segment_passed(fact.verdict, logic);
      verdicts.push_back({segment, std::move(fact.verdict), std::move(logic), passed});
    } catch (const Error& e) {
      throw PartialAnswerError(e, aggregate(sample.id, std::move(verdicts), cost));
    }
  }
  out.verdict = aggregate(sample.id, std::move(verdicts), cost);
  return out;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

std::string answer_digest(const Sample& s) {
  return text::sha256_hex(json{s.question, s.reference, s.answer}.dump());
}

namespace {

json cost_to_json(const CallCost& c) {
  return json{{"calls", c.calls}, {"prompt_tokens", c.prompt_tokens}, {"completion_tokens", c.completion_tokens}};
}

CallCost cost_from_json(const json& j) {
  return {j.at("calls").get<std::size_t>(), j.at("prompt_tokens").get<std::size_t>(),
          j.at("completion_tokens").get<std::size_t>()};
}

json fact_to_json(const FactVerdict& f) {
  json points = json::array();
  for (const auto& p : f.points) {
    points.push_back(json{{"point", p.text},
                          {"evidence", p.evidence ? json(*p.evidence) : json(nullptr)},
                          {"consistent", p.consistent}});
  }
  return json{{"consistent", f.consistent}, {"points", points}, {"rationale", f.rationale}};
}

FactVerdict fact_from_json(const json& j) {
  FactVerdict f;
  f.consistent = j.at("consistent").get<bool>();
  f.rationale = j.at("rationale").get<std::string>();
  for (const auto& p : j.at("points")) {
    FactPoint point;
    point.text = p.at("point").get<std::string>();
    if (!p.at("evidence").is_null()) point.evidence = p["evidence"].get<std::string>();
    point.consistent = p.at("consistent").get<bool>();
    f.points.push_back(std::move(point));
  }
  return f;
}

json logic_to_json(const LogicVerdict& l) {
  return json{{"consistent", l.consistent},
              {"answer_structure", l.answer_structure},
              {"reference_structure", l.reference_structure},
              {"rationale", l.rationale}};
}

LogicVerdict logic_from_json(const json& j) {
  return {j.at("consistent").get<bool>(), j.at("answer_structure").get<std::string>(),
          j.at("reference_structure").get<std::string>(), j.at("rationale").get<std::string>()};
}

}  // namespace

json verdict_to_json(const AnswerVerdict& v) {
  json segs = json::array();
  for (const auto& sv : v.segment_verdicts) {
    segs.push_back(json{{"index", sv.segment.index},
                        {"text", sv.segment.text},
                        {"fact", fact_to_json(sv.fact)},
                        {"logic", sv.logic ? logic_to_json(*sv.logic) : json(nullptr)},
                        {"passed", sv.passed}});
  }
  return json{{"answer_id", v.answer_id},
              {"consistent", v.consistent},
              {"failing_indices", v.failing_indices},
              {"segments", segs},
              {"cost", cost_to_json(v.cost)}};
}

AnswerVerdict verdict_from_json(const json& j) {
  AnswerVerdict v;
  v.answer_id = j.at("answer_id").get<std::string>();
  v.consistent = j.at("consistent").get<bool>();
  v.failing_indices = j.at("failing_indices").get<std::vector<std::size_t>>();
  v.cost = cost_from_json(j.at("cost"));
  for (const auto& s : j.at("segments")) {
    SegmentVerdict sv;
    sv.segment = {s.at("index").get<std::size_t>(), s.at("text").get<std::string>(), v.answer_id};
    sv.fact = fact_from_json(s.at("fact"));
    if (!s.at("logic").is_null()) sv.logic = logic_from_json(s["logic"]);
    sv.passed = s.at("passed").get<bool>();
    v.segment_verdicts.push_back(std::move(sv));
  }
  return v;
}

std::map<std::string, std::string> evaluation_prompt_digests(const PromptSet& prompts) {
  auto out = prompts.digests("decompose/");
  out.merge(prompts.digests("fce/"));
  return out;
}

JudgmentRecord make_record(const Sample& sample, const AnswerEvaluation& evaluation, const EvalConfig& cfg,
                           const PromptSet& prompts) {
  JudgmentRecord r;
  r.sample_id = sample.id;
  r.answer_digest = answer_digest(sample);
  r.config_digest = cfg.digest();
  r.prompt_digests = evaluation_prompt_digests(prompts);
  r.config = cfg.to_json();
  r.decomposition = evaluation.decomposition;
  r.verdict = evaluation.verdict;
  r.transcript = evaluation.transcript;
  return r;
}

json record_to_json(const JudgmentRecord& r) {
  json transcript = json::array();
  for (const auto& e : r.transcript) {
    transcript.push_back(json{{"stage", e.stage},
                              {"segment_index", e.segment_index ? json(*e.segment_index) : json(nullptr)},
                              {"request_digest", cache_key(e.request)},
                              {"request", request_to_json(e.request)},
                              {"response", e.response}});
  }
  return json{{"sample_id", r.sample_id},
              {"answer_digest", r.answer_digest},
              {"config_digest", r.config_digest},
              {"prompt_digests", r.prompt_digests},
              {"config", r.config},
              {"decomposition",
               {{"mode", std::string(to_string(r.decomposition.mode))},
                {"raw", r.decomposition.raw},
                {"warnings", r.decomposition.warnings}}},
              {"verdict", verdict_to_json(r.verdict)},
              {"transcript", transcript}};
}

JudgmentRecord record_from_json(const json& j) {
  JudgmentRecord r;
  try {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.answer_digest = j.at("answer_digest").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.prompt_digests = j.at("prompt_digests").get<std::map<std::string, std::string>>();
    r.config = j.at("config");
    const auto& d = j.at("decomposition");
    r.decomposition.mode = parse_mode(d.at("mode").get<std::string>());
    r.decomposition.raw = d.at("raw").get<std::string>();
    r.decomposition.warnings = d.at("warnings").get<std::vector<std::string>>();
    r.verdict = verdict_from_json(j.at("verdict"));
    for (const auto& e : j.at("transcript")) {
      Exchange ex;
      ex.stage = e.at("stage").get<std::string>();
      if (!e.at("segment_index").is_null()) ex.segment_index = e["segment_index"].get<std::size_t>();
      ex.request = request_from_json(e.at("request"));
      ex.response = e.at("response").get<std::string>();
      r.transcript.push_back(std::move(ex));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed judgment record: ") + e.what());
  }
  return r;
}

}  // namespace ragfce
