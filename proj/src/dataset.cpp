#include "ragfce/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ragfce/error.hpp"
#include "ragfce/text.hpp"

namespace ragfce {

using nlohmann::json;

std::string_view to_string(Polarity p) noexcept {
  return p == Polarity::Consistent ? "Consistent" : "Inconsistent";
}

std::string_view to_string(Granularity g) noexcept {
  return g == Granularity::Answer ? "Answer" : "Segment";
}

std::string_view to_string(Schema s) noexcept {
  return s == Schema::Face4RAG ? "Face4RAG" : "Generic";
}

Polarity parse_polarity(std::string_view s) {
  const auto v = text::ascii_lower(text::trim(s));
  if (v == "consistent" || v == "positive" || v == "pos" || v == "1" || v == "true" ||
      v == "correct" || v == "一致" || v == "正确") {
    return Polarity::Consistent;
  }
  if (v == "inconsistent" || v == "negative" || v == "neg" || v == "0" || v == "false" ||
      v == "incorrect" || v == "不一致" || v == "错误") {
    return Polarity::Inconsistent;
  }
  throw Error(ErrorCode::Parse, "unrecognized label '" + std::string(s) + "'");
}

Granularity parse_granularity(std::string_view s) {
  const auto v = text::ascii_lower(text::trim(s));
  if (v == "answer") return Granularity::Answer;
  if (v == "segment") return Granularity::Segment;
  throw Error(ErrorCode::InvalidArgument, "unknown granularity '" + std::string(s) + "'");
}

Schema parse_schema(std::string_view s) {
  const auto v = text::ascii_lower(text::trim(s));
  if (v == "face4rag") return Schema::Face4RAG;
  if (v == "generic") return Schema::Generic;
  throw Error(ErrorCode::InvalidArgument, "unknown schema '" + std::string(s) + "'");
}

SchemaMapping SchemaMapping::for_schema(Schema schema) {
  SchemaMapping m;
  if (schema == Schema::Generic) {
    m.keys = {{"id", {"id"}},
              {"question", {"question"}},
              {"reference", {"reference"}},
              {"answer", {"answer"}},
              {"label", {"label"}},
              {"error_types", {"error_types"}},
              {"source", {"source"}},
              {"granularity", {"granularity"}}};
    m.annotated = false;
    m.descriptive_error_names = false;
    m.default_source = "unknown";
    return m;
  }
  // The released files' exact keys are not documented; try the common
  // spellings in order.
  m.keys = {
      {"id", {"id", "sample_id", "qid", "uid", "idx"}},
      {"question", {"question", "query", "问题", "prompt"}},
      {"reference", {"reference", "references", "ref", "context", "retrieved_reference", "参考", "参考资料"}},
      {"answer", {"answer", "response", "segment", "回答", "答案"}},
      {"label", {"label", "gold_label", "is_consistent", "factual_consistency", "consistent", "标签"}},
      {"error_types", {"error_types", "error_type", "errors", "error", "type", "错误类型"}},
      {"source", {"source", "model", "llm", "generator", "来源"}},
      {"granularity", {"granularity", "level"}},
  };
  m.annotated = true;
  m.descriptive_error_names = true;
  m.default_source = "synthetic";
  return m;
}

void SchemaMapping::prefer(const std::string& field, const std::string& key) {
  auto& list = keys[field];
  std::erase(list, key);
  list.insert(list.begin(), key);
}

namespace {

const json* find_field(const json& record, const SchemaMapping& mapping, const std::string& field) {
  const auto it = mapping.keys.find(field);
  if (it == mapping.keys.end()) return nullptr;
  for (const auto& key : it->second) {
    const auto f = record.find(key);
    if (f != record.end() && !f->is_null()) return &*f;
  }
  return nullptr;
}

std::string line_prefix(std::size_t line) {
  return line > 0 ? "line " + std::to_string(line) + ": " : std::string{};
}

std::string text_field(const json& record, const SchemaMapping& mapping, const std::string& field,
                       std::size_t line) {
  const json* v = find_field(record, mapping, field);
  if (v == nullptr) {
    throw Error(ErrorCode::Parse, line_prefix(line) + "missing field '" + field + "'");
  }
  if (v->is_string()) return v->get<std::string>();
  if (v->is_array()) {
    // multiple retrieved passages
    std::string joined;
    for (const auto& item : *v) {
      if (!item.is_string()) {
        throw Error(ErrorCode::Parse, line_prefix(line) + "field '" + field + "' must hold strings");
      }
      if (!joined.empty()) joined += "\n";
      joined += item.get<std::string>();
    }
    return joined;
  }
  if (v->is_number_integer()) return std::to_string(v->get<long long>());
  throw Error(ErrorCode::Parse, line_prefix(line) + "field '" + field + "' must be text");
}

const std::unordered_map<std::string, ErrorType>& descriptive_names() {
  static const std::unordered_map<std::string, ErrorType> names{
      {"hallucination error", ErrorType::Hallu},
      {"hallucination", ErrorType::Hallu},
      {"contradiction error", ErrorType::KCont},
      {"entity inversion error", ErrorType::KInve},
      {"conflation error", ErrorType::KConf},
      {"conceptual substitution error", ErrorType::KConc},
      {"overgeneralization error", ErrorType::LOver},
      {"causal confusion error", ErrorType::LCaus},
      {"confusing sufficient and necessary conditions error", ErrorType::LConf},
      {"inclusion relation error", ErrorType::LIncl},
      {"other logical fallacy", ErrorType::LOthe},
      {"loth", ErrorType::LOthe},
      {"loth.", ErrorType::LOthe},
      {"other errors", ErrorType::Other},
      {"other error", ErrorType::Other},
  };
  return names;
}

ErrorType parse_type_token(const std::string& token, const SchemaMapping& mapping, std::size_t line) {
  try {
    return parse_error_type(token);
  } catch (const Error&) {
    if (mapping.descriptive_error_names) {
      const auto it = descriptive_names().find(text::ascii_lower(token));
      if (it != descriptive_names().end()) return it->second;
    }
    throw Error(ErrorCode::UnknownCode,
                line_prefix(line) + "unknown error type code '" + token + "'");
  }
}

void split_type_string(const std::string& s, std::vector<std::string>& out) {
  // separators: , ; | / and their full-width forms, plus the enumeration comma
  static const std::vector<std::string> kSeps{",", ";", "|", "/", "，", "；", "、"};
  std::string current;
  std::size_t i = 0;
  while (i < s.size()) {
    bool matched = false;
    for (const auto& sep : kSeps) {
      if (s.compare(i, sep.size(), sep) == 0) {
        out.push_back(current);
        current.clear();
        i += sep.size();
        matched = true;
        break;
      }
    }
    if (!matched) current.push_back(s[i++]);
  }
  out.push_back(current);
}

ErrorTypeSet parse_types(const json* v, const SchemaMapping& mapping, std::size_t line) {
  ErrorTypeSet types;
  if (v == nullptr) return types;
  std::vector<std::string> tokens;
  if (v->is_string()) {
    split_type_string(v->get<std::string>(), tokens);
  } else if (v->is_array()) {
    for (const auto& item : *v) {
      if (!item.is_string()) {
        throw Error(ErrorCode::Parse, line_prefix(line) + "error_types entries must be strings");
      }
      tokens.push_back(item.get<std::string>());
    }
  } else {
    throw Error(ErrorCode::Parse, line_prefix(line) + "error_types must be a string or array");
  }
  for (auto& token : tokens) {
    const auto t = text::trim(token);
    const auto lowered = text::ascii_lower(t);
    if (t.empty() || lowered == "none" || lowered == "null" || t == "无") continue;
    types.insert(parse_type_token(t, mapping, line));
  }
  return types;
}

Polarity parse_label(const json* v, std::size_t line) {
  if (v == nullptr) throw Error(ErrorCode::Parse, line_prefix(line) + "missing field 'label'");
  if (v->is_boolean()) return v->get<bool>() ? Polarity::Consistent : Polarity::Inconsistent;
  if (v->is_number_integer()) {
    const auto n = v->get<long long>();
    if (n == 1) return Polarity::Consistent;
    if (n == 0) return Polarity::Inconsistent;
  } else if (v->is_string()) {
    try {
      return parse_polarity(v->get<std::string>());
    } catch (const Error&) {
    }
  }
  throw Error(ErrorCode::Parse, line_prefix(line) + "field 'label' has unrecognized value " + v->dump());
}

}  // namespace

void validate_sample(const Sample& s, bool annotated, std::vector<std::string>* warnings) {
  const auto where = line_prefix(s.line);
  if (s.id.empty()) throw Error(ErrorCode::Parse, where + "empty id");
  if (text::trim_view(s.question).empty()) throw Error(ErrorCode::Parse, where + "empty field 'question'");
  if (text::trim_view(s.reference).empty()) throw Error(ErrorCode::Parse, where + "empty field 'reference'");
  if (text::trim_view(s.answer).empty()) throw Error(ErrorCode::Parse, where + "empty field 'answer'");
  if (s.label == Polarity::Consistent && !s.error_types.empty()) {
    throw Error(ErrorCode::Parse, where + "consistent sample '" + s.id + "' carries error types");
  }
  if (s.label == Polarity::Inconsistent && s.granularity == Granularity::Answer && s.error_types.empty()) {
    const auto msg = where + "inconsistent sample '" + s.id + "' has no error types";
    if (annotated) throw Error(ErrorCode::Parse, msg);
    if (warnings != nullptr) warnings->push_back(msg);
  }
}

Sample sample_from_json(const json& record, const SchemaMapping& mapping, Granularity default_granularity,
                        std::size_t line) {
  if (!record.is_object()) throw Error(ErrorCode::Parse, line_prefix(line) + "record is not an object");
  Sample s;
  s.line = line;
  if (find_field(record, mapping, "id") != nullptr) {
    s.id = text::trim(text_field(record, mapping, "id", line));
  } else {
    s.id = "L" + std::to_string(line);
  }
  s.question = text_field(record, mapping, "question", line);
  s.reference = text_field(record, mapping, "reference", line);
  s.answer = text_field(record, mapping, "answer", line);
  s.label = parse_label(find_field(record, mapping, "label"), line);
  s.error_types = parse_types(find_field(record, mapping, "error_types"), mapping, line);
  if (find_field(record, mapping, "source") != nullptr) {
    s.source = text::trim(text_field(record, mapping, "source", line));
  }
  if (s.source.empty()) s.source = mapping.default_source;
  s.granularity = default_granularity;
  if (const json* g = find_field(record, mapping, "granularity"); g != nullptr && g->is_string()) {
    try {
      s.granularity = parse_granularity(g->get<std::string>());
    } catch (const Error&) {
      throw Error(ErrorCode::Parse, line_prefix(line) + "field 'granularity' has value " + g->dump());
    }
  }
  return s;
}

json sample_to_json(const Sample& s) {
  json types = json::array();
  for (ErrorType t : s.error_types) types.push_back(std::string(to_string(t)));
  return json{{"id", s.id},
              {"question", s.question},
              {"reference", s.reference},
              {"answer", s.answer},
              {"label", std::string(to_string(s.label))},
              {"error_types", types},
              {"source", s.source},
              {"granularity", std::string(to_string(s.granularity))}};
}

void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& s : samples) out << sample_to_json(s).dump() << '\n';
}

LoadedDataset parse_dataset(std::istream& in, Schema schema, const LoadOptions& options,
                            const std::string& origin) {
  const SchemaMapping mapping = options.mapping ? *options.mapping : SchemaMapping::for_schema(schema);
  LoadedDataset out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (text::trim_view(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Parse, origin + ": line " + std::to_string(line_no) + ": invalid JSON (" +
                                        e.what() + ")");
    }
    Sample s;
    try {
      s = sample_from_json(record, mapping, options.granularity, line_no);
      validate_sample(s, mapping.annotated, &out.warnings);
    } catch (const Error& e) {
      throw Error(e.code(), origin + ": " + e.message());
    }
    if (!seen.insert(s.id).second) {
      throw Error(ErrorCode::DuplicateId,
                  origin + ": line " + std::to_string(line_no) + ": duplicate id '" + s.id + "'");
    }
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw Error(ErrorCode::EmptyFile, origin + " contains no records");
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path, Schema schema, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return parse_dataset(in, schema, options, path.string());
}

std::string dataset_digest(std::span<const Sample> samples) {
  std::string canonical;
  for (const auto& s : samples) {
    canonical += sample_to_json(s).dump();
    canonical += '\n';
  }
  return text::sha256_hex(canonical);
}

std::vector<Sample> answer_level(std::span<const Sample> samples) {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.granularity == Granularity::Answer) out.push_back(s);
  }
  return out;
}

DatasetStats compute_stats(std::span<const Sample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "cannot compute statistics of an empty dataset");
  DatasetStats stats;
  stats.num_samples = samples.size();
  std::size_t total_chars = 0;
  for (const auto& s : samples) {
    total_chars += text::scalar_count(s.answer);
    if (s.consistent()) ++stats.num_positive;
  }
  const auto n = static_cast<double>(stats.num_samples);
  stats.avg_length = static_cast<double>(total_chars) / n;
  stats.positive_rate = static_cast<double>(stats.num_positive) / n;
  return stats;
}

std::vector<DistributionRow> error_distribution(std::span<const Sample> samples) {
  std::size_t negatives = 0;
  std::map<Category, std::size_t> counts;
  for (const auto& s : samples) {
    if (s.consistent()) continue;
    ++negatives;
    std::set<Category> hit;
    for (ErrorType t : s.error_types) hit.insert(category_of(t));
    for (Category c : hit) ++counts[c];
  }
  if (negatives == 0) {
    throw Error(ErrorCode::NoInconsistentSamples, "error distribution needs at least one inconsistent sample");
  }
  std::vector<DistributionRow> rows;
  for (Category c : kAllCategories) {
    const auto it = counts.find(c);
    if (it == counts.end()) continue;
    rows.push_back({c, it->second, static_cast<double>(it->second) / static_cast<double>(negatives)});
  }
  return rows;
}

std::vector<SourcePartition> per_source_partition(std::span<const Sample> samples) {
  std::vector<SourcePartition> parts;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : samples) {
    auto [it, inserted] = index.try_emplace(s.source, parts.size());
    if (inserted) parts.push_back({s.source, {}});
    parts[it->second].samples.push_back(s);
  }
  return parts;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, "manifest " + path.string() + ": " + e.what());
  }
  if (!doc.contains("datasets") || !doc["datasets"].is_array()) {
    throw Error(ErrorCode::Parse, "manifest " + path.string() + ": missing 'datasets' array");
  }
  std::vector<ManifestEntry> entries;
  const auto base = path.parent_path();
  for (const auto& d : doc["datasets"]) {
    ManifestEntry e;
    try {
      e.name = d.at("name").get<std::string>();
      e.path = d.at("path").get<std::string>();
      e.schema = parse_schema(d.value("schema", std::string("generic")));
      e.granularity = parse_granularity(d.value("granularity", std::string("answer")));
      if (d.contains("fields")) e.field_overrides = d["fields"].get<std::map<std::string, std::string>>();
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::Parse, "manifest " + path.string() + ": " + ex.what());
    }
    if (e.path.is_relative()) e.path = base / e.path;
    entries.push_back(std::move(e));
  }
  return entries;
}

LoadedDataset load_manifest_entry(const ManifestEntry& entry) {
  LoadOptions opts;
  opts.granularity = entry.granularity;
  if (!entry.field_overrides.empty()) {
    auto mapping = SchemaMapping::for_schema(entry.schema);
    for (const auto& [field, key] : entry.field_overrides) mapping.prefer(field, key);
    opts.mapping = std::move(mapping);
  }
  return load_dataset(entry.path, entry.schema, opts);
}

json stats_to_json(const DatasetStats& stats) {
  auto round4 = [](double v) { return std::round(v * 10000.0) / 10000.0; };
  return json{{"num_samples", stats.num_samples},
              {"num_positive", stats.num_positive},
              {"avg_length", round4(stats.avg_length)},
              {"positive_rate", round4(stats.positive_rate)}};
}

std::string render_stats_table(const std::vector<std::pair<std::string, DatasetStats>>& columns) {
  constexpr std::size_t kLabel = 15;
  std::size_t width = 8;
  for (const auto& [name, _] : columns) width = std::max(width, text::scalar_count(name) + 2);
  std::ostringstream os;
  os << text::pad_right("Statistics", kLabel);
  for (const auto& [name, _] : columns) os << text::pad_left(name, width);
  os << '\n';
  os << text::pad_right("Num. Samples", kLabel);
  for (const auto& [_, st] : columns) os << text::pad_left(std::to_string(st.num_samples), width);
  os << '\n';
  os << text::pad_right("Avg. Length", kLabel);
  for (const auto& [_, st] : columns) os << text::pad_left(text::fixed(st.avg_length, 1), width);
  os << '\n';
  os << text::pad_right("Positive Rate", kLabel);
  for (const auto& [_, st] : columns) os << text::pad_left(text::fixed(st.positive_rate * 100.0, 1) + "%", width);
  os << '\n';
  return os.str();
}

std::string render_distribution(const std::vector<DistributionRow>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) {
    os << text::pad_right(to_string(r.category), 15) << text::pad_left(text::fixed(r.fraction * 100.0, 2) + "%", 9)
       << "  (" << r.count << ")\n";
  }
  return os.str();
}

}  // namespace ragfce
