#include "ragfce/bench.hpp"

#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ragfce/parallel.hpp"
#include "ragfce/text.hpp"

namespace ragfce {

namespace {

using nlohmann::json;

void count(Cell& c, bool correct) {
  ++c.total;
  if (correct) ++c.correct;
}

std::unordered_map<std::string, const Prediction*> index_predictions(std::span<const Prediction> predictions,
                                                                     std::span<const Sample> samples) {
  std::set<std::string, std::less<>> known;
  for (const auto& s : samples) known.insert(s.id);
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!known.contains(p.sample_id)) throw Error(ErrorCode::InvalidArgument, "prediction for unknown sample '" + p.sample_id + "'");
    if (!by_id.emplace(p.sample_id, &p).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate prediction for sample '" + p.sample_id + "'");
  }
  return by_id;
}

json cell_to_json(const Cell& c) { return json{{"correct", c.correct}, {"total", c.total}}; }

Cell cell_from_json(const json& j) {
  Cell c;
  c.correct = j.at("correct").get<std::size_t>();
  c.total = j.at("total").get<std::size_t>();
  if (c.correct > c.total) throw Error(ErrorCode::Parse, "report cell with correct > total");
  return c;
}

std::string pct(const Cell& c) {
  auto f = c.fraction();
  if (!f) return "-";
  return text::fixed(*f * 100.0, 2);
}

std::optional<double> pct_value(const std::optional<Cell>& c) {
  if (!c) return std::nullopt;
  auto f = c->fraction();
  if (!f) return std::nullopt;
  return *f * 100.0;
}

std::string row_label(const Report& r) {
  std::string label = variant_label(r.variant);
  if (!r.judge_model.empty()) label += " (" + r.judge_model + ")";
  return label;
}

std::string render_grid(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], text::scalar_count(row[i]));
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 0) {
        os << text::pad_right(row[i], widths[i]);
      } else {
        os << " | " << text::pad_left(row[i], widths[i]);
      }
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < widths.size(); ++i) total += widths[i] + (i == 0 ? 0 : 3);
      os << std::string(total, '-') << '\n';
    }
  }
  return os.str();
}

std::vector<ErrorType> table_types(const Report& r) {
  std::vector<ErrorType> types;
  for (ErrorType t : kAllErrorTypes) {
    if (t == ErrorType::Other && !r.per_error_type.contains(t)) continue;
    types.push_back(t);
  }
  return types;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Named cells of a report in a fixed order.
std::vector<std::pair<std::string, std::optional<Cell>>> named_cells(const Report& r,
                                                                     const std::vector<ErrorType>& types,
                                                                     const std::vector<std::string>& sources) {
  std::vector<std::pair<std::string, std::optional<Cell>>> out;
  out.emplace_back("Overall", r.overall);
  out.emplace_back("-Positive", r.positive);
  out.emplace_back("-Negative", r.negative);
  for (ErrorType t : types) {
    auto it = r.per_error_type.find(t);
    out.emplace_back(header_code(t), it == r.per_error_type.end() ? std::nullopt : std::optional<Cell>(it->second));
  }
  for (const auto& s : sources) {
    auto it = r.per_source.find(s);
    out.emplace_back("source:" + s, it == r.per_source.end() ? std::nullopt : std::optional<Cell>(it->second));
  }
  return out;
}

}  // namespace

std::map<ErrorType, Cell> error_type_cells(std::span<const Prediction> predictions, std::span<const Sample> samples) {
  auto by_id = index_predictions(predictions, samples);
  std::map<ErrorType, Cell> cells;
  for (const auto& s : samples) {
    if (s.label != Polarity::Inconsistent) continue;
    auto it = by_id.find(s.id);
    if (it == by_id.end()) continue;
    const bool hit = it->second->predicted == Polarity::Inconsistent;
    for (ErrorType t : s.error_types) count(cells[t], hit);
  }
  return cells;
}

std::map<ErrorType, double> accuracy_by_error_type(std::span<const Prediction> predictions,
                                                   std::span<const Sample> samples) {
  std::map<ErrorType, double> out;
  for (const auto& [t, c] : error_type_cells(predictions, samples)) {
    if (auto f = c.fraction()) out.emplace(t, *f);
  }
  return out;
}

Report compute_report(std::span<const Prediction> predictions, std::span<const Sample> samples) {
  auto by_id = index_predictions(predictions, samples);
  Report r;
  r.total = samples.size();
  r.dataset_digest = dataset_digest(samples);
  for (const auto& s : samples) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) continue;
    ++r.completed;
    const bool hit = it->second->predicted == s.label;
    count(r.overall, hit);
    count(s.label == Polarity::Consistent ? r.positive : r.negative, hit);
    count(r.per_source[s.source], hit);
    if (s.label == Polarity::Inconsistent) {
      for (ErrorType t : s.error_types) count(r.per_error_type[t], hit);
    }
  }
  return r;
}

std::vector<JudgmentRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open records file " + path.string());
  std::vector<JudgmentRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception&) {
      // A torn trailing line from an interrupted run is dropped; the sample
      // is simply judged again.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": malformed judgment record");
    }
  }
  return out;
}

void write_records(const std::filesystem::path& path, std::span<const JudgmentRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

BenchResult run_benchmark(std::span<const Sample> dataset, const EvalConfig& cfg, ChatBackend& backend,
                          const PromptSet& prompts, std::span<const FewShotExample> examples,
                          const BenchOptions& options) {
  const auto samples = answer_level(dataset);
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "benchmark dataset has no answer-level samples");

  const std::string config_digest = cfg.digest();
  std::vector<std::optional<JudgmentRecord>> slots(samples.size());

  const bool persist = !options.records_path.empty();
  if (persist && std::filesystem::exists(options.records_path)) {
    std::unordered_map<std::string, JudgmentRecord> previous;
    for (auto& r : load_records(options.records_path)) {
      if (r.config_digest == config_digest) previous.insert_or_assign(r.sample_id, std::move(r));
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto it = previous.find(samples[i].id);
      if (it != previous.end() && it->second.answer_digest == answer_digest(samples[i])) slots[i] = it->second;
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!slots[i]) pending.push_back(i);
  }

  std::vector<std::optional<std::string>> failures(samples.size());
  std::mutex io_mutex;
  std::ofstream journal;
  if (persist && !pending.empty()) {
    if (options.records_path.has_parent_path()) std::filesystem::create_directories(options.records_path.parent_path());
    journal.open(options.records_path, std::ios::app);
    if (!journal) throw Error(ErrorCode::Io, "cannot append to " + options.records_path.string());
  }

  parallel_for(pending.size(), cfg.concurrency, [&](std::size_t k) {
    const std::size_t i = pending[k];
    const Sample& s = samples[i];
    try {
      auto evaluation = evaluate_answer(s, backend, cfg, prompts, examples);
      auto record = make_record(s, evaluation, cfg, prompts);
      if (persist) {
        const std::string line = record_to_json(record).dump();
        std::lock_guard lock(io_mutex);
        journal << line << '\n';
        journal.flush();
      }
      slots[i] = std::move(record);
    } catch (const std::exception& e) {
      // messages may quote raw backend bytes; keep the report serializable
      const auto quoted = json(s.id + ": " + e.what()).dump(-1, ' ', false, json::error_handler_t::replace);
      failures[i] = json::parse(quoted).get<std::string>();
    }
  });
  if (journal.is_open()) journal.close();

  BenchResult result;
  const std::string locator = persist ? options.records_path.filename().string() : std::string("memory");
  CallCost cost;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!slots[i]) continue;
    const auto& rec = *slots[i];
    result.predictions.push_back(Prediction{
        samples[i].id, rec.verdict.consistent ? Polarity::Consistent : Polarity::Inconsistent, locator + "#" + samples[i].id});
    cost += rec.verdict.cost;
    result.records.push_back(rec);
  }
  if (persist) write_records(options.records_path, result.records);

  result.report = compute_report(result.predictions, samples);
  result.report.variant = options.variant;
  result.report.judge_model = cfg.judge_model;
  result.report.config_digest = config_digest;
  result.report.prompt_digests = evaluation_prompt_digests(prompts);
  result.report.cost = cost;
  for (auto& f : failures) {
    if (f) result.report.failures.push_back(std::move(*f));
  }
  return result;
}

Layout parse_layout(std::string_view s) {
  const auto l = text::ascii_lower(text::trim(s));
  if (l == "table2") return Layout::Table2;
  if (l == "table3") return Layout::Table3;
  if (l == "ablation") return Layout::Ablation;
  throw Error(ErrorCode::InvalidArgument, "unknown layout '" + std::string(s) + "' (table2, table3, ablation)");
}

json report_to_json(const Report& r) {
  json types = json::object();
  for (const auto& [t, c] : r.per_error_type) types[std::string(to_string(t))] = cell_to_json(c);
  json sources = json::object();
  for (const auto& [s, c] : r.per_source) sources[s] = cell_to_json(c);
  return json{
      {"format", "ragfce-report-v1"},
      {"variant", r.variant},
      {"judge_model", r.judge_model},
      {"dataset_digest", r.dataset_digest},
      {"config_digest", r.config_digest},
      {"prompt_digests", r.prompt_digests},
      {"total", r.total},
      {"completed", r.completed},
      {"failures", r.failures},
      {"overall", cell_to_json(r.overall)},
      {"positive", cell_to_json(r.positive)},
      {"negative", cell_to_json(r.negative)},
      {"per_error_type", std::move(types)},
      {"per_source", std::move(sources)},
      {"cost", json{{"calls", r.cost.calls}, {"prompt_tokens", r.cost.prompt_tokens},
                    {"completion_tokens", r.cost.completion_tokens}}},
  };
}

Report report_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "ragfce-report-v1") throw Error(ErrorCode::Parse, "not a ragfce report");
    Report r;
    r.variant = j.at("variant").get<std::string>();
    r.judge_model = j.at("judge_model").get<std::string>();
    r.dataset_digest = j.at("dataset_digest").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.prompt_digests = j.at("prompt_digests").get<std::map<std::string, std::string>>();
    r.total = j.at("total").get<std::size_t>();
    r.completed = j.at("completed").get<std::size_t>();
    r.failures = j.at("failures").get<std::vector<std::string>>();
    r.overall = cell_from_json(j.at("overall"));
    r.positive = cell_from_json(j.at("positive"));
    r.negative = cell_from_json(j.at("negative"));
    for (const auto& [k, v] : j.at("per_error_type").items()) r.per_error_type[parse_error_type(k)] = cell_from_json(v);
    for (const auto& [k, v] : j.at("per_source").items()) r.per_source[k] = cell_from_json(v);
    const auto& c = j.at("cost");
    r.cost.calls = c.at("calls").get<std::size_t>();
    r.cost.prompt_tokens = c.at("prompt_tokens").get<std::size_t>();
    r.cost.completion_tokens = c.at("completion_tokens").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed report: ") + e.what());
  }
}

Report load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open report " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

std::string render_report(const Report& report, Layout layout, Format format) {
  if (layout == Layout::Ablation) return render_ablation(std::span<const Report>(&report, 1), format);
  if (layout == Layout::Table2 && report.per_error_type.empty())
    throw Error(ErrorCode::LayoutMismatch, "report has no per-error-type cells for the table2 layout");
  if (layout == Layout::Table3 && report.per_source.empty())
    throw Error(ErrorCode::LayoutMismatch, "report has no per-source cells for the table3 layout");

  if (format == Format::Machine) {
    json j = report_to_json(report);
    j["layout"] = layout == Layout::Table2 ? "table2" : "table3";
    return dump(j);
  }

  std::vector<std::vector<std::string>> rows;
  if (layout == Layout::Table2) {
    std::vector<std::string> header{"Method", "Total", "Pos."};
    std::vector<std::string> row{row_label(report), pct(report.overall), pct(report.positive)};
    for (ErrorType t : table_types(report)) {
      header.push_back(header_code(t));
      auto it = report.per_error_type.find(t);
      row.push_back(it == report.per_error_type.end() ? "-" : pct(it->second));
    }
    rows.push_back(std::move(header));
    rows.push_back(std::move(row));
  } else {
    std::vector<std::string> header{"Method", "Total"};
    std::vector<std::string> row{row_label(report), pct(report.overall)};
    for (const auto& [source, cell] : report.per_source) {
      header.push_back(source);
      row.push_back(pct(cell));
    }
    rows.push_back(std::move(header));
    rows.push_back(std::move(row));
  }
  std::string out = render_grid(rows);
  out += "completed " + std::to_string(report.completed) + "/" + std::to_string(report.total) + "\n";
  return out;
}

std::string render_ablation(std::span<const Report> reports, Format format) {
  if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "ablation layout needs at least one report");
  if (format == Format::Machine) {
    json cols = json::array();
    for (const auto& r : reports) cols.push_back(report_to_json(r));
    return dump(json{{"layout", "ablation"}, {"columns", std::move(cols)}});
  }
  std::set<ErrorType> present;
  for (const auto& r : reports) {
    for (const auto& [t, _] : r.per_error_type) present.insert(t);
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{""};
  for (const auto& r : reports) header.push_back(variant_label(r.variant));
  rows.push_back(std::move(header));
  auto add = [&](std::string name, auto&& get) {
    std::vector<std::string> row{std::move(name)};
    for (const auto& r : reports) row.push_back(get(r));
    rows.push_back(std::move(row));
  };
  add("Overall", [](const Report& r) { return pct(r.overall); });
  add("-Positive", [](const Report& r) { return pct(r.positive); });
  add("-Negative", [](const Report& r) { return pct(r.negative); });
  for (ErrorType t : kAllErrorTypes) {
    if (!present.contains(t)) continue;
    add(header_code(t), [t](const Report& r) {
      auto it = r.per_error_type.find(t);
      return it == r.per_error_type.end() ? std::string("-") : pct(it->second);
    });
  }
  return render_grid(rows);
}

DeltaTable compare_runs(std::span<const Report> reports) {
  if (reports.size() < 2) throw Error(ErrorCode::InvalidArgument, "compare needs at least two reports");
  const Report& base = reports.front();
  for (const auto& r : reports.subspan(1)) {
    if (r.dataset_digest != base.dataset_digest)
      throw Error(ErrorCode::DatasetMismatch, "reports were computed over different datasets (" +
                                                  base.dataset_digest.substr(0, 12) + " vs " +
                                                  r.dataset_digest.substr(0, 12) + ")");
  }
  std::set<ErrorType> type_set;
  std::set<std::string> source_set;
  for (const auto& r : reports) {
    for (const auto& [t, _] : r.per_error_type) type_set.insert(t);
    for (const auto& [s, _] : r.per_source) source_set.insert(s);
  }
  std::vector<ErrorType> types;
  for (ErrorType t : kAllErrorTypes) {
    if (type_set.contains(t)) types.push_back(t);
  }
  const std::vector<std::string> sources(source_set.begin(), source_set.end());

  DeltaTable table;
  table.baseline = base.variant;
  for (const auto& r : reports.subspan(1)) table.variants.push_back(r.variant);

  const auto base_cells = named_cells(base, types, sources);
  std::vector<std::vector<std::pair<std::string, std::optional<Cell>>>> others;
  for (const auto& r : reports.subspan(1)) others.push_back(named_cells(r, types, sources));

  for (std::size_t c = 0; c < base_cells.size(); ++c) {
    DeltaRow row;
    row.cell = base_cells[c].first;
    row.baseline = pct_value(base_cells[c].second);
    for (const auto& o : others) {
      auto v = pct_value(o[c].second);
      if (row.baseline && v) {
        row.deltas.push_back(*v - *row.baseline);
      } else {
        row.deltas.push_back(std::nullopt);
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string render_delta(const DeltaTable& table) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"", variant_label(table.baseline)};
  for (const auto& v : table.variants) header.push_back(variant_label(v) + " (delta)");
  rows.push_back(std::move(header));
  for (const auto& r : table.rows) {
    std::vector<std::string> row{r.cell, r.baseline ? text::fixed(*r.baseline, 2) : "-"};
    for (const auto& d : r.deltas) {
      if (!d) {
        row.push_back("-");
        continue;
      }
      std::string s = text::fixed(*d, 2);
      if (s == "-0.00") s = "0.00";
      if (*d > 0 && s != "0.00") s = "+" + s;
      row.push_back(s);
    }
    rows.push_back(std::move(row));
  }
  return render_grid(rows);
}

}  // namespace ragfce
