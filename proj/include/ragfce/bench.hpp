#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragfce/dataset.hpp"
#include "ragfce/decompose.hpp"
#include "ragfce/fce.hpp"
#include "ragfce/llm_client.hpp"
#include "ragfce/prompts.hpp"

namespace ragfce {

struct Prediction {
  std::string sample_id;
  Polarity predicted = Polarity::Consistent;
  /// "<records file>#<sample id>"
  std::string verdict_ref;
};

/// Accuracy cell kept as counts so reports round-trip exactly.
struct Cell {
  std::size_t correct = 0;
  std::size_t total = 0;

  /// Absent when the denominator is zero.
  [[nodiscard]] std::optional<double> fraction() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(total);
  }
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Report {
  std::string variant = "full";
  std::string judge_model;
  std::string dataset_digest;
  std::string config_digest;
  std::map<std::string, std::string> prompt_digests;
  std::size_t total = 0;
  std::size_t completed = 0;
  std::vector<std::string> failures;
  Cell overall;
  Cell positive;
  Cell negative;
  /// Negatives carrying the type; a multi-label sample counts for each of
  /// its types. Types without samples are absent.
  std::map<ErrorType, Cell> per_error_type;
  std::map<std::string, Cell> per_source;
  CallCost cost;

  friend bool operator==(const Report&, const Report&) = default;
};

/// Pure fold over predictions. Samples without a prediction are treated as
/// not completed; a prediction for an unknown id is Error(InvalidArgument).
Report compute_report(std::span<const Prediction> predictions, std::span<const Sample> samples);

std::map<ErrorType, Cell> error_type_cells(std::span<const Prediction> predictions, std::span<const Sample> samples);
std::map<ErrorType, double> accuracy_by_error_type(std::span<const Prediction> predictions,
                                                   std::span<const Sample> samples);

struct BenchOptions {
  /// Judgment records; existing records with the same config and answer
  /// digests are reused instead of re-querying. Empty disables persistence.
  std::filesystem::path records_path;
  std::string variant = "full";
};

struct BenchResult {
  std::vector<Prediction> predictions;
  Report report;
  std::vector<JudgmentRecord> records;
};

/// Evaluates every answer-level sample with cfg.concurrency workers. Per-sample
/// errors are collected into report.failures.
BenchResult run_benchmark(std::span<const Sample> dataset, const EvalConfig& cfg, ChatBackend& backend,
                          const PromptSet& prompts, std::span<const FewShotExample> examples,
                          const BenchOptions& options = {});

std::vector<JudgmentRecord> load_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, std::span<const JudgmentRecord> records);

enum class Layout { Table2, Table3, Ablation };
enum class Format { Machine, Table };

Layout parse_layout(std::string_view s);

nlohmann::json report_to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);
Report load_report(const std::filesystem::path& path);

/// Percentages with two decimals. Table2 needs per-type cells and Table3
/// per-source cells, otherwise Error(LayoutMismatch).
std::string render_report(const Report& report, Layout layout, Format format);
/// One column per report: Overall / -Positive / -Negative, then per-type rows.
std::string render_ablation(std::span<const Report> reports, Format format);

struct DeltaRow {
  std::string cell;
  std::optional<double> baseline;
  /// Percentage-point difference to the baseline per compared report.
  std::vector<std::optional<double>> deltas;
};

struct DeltaTable {
  std::string baseline;
  std::vector<std::string> variants;
  std::vector<DeltaRow> rows;
};

/// First report is the baseline. Needs at least two reports over the same
/// dataset digest (Error(DatasetMismatch) otherwise).
DeltaTable compare_runs(std::span<const Report> reports);
std::string render_delta(const DeltaTable& table);

}  // namespace ragfce
