#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragfce/typology.hpp"

namespace ragfce {

enum class Polarity { Consistent, Inconsistent };
enum class Granularity { Answer, Segment };
enum class Schema { Face4RAG, Generic };

std::string_view to_string(Polarity p) noexcept;
std::string_view to_string(Granularity g) noexcept;
std::string_view to_string(Schema s) noexcept;
Polarity parse_polarity(std::string_view s);
Granularity parse_granularity(std::string_view s);
Schema parse_schema(std::string_view s);

using ErrorTypeSet = std::set<ErrorType>;

/// One benchmark row.
struct Sample {
  std::string id;
  std::string question;
  std::string reference;
  std::string answer;
  Polarity label = Polarity::Consistent;
  ErrorTypeSet error_types;
  std::string source;
  Granularity granularity = Granularity::Answer;
  /// 1-based line in the file it was loaded from, 0 when built in memory.
  std::size_t line = 0;

  [[nodiscard]] bool consistent() const noexcept { return label == Polarity::Consistent; }
};

/// Maps logical field names (id, question, reference, answer, label,
/// error_types, source, granularity) to the candidate JSON keys tried in
/// order. Released Face4RAG files are read through a permissive table;
/// Generic uses the canonical keys only.
struct SchemaMapping {
  std::map<std::string, std::vector<std::string>> keys;
  /// Inconsistent answer-level rows without error types are an error
  /// (true) or a warning (false).
  bool annotated = false;
  /// Accept descriptive error type names ("Causal Confusion Error",
  /// "Other Errors") in addition to the canonical codes.
  bool descriptive_error_names = false;
  std::string default_source = "unknown";

  static SchemaMapping for_schema(Schema schema);
  /// Puts `key` first in the candidate list for `field`.
  void prefer(const std::string& field, const std::string& key);
};

struct LoadOptions {
  Granularity granularity = Granularity::Answer;
  std::optional<SchemaMapping> mapping;
};

struct LoadedDataset {
  std::vector<Sample> samples;
  std::vector<std::string> warnings;
};

LoadedDataset load_dataset(const std::filesystem::path& path, Schema schema,
                           const LoadOptions& options = {});
LoadedDataset parse_dataset(std::istream& in, Schema schema, const LoadOptions& options = {},
                            const std::string& origin = "<stream>");

/// Converts one record; throws Error(Parse) naming the offending field.
Sample sample_from_json(const nlohmann::json& record, const SchemaMapping& mapping,
                        Granularity default_granularity, std::size_t line);
/// Canonical (Generic schema) record.
nlohmann::json sample_to_json(const Sample& s);
void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples);

/// Digest over the canonical records in order.
std::string dataset_digest(std::span<const Sample> samples);

/// Checks the Sample invariants; throws Error(Parse) on the first violation.
void validate_sample(const Sample& s, bool annotated, std::vector<std::string>* warnings);

std::vector<Sample> answer_level(std::span<const Sample> samples);

struct DatasetStats {
  std::size_t num_samples = 0;
  std::size_t num_positive = 0;
  /// Mean answer length in Unicode scalar values.
  double avg_length = 0.0;
  double positive_rate = 0.0;
};

DatasetStats compute_stats(std::span<const Sample> samples);

struct DistributionRow {
  Category category;
  std::size_t count = 0;
  /// Share of inconsistent samples whose error types intersect the category.
  double fraction = 0.0;
};

std::vector<DistributionRow> error_distribution(std::span<const Sample> samples);

struct SourcePartition {
  std::string source;
  std::vector<Sample> samples;
};

/// Groups by source in order of first appearance; order within each part
/// follows the input.
std::vector<SourcePartition> per_source_partition(std::span<const Sample> samples);

struct ManifestEntry {
  std::string name;
  std::filesystem::path path;
  Schema schema = Schema::Generic;
  Granularity granularity = Granularity::Answer;
  std::map<std::string, std::string> field_overrides;
};

/// JSON manifest: {"datasets": [{"name", "path", "schema", "granularity",
/// "fields"?}]}. Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
LoadedDataset load_manifest_entry(const ManifestEntry& entry);

nlohmann::json stats_to_json(const DatasetStats& stats);
/// Rows "Num. Samples", "Avg. Length", "Positive Rate"; one column per
/// named dataset.
std::string render_stats_table(const std::vector<std::pair<std::string, DatasetStats>>& columns);
std::string render_distribution(const std::vector<DistributionRow>& rows);

}  // namespace ragfce
