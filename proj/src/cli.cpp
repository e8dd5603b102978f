#include "ragfce/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ragfce/bench.hpp"
#include "ragfce/dataset.hpp"
#include "ragfce/decompose.hpp"
#include "ragfce/fce.hpp"
#include "ragfce/parallel.hpp"
#include "ragfce/prompts.hpp"
#include "ragfce/synthgen.hpp"
#include "ragfce/text.hpp"

namespace ragfce {

using nlohmann::json;

nlohmann::json GlobalConfig::to_json() const {
  return json{{"backend", backend},
              {"endpoint", endpoint},
              {"api_key_env", api_key_env},
              {"cache_dir", cache_dir.generic_string()},
              {"concurrency", concurrency},
              {"assets", assets.generic_string()},
              {"locale", locale},
              {"judge_model", judge_model}};
}

std::string GlobalConfig::digest() const { return text::sha256_hex(to_json().dump()); }

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
}

namespace {

std::size_t parse_concurrency(const std::string& s, const std::string& origin) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v == 0) throw Error(ErrorCode::InvalidArgument, origin + ": concurrency must be a positive integer");
  return v;
}

void apply_file(GlobalConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Parse, path.string() + ": config must be a JSON object");
  static const std::set<std::string> known{"backend", "endpoint", "api_key_env", "cache_dir",
                                           "concurrency", "assets", "locale", "judge_model"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw Error(ErrorCode::Parse, path.string() + ": unknown config key '" + k + "'");
    if (k == "concurrency") {
      if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
        throw Error(ErrorCode::Parse, path.string() + ": concurrency must be a positive integer");
      cfg.concurrency = v.get<std::size_t>();
      continue;
    }
    if (!v.is_string()) throw Error(ErrorCode::Parse, path.string() + ": '" + k + "' must be a string");
    const auto s = v.get<std::string>();
    if (k == "backend") cfg.backend = s;
    if (k == "endpoint") cfg.endpoint = s;
    if (k == "api_key_env") cfg.api_key_env = s;
    if (k == "cache_dir") cfg.cache_dir = s;
    if (k == "assets") cfg.assets = s;
    if (k == "locale") cfg.locale = s;
    if (k == "judge_model") cfg.judge_model = s;
  }
}

}  // namespace

GlobalConfig resolve_config(const ConfigOverrides& flags, const EnvLookup& env,
                            const std::optional<std::filesystem::path>& config_file) {
  GlobalConfig cfg;
  if (config_file) apply_file(cfg, *config_file);

  if (auto v = env("RAGFCE_BACKEND")) cfg.backend = *v;
  if (auto v = env("RAGFCE_ENDPOINT")) cfg.endpoint = *v;
  if (auto v = env("RAGFCE_API_KEY_ENV")) cfg.api_key_env = *v;
  if (auto v = env("RAGFCE_CACHE_DIR")) cfg.cache_dir = *v;
  if (auto v = env("RAGFCE_CONCURRENCY")) cfg.concurrency = parse_concurrency(*v, "RAGFCE_CONCURRENCY");
  if (auto v = env("RAGFCE_ASSETS")) cfg.assets = *v;
  if (auto v = env("RAGFCE_LOCALE")) cfg.locale = *v;
  if (auto v = env("RAGFCE_JUDGE_MODEL")) cfg.judge_model = *v;

  if (flags.backend) cfg.backend = *flags.backend;
  if (flags.endpoint) cfg.endpoint = *flags.endpoint;
  if (flags.api_key_env) cfg.api_key_env = *flags.api_key_env;
  if (flags.cache_dir) cfg.cache_dir = *flags.cache_dir;
  if (flags.concurrency) {
    if (*flags.concurrency == 0) throw Error(ErrorCode::InvalidArgument, "--concurrency must be positive");
    cfg.concurrency = *flags.concurrency;
  }
  if (flags.assets) cfg.assets = *flags.assets;
  if (flags.locale) cfg.locale = *flags.locale;
  if (flags.judge_model) cfg.judge_model = *flags.judge_model;

  if (cfg.assets.empty()) cfg.assets = PromptSet::default_root();
  if (cfg.locale != "zh" && cfg.locale != "en")
    throw Error(ErrorCode::InvalidArgument, "locale must be 'zh' or 'en', got '" + cfg.locale + "'");
  return cfg;
}

BackendConfig backend_config(const GlobalConfig& cfg) {
  BackendConfig b;
  b.endpoint = cfg.endpoint;
  b.api_key_env = cfg.api_key_env;
  b.cache_dir = cfg.cache_dir;
  b.max_in_flight = cfg.concurrency;
  if (cfg.backend == "remote") {
    b.kind = BackendKind::RemoteChatApi;
  } else if (cfg.backend == "replay") {
    b.kind = BackendKind::ReplayCacheOnly;
  } else if (text::starts_with(cfg.backend, "mock:") && cfg.backend.size() > 5) {
    b.kind = BackendKind::ScriptedMock;
    b.mock_script = cfg.backend.substr(5);
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "backend must be 'remote', 'replay' or 'mock:<script>', got '" + cfg.backend + "'");
  }
  return b;
}

namespace {

struct DatasetArgs {
  std::string path;
  std::string schema = "generic";
  std::string granularity = "answer";
};

void add_dataset_options(CLI::App* sub, DatasetArgs& d, const std::string& flag, bool required) {
  auto* opt = sub->add_option(flag, d.path, "Line-delimited dataset file");
  if (required) opt->required();
  sub->add_option("--schema", d.schema, "Record schema: generic or face4rag")->capture_default_str();
  sub->add_option("--granularity", d.granularity, "Default granularity: answer or segment")->capture_default_str();
}

std::vector<Sample> load_samples(const DatasetArgs& d, std::ostream& err) {
  LoadOptions opts;
  opts.granularity = parse_granularity(d.granularity);
  auto loaded = load_dataset(d.path, parse_schema(d.schema), opts);
  for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
  return std::move(loaded.samples);
}

void write_text(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

EvalConfig eval_config(const std::string& variant, const GlobalConfig& g) {
  EvalConfig cfg = variant_config(variant);
  cfg.judge_model = g.judge_model;
  cfg.concurrency = g.concurrency;
  return cfg;
}

std::string default_records_path(const std::string& out) {
  std::filesystem::path p(out);
  auto stem = p.stem().string();
  return (p.parent_path() / (stem + ".records.jsonl")).string();
}

int failures_exit(const Report& r) {
  if (r.failures.empty()) return 0;
  return r.completed == 0 ? 3 : 4;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Factual consistency evaluation for retrieval-augmented generation", "ragfce"};
  app.require_subcommand(1);

  ConfigOverrides flags;
  std::optional<std::string> config_file;
  app.add_option("--config", config_file, "JSON config file (also RAGFCE_CONFIG)");
  app.add_option("--backend", flags.backend, "remote | replay | mock:<script>");
  app.add_option("--endpoint", flags.endpoint, "Chat-completions endpoint URL");
  app.add_option("--api-key-env", flags.api_key_env, "Environment variable holding the API key");
  app.add_option("--cache-dir", flags.cache_dir, "Response cache directory");
  app.add_option("--concurrency", flags.concurrency, "Worker bound");
  app.add_option("--assets", flags.assets, "Prompt asset root");
  app.add_option("--locale", flags.locale, "Prompt language: zh or en");
  app.add_option("--judge-model", flags.judge_model, "Model name sent to the backend");

  // decompose
  auto* decompose_cmd = app.add_subcommand("decompose", "Split answers into segments");
  std::optional<std::string> dec_answer;
  DatasetArgs dec_data;
  std::string dec_mode = "lp";
  std::optional<std::string> dec_out;
  decompose_cmd->add_option("--answer", dec_answer, "Answer text");
  add_dataset_options(decompose_cmd, dec_data, "--dataset", false);
  decompose_cmd->add_option("--mode", dec_mode, "lp (logic-preserving) or conventional")->capture_default_str();
  decompose_cmd->add_option("--out", dec_out, "JSONL output (dataset mode)");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Judge answers and write judgment records");
  DatasetArgs ev_data;
  std::optional<std::string> ev_question, ev_reference, ev_answer, ev_out, ev_id;
  std::string ev_variant = "full";
  add_dataset_options(evaluate_cmd, ev_data, "--dataset", false);
  evaluate_cmd->add_option("--question", ev_question, "Question (single-answer mode)");
  evaluate_cmd->add_option("--reference", ev_reference, "Reference (single-answer mode)");
  evaluate_cmd->add_option("--answer", ev_answer, "Answer (single-answer mode)");
  evaluate_cmd->add_option("--id", ev_id, "Only this sample id");
  evaluate_cmd->add_option("--variant", ev_variant, "full | ad | no-cot | no-logic")->capture_default_str();
  evaluate_cmd->add_option("--out", ev_out, "Judgment records file");

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "Inject errors into consistent answers");
  DatasetArgs gen_data;
  std::optional<std::string> gen_coverage, gen_augment, gen_model;
  std::size_t gen_per_type = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  add_dataset_options(generate_cmd, gen_data, "--corpus", true);
  generate_cmd->add_option("--coverage", gen_coverage, "Per-type counts, e.g. Hallu=3,LCaus=2");
  generate_cmd->add_option("--per-type", gen_per_type, "Uniform count per type when --coverage is absent")
      ->capture_default_str();
  generate_cmd->add_option("--augment", gen_augment, "Positive rewrites, e.g. paraphrase=2,summarize=1");
  generate_cmd->add_option("--seed", gen_seed, "Plan seed")->capture_default_str();
  generate_cmd->add_option("--model", gen_model, "Generator model (defaults to the judge model)");
  generate_cmd->add_option("--out", gen_out, "Output dataset file")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a variant over a dataset and report accuracy");
  DatasetArgs bench_data;
  std::string bench_variant = "full";
  std::string bench_out;
  std::optional<std::string> bench_records;
  std::string bench_layout = "auto";
  add_dataset_options(bench_cmd, bench_data, "--dataset", true);
  bench_cmd->add_option("--variant", bench_variant, "full | ad | no-cot | no-logic")->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "Report file (JSON)")->required();
  bench_cmd->add_option("--records", bench_records, "Judgment records (default <out>.records.jsonl)");
  bench_cmd->add_option("--layout", bench_layout, "auto | table2 | table3 | ablation")->capture_default_str();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
  std::vector<std::string> stats_paths;
  std::optional<std::string> stats_manifest;
  DatasetArgs stats_data;
  bool stats_json = false;
  stats_cmd->add_option("--dataset", stats_paths, "Dataset file (repeatable)");
  stats_cmd->add_option("--manifest", stats_manifest, "Dataset manifest");
  stats_cmd->add_option("--schema", stats_data.schema, "generic or face4rag")->capture_default_str();
  stats_cmd->add_option("--granularity", stats_data.granularity, "answer or segment")->capture_default_str();
  stats_cmd->add_flag("--json", stats_json, "Machine-readable output");

  // report
  auto* report_cmd = app.add_subcommand("report", "Render saved reports");
  std::vector<std::string> report_paths;
  std::string report_layout = "table2";
  std::string report_format = "table";
  report_cmd->add_option("reports", report_paths, "Report files")->required();
  report_cmd->add_option("--layout", report_layout, "table2 | table3 | ablation")->capture_default_str();
  report_cmd->add_option("--format", report_format, "table | machine")->capture_default_str();

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Per-cell deltas against the first report");
  std::vector<std::string> compare_paths;
  compare_cmd->add_option("reports", compare_paths, "Report files, baseline first")->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  if (args.empty()) {
    err << app.help();
    return 1;
  }
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("ragfce");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (!config_file) config_file = env("RAGFCE_CONFIG");
    std::optional<std::filesystem::path> cfg_path;
    if (config_file) cfg_path = *config_file;
    const GlobalConfig global = resolve_config(flags, env, cfg_path);
    err << "config " << global.digest() << '\n';

    auto prompts = [&] { return PromptSet::load(global.assets, global.locale); };
    auto backend = [&] { return make_backend(backend_config(global)); };

    if (decompose_cmd->parsed()) {
      if (dec_answer.has_value() == !dec_data.path.empty()) {
        err << "decompose: give exactly one of --answer or --dataset\n";
        return 1;
      }
      if (dec_mode != "lp" && dec_mode != "conventional") {
        err << "decompose: --mode must be lp or conventional\n";
        return 1;
      }
      std::vector<Sample> samples;
      if (dec_answer) {
        Sample s;
        s.id = "answer";
        s.answer = *dec_answer;
        samples.push_back(std::move(s));
      } else {
        samples = answer_level(load_samples(dec_data, err));
      }
      std::optional<PromptSet> ps;
      std::vector<FewShotExample> examples;
      std::shared_ptr<ChatBackend> be;
      if (dec_mode == "lp") {
        ps = prompts();
        examples = load_fewshot_examples(*ps);
        be = backend();
      }
      std::vector<json> lines(samples.size());
      std::vector<std::vector<std::string>> texts(samples.size());
      std::vector<std::optional<std::string>> failures(samples.size());
      parallel_for(samples.size(), global.concurrency, [&](std::size_t i) {
        try {
          std::vector<Segment> segs;
          std::vector<std::string> warnings;
          if (dec_mode == "lp") {
            auto r = decompose(samples[i].answer, *be, examples, *ps, global.judge_model, samples[i].id);
            segs = std::move(r.segments);
            warnings = std::move(r.warnings);
          } else {
            segs = conventional_decompose(samples[i].answer, samples[i].id);
          }
          for (auto& s : segs) texts[i].push_back(std::move(s.text));
          lines[i] = json{{"id", samples[i].id}, {"segments", texts[i]}, {"warnings", warnings}};
        } catch (const std::exception& e) {
          failures[i] = samples[i].id + ": " + e.what();
        }
      });
      std::size_t failed = 0;
      for (const auto& f : failures) {
        if (f) {
          err << "error: " << *f << '\n';
          ++failed;
        }
      }
      if (dec_answer) {
        if (failed) throw Error(ErrorCode::UnparseableOutput, *failures[0]);
        out << render_numbered(texts[0]) << '\n';
        return 0;
      }
      std::ostringstream body;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!failures[i]) body << lines[i].dump() << '\n';
      }
      if (dec_out) {
        write_text(*dec_out, body.str());
      } else {
        out << body.str();
      }
      if (failed == 0) return 0;
      return failed == samples.size() ? 3 : 4;
    }

    if (evaluate_cmd->parsed()) {
      const bool single = ev_answer.has_value();
      if (single == !ev_data.path.empty()) {
        err << "evaluate: give either --dataset or --question/--reference/--answer\n";
        return 1;
      }
      std::vector<Sample> samples;
      if (single) {
        if (!ev_question || !ev_reference) {
          err << "evaluate: --question and --reference are required with --answer\n";
          return 1;
        }
        Sample s;
        s.id = ev_id.value_or("answer");
        s.question = *ev_question;
        s.reference = *ev_reference;
        s.answer = *ev_answer;
        validate_sample(s, false, nullptr);
        samples.push_back(std::move(s));
      } else {
        for (auto& s : answer_level(load_samples(ev_data, err))) {
          if (!ev_id || s.id == *ev_id) samples.push_back(std::move(s));
        }
        if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "no answer-level samples selected");
      }
      const auto cfg = eval_config(ev_variant, global);
      const auto ps = prompts();
      const auto examples = load_fewshot_examples(ps);
      auto be = backend();
      BenchOptions opts;
      if (ev_out) opts.records_path = *ev_out;
      opts.variant = ev_variant;
      auto result = run_benchmark(samples, cfg, *be, ps, examples, opts);
      for (const auto& rec : result.records) {
        out << rec.sample_id << '\t' << (rec.verdict.consistent ? "CONSISTENT" : "INCONSISTENT");
        if (!rec.verdict.failing_indices.empty()) {
          out << "\tfailing=";
          for (std::size_t k = 0; k < rec.verdict.failing_indices.size(); ++k)
            out << (k ? "," : "") << rec.verdict.failing_indices[k];
        }
        out << '\n';
      }
      for (const auto& f : result.report.failures) err << "error: " << f << '\n';
      return failures_exit(result.report);
    }

    if (generate_cmd->parsed()) {
      const auto corpus = load_samples(gen_data, err);
      const auto coverage = gen_coverage ? parse_coverage(*gen_coverage) : uniform_coverage(gen_per_type);
      const auto plan = build_generation_plan(corpus, coverage, gen_seed);
      std::vector<AugmentPlanItem> aug_plan;
      if (gen_augment) aug_plan = build_augment_plan(corpus, parse_augment_counts(*gen_augment), gen_seed);
      const auto ps = prompts();
      auto be = backend();
      const std::string model = gen_model.value_or(global.judge_model);

      const std::size_t n = plan.size() + aug_plan.size();
      std::vector<std::optional<json>> rows(n);
      std::vector<std::optional<std::string>> failures(n);
      parallel_for(n, global.concurrency, [&](std::size_t i) {
        const bool negative = i < plan.size();
        const std::size_t base_index = negative ? plan[i].sample_index : aug_plan[i - plan.size()].sample_index;
        const Sample& base = corpus[base_index];
        try {
          GeneratedSample g = negative
                                  ? generate_negative(base, plan[i].spec, *be, ps, model)
                                  : augment_positive(base, aug_plan[i - plan.size()].spec, *be, ps, model);
          const std::string tag = negative ? plan[i].spec.tag() : aug_plan[i - plan.size()].spec.tag();
          const std::string id = base.id + "-" + tag + "-" + std::to_string(i);
          json row = sample_to_json(to_sample(g, base, id));
          row["base_id"] = base.id;
          row["generation"] = tag;
          row["reasoning"] = g.reasoning;
          rows[i] = std::move(row);
        } catch (const std::exception& e) {
          failures[i] = base.id + ": " + e.what();
        }
      });
      std::ostringstream body;
      std::size_t failed = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (rows[i]) body << rows[i]->dump() << '\n';
        if (failures[i]) {
          err << "error: " << *failures[i] << '\n';
          ++failed;
        }
      }
      write_text(gen_out, body.str());
      err << "generated " << (n - failed) << "/" << n << '\n';
      if (failed == 0) return 0;
      return failed == n ? 3 : 4;
    }

    if (bench_cmd->parsed()) {
      const auto samples = load_samples(bench_data, err);
      const auto cfg = eval_config(bench_variant, global);
      const auto ps = prompts();
      const auto examples = load_fewshot_examples(ps);
      auto be = backend();
      BenchOptions opts;
      opts.records_path = bench_records.value_or(default_records_path(bench_out));
      opts.variant = bench_variant;
      auto result = run_benchmark(samples, cfg, *be, ps, examples, opts);
      const Report& report = result.report;
      write_text(bench_out, report_to_json(report).dump(2) + "\n");
      Layout layout = Layout::Table2;
      if (bench_layout == "auto") {
        if (report.per_error_type.empty()) layout = Layout::Ablation;
      } else {
        layout = parse_layout(bench_layout);
      }
      out << render_report(report, layout, Format::Table);
      for (const auto& f : report.failures) err << "error: " << f << '\n';
      return failures_exit(report);
    }

    if (stats_cmd->parsed()) {
      std::vector<std::pair<std::string, std::vector<Sample>>> sets;
      if (stats_manifest) {
        for (const auto& entry : load_manifest(*stats_manifest)) {
          auto loaded = load_manifest_entry(entry);
          for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
          sets.emplace_back(entry.name, std::move(loaded.samples));
        }
      }
      for (const auto& p : stats_paths) {
        DatasetArgs d = stats_data;
        d.path = p;
        sets.emplace_back(std::filesystem::path(p).stem().string(), load_samples(d, err));
      }
      if (sets.empty()) {
        err << "stats: give --dataset or --manifest\n";
        return 1;
      }
      json doc = json::array();
      std::vector<std::pair<std::string, DatasetStats>> columns;
      std::ostringstream tail;
      for (const auto& [name, samples] : sets) {
        const auto st = compute_stats(samples);
        columns.emplace_back(name, st);
        json entry{{"name", name}, {"stats", stats_to_json(st)}};
        tail << name << ": num=" << st.num_samples << " avg_length=" << text::fixed(st.avg_length, 1)
             << " positive=" << text::fixed(st.positive_rate * 100.0, 1) << "%\n";
        const auto answers = answer_level(samples);
        bool typed = false;
        for (const auto& s : answers) typed = typed || (!s.consistent() && !s.error_types.empty());
        if (typed) {
          const auto rows = error_distribution(answers);
          json dist = json::object();
          for (const auto& r : rows) dist[std::string(to_string(r.category))] = json{{"count", r.count}, {"fraction", r.fraction}};
          entry["error_distribution"] = dist;
          tail << render_distribution(rows);
        }
        doc.push_back(std::move(entry));
      }
      if (stats_json) {
        out << doc.dump(2) << '\n';
      } else {
        out << render_stats_table(columns) << '\n' << tail.str();
      }
      return 0;
    }

    if (report_cmd->parsed()) {
      const Layout layout = parse_layout(report_layout);
      Format format = Format::Table;
      if (report_format == "machine") {
        format = Format::Machine;
      } else if (report_format != "table") {
        err << "report: --format must be table or machine\n";
        return 1;
      }
      std::vector<Report> reports;
      for (const auto& p : report_paths) reports.push_back(load_report(p));
      if (layout == Layout::Ablation) {
        out << render_ablation(reports, format);
      } else {
        for (const auto& r : reports) out << render_report(r, layout, format);
      }
      return 0;
    }

    if (compare_cmd->parsed()) {
      std::vector<Report> reports;
      for (const auto& p : compare_paths) reports.push_back(load_report(p));
      out << render_delta(compare_runs(reports));
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace ragfce
