#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragfce/llm_client.hpp"

namespace ragfce {

/// Settings shared by every subcommand.
struct GlobalConfig {
  /// "remote", "replay" or "mock:<script path>"
  std::string backend = "remote";
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "RAGFCE_API_KEY";
  std::filesystem::path cache_dir = ".ragfce-cache";
  std::size_t concurrency = 4;
  std::filesystem::path assets;
  std::string locale = "zh";
  std::string judge_model = "gpt-4";

  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::string digest() const;
};

/// Values given explicitly on the command line.
struct ConfigOverrides {
  std::optional<std::string> backend;
  std::optional<std::string> endpoint;
  std::optional<std::string> api_key_env;
  std::optional<std::string> cache_dir;
  std::optional<std::size_t> concurrency;
  std::optional<std::string> assets;
  std::optional<std::string> locale;
  std::optional<std::string> judge_model;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

/// flags > RAGFCE_* environment > config file > defaults. The config file is
/// a JSON object with the GlobalConfig keys.
GlobalConfig resolve_config(const ConfigOverrides& flags, const EnvLookup& env,
                            const std::optional<std::filesystem::path>& config_file);

/// "remote" | "replay" | "mock:<path>"
BackendConfig backend_config(const GlobalConfig& cfg);

/// Exit codes: 0 ok, 1 usage, 2 data, 3 backend, 4 partial completion.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

}  // namespace ragfce
