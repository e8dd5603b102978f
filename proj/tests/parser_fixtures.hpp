#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ragfce/decompose.hpp"
#include "ragfce/error.hpp"
#include "ragfce/fce.hpp"

namespace ragfce::testing {

inline nlohmann::json load_parser_fixtures(const std::filesystem::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in).at("cases");
}

/// Empty when the case behaves as documented, otherwise a description.
inline std::optional<std::string> check_parser_case(const nlohmann::json& c) {
  const auto parser = c.at("parser").get<std::string>();
  const auto input = c.at("input").get<std::string>();
  const bool accept = c.at("outcome") == "accept";
  try {
    if (parser == "segments") {
      auto parsed = parse_segments(input);
      if (!accept) return "accepted but should reject";
      const auto want = c.at("segments").get<std::vector<std::string>>();
      if (parsed.items != want) return "segments differ: " + nlohmann::json(parsed.items).dump();
      if (c.contains("warnings") && parsed.warnings.size() != c["warnings"].get<std::size_t>()) {
        return "expected " + c["warnings"].dump() + " warning(s), got " + std::to_string(parsed.warnings.size());
      }
      return std::nullopt;
    }
    bool consistent = false;
    if (parser == "fact") {
      consistent = parse_fact_verdict(input).consistent;
    } else {
      consistent = parse_logic_verdict(input).consistent;
    }
    if (!accept) return "accepted but should reject";
    if (consistent != c.at("consistent").get<bool>()) return "wrong verdict";
    return std::nullopt;
  } catch (const Error& e) {
    const auto expected = parser == "segments" ? ErrorCode::UnparseableOutput : ErrorCode::UnparseableVerdict;
    if (accept) return std::string("rejected: ") + e.what();
    if (e.code() != expected) return std::string("rejected with unexpected code: ") + e.what();
    return std::nullopt;
  }
}

}  // namespace ragfce::testing
