#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace ragfce {

/// Replaces `{{name}}` placeholders in one pass; substituted values are not
/// rescanned. An unknown placeholder is Error(Template).
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Prompt assets for one locale, loaded from `<root>/<locale>/**`. Assets
/// are addressed by relative path without extension, e.g. "fce/fact_cot".
class PromptSet {
 public:
  static PromptSet load(const std::filesystem::path& root, const std::string& locale);
  /// Compiled-in asset directory (overridable with RAGFCE_ASSETS).
  static std::filesystem::path default_root();

  [[nodiscard]] bool has(std::string_view name) const;
  [[nodiscard]] const std::string& text(std::string_view name) const;
  [[nodiscard]] std::string render(std::string_view name, const std::map<std::string, std::string>& vars) const;

  [[nodiscard]] const std::string& locale() const noexcept { return locale_; }
  /// name -> sha256 of the file bytes
  [[nodiscard]] std::map<std::string, std::string> digests() const;
  /// Digest over all (name, digest) pairs.
  [[nodiscard]] std::string digest() const;
  /// Digests of the assets whose names start with `prefix`.
  [[nodiscard]] std::map<std::string, std::string> digests(std::string_view prefix) const;

 private:
  std::string locale_;
  std::map<std::string, std::string, std::less<>> texts_;
  std::map<std::string, std::string, std::less<>> digests_;
};

}  // namespace ragfce
