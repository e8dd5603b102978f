#include "ragfce/prompts.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ragfce/error.hpp"
#include "ragfce/text.hpp"

#ifndef RAGFCE_DEFAULT_ASSET_DIR
#define RAGFCE_DEFAULT_ASSET_DIR "assets/prompts"
#endif

namespace ragfce {

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error(ErrorCode::Template, "unterminated placeholder in template");
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string name = text::trim(tmpl.substr(open + 2, close - open - 2));
    const auto it = vars.find(name);
    if (it == vars.end()) throw Error(ErrorCode::Template, "no value for placeholder {{" + name + "}}");
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

std::filesystem::path PromptSet::default_root() {
  if (const char* env = std::getenv("RAGFCE_ASSETS"); env != nullptr && *env != '\0') return env;
  return RAGFCE_DEFAULT_ASSET_DIR;
}

PromptSet PromptSet::load(const std::filesystem::path& root, const std::string& locale) {
  const auto dir = root / locale;
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::Template, "prompt asset directory not found: " + dir.string());
  }
  PromptSet set;
  set.locale_ = locale;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".txt" && ext != ".json") continue;
    auto rel = std::filesystem::relative(entry.path(), dir);
    rel.replace_extension();
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string body = buf.str();
    // templates are stored with a trailing newline that is not part of the prompt
    if (ext == ".txt" && body.ends_with('\n')) body.pop_back();
    const auto name = rel.generic_string();
    set.digests_[name] = text::sha256_hex(buf.str());
    set.texts_[name] = std::move(body);
  }
  if (set.texts_.empty()) throw Error(ErrorCode::Template, "no prompt assets under " + dir.string());
  return set;
}

bool PromptSet::has(std::string_view name) const { return texts_.find(name) != texts_.end(); }

const std::string& PromptSet::text(std::string_view name) const {
  const auto it = texts_.find(name);
  if (it == texts_.end()) {
    throw Error(ErrorCode::Template, "missing prompt asset '" + std::string(name) + "' for locale " + locale_);
  }
  return it->second;
}

std::string PromptSet::render(std::string_view name, const std::map<std::string, std::string>& vars) const {
  try {
    return render_template(text(name), vars);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.message());
  }
}

std::map<std::string, std::string> PromptSet::digests() const { return {digests_.begin(), digests_.end()}; }

std::map<std::string, std::string> PromptSet::digests(std::string_view prefix) const {
  std::map<std::string, std::string> out;
  for (const auto& [name, d] : digests_) {
    if (name.starts_with(prefix)) out.emplace(name, d);
  }
  return out;
}

std::string PromptSet::digest() const {
  std::string all = locale_ + "\n";
  for (const auto& [name, d] : digests_) all += name + "\t" + d + "\n";
  return text::sha256_hex(all);
}

}  // namespace ragfce
