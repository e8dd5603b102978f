#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "ragfce/dataset.hpp"
#include "ragfce/prompts.hpp"

namespace ragfce::testing {

inline std::filesystem::path asset_root() { return RAGFCE_TEST_ASSETS; }
inline std::filesystem::path data_dir() { return RAGFCE_TEST_DATA; }

inline const PromptSet& zh_prompts() {
  static const PromptSet p = PromptSet::load(asset_root(), "zh");
  return p;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ragfce-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Sample make_sample(std::string id, Polarity label, ErrorTypeSet types = {}, std::string source = "m",
                          std::string answer = "答案。") {
  Sample s;
  s.id = std::move(id);
  s.question = "问题？";
  s.reference = "参考资料。";
  s.answer = std::move(answer);
  s.label = label;
  s.error_types = std::move(types);
  s.source = std::move(source);
  return s;
}

}  // namespace ragfce::testing
