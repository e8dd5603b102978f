#include <gtest/gtest.h>

#include "ragfce/error.hpp"
#include "ragfce/prompts.hpp"
#include "support.hpp"

namespace ragfce {
namespace {

TEST(Template, SubstitutesInOnePass) {
  EXPECT_EQ(render_template("a {{x}} b {{ y }}", {{"x", "1"}, {"y", "{{x}}"}}), "a 1 b {{x}}");
  EXPECT_EQ(render_template("no placeholders { }", {}), "no placeholders { }");
}

TEST(Template, UnknownOrUnterminatedPlaceholderIsError) {
  try {
    render_template("{{missing}}", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Template);
  }
  EXPECT_THROW(render_template("{{open", {{"open", "x"}}), Error);
}

TEST(PromptSet, LoadsBothLocales) {
  for (const char* locale : {"zh", "en"}) {
    auto p = PromptSet::load(testing::asset_root(), locale);
    for (const char* name : {"decompose/system", "decompose/instruction", "decompose/example",
                             "decompose/no_examples", "decompose/format_reminder", "fce/system", "fce/fact_cot",
                             "fce/fact_direct", "fce/logic_cot", "fce/logic_direct", "fce/format_reminder",
                             "synth/system", "synth/neg_hallu_1", "synth/neg_kcont_word", "synth/neg_lothe",
                             "synth/pos_summarize", "decompose/fewshot/unique_format"}) {
      EXPECT_TRUE(p.has(name)) << locale << " " << name;
    }
    EXPECT_EQ(p.locale(), locale);
  }
}

TEST(PromptSet, TextFilesLoseOneTrailingNewline) {
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "zh/a");
  testing::write_file(dir / "zh/a/b.txt", "line\n\n");
  auto p = PromptSet::load(dir.path(), "zh");
  EXPECT_EQ(p.text("a/b"), "line\n");
}

TEST(PromptSet, DigestsTrackContent) {
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "zh/fce");
  testing::write_file(dir / "zh/fce/x.txt", "one");
  testing::write_file(dir / "zh/other.txt", "two");
  auto a = PromptSet::load(dir.path(), "zh");
  EXPECT_EQ(a.digests("fce/").size(), 1u);
  EXPECT_EQ(a.digests().size(), 2u);
  testing::write_file(dir / "zh/fce/x.txt", "one!");
  auto b = PromptSet::load(dir.path(), "zh");
  EXPECT_NE(a.digest(), b.digest());
  EXPECT_NE(a.digests().at("fce/x"), b.digests().at("fce/x"));
  EXPECT_EQ(a.digests().at("other"), b.digests().at("other"));
}

TEST(PromptSet, MissingLocaleOrAssetIsError) {
  EXPECT_THROW(PromptSet::load(testing::asset_root(), "fr"), Error);
  EXPECT_THROW(testing::zh_prompts().text("nope"), Error);
}

TEST(PromptSet, UserTemplatesStartWithTaskHeader) {
  const auto& p = testing::zh_prompts();
  for (const auto& [name, _] : p.digests()) {
    if (name.find("system") != std::string::npos || name.find("fewshot") != std::string::npos ||
        name == "decompose/example" || name == "decompose/no_examples") {
      continue;
    }
    EXPECT_TRUE(p.text(name).starts_with("【")) << name;
  }
}

}  // namespace
}  // namespace ragfce
