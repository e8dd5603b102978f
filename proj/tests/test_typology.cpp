#include <gtest/gtest.h>

#include <set>

#include "ragfce/error.hpp"
#include "ragfce/typology.hpp"

namespace ragfce {
namespace {

TEST(Typology, HeaderCodesParse) {
  EXPECT_EQ(parse_error_type("KInve."), ErrorType::KInve);
  EXPECT_EQ(parse_error_type("kinve"), ErrorType::KInve);
  EXPECT_EQ(parse_error_type("LCAUS"), ErrorType::LCaus);
  EXPECT_EQ(parse_error_type("Hallu."), ErrorType::Hallu);
  EXPECT_EQ(header_code(ErrorType::LOthe), "LOthe.");
}

TEST(Typology, RejectsUnknownCodes) {
  try {
    parse_error_type("XYZ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownCode);
  }
  EXPECT_THROW(parse_error_type("KInve.."), Error);
  EXPECT_THROW(parse_error_type(""), Error);
}

TEST(Typology, EveryTypeRoundTrips) {
  for (ErrorType t : kAllErrorTypes) {
    EXPECT_EQ(parse_error_type(to_string(t)), t);
    EXPECT_EQ(parse_error_type(header_code(t)), t);
  }
}

TEST(Typology, CategoriesPartitionTheTypes) {
  std::set<ErrorType> seen;
  for (Category c : kAllCategories) {
    for (ErrorType t : members_of(c)) {
      EXPECT_EQ(category_of(t), c);
      EXPECT_TRUE(seen.insert(t).second);
    }
  }
  EXPECT_EQ(seen.size(), kAllErrorTypes.size());
  EXPECT_EQ(members_of(Category::Knowledge).size(), 4u);
  EXPECT_EQ(members_of(Category::Logical).size(), 5u);
  EXPECT_EQ(category_of(ErrorType::Hallu), Category::Hallucination);
  EXPECT_EQ(category_of(ErrorType::Other), Category::Other);
}

}  // namespace
}  // namespace ragfce
