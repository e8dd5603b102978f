#include "ragfce/typology.hpp"

#include "ragfce/error.hpp"
#include "ragfce/text.hpp"

namespace ragfce {

namespace {

constexpr std::array<ErrorType, 1> kHallucination{ErrorType::Hallu};
constexpr std::array<ErrorType, 4> kKnowledge{ErrorType::KCont, ErrorType::KInve,
                                              ErrorType::KConf, ErrorType::KConc};
constexpr std::array<ErrorType, 5> kLogical{ErrorType::LOver, ErrorType::LCaus, ErrorType::LConf,
                                            ErrorType::LIncl, ErrorType::LOthe};
constexpr std::array<ErrorType, 1> kOther{ErrorType::Other};

}  // namespace

Category category_of(ErrorType t) noexcept {
  switch (t) {
    case ErrorType::Hallu:
      return Category::Hallucination;
    case ErrorType::KCont:
    case ErrorType::KInve:
    case ErrorType::KConf:
    case ErrorType::KConc:
      return Category::Knowledge;
    case ErrorType::LOver:
    case ErrorType::LCaus:
    case ErrorType::LConf:
    case ErrorType::LIncl:
    case ErrorType::LOthe:
      return Category::Logical;
    case ErrorType::Other:
      return Category::Other;
  }
  return Category::Other;
}

std::span<const ErrorType> members_of(Category c) noexcept {
  switch (c) {
    case Category::Hallucination: return kHallucination;
    case Category::Knowledge: return kKnowledge;
    case Category::Logical: return kLogical;
    case Category::Other: return kOther;
  }
  return {};
}

std::string_view to_string(ErrorType t) noexcept {
  switch (t) {
    case ErrorType::Hallu: return "Hallu";
    case ErrorType::KCont: return "KCont";
    case ErrorType::KInve: return "KInve";
    case ErrorType::KConf: return "KConf";
    case ErrorType::KConc: return "KConc";
    case ErrorType::LOver: return "LOver";
    case ErrorType::LCaus: return "LCaus";
    case ErrorType::LConf: return "LConf";
    case ErrorType::LIncl: return "LIncl";
    case ErrorType::LOthe: return "LOthe";
    case ErrorType::Other: return "Other";
  }
  return "Other";
}

std::string header_code(ErrorType t) { return std::string(to_string(t)) + "."; }

std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::Hallucination: return "Hallucination";
    case Category::Knowledge: return "Knowledge";
    case Category::Logical: return "Logical";
    case Category::Other: return "Other";
  }
  return "Other";
}

ErrorType parse_error_type(std::string_view code) {
  std::string_view body = code;
  if (!body.empty() && body.back() == '.') body.remove_suffix(1);
  const auto lowered = text::ascii_lower(body);
  for (ErrorType t : kAllErrorTypes) {
    if (lowered == text::ascii_lower(to_string(t))) return t;
  }
  throw Error(ErrorCode::UnknownCode, "unknown error type code '" + std::string(code) + "'");
}

Category parse_category(std::string_view name) {
  const auto lowered = text::ascii_lower(name);
  for (Category c : kAllCategories) {
    if (lowered == text::ascii_lower(to_string(c))) return c;
  }
  throw Error(ErrorCode::UnknownCode, "unknown category '" + std::string(name) + "'");
}

}  // namespace ragfce
