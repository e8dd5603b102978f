#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

// Factual-inconsistency error typology: nine annotated error types in three
// categories, plus LOthe (catch-all logical fallacy used by the synthetic
// generator) and Other (annotator's "Other Errors").
namespace ragfce {

enum class ErrorType {
  Hallu,
  KCont,
  KInve,
  KConf,
  KConc,
  LOver,
  LCaus,
  LConf,
  LIncl,
  LOthe,
  Other,
};

enum class Category {
  Hallucination,
  Knowledge,
  Logical,
  Other,
};

inline constexpr std::array<ErrorType, 11> kAllErrorTypes{
    ErrorType::Hallu, ErrorType::KCont, ErrorType::KInve, ErrorType::KConf,
    ErrorType::KConc, ErrorType::LOver, ErrorType::LCaus, ErrorType::LConf,
    ErrorType::LIncl, ErrorType::LOthe, ErrorType::Other};

inline constexpr std::array<Category, 4> kAllCategories{
    Category::Hallucination, Category::Knowledge, Category::Logical, Category::Other};

Category category_of(ErrorType t) noexcept;

/// Member types of a category, in canonical order.
std::span<const ErrorType> members_of(Category c) noexcept;

/// Canonical machine code, e.g. "KInve".
std::string_view to_string(ErrorType t) noexcept;

/// Column header form with trailing period, e.g. "KInve.".
std::string header_code(ErrorType t);

std::string_view to_string(Category c) noexcept;

/// Case-insensitive match on the canonical codes; one trailing period is
/// accepted. Throws Error(UnknownCode) otherwise.
ErrorType parse_error_type(std::string_view code);

Category parse_category(std::string_view name);

}  // namespace ragfce
