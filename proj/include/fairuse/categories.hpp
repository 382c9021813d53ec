#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace fairuse {

// Closed taxonomy of high-risk request categories. Exactly nine ids; code
// that accepts category strings must reject anything outside this list.
enum class CategoryId {
  kAlternativeContentSimilarPlot,
  kAlternativeEndings,
  kVerbatimCodeAlgorithms,
  kFanFiction,
  kUnauthorizedTranslation,
  kDetailedSummarization,
  kVerbatimExcerpts,
  kStyleImitation,
  kCompilationOfWorks,
};

inline constexpr std::size_t kCategoryCount = 9;

struct CategoryInfo {
  CategoryId id;
  std::string_view name;  // stable wire identifier
  std::string_view description;
};

// All nine categories in fixed declaration order.
std::span<const CategoryInfo> categories();

// Lookup by wire identifier; nullptr when unknown.
const CategoryInfo* find_category(std::string_view name);

std::string_view category_name(CategoryId id);

// Comma-separated list of the nine ids, for error messages.
std::string known_category_names();

}  // namespace fairuse
