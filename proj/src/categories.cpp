#include "fairuse/categories.hpp"

#include <array>

namespace fairuse {

namespace {

constexpr std::array<CategoryInfo, kCategoryCount> kCategories = {{
    {CategoryId::kAlternativeContentSimilarPlot, "alternative-content-similar-plot",
     "new stories tracking the plot of a protected work with superficial changes"},
    {CategoryId::kAlternativeEndings, "alternative-endings",
     "rewritten endings for a protected work"},
    {CategoryId::kVerbatimCodeAlgorithms, "verbatim-code-algorithms",
     "reproduction of protected source code or algorithm implementations"},
    {CategoryId::kFanFiction, "fan-fiction",
     "new fiction reusing protected characters or settings"},
    {CategoryId::kUnauthorizedTranslation, "unauthorized-translation",
     "translation of a protected work without authorization"},
    {CategoryId::kDetailedSummarization, "detailed-summarization",
     "exhaustive summaries detailed enough to substitute for the work"},
    {CategoryId::kVerbatimExcerpts, "verbatim-excerpts",
     "word-for-word passages of a protected work"},
    {CategoryId::kStyleImitation, "style-imitation",
     "new text imitating a protected author's distinctive style"},
    {CategoryId::kCompilationOfWorks, "compilation-of-works",
     "assembly of protected works or excerpts into collections"},
}};

}  // namespace

std::span<const CategoryInfo> categories() { return {kCategories.data(), kCategories.size()}; }

const CategoryInfo* find_category(std::string_view name) {
  for (const auto& info : kCategories) {
    if (info.name == name) return &info;
  }
  return nullptr;
}

std::string_view category_name(CategoryId id) {
  return kCategories[static_cast<std::size_t>(id)].name;
}

std::string known_category_names() {
  std::string out;
  for (const auto& info : kCategories) {
    if (!out.empty()) out += ", ";
    out += info.name;
  }
  return out;
}

}  // namespace fairuse
