// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace quizgen {

// Bloom's revised taxonomy, in taxonomy order.
enum class CognitiveDimension { Remember, Understand, Apply, Analyze, Evaluate, Create };

inline constexpr std::array<CognitiveDimension, 6> kAllDimensions = {
    CognitiveDimension::Remember, CognitiveDimension::Understand, CognitiveDimension::Apply,
    CognitiveDimension::Analyze,  CognitiveDimension::Evaluate,   CognitiveDimension::Create,
};

enum class Difficulty { Easy, Medium, Hard };

enum class QuestionType { MultipleChoice, SingleChoice, FillInTheBlanks };

enum class Granularity { Chapter, Section, Subsection };

[[nodiscard]] std::string_view to_string(CognitiveDimension d) noexcept;
[[nodiscard]] std::string_view to_string(Difficulty d) noexcept;
[[nodiscard]] std::string_view to_string(QuestionType t) noexcept;
[[nodiscard]] std::string_view to_string(Granularity g) noexcept;

// Accepts the British spelling "analyse" as well, since the prompt text uses it.
[[nodiscard]] std::optional<CognitiveDimension> parse_dimension(std::string_view s) noexcept;
[[nodiscard]] std::optional<Difficulty> parse_difficulty(std::string_view s) noexcept;
[[nodiscard]] std::optional<QuestionType> parse_question_type(std::string_view s) noexcept;
[[nodiscard]] std::optional<Granularity> parse_granularity(std::string_view s) noexcept;

} // namespace quizgen
