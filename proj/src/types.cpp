// SPDX-License-Identifier: Apache-2.0
#include "quizgen/types.hpp"

namespace quizgen {

std::string_view to_string(CognitiveDimension d) noexcept
{
    switch (d) {
    case CognitiveDimension::Remember: return "remember";
    case CognitiveDimension::Understand: return "understand";
    case CognitiveDimension::Apply: return "apply";
    case CognitiveDimension::Analyze: return "analyze";
    case CognitiveDimension::Evaluate: return "evaluate";
    case CognitiveDimension::Create: return "create";
    }
    return "";
}

std::string_view to_string(Difficulty d) noexcept
{
    switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
    }
    return "";
}

std::string_view to_string(QuestionType t) noexcept
{
    switch (t) {
    case QuestionType::MultipleChoice: return "MultipleChoice";
    case QuestionType::SingleChoice: return "SingleChoice";
    case QuestionType::FillInTheBlanks: return "FillInTheBlanks";
    }
    return "";
}

std::string_view to_string(Granularity g) noexcept
{
    switch (g) {
    case Granularity::Chapter: return "Chapter";
    case Granularity::Section: return "Section";
    case Granularity::Subsection: return "Subsection";
    }
    return "";
}

std::optional<CognitiveDimension> parse_dimension(std::string_view s) noexcept
{
    if (s == "analyse")
        return CognitiveDimension::Analyze;
    for (auto d : kAllDimensions)
        if (to_string(d) == s)
            return d;
    return std::nullopt;
}

std::optional<Difficulty> parse_difficulty(std::string_view s) noexcept
{
    for (auto d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard})
        if (to_string(d) == s)
            return d;
    return std::nullopt;
}

std::optional<QuestionType> parse_question_type(std::string_view s) noexcept
{
    for (auto t : {QuestionType::MultipleChoice, QuestionType::SingleChoice, QuestionType::FillInTheBlanks})
        if (to_string(t) == s)
            return t;
    return std::nullopt;
}

std::optional<Granularity> parse_granularity(std::string_view s) noexcept
{
    for (auto g : {Granularity::Chapter, Granularity::Section, Granularity::Subsection})
        if (to_string(g) == s)
            return g;
    return std::nullopt;
}

} // namespace quizgen
