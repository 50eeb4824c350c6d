// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/knowledge_graph.hpp"
#include "quizgen/prompt.hpp"
#include "quizgen/question.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quizgen::validator {

enum class Category { Structural, Relational, Feedback, Leakage, Format };
enum class Severity { Error, Warning };
enum class Verdict { Pass, PassWithWarnings, Fail };

[[nodiscard]] std::string_view to_string(Category c) noexcept;
[[nodiscard]] std::string_view to_string(Severity s) noexcept;
[[nodiscard]] std::string_view to_string(Verdict v) noexcept;

struct CodeInfo {
    std::string_view code;
    Category category;
    Severity severity;
    std::string_view description;
};

/// The closed set of issue codes (docs/defect-taxonomy.md).
[[nodiscard]] std::span<const CodeInfo> defect_taxonomy() noexcept;
[[nodiscard]] const CodeInfo* find_code(std::string_view code) noexcept;

struct ValidationIssue {
    Category category = Category::Structural;
    std::string code;
    Severity severity = Severity::Error;
    std::optional<stex::Span> span; // relative to the question source
    std::string message;
};

struct ValidationReport {
    std::string question_id;
    std::vector<ValidationIssue> issues;
    Verdict verdict = Verdict::Pass;
};

inline constexpr double kUninformativeJaccard = 0.5;

/// Leading words removed from feedback before comparing it with the option.
[[nodiscard]] std::span<const std::string_view> negation_prefixes() noexcept;

/// Token sets after normalization; exposed so tests can recompute the score.
[[nodiscard]] std::vector<std::string> normalize_feedback(std::string_view feedback);
[[nodiscard]] double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

[[nodiscard]] std::vector<ValidationIssue> validate_structural(const question::QuizQuestion& q,
                                                               const prompt::GenerationRequest* request = nullptr);
[[nodiscard]] std::vector<ValidationIssue> validate_relational(const question::QuizQuestion& q,
                                                               const kg::KnowledgeGraph& graph);
[[nodiscard]] std::vector<ValidationIssue> check_feedback(const question::QuizQuestion& q);
[[nodiscard]] std::vector<ValidationIssue> check_leakage(const question::QuizQuestion& q);

[[nodiscard]] ValidationReport validate(const question::QuizQuestion& q, const kg::KnowledgeGraph& graph,
                                        const prompt::GenerationRequest* request = nullptr);

/// Sorts issues (unspanned first, then by span start, then code) and sets the verdict.
[[nodiscard]] ValidationReport make_report(std::string question_id, std::vector<ValidationIssue> issues);

[[nodiscard]] nlohmann::ordered_json to_json(const ValidationReport& report);

} // namespace quizgen::validator
