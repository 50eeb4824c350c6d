// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/knowledge_graph.hpp"
#include "quizgen/stex.hpp"
#include "quizgen/types.hpp"

#include <json.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace quizgen::question {

/// Exact non-negative-or-negative fraction, always stored in lowest terms
/// with a positive denominator.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    /// "3", "1/2" or "0.25". Throws Error("InvalidNumber").
    static Rational parse(std::string_view s);

    [[nodiscard]] std::int64_t num() const noexcept { return num_; }
    [[nodiscard]] std::int64_t den() const noexcept { return den_; }
    [[nodiscard]] std::string to_string() const; // "3" or "1/2"
    [[nodiscard]] double to_double() const noexcept { return double(num_) / double(den_); }

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

enum class GradingKind { Set, Add, Deduct };
[[nodiscard]] std::string_view to_string(GradingKind kind) noexcept;

struct GradingAction {
    GradingKind kind = GradingKind::Set;
    Rational points;
    friend bool operator==(const GradingAction&, const GradingAction&) = default;
};

struct AnswerOption {
    std::string text;                 // source of the answer argument
    std::vector<stex::Node> content;  // parsed answer argument
    bool correct = false;
    std::optional<std::string> feedback;
    std::optional<GradingAction> grading_action;
    stex::Span span;
};

enum class ReviewStatus { Draft, Accepted, Rejected, Edited };
[[nodiscard]] std::string_view to_string(ReviewStatus s) noexcept;
[[nodiscard]] std::optional<ReviewStatus> parse_review_status(std::string_view s) noexcept;

/// An `\objective` or `\precondition` as written; resolved against a graph
/// only by prerequisite extraction and the validator.
struct Annotation {
    std::string dimension;
    std::string symbol;
    stex::Span span;
};

struct QuizQuestion {
    std::string id;
    QuestionType qtype = QuestionType::MultipleChoice;
    stex::Node body;               // the Problem node
    std::vector<stex::Node> stem;  // body children minus imports, annotations and choice blocks
    std::vector<AnswerOption> options;
    std::optional<std::string> fib_solution;
    std::vector<Annotation> objectives;
    std::vector<Annotation> preconditions;
    std::vector<kg::ModuleRef> used_modules;
    std::string source;
    ReviewStatus review_status = ReviewStatus::Draft;
};

struct Reject {
    std::string reason; // e.g. "SingleChoiceMultipleTrue"
    std::string message;
    stex::Span span;
    /// Present when the problem is readable but breaks a question invariant,
    /// so that it can still be shown to the validator and edited.
    std::optional<QuizQuestion> candidate;
};

struct Extraction {
    std::vector<QuizQuestion> questions;
    std::vector<Reject> rejects;
};

/// `text` is the source the AST was parsed from; spans index into it.
/// Question ids are "<id_prefix><k>" with k counting from 1 over questions
/// and candidates alike.
[[nodiscard]] Extraction from_ast(const stex::DocumentAst& ast, std::string_view text,
                                  std::string_view id_prefix = "q");

/// Parses `source` and expects exactly one problem; candidates are accepted.
/// Throws Error("NotAQuestion") otherwise.
[[nodiscard]] QuizQuestion question_from_source(std::string id, const std::string& source);

/// Module ids of the question's imports that exist in the graph.
[[nodiscard]] std::vector<kg::ModuleId> question_scope(const QuizQuestion& q, const kg::KnowledgeGraph& graph);

/// Symbol references in the stem and options (not feedback).
[[nodiscard]] std::vector<stex::SymbolReference> body_references(const QuizQuestion& q);

struct Prerequisite {
    CognitiveDimension dimension;
    kg::SymbolId symbol;
    friend auto operator<=>(const Prerequisite&, const Prerequisite&) = default;
};

struct UnresolvedSymbol {
    std::string name;
    std::string dimension;
    std::string reason; // "UnknownSymbol", "AmbiguousSymbol" or "InvalidDimension"
    stex::Span span;
};

struct PrerequisiteResult {
    std::vector<Prerequisite> prerequisites; // by symbol URI, then taxonomy order
    std::vector<UnresolvedSymbol> unresolved;
};

[[nodiscard]] PrerequisiteResult extract_prerequisites(const QuizQuestion& q, const kg::KnowledgeGraph& graph);

struct StudentResponse {
    std::set<std::size_t> selected;
    std::optional<std::string> typed;
};

enum class Audience { Student, Instructor };

struct GradeResult {
    bool correct = false;
    Rational points;
    std::vector<std::pair<std::size_t, std::string>> triggered_feedback;
};

/// Throws Error("ShapeMismatch") when the response does not fit the type.
[[nodiscard]] GradeResult grade(const QuizQuestion& q, const StudentResponse& r, Rational default_points = 1,
                                Audience audience = Audience::Student);

/// JSON render model (docs/render-model.md). `graph` is used to attach
/// symbol URIs; without it references carry only their names.
[[nodiscard]] nlohmann::ordered_json to_render_model(const QuizQuestion& q, Audience audience,
                                                     const kg::KnowledgeGraph* graph = nullptr);

/// Structured instructor-side view used in persisted drafts.
[[nodiscard]] nlohmann::ordered_json to_json(const QuizQuestion& q);
[[nodiscard]] nlohmann::ordered_json to_json(const GradeResult& g);

} // namespace quizgen::question
