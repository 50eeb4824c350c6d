// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/knowledge_graph.hpp"
#include "quizgen/prompt.hpp"
#include "quizgen/question.hpp"
#include "quizgen/types.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quizgen::eval {

struct Statement {
    std::string_view key;
    std::string_view text;
};

inline constexpr std::size_t kStatementCount = 6;

/// The six survey statements, FIT first.
[[nodiscard]] std::span<const Statement, kStatementCount> statements() noexcept;

struct Scale {
    int min = 1;
    int max = 7;
    std::vector<std::string_view> labels; // labels[i] belongs to value min + i
};

[[nodiscard]] const Scale& agreement_scale();
[[nodiscard]] const Scale& difficulty_scale();

inline constexpr int kAgreementThreshold = 5;

struct SurveyInstrument {
    std::string question_id;
    nlohmann::ordered_json context_block; // generation parameters + instructor render model
    std::string content_error_prompt;
    std::string closing_remarks_prompt;
};

[[nodiscard]] SurveyInstrument build_instrument(const question::QuizQuestion& q,
                                                const prompt::GenerationRequest& request,
                                                const kg::KnowledgeGraph* graph = nullptr);
[[nodiscard]] nlohmann::ordered_json to_json(const SurveyInstrument& instrument);
[[nodiscard]] nlohmann::ordered_json request_to_json(const prompt::GenerationRequest& request);

struct ExpertResponse {
    std::string question_id;
    std::string expert_id;
    int difficulty = 3;
    std::array<int, kStatementCount> ratings{};
    std::string content_errors;
    std::string remarks;
};

/// Throws Error("InvalidResponse") when a field is missing or out of range.
[[nodiscard]] ExpertResponse response_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::ordered_json to_json(const ExpertResponse& r);

/// One ExpertResponse per non-blank line. Errors name the line number.
[[nodiscard]] std::vector<ExpertResponse> parse_responses_jsonl(std::string_view text);

struct RatedQuestion {
    std::string id;
    QuestionType qtype = QuestionType::MultipleChoice;
    std::string topic;
};

[[nodiscard]] std::vector<RatedQuestion> parse_questions_jsonl(std::string_view text);

struct Count {
    int count = 0;
    int total = 0;
    friend bool operator==(const Count&, const Count&) = default;
};

struct AggregateReport {
    std::array<Count, kStatementCount> agreement{};
    Count erroneous;
    std::map<std::string, Count> errors_by_topic; // erroneous / rated questions in topic
    std::map<QuestionType, int> type_distribution;
    int total_questions = 0;
};

/// Median across experts; with an even number of ratings the higher middle value.
[[nodiscard]] int median_high(std::vector<int> values);

/// Throws Error("UnknownQuestionId").
[[nodiscard]] AggregateReport aggregate(std::span<const ExpertResponse> responses,
                                        std::span<const RatedQuestion> questions);

[[nodiscard]] nlohmann::ordered_json to_json(const AggregateReport& report);

/// Rows `section,key,count,total`.
[[nodiscard]] std::string to_csv(const AggregateReport& report);

} // namespace quizgen::eval
