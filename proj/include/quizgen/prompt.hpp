// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/context.hpp"
#include "quizgen/knowledge_graph.hpp"
#include "quizgen/types.hpp"

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace quizgen::prompt {

struct GenerationRequest {
    std::vector<kg::SymbolId> concepts;
    std::string course_name;
    std::string course_description;
    CognitiveDimension cognitive_dimension = CognitiveDimension::Understand;
    Difficulty difficulty = Difficulty::Medium;
    int n_questions = 5;
    std::vector<QuestionType> allowed_types;
    Granularity granularity = Granularity::Section;
    std::size_t token_budget = context::kDefaultTokenBudget;
};

inline constexpr int kMaxQuestionsPerRequest = 5;

/// Throws Error("InvalidRequest") on a violated request invariant.
void check_request(const GenerationRequest& request);

struct Segment {
    bool placeholder = false;
    std::string text; // literal text, or the placeholder name
};

struct MasterPromptTemplate {
    std::vector<Segment> segments;
    std::string version;
};

/// `{{name}}` markers become placeholders. Lines starting with "##" are
/// template comments and are dropped.
[[nodiscard]] MasterPromptTemplate parse_template(std::string_view source, std::string version);
[[nodiscard]] MasterPromptTemplate load_template(const std::filesystem::path& path);

/// The shipped template (resources/master-prompt.txt, compiled in).
[[nodiscard]] const MasterPromptTemplate& default_template();
[[nodiscard]] std::string_view default_template_source() noexcept;
inline constexpr std::string_view kDefaultTemplateVersion = "1";

[[nodiscard]] const std::set<std::string>& known_placeholders();
[[nodiscard]] std::set<std::string> list_placeholders(const MasterPromptTemplate& tpl);

/// The placeholder values `assemble_prompt` substitutes, exposed for tests.
[[nodiscard]] std::string render_concepts(const std::vector<kg::SymbolId>& concepts);
[[nodiscard]] std::string render_allowed_types(const std::vector<QuestionType>& types);

/// Throws Error("UnknownPlaceholder") or Error("MissingPlaceholderValue").
[[nodiscard]] std::string assemble_prompt(const MasterPromptTemplate& tpl, const GenerationRequest& request,
                                          const context::ContextBundle& context);

} // namespace quizgen::prompt
