// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/error.hpp"
#include "quizgen/evaluation.hpp"
#include "quizgen/knowledge_graph.hpp"
#include "quizgen/llm.hpp"
#include "quizgen/prompt.hpp"
#include "quizgen/question.hpp"
#include "quizgen/store.hpp"
#include "quizgen/validator.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace quizgen::app {

/// Reads a manifest: one `.tex` path per line, relative to the manifest's
/// directory. Blank lines and lines starting with '#' are skipped. The path
/// as written becomes the doc_id.
[[nodiscard]] std::vector<stex::SourceDocument> load_manifest(const std::filesystem::path& manifest);

[[nodiscard]] std::string corpus_id_for(const std::vector<stex::SourceDocument>& docs);

struct CorpusSummary {
    std::string corpus_id;
    std::size_t documents = 0;
    std::size_t modules = 0;
    std::size_t symbols = 0;
    std::size_t fragments = 0;
    std::size_t top_level_sections = 0;
    std::vector<std::string> diagnostics;
};

[[nodiscard]] nlohmann::ordered_json to_json(const CorpusSummary& s);

struct Fence {
    std::string text;
    std::size_t offset = 0; // of the first content byte in the model output
    bool terminated = true;
};

/// Triple-backtick blocks; an info string after the opening fence is ignored.
[[nodiscard]] std::vector<Fence> split_code_fences(std::string_view output);

/// Request as accepted by the API and CLI. Concepts are symbol names or URIs.
struct ApiGenerationRequest {
    std::optional<std::string> corpus;
    std::vector<std::string> concepts;
    std::string course_name;
    std::string course_description;
    std::string cognitive_dimension = "understand";
    std::string difficulty = "medium";
    int n_questions = 5;
    std::vector<std::string> allowed_types = {"MultipleChoice", "SingleChoice", "FillInTheBlanks"};
    std::string granularity = "Section";
    std::size_t token_budget = context::kDefaultTokenBudget;
    bool enable_search = false;
    std::optional<std::string> topic_tag;
};

/// Throws Error("InvalidRequest") on malformed JSON fields.
[[nodiscard]] ApiGenerationRequest api_request_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::ordered_json to_json(const ApiGenerationRequest& r);

struct PipelineReject {
    std::size_t fence = 0;
    std::string reason;
    std::string message;
    std::string text;
};

struct QuestionDraft {
    question::QuizQuestion question;
    validator::ValidationReport report;
    question::PrerequisiteResult prerequisites;
    std::string transcript_ref;
    std::string topic_tag;
    std::string corpus_id;
    nlohmann::ordered_json request; // as persisted
    std::int64_t revision = 0;
};

struct PipelineResult {
    std::vector<QuestionDraft> drafts;
    std::vector<PipelineReject> rejects;
    std::string transcript_id;
};

/// Raised when an edited source fails to parse or fails structural
/// validation. Carries the report that explains why.
class EditRejected : public Error {
public:
    EditRejected(const std::string& message, nlohmann::ordered_json report)
        : Error("EditRejected", message), report_(std::move(report))
    {
    }
    [[nodiscard]] const nlohmann::ordered_json& report() const noexcept { return report_; }

private:
    nlohmann::ordered_json report_;
};

struct SymbolHit {
    std::string uri;
    std::string name;
    std::string module;
    std::size_t defining_fragments = 0;
};

struct ServiceOptions {
    llm::Params params;
    std::optional<std::filesystem::path> template_path;
};

class Service {
public:
    Service(store::Store& store, llm::Backend& backend, ServiceOptions options = {});

    CorpusSummary ingest_corpus(const std::filesystem::path& manifest);
    CorpusSummary ingest_documents(std::vector<stex::SourceDocument> docs);

    /// Graph of a stored corpus, rebuilt from persisted sources on first use.
    std::shared_ptr<const kg::KnowledgeGraph> graph(const std::string& corpus_id);
    [[nodiscard]] std::vector<std::string> corpus_ids() const;

    std::vector<SymbolHit> symbols(const std::string& corpus_id, std::string_view query);

    PipelineResult run_generation_pipeline(const ApiGenerationRequest& request);

    QuestionDraft set_review_status(const std::string& draft_id, question::ReviewStatus status,
                                    const std::optional<std::string>& edited_source = std::nullopt);

    QuestionDraft get_draft(const std::string& draft_id);
    std::vector<QuestionDraft> list_drafts(std::optional<question::ReviewStatus> status = std::nullopt);
    std::vector<store::StoreRecord> draft_history(const std::string& draft_id) const;

    question::GradeResult grade(const std::string& draft_id, const question::StudentResponse& response,
                                question::Audience audience = question::Audience::Student);

    eval::SurveyInstrument survey(const std::string& draft_id);
    void add_survey_response(const eval::ExpertResponse& response);
    eval::AggregateReport aggregate_report();

    [[nodiscard]] nlohmann::ordered_json draft_json(const QuestionDraft& draft);
    [[nodiscard]] nlohmann::ordered_json transcript(const std::string& transcript_id) const;

    [[nodiscard]] const prompt::MasterPromptTemplate& prompt_template() const noexcept { return template_; }

private:
    std::string resolve_corpus(const std::optional<std::string>& requested);
    prompt::GenerationRequest to_generation_request(const ApiGenerationRequest& api, const kg::KnowledgeGraph& graph);
    QuestionDraft load_draft(const store::StoreRecord& rec);
    QuestionDraft persist(QuestionDraft draft);

    store::Store& store_;
    llm::Backend& backend_;
    ServiceOptions options_;
    prompt::MasterPromptTemplate template_;
    std::mutex graph_mutex_;
    std::map<std::string, std::shared_ptr<const kg::KnowledgeGraph>> graphs_;
};

/// Parses a stored request JSON back into a GenerationRequest.
[[nodiscard]] prompt::GenerationRequest generation_request_from_json(const nlohmann::json& j);

} // namespace quizgen::app
