// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/knowledge_graph.hpp"
#include "quizgen/prompt.hpp"

#include <json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace quizgen::llm {

enum class Role { System, User, Assistant, Tool };
[[nodiscard]] std::string_view to_string(Role role) noexcept;
[[nodiscard]] std::optional<Role> parse_role(std::string_view s) noexcept;

struct Message {
    Role role = Role::User;
    std::string text;
    friend bool operator==(const Message&, const Message&) = default;
};

struct ToolSpec {
    std::string name = "search";
    std::string description;
    friend bool operator==(const ToolSpec&, const ToolSpec&) = default;
};

struct Params {
    double temperature = 1.0;
    int max_output_tokens = 4096;
    std::string model = "gpt-4-turbo";
    friend bool operator==(const Params&, const Params&) = default;
};

struct ChatExchange {
    std::vector<Message> messages;
    std::optional<ToolSpec> tool_spec;
    Params params;
    friend bool operator==(const ChatExchange&, const ChatExchange&) = default;
};

/// Throws Error("InvalidExchange"): empty message list, or a system message
/// anywhere but first.
void check_exchange(const ChatExchange& exchange);

struct ToolCall {
    std::string name;
    std::vector<std::string> arguments;
    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t output_tokens = 0;
    friend bool operator==(const Usage&, const Usage&) = default;
};

struct CompletionOutcome {
    std::variant<std::string, ToolCall> value;
    Usage usage;

    [[nodiscard]] bool is_call() const noexcept { return std::holds_alternative<ToolCall>(value); }
    [[nodiscard]] const std::string& text() const { return std::get<std::string>(value); }
    [[nodiscard]] const ToolCall& call() const { return std::get<ToolCall>(value); }
    friend bool operator==(const CompletionOutcome&, const CompletionOutcome&) = default;
};

[[nodiscard]] CompletionOutcome text_outcome(std::string text, const ChatExchange& exchange);
[[nodiscard]] CompletionOutcome call_outcome(std::vector<std::string> queries, const ChatExchange& exchange);

/// Lowercase hex SHA-256 over the canonical form described in
/// docs/replay-format.md.
[[nodiscard]] std::string exchange_hash(const ChatExchange& exchange);
[[nodiscard]] std::string sha256_hex(std::string_view data);

[[nodiscard]] nlohmann::ordered_json to_json(const ChatExchange& exchange);
[[nodiscard]] ChatExchange exchange_from_json(const nlohmann::ordered_json& j);
[[nodiscard]] nlohmann::ordered_json to_json(const CompletionOutcome& outcome);
[[nodiscard]] CompletionOutcome outcome_from_json(const nlohmann::ordered_json& j);

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionOutcome complete(const ChatExchange& exchange) = 0;
};

/// Reads `<hash>.json` files from a directory. Never writes.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::filesystem::path dir);
    CompletionOutcome complete(const ChatExchange& exchange) override;

private:
    std::filesystem::path dir_;
};

/// Forwards to another backend and stores every exchange in replay format.
class RecordingBackend final : public Backend {
public:
    RecordingBackend(Backend& inner, std::filesystem::path dir);
    CompletionOutcome complete(const ChatExchange& exchange) override;

private:
    Backend& inner_;
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

/// Returns queued outcomes in order; for tests and fixture seeding.
class ScriptedBackend final : public Backend {
public:
    using Step = std::variant<std::string, std::vector<std::string>>; // text, or search queries
    explicit ScriptedBackend(std::vector<Step> steps);
    CompletionOutcome complete(const ChatExchange& exchange) override;
    [[nodiscard]] const std::vector<ChatExchange>& seen() const noexcept { return seen_; }

private:
    std::vector<Step> steps_;
    std::size_t next_ = 0;
    std::vector<ChatExchange> seen_;
    std::mutex mutex_;
};

struct HttpConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key;
    std::chrono::seconds timeout{120};
    int max_attempts = 3;
    std::chrono::milliseconds backoff{1000}; // doubled after each retry

    /// QUIZGEN_LLM_ENDPOINT, QUIZGEN_LLM_API_KEY over the defaults.
    static HttpConfig from_environment();
};

/// OpenAI-compatible chat-completion endpoint. The API key is only ever put
/// into the Authorization header.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpConfig config);
    CompletionOutcome complete(const ChatExchange& exchange) override;

    [[nodiscard]] static nlohmann::json to_wire(const ChatExchange& exchange);
    [[nodiscard]] static CompletionOutcome from_wire(const nlohmann::json& response, const ChatExchange& exchange);

private:
    HttpConfig config_;
};

inline constexpr std::string_view kSearchResultsHeader = "=== SEARCH RESULTS ===";
[[nodiscard]] const ToolSpec& search_tool();
[[nodiscard]] std::string_view search_instruction() noexcept;

struct Round {
    std::string hash;
    ChatExchange exchange;
    CompletionOutcome outcome;
};

struct SessionTranscript {
    std::vector<Round> rounds;
    std::string template_version;
};

[[nodiscard]] nlohmann::ordered_json to_json(const SessionTranscript& transcript);

struct SessionOptions {
    Params params;
    bool enable_search = false;
    const prompt::MasterPromptTemplate* tpl = nullptr; // default template when null
};

struct SessionResult {
    std::string text;
    SessionTranscript transcript;
};

/// Renders the search results appended in the second round.
[[nodiscard]] std::string render_search_results(const kg::KnowledgeGraph& graph, const ToolCall& call);

/// Builds context, assembles the prompt and runs at most one search round.
/// Throws Error("ToolLoopExceeded") if the model asks for a second search.
[[nodiscard]] SessionResult run_generation_session(const prompt::GenerationRequest& request,
                                                   const kg::KnowledgeGraph& graph, Backend& backend,
                                                   const SessionOptions& options = {});

} // namespace quizgen::llm
