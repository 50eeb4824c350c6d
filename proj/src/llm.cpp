// SPDX-License-Identifier: Apache-2.0
#include "quizgen/llm.hpp"

#include "quizgen/context.hpp"
#include "quizgen/error.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace quizgen::llm {

using nlohmann::ordered_json;

std::string_view to_string(Role role) noexcept
{
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
    }
    return "user";
}

std::optional<Role> parse_role(std::string_view s) noexcept
{
    for (auto r : {Role::System, Role::User, Role::Assistant, Role::Tool})
        if (to_string(r) == s)
            return r;
    return std::nullopt;
}

void check_exchange(const ChatExchange& exchange)
{
    if (exchange.messages.empty())
        throw Error("InvalidExchange", "exchange has no messages");
    for (std::size_t i = 1; i < exchange.messages.size(); ++i)
        if (exchange.messages[i].role == Role::System)
            throw Error("InvalidExchange", "system message must come first");
}

namespace {

Usage estimate_usage(const ChatExchange& exchange, std::size_t output_bytes)
{
    std::size_t in = 0;
    for (const auto& m : exchange.messages)
        in += m.text.size();
    return {(in + 3) / 4, (output_bytes + 3) / 4};
}

std::string format_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

} // namespace

CompletionOutcome text_outcome(std::string text, const ChatExchange& exchange)
{
    CompletionOutcome out;
    out.usage = estimate_usage(exchange, text.size());
    out.value = std::move(text);
    return out;
}

CompletionOutcome call_outcome(std::vector<std::string> queries, const ChatExchange& exchange)
{
    std::size_t bytes = 0;
    for (const auto& q : queries)
        bytes += q.size();
    CompletionOutcome out;
    out.usage = estimate_usage(exchange, bytes);
    out.value = ToolCall{"search", std::move(queries)};
    return out;
}

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("HashFailure", "SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string exchange_hash(const ChatExchange& exchange)
{
    std::string canon = "quizgen-exchange-v1\n";
    canon += "model:" + exchange.params.model + "\n";
    canon += "temperature:" + format_double(exchange.params.temperature) + "\n";
    canon += "max_output_tokens:" + std::to_string(exchange.params.max_output_tokens) + "\n";
    canon += "tool:" + (exchange.tool_spec ? exchange.tool_spec->name : std::string{}) + "\n";
    for (const auto& m : exchange.messages) {
        canon += std::string(to_string(m.role)) + " " + std::to_string(m.text.size()) + "\n";
        canon += m.text;
        canon += "\n";
    }
    return sha256_hex(canon);
}

ordered_json to_json(const ChatExchange& exchange)
{
    ordered_json j;
    j["params"] = {{"model", exchange.params.model},
                   {"temperature", exchange.params.temperature},
                   {"max_output_tokens", exchange.params.max_output_tokens}};
    if (exchange.tool_spec)
        j["tool"] = {{"name", exchange.tool_spec->name}, {"description", exchange.tool_spec->description}};
    else
        j["tool"] = nullptr;
    j["messages"] = ordered_json::array();
    for (const auto& m : exchange.messages)
        j["messages"].push_back({{"role", to_string(m.role)}, {"text", m.text}});
    return j;
}

ChatExchange exchange_from_json(const ordered_json& j)
{
    ChatExchange ex;
    const auto& p = j.at("params");
    ex.params.model = p.at("model").get<std::string>();
    ex.params.temperature = p.at("temperature").get<double>();
    ex.params.max_output_tokens = p.at("max_output_tokens").get<int>();
    if (j.contains("tool") && !j["tool"].is_null())
        ex.tool_spec = ToolSpec{j["tool"].at("name").get<std::string>(),
                                j["tool"].value("description", std::string{})};
    for (const auto& m : j.at("messages")) {
        auto role = parse_role(m.at("role").get<std::string>());
        if (!role)
            throw Error("InvalidExchange", "unknown role " + m.at("role").dump());
        ex.messages.push_back({*role, m.at("text").get<std::string>()});
    }
    return ex;
}

ordered_json to_json(const CompletionOutcome& outcome)
{
    ordered_json j;
    if (outcome.is_call()) {
        j["type"] = "call";
        j["name"] = outcome.call().name;
        j["arguments"] = outcome.call().arguments;
    } else {
        j["type"] = "text";
        j["text"] = outcome.text();
    }
    j["usage"] = {{"prompt_tokens", outcome.usage.prompt_tokens}, {"output_tokens", outcome.usage.output_tokens}};
    return j;
}

CompletionOutcome outcome_from_json(const ordered_json& j)
{
    CompletionOutcome out;
    const auto type = j.at("type").get<std::string>();
    if (type == "call")
        out.value = ToolCall{j.at("name").get<std::string>(), j.at("arguments").get<std::vector<std::string>>()};
    else if (type == "text")
        out.value = j.at("text").get<std::string>();
    else
        throw Error("InvalidReplay", "unknown outcome type " + type);
    if (j.contains("usage")) {
        out.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
        out.usage.output_tokens = j["usage"].value("output_tokens", std::size_t{0});
    }
    return out;
}

ReplayBackend::ReplayBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

CompletionOutcome ReplayBackend::complete(const ChatExchange& exchange)
{
    check_exchange(exchange);
    const auto hash = exchange_hash(exchange);
    std::ifstream in(dir_ / (hash + ".json"), std::ios::binary);
    if (!in)
        throw Error("ReplayMiss", "replay store has no exchange " + hash);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidReplay", hash + ".json: " + e.what());
    }
    if (j.value("format", std::string{}) != "quizgen-replay/1")
        throw Error("InvalidReplay", hash + ".json: unsupported format");
    return outcome_from_json(j.at("outcome"));
}

RecordingBackend::RecordingBackend(Backend& inner, std::filesystem::path dir) : inner_(inner), dir_(std::move(dir))
{
}

CompletionOutcome RecordingBackend::complete(const ChatExchange& exchange)
{
    auto outcome = inner_.complete(exchange);
    const auto hash = exchange_hash(exchange);
    ordered_json j;
    j["format"] = "quizgen-replay/1";
    j["hash"] = hash;
    j["exchange"] = to_json(exchange);
    j["outcome"] = to_json(outcome);

    std::lock_guard lock(write_mutex_);
    std::filesystem::create_directories(dir_);
    const auto tmp = dir_ / (hash + ".json.tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << '\n';
        if (!out)
            throw Error("RecordFailure", "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, dir_ / (hash + ".json"));
    return outcome;
}

ScriptedBackend::ScriptedBackend(std::vector<Step> steps) : steps_(std::move(steps)) {}

CompletionOutcome ScriptedBackend::complete(const ChatExchange& exchange)
{
    check_exchange(exchange);
    std::lock_guard lock(mutex_);
    seen_.push_back(exchange);
    if (next_ >= steps_.size())
        throw Error("ReplayMiss", "scripted backend has no step " + std::to_string(next_));
    const auto& step = steps_[next_++];
    if (const auto* text = std::get_if<std::string>(&step))
        return text_outcome(*text, exchange);
    return call_outcome(std::get<std::vector<std::string>>(step), exchange);
}

const ToolSpec& search_tool()
{
    static const ToolSpec spec{
        "search",
        "Search the course materials for definitions. Takes a list of search strings and returns, for each, "
        "the ten best matching definitions with their ids."};
    return spec;
}

std::string_view search_instruction() noexcept
{
    return "Before writing the questions, use the `search` function to look up how to semantically annotate any "
           "text that refers to a concept from the domain of the course. Pass it the phrases you want to "
           "annotate; it returns matching definitions from the course materials, including the modules that "
           "declare the corresponding symbols.";
}

std::string render_search_results(const kg::KnowledgeGraph& graph, const ToolCall& call)
{
    const auto results = kg::search_definitions(graph, call.arguments);
    std::string out(kSearchResultsHeader);
    for (std::size_t q = 0; q < call.arguments.size(); ++q) {
        out += "\n\nsearch: " + call.arguments[q] + "\n";
        if (results[q].empty()) {
            out += "(no results)";
            continue;
        }
        std::vector<context::ContextEntry> entries;
        for (const auto* f : results[q])
            entries.push_back({f->id, f->text});
        out += context::render_entries(entries);
    }
    return out;
}

ordered_json to_json(const SessionTranscript& transcript)
{
    ordered_json j;
    j["template_version"] = transcript.template_version;
    j["rounds"] = ordered_json::array();
    for (const auto& r : transcript.rounds)
        j["rounds"].push_back({{"hash", r.hash}, {"exchange", to_json(r.exchange)}, {"outcome", to_json(r.outcome)}});
    return j;
}

SessionResult run_generation_session(const prompt::GenerationRequest& request, const kg::KnowledgeGraph& graph,
                                     Backend& backend, const SessionOptions& options)
{
    prompt::check_request(request);
    const auto& tpl = options.tpl ? *options.tpl : prompt::default_template();
    const auto bundle = context::build_context(graph, request.concepts, request.granularity, request.token_budget);
    const auto base = prompt::assemble_prompt(tpl, request, bundle);

    SessionResult result;
    result.transcript.template_version = tpl.version;

    auto run_round = [&](ChatExchange exchange) {
        auto hash = exchange_hash(exchange);
        auto outcome = backend.complete(exchange);
        result.transcript.rounds.push_back({std::move(hash), std::move(exchange), outcome});
        return outcome;
    };

    ChatExchange first;
    first.params = options.params;
    if (options.enable_search) {
        first.messages.push_back({Role::User, base + "\n\n" + std::string(search_instruction())});
        first.tool_spec = search_tool();
    } else {
        first.messages.push_back({Role::User, base});
    }
    auto outcome = run_round(std::move(first));
    if (!outcome.is_call()) {
        result.text = outcome.text();
        return result;
    }
    if (!options.enable_search || outcome.call().name != "search")
        throw Error("UnknownTool", "model called undeclared tool '" + outcome.call().name + "'");

    // The instruction to search is dropped so the model cannot loop.
    ChatExchange second;
    second.params = options.params;
    second.messages.push_back({Role::User, base + "\n\n" + render_search_results(graph, outcome.call())});
    outcome = run_round(std::move(second));
    if (outcome.is_call())
        throw Error("ToolLoopExceeded", "model requested a second tool round");
    result.text = outcome.text();
    return result;
}

} // namespace quizgen::llm
