// SPDX-License-Identifier: Apache-2.0
#include "quizgen/error.hpp"
#include "quizgen/llm.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace quizgen::llm {

namespace {

std::string env_or(const char* name, std::string fallback)
{
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

struct Url {
    std::string origin; // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url)
{
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error("InvalidConfig", "endpoint must be an absolute URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

HttpConfig HttpConfig::from_environment()
{
    HttpConfig c;
    c.endpoint = env_or("QUIZGEN_LLM_ENDPOINT", c.endpoint);
    c.api_key = env_or("QUIZGEN_LLM_API_KEY", {});
    return c;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {}

nlohmann::json HttpBackend::to_wire(const ChatExchange& exchange)
{
    nlohmann::json j;
    j["model"] = exchange.params.model;
    j["temperature"] = exchange.params.temperature;
    j["max_tokens"] = exchange.params.max_output_tokens;
    j["messages"] = nlohmann::json::array();
    for (const auto& m : exchange.messages)
        j["messages"].push_back({{"role", to_string(m.role)}, {"content", m.text}});
    if (exchange.tool_spec) {
        nlohmann::json params = {
            {"type", "object"},
            {"properties", {{"queries", {{"type", "array"}, {"items", {{"type", "string"}}}}}}},
            {"required", {"queries"}},
        };
        j["tools"] = nlohmann::json::array({{
            {"type", "function"},
            {"function",
             {{"name", exchange.tool_spec->name}, {"description", exchange.tool_spec->description},
              {"parameters", params}}},
        }});
    }
    return j;
}

CompletionOutcome HttpBackend::from_wire(const nlohmann::json& response, const ChatExchange& exchange)
{
    if (!response.contains("choices") || response["choices"].empty())
        throw Error("TransportFailure", "response has no choices");
    const auto& choice = response["choices"][0];
    const auto& message = choice.at("message");
    if (choice.value("finish_reason", std::string{}) == "content_filter")
        throw Error("ProviderRefusal", "provider filtered the completion");
    if (message.contains("refusal") && message["refusal"].is_string())
        throw Error("ProviderRefusal", message["refusal"].get<std::string>());

    CompletionOutcome out;
    if (message.contains("tool_calls") && message["tool_calls"].is_array() && !message["tool_calls"].empty()) {
        const auto& fn = message["tool_calls"][0].at("function");
        ToolCall call;
        call.name = fn.at("name").get<std::string>();
        auto args = nlohmann::json::parse(fn.at("arguments").get<std::string>(), nullptr, false);
        if (args.is_discarded() || !args.contains("queries") || !args["queries"].is_array())
            throw Error("TransportFailure", "malformed tool call arguments");
        for (const auto& q : args["queries"])
            call.arguments.push_back(q.get<std::string>());
        out = call_outcome(std::move(call.arguments), exchange);
        std::get<ToolCall>(out.value).name = call.name;
    } else {
        const auto& content = message.at("content");
        out = text_outcome(content.is_string() ? content.get<std::string>() : std::string{}, exchange);
    }
    if (response.contains("usage") && response["usage"].is_object()) {
        out.usage.prompt_tokens = response["usage"].value("prompt_tokens", out.usage.prompt_tokens);
        out.usage.output_tokens = response["usage"].value("completion_tokens", out.usage.output_tokens);
    }
    return out;
}

CompletionOutcome HttpBackend::complete(const ChatExchange& exchange)
{
    check_exchange(exchange);
    const auto url = split_url(config_.endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    const auto body = to_wire(exchange).dump();

    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, config_.max_attempts); ++attempt) {
        if (attempt)
            std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 1)));
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw Error("ProviderRefusal", "HTTP " + std::to_string(res->status) + ": " + res->body);
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded())
            throw Error("TransportFailure", "response is not JSON");
        return from_wire(j, exchange);
    }
    throw Error("TransportFailure", last_error);
}

} // namespace quizgen::llm
