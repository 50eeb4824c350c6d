// SPDX-License-Identifier: Apache-2.0
#include "quizgen/http_api.hpp"

#include <httplib.h>

namespace quizgen::app {

using nlohmann::ordered_json;

int http_status_for(std::string_view code) noexcept
{
    if (code == "UnknownDraft" || code == "UnknownCorpus" || code == "NotFound")
        return 404;
    if (code == "UnknownSymbol" || code == "UnknownQuestionId" || code == "InvalidRequest" ||
        code == "InvalidArgument" || code == "InvalidResponse" || code == "ShapeMismatch" ||
        code == "MissingManifest" || code == "MissingDocument" || code == "ParseFailure" ||
        code == "BudgetTooSmall" || code == "MissingPlaceholderValue")
        return 400;
    if (code == "AmbiguousSymbol" || code == "DuplicateSymbol")
        return 409;
    if (code == "EditRejected")
        return 422;
    if (code == "ReplayMiss" || code == "TransportFailure" || code == "ProviderRefusal" ||
        code == "ToolLoopExceeded" || code == "EmptyOutput" || code == "UnknownTool")
        return 502;
    return 500;
}

namespace {

void send_json(httplib::Response& res, const ordered_json& j, int status = 200)
{
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message,
                const ordered_json& extra = nullptr)
{
    ordered_json err = {{"code", code}, {"message", message}};
    if (!extra.is_null())
        err["report"] = extra;
    send_json(res, {{"error", err}}, http_status_for(code));
}

nlohmann::json body_json(const httplib::Request& req)
{
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded())
        throw Error("InvalidRequest", "request body is not valid JSON");
    return j;
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn)
{
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const EditRejected& e) {
            send_error(res, e.code(), e.what(), e.report());
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, "InvalidRequest", e.what());
        } catch (const std::exception& e) {
            send_error(res, "InternalError", e.what());
        }
    };
}

ordered_json draft_with_revision(Service& svc, const QuestionDraft& d)
{
    auto j = svc.draft_json(d);
    j["revision"] = d.revision;
    return j;
}

} // namespace

struct HttpApi::Impl {
    Service& service;
    httplib::Server server;

    explicit Impl(Service& s) : service(s) { routes(); }

    void routes()
    {
        server.Post("/corpora", guarded([this](const auto& req, auto& res) {
                        auto j = body_json(req);
                        if (!j.contains("manifest") || !j["manifest"].is_string())
                            throw Error("InvalidRequest", "body needs a \"manifest\" path");
                        send_json(res, to_json(service.ingest_corpus(j["manifest"].template get<std::string>())), 201);
                    }));

        server.Get(R"(/corpora/([^/]+)/symbols)", guarded([this](const auto& req, auto& res) {
                       auto hits = service.symbols(req.matches[1], req.get_param_value("query"));
                       auto arr = ordered_json::array();
                       for (const auto& h : hits)
                           arr.push_back({{"uri", h.uri},
                                          {"name", h.name},
                                          {"module", h.module},
                                          {"defining_fragments", h.defining_fragments}});
                       send_json(res, {{"symbols", arr}});
                   }));

        server.Post("/generate", guarded([this](const auto& req, auto& res) {
                        auto result = service.run_generation_pipeline(api_request_from_json(body_json(req)));
                        ordered_json out;
                        out["transcript_ref"] = result.transcript_id;
                        out["drafts"] = ordered_json::array();
                        for (const auto& d : result.drafts)
                            out["drafts"].push_back(draft_with_revision(service, d));
                        out["rejects"] = ordered_json::array();
                        for (const auto& r : result.rejects)
                            out["rejects"].push_back({{"fence", r.fence}, {"reason", r.reason}, {"message", r.message}});
                        send_json(res, out, 201);
                    }));

        server.Get("/drafts", guarded([this](const auto& req, auto& res) {
                       std::optional<question::ReviewStatus> status;
                       if (req.has_param("status")) {
                           status = question::parse_review_status(req.get_param_value("status"));
                           if (!status)
                               throw Error("InvalidRequest", "unknown status " + req.get_param_value("status"));
                       }
                       auto arr = ordered_json::array();
                       for (const auto& d : service.list_drafts(status))
                           arr.push_back(draft_with_revision(service, d));
                       send_json(res, {{"drafts", arr}});
                   }));

        server.Get(R"(/drafts/([^/]+))", guarded([this](const auto& req, auto& res) {
                       send_json(res, draft_with_revision(service, service.get_draft(req.matches[1])));
                   }));

        server.Post(R"(/drafts/([^/]+)/review)", guarded([this](const auto& req, auto& res) {
                        auto j = body_json(req);
                        auto status = question::parse_review_status(j.value("status", std::string{}));
                        if (!status)
                            throw Error("InvalidRequest", "status must be Accepted, Rejected or Edited");
                        std::optional<std::string> source;
                        if (j.contains("edited_source") && j["edited_source"].is_string())
                            source = j["edited_source"].template get<std::string>();
                        send_json(res, draft_with_revision(service,
                                                           service.set_review_status(req.matches[1], *status, source)));
                    }));

        server.Post(R"(/drafts/([^/]+)/grade)", guarded([this](const auto& req, auto& res) {
                        auto j = body_json(req);
                        question::StudentResponse r;
                        if (j.contains("selected"))
                            for (const auto& i : j["selected"])
                                r.selected.insert(i.template get<std::size_t>());
                        if (j.contains("typed") && j["typed"].is_string())
                            r.typed = j["typed"].template get<std::string>();
                        auto audience = j.value("audience", std::string("student")) == "instructor"
                                            ? question::Audience::Instructor
                                            : question::Audience::Student;
                        send_json(res, question::to_json(service.grade(req.matches[1], r, audience)));
                    }));

        server.Get(R"(/drafts/([^/]+)/survey)", guarded([this](const auto& req, auto& res) {
                       send_json(res, eval::to_json(service.survey(req.matches[1])));
                   }));

        server.Get(R"(/transcripts/([^/]+))", guarded([this](const auto& req, auto& res) {
                       send_json(res, service.transcript(req.matches[1]));
                   }));

        server.Post("/survey-responses", guarded([this](const auto& req, auto& res) {
                        auto r = eval::response_from_json(body_json(req));
                        service.add_survey_response(r);
                        send_json(res, eval::to_json(r), 201);
                    }));

        server.Get("/reports/aggregate", guarded([this](const auto& req, auto& res) {
                       auto report = service.aggregate_report();
                       if (req.get_param_value("format") == "csv") {
                           res.set_content(eval::to_csv(report), "text/csv");
                           return;
                       }
                       send_json(res, eval::to_json(report));
                   }));

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty())
                res.set_content(ordered_json({{"error", {{"code", "NotFound"}, {"message", "no such route"}}}}).dump(),
                                "application/json");
        });
    }
};

HttpApi::HttpApi(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpApi::~HttpApi() = default;

bool HttpApi::listen(const std::string& host, int port)
{
    return impl_->server.listen(host, port);
}

int HttpApi::bind_to_any_port(const std::string& host)
{
    return impl_->server.bind_to_any_port(host);
}

bool HttpApi::listen_after_bind()
{
    return impl_->server.listen_after_bind();
}

void HttpApi::wait_until_ready() const
{
    impl_->server.wait_until_ready();
}

void HttpApi::stop()
{
    impl_->server.stop();
}

} // namespace quizgen::app
