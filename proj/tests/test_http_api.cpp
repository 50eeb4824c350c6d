// SPDX-License-Identifier: Apache-2.0
#include "quizgen/http_api.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>
#include <httplib.h>

#include <thread>

using namespace quizgen;
using namespace quizgen::app;
using nlohmann::json;
using quizgen::testing::fixture;
using quizgen::testing::slurp;

namespace {

// A service on a loopback port with the replayed arc consistency session.
struct Running {
    store::Store store{":memory:"};
    llm::ReplayBackend backend{fixture("replay/arc-consistency-session/store")};
    Service service{store, backend};
    HttpApi api{service};
    std::thread thread;
    int port = 0;
    std::unique_ptr<httplib::Client> client;

    Running()
    {
        port = api.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { api.listen_after_bind(); });
        api.wait_until_ready();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(std::chrono::seconds(10));
    }
    ~Running()
    {
        api.stop();
        thread.join();
    }

    std::pair<int, json> post(const std::string& path, const json& body)
    {
        auto r = client->Post(path, body.dump(), "application/json");
        REQUIRE(r);
        return {r->status, json::parse(r->body)};
    }
    std::pair<int, json> get(const std::string& path)
    {
        auto r = client->Get(path);
        REQUIRE(r);
        return {r->status, json::parse(r->body)};
    }

    std::string ingest()
    {
        auto [status, body] = post("/corpora", {{"manifest", fixture("corpora/ai-course-mini/manifest.txt").string()}});
        REQUIRE(status == 201);
        return body["corpus_id"];
    }
    json generate()
    {
        auto [status, body] =
            post("/generate", json::parse(slurp(fixture("replay/arc-consistency-session/request.json"))));
        REQUIRE(status == 201);
        return body;
    }
};

} // namespace

TEST_CASE("error codes map to statuses")
{
    CHECK(http_status_for("UnknownDraft") == 404);
    CHECK(http_status_for("UnknownSymbol") == 400);
    CHECK(http_status_for("InvalidRequest") == 400);
    CHECK(http_status_for("ShapeMismatch") == 400);
    CHECK(http_status_for("AmbiguousSymbol") == 409);
    CHECK(http_status_for("EditRejected") == 422);
    CHECK(http_status_for("ReplayMiss") == 502);
    CHECK(http_status_for("ToolLoopExceeded") == 502);
    CHECK(http_status_for("SomethingElse") == 500);
}

TEST_CASE("corpus routes")
{
    Running s;
    auto id = s.ingest();
    CHECK(std::string(id).starts_with("c-"));

    auto [status, body] = s.get("/corpora/" + id + "/symbols?query=revise");
    CHECK(status == 200);
    REQUIRE(body["symbols"].size() == 1);
    CHECK(body["symbols"][0]["uri"] == "course/arc-consistency.tex?arc-consistency?revise");

    auto missing = s.get("/corpora/c-nope/symbols");
    CHECK(missing.first == 404);
    CHECK(missing.second["error"]["code"] == "UnknownCorpus");

    auto bad = s.post("/corpora", {{"path", "x"}});
    CHECK(bad.first == 400);
    CHECK(bad.second["error"]["code"] == "InvalidRequest");
}

TEST_CASE("generate and inspect drafts")
{
    Running s;
    s.ingest();
    auto out = s.generate();
    REQUIRE(out["drafts"].size() == 5);
    CHECK(out["rejects"].empty());
    const std::string id = out["drafts"][0]["id"];
    const std::string transcript = out["transcript_ref"];
    CHECK(out["drafts"][0]["revision"] == 1);
    CHECK(out["drafts"][0]["report"].contains("verdict"));
    CHECK(out["drafts"][0]["render"]["audience"] == "instructor");

    auto [st, one] = s.get("/drafts/" + id);
    CHECK(st == 200);
    CHECK(one["id"] == id);
    CHECK(one["transcript_ref"] == transcript);

    auto list = s.get("/drafts?status=Draft");
    CHECK(list.second["drafts"].size() == 5);
    CHECK(s.get("/drafts?status=Accepted").second["drafts"].empty());
    CHECK(s.get("/drafts?status=Bogus").first == 400);

    auto t = s.get("/transcripts/" + transcript);
    CHECK(t.first == 200);
    CHECK(t.second["rounds"].size() == 2);

    CHECK(s.get("/drafts/q-none").first == 404);
    CHECK(s.get("/transcripts/t-none").first == 404);
}

TEST_CASE("review, grade and survey routes")
{
    Running s;
    s.ingest();
    auto out = s.generate();
    const std::string id = out["drafts"][0]["id"];

    auto [st, accepted] = s.post("/drafts/" + id + "/review", {{"status", "Accepted"}});
    CHECK(st == 200);
    CHECK(accepted["review_status"] == "Accepted");
    CHECK(accepted["revision"] == 2);
    CHECK(s.get("/drafts?status=Accepted").second["drafts"].size() == 1);

    auto edit = s.post("/drafts/" + id + "/review",
                       {{"status", "Edited"},
                        {"edited_source", "\\begin{sproblem}\n  \\objective{understand}{arc-consistency}\n"
                                          "  \\fillinsol{\\frac12}\n\\end{sproblem}\n"}});
    CHECK(edit.first == 422);
    CHECK(edit.second["error"]["code"] == "EditRejected");
    CHECK(edit.second["error"]["report"]["issues"][0]["code"] == "FIB_NOT_PLAINTEXT");
    CHECK(s.post("/drafts/" + id + "/review", {{"status", "Nope"}}).first == 400);

    // Find the right answer from the instructor view, then grade it.
    const auto& q = out["drafts"][0]["question"];
    json selected = json::array();
    json typed = nullptr;
    if (q["type"] == "FillInTheBlanks") {
        typed = q["fib_solution"];
    } else {
        for (std::size_t i = 0; i < q["options"].size(); ++i)
            if (q["options"][i]["correct"] == true)
                selected.push_back(i);
    }
    json body = {{"selected", selected}};
    if (!typed.is_null())
        body["typed"] = typed;
    auto graded = s.post("/drafts/" + id + "/grade", body);
    CHECK(graded.first == 200);
    CHECK(graded.second["correct"] == true);

    auto shape = s.post("/drafts/" + id + "/grade", {{"selected", {99}}});
    CHECK(shape.first == 400);
    CHECK(shape.second["error"]["code"] == "ShapeMismatch");

    auto survey = s.get("/drafts/" + id + "/survey");
    CHECK(survey.first == 200);
    CHECK(survey.second["statements"].size() == 6);

    json response = {{"question_id", id}, {"expert_id", "e1"}, {"difficulty", 2}, {"ratings", {7, 6, 5, 5, 5, 6}},
                     {"content_errors", ""}, {"remarks", ""}};
    CHECK(s.post("/survey-responses", response).first == 201);
    response["question_id"] = "q-none";
    CHECK(s.post("/survey-responses", response).second["error"]["code"] == "UnknownQuestionId");
    response["ratings"] = {9, 9, 9, 9, 9, 9};
    CHECK(s.post("/survey-responses", response).first == 400);

    auto agg = s.get("/reports/aggregate");
    CHECK(agg.first == 200);
    CHECK(agg.second["agreement"][0]["count"] == 1);
    CHECK(agg.second["agreement"][0]["total"] == 1);
    auto csv = s.client->Get("/reports/aggregate?format=csv");
    REQUIRE(csv);
    CHECK(csv->get_header_value("Content-Type") == "text/csv");
    CHECK(csv->body.find("agreement,FIT,1,1") != std::string::npos);
}

TEST_CASE("malformed requests")
{
    Running s;
    s.ingest();
    auto r = s.client->Post("/generate", "{not json", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(json::parse(r->body)["error"]["code"] == "InvalidRequest");

    auto unknown = s.post("/generate", {{"concepts", {"path-consistency"}}, {"course_name", "AI"},
                                        {"course_description", "AI"}});
    CHECK(unknown.first == 400);
    CHECK(unknown.second["error"]["code"] == "UnknownSymbol");

    auto miss = s.post("/generate", {{"concepts", {"revise"}}, {"course_name", "AI"}, {"course_description", "AI"}});
    CHECK(miss.first == 502);
    CHECK(miss.second["error"]["code"] == "ReplayMiss");

    auto nowhere = s.client->Get("/no/such/route");
    REQUIRE(nowhere);
    CHECK(nowhere->status == 404);
    CHECK(json::parse(nowhere->body)["error"]["code"] == "NotFound");
}
