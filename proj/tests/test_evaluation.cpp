// SPDX-License-Identifier: Apache-2.0
#include "quizgen/error.hpp"
#include "quizgen/evaluation.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace quizgen;
using namespace quizgen::eval;
using quizgen::testing::fixture;
using quizgen::testing::slurp;

namespace {

std::vector<ExpertResponse> paper_responses()
{
    return parse_responses_jsonl(slurp(fixture("survey/paper-counts/responses.jsonl")));
}

std::vector<RatedQuestion> paper_questions()
{
    return parse_questions_jsonl(slurp(fixture("survey/paper-counts/questions.jsonl")));
}

ExpertResponse response(std::string q, std::string expert, std::array<int, 6> ratings, std::string errors = {})
{
    ExpertResponse r;
    r.question_id = std::move(q);
    r.expert_id = std::move(expert);
    r.difficulty = 3;
    r.ratings = ratings;
    r.content_errors = std::move(errors);
    return r;
}

// Upper median >= t iff at least ceil(n/2) ratings (n - n/2 of them) reach t.
bool agrees(const std::vector<int>& ratings)
{
    const auto high = std::count_if(ratings.begin(), ratings.end(), [](int v) { return v >= kAgreementThreshold; });
    return std::size_t(high) >= ratings.size() - ratings.size() / 2;
}

std::array<int, kStatementCount> oracle_agreement(const std::vector<ExpertResponse>& rs)
{
    std::map<std::string, std::array<std::vector<int>, kStatementCount>> per;
    for (const auto& r : rs)
        for (std::size_t s = 0; s < kStatementCount; ++s)
            per[r.question_id][s].push_back(r.ratings[s]);
    std::array<int, kStatementCount> out{};
    for (const auto& [id, cols] : per)
        for (std::size_t s = 0; s < kStatementCount; ++s)
            out[s] += agrees(cols[s]);
    return out;
}

std::array<int, kStatementCount> counts(const AggregateReport& r)
{
    std::array<int, kStatementCount> out{};
    for (std::size_t s = 0; s < kStatementCount; ++s)
        out[s] = r.agreement[s].count;
    return out;
}

std::string code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code() + ": " + e.what();
    }
    return "";
}

} // namespace

TEST_CASE("survey statements")
{
    const auto s = statements();
    REQUIRE(s.size() == 6);
    CHECK(s[0].key == "FIT");
    CHECK(s[0].text == "The GQ has a good FIT in terms of teaching material.");
    CHECK(s[1].text == "The GQ can be solved using the available teaching material.");
    CHECK(s[2].text == "The task description of the GQ cannot be misinterpreted (is not ambiguous).");
    CHECK(s[3].text == "The GQ is relevant for the achievement of the specified Learning Objective.");
    CHECK(s[4].text == "The feedback provided for the answer options of the GQ is helpful.");
    CHECK(s[5].text == "The structure of the task corresponds to the specified task format.");
}

TEST_CASE("survey scales")
{
    const auto& a = agreement_scale();
    CHECK(a.min == 1);
    CHECK(a.max == 7);
    REQUIRE(a.labels.size() == 7);
    CHECK(a.labels.front() == "Strongly Disagree");
    CHECK(a.labels.back() == "Strongly Agree");

    const auto& d = difficulty_scale();
    CHECK(d.min == 1);
    CHECK(d.max == 5);
    REQUIRE(d.labels.size() == 5);
    CHECK(d.labels.front() == "Very Difficult");
    CHECK(d.labels.back() == "Very Easy");
}

TEST_CASE("instrument for a fixture question")
{
    auto q = question::question_from_source("arc-1", slurp(fixture("questions/arc-consistency-scq.tex")));
    auto inst = build_instrument(q, testing::canonical_request(), &testing::course_graph());
    auto j = to_json(inst);
    CHECK(j["question_id"] == "arc-1");
    REQUIRE(j["statements"].size() == 6);
    CHECK(j["statements"][0]["key"] == "FIT");
    CHECK(j["statements"][0]["scale"]["min"] == 1);
    CHECK(j["statements"][0]["scale"]["max"] == 7);
    CHECK(j["difficulty"]["scale"]["min"] == 1);
    CHECK(j["difficulty"]["scale"]["max"] == 5);
    CHECK(j["context"]["parameters"]["cognitive_dimension"] == "understand");
    CHECK(j["context"]["parameters"]["n_questions"] == 5);
    CHECK(j["context"]["question"]["audience"] == "instructor");
    CHECK(j["context"]["question"]["options"][1]["correct"] == true);
    CHECK(j["content_errors"]["kind"] == "free_text");
    CHECK(j["closing_remarks"]["kind"] == "free_text");
}

TEST_CASE("paper counts fixture")
{
    const auto rs = paper_responses();
    const auto qs = paper_questions();
    CHECK(qs.size() == 30);
    auto r = aggregate(rs, qs);
    CHECK(r.total_questions == 30);
    CHECK(r.agreement[0] == Count{28, 30});
    CHECK(r.agreement[1] == Count{27, 30});
    CHECK(r.erroneous == Count{11, 30});
    CHECK(r.type_distribution.at(QuestionType::SingleChoice) == 12);
    CHECK(r.type_distribution.at(QuestionType::MultipleChoice) == 18);
    CHECK(r.type_distribution.at(QuestionType::FillInTheBlanks) == 0);
    CHECK(counts(r) == oracle_agreement(rs));

    // Errors cluster in arc consistency and propositional semantics.
    CHECK(r.errors_by_topic.at("arc-consistency") == Count{4, 5});
    CHECK(r.errors_by_topic.at("prop-semantics") == Count{4, 5});
    int topic_sum = 0;
    for (const auto& [topic, c] : r.errors_by_topic) {
        CHECK(c.count <= r.errors_by_topic.at("arc-consistency").count);
        topic_sum += c.count;
    }
    CHECK(topic_sum == 11);
    CHECK(r.errors_by_topic.size() == 6);
}

TEST_CASE("empty and ceiling cases")
{
    auto empty = aggregate({}, {});
    CHECK(empty.total_questions == 0);
    for (const auto& c : empty.agreement)
        CHECK(c == Count{0, 0});
    CHECK(empty.erroneous == Count{0, 0});
    for (const auto& [t, n] : empty.type_distribution)
        CHECK(n == 0);

    std::vector<RatedQuestion> one{{"q", QuestionType::FillInTheBlanks, "t"}};
    std::vector<ExpertResponse> sevens{response("q", "e", {7, 7, 7, 7, 7, 7})};
    auto ceiling = aggregate(sevens, one);
    for (const auto& c : ceiling.agreement)
        CHECK(c == Count{1, 1});
    CHECK(ceiling.erroneous == Count{0, 1});
    CHECK(ceiling.type_distribution.at(QuestionType::FillInTheBlanks) == 1);
}

TEST_CASE("unknown question id")
{
    std::vector<RatedQuestion> one{{"q", QuestionType::SingleChoice, "t"}};
    std::vector<ExpertResponse> stray{response("other", "e", {5, 5, 5, 5, 5, 5})};
    CHECK(code_of([&] { (void)aggregate(stray, one); }).starts_with("UnknownQuestionId"));
}

TEST_CASE("upper median")
{
    CHECK(median_high({3}) == 3);
    CHECK(median_high({4, 5}) == 5);
    CHECK(median_high({5, 4}) == 5);
    CHECK(median_high({1, 7, 4}) == 4);
    CHECK(median_high({1, 2, 6, 7}) == 6);
    CHECK_THROWS_AS(median_high({}), Error);

    std::vector<RatedQuestion> one{{"q", QuestionType::SingleChoice, "t"}};
    std::vector<ExpertResponse> split{response("q", "a", {4, 4, 4, 4, 4, 4}), response("q", "b", {5, 5, 5, 5, 5, 5})};
    CHECK(aggregate(split, one).agreement[0] == Count{1, 1});
    std::vector<ExpertResponse> low{response("q", "a", {3, 3, 3, 3, 3, 3}), response("q", "b", {4, 4, 4, 4, 4, 4})};
    CHECK(aggregate(low, one).agreement[0] == Count{0, 1});
}

TEST_CASE("denominators count rated questions")
{
    std::vector<RatedQuestion> qs{{"a", QuestionType::SingleChoice, "t"}, {"b", QuestionType::MultipleChoice, "t"}};
    std::vector<ExpertResponse> rs{response("a", "e", {6, 6, 6, 6, 6, 6}, "typo in option 2")};
    auto r = aggregate(rs, qs);
    CHECK(r.total_questions == 2);
    CHECK(r.agreement[0] == Count{1, 1});
    CHECK(r.erroneous == Count{1, 1});
    CHECK(r.errors_by_topic.at("t") == Count{1, 1});

    std::vector<ExpertResponse> blank{response("a", "e", {6, 6, 6, 6, 6, 6}, "   \n")};
    CHECK(aggregate(blank, qs).erroneous == Count{0, 1});
}

TEST_CASE("random panels match the counting oracle")
{
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> rating(1, 7), panel(1, 5), coin(0, 3);
    for (int round = 0; round < 200; ++round) {
        std::vector<RatedQuestion> qs;
        std::vector<ExpertResponse> rs;
        int expected_errors = 0;
        for (int q = 0; q < 8; ++q) {
            const auto id = "q" + std::to_string(q);
            qs.push_back({id, q % 2 ? QuestionType::SingleChoice : QuestionType::MultipleChoice, "t"});
            bool erroneous = false;
            for (int e = panel(rng); e > 0; --e) {
                std::array<int, 6> ratings{};
                for (auto& v : ratings)
                    v = rating(rng);
                const bool err = coin(rng) == 0;
                erroneous = erroneous || err;
                rs.push_back(response(id, "e" + std::to_string(e), ratings, err ? "wrong" : ""));
            }
            expected_errors += erroneous;
        }
        auto r = aggregate(rs, qs);
        REQUIRE(counts(r) == oracle_agreement(rs));
        REQUIRE(r.erroneous == Count{expected_errors, 8});
    }
}

TEST_CASE("aggregation ignores response order")
{
    auto rs = paper_responses();
    const auto qs = paper_questions();
    const auto reference = to_json(aggregate(rs, qs)).dump();
    std::mt19937 rng(11);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(rs.begin(), rs.end(), rng);
        CHECK(to_json(aggregate(rs, qs)).dump() == reference);
    }
}

TEST_CASE("raising a rating never lowers agreement")
{
    const auto base = paper_responses();
    const auto qs = paper_questions();
    const auto before = counts(aggregate(base, qs));
    for (std::size_t i = 0; i < base.size(); ++i) {
        for (std::size_t s = 0; s < kStatementCount; ++s) {
            if (base[i].ratings[s] == 7)
                continue;
            auto raised = base;
            raised[i].ratings[s] += 1;
            const auto after = counts(aggregate(raised, qs));
            for (std::size_t k = 0; k < kStatementCount; ++k)
                REQUIRE(after[k] >= before[k]);
        }
    }
}

TEST_CASE("jsonl parsing reports line numbers")
{
    const std::string good = R"({"question_id":"q","expert_id":"e","difficulty":2,"ratings":[1,2,3,4,5,6]})";
    auto parsed = parse_responses_jsonl(good + "\n\n" + good + "\n");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].content_errors.empty());
    CHECK(parsed[0].ratings == std::array<int, 6>{1, 2, 3, 4, 5, 6});

    auto err = code_of([&] { (void)parse_responses_jsonl(good + "\n{oops\n"); });
    CHECK(err.starts_with("InvalidResponse"));
    CHECK(err.find("line 2") != std::string::npos);

    err = code_of([&] {
        (void)parse_responses_jsonl(good + "\n\n" +
                                    R"({"question_id":"q","expert_id":"e","difficulty":2,"ratings":[1,2,3,4,5,8]})");
    });
    CHECK(err.find("line 3") != std::string::npos);
    CHECK(err.find("out of range") != std::string::npos);

    err = code_of([&] {
        (void)parse_responses_jsonl(R"({"question_id":"q","expert_id":"e","difficulty":6,"ratings":[1,2,3,4,5,6]})");
    });
    CHECK(err.starts_with("InvalidResponse"));
    err = code_of([&] {
        (void)parse_responses_jsonl(R"({"question_id":"q","expert_id":"e","difficulty":3,"ratings":[1,2,3]})");
    });
    CHECK(err.find("6 entries") != std::string::npos);

    CHECK(code_of([] { (void)parse_questions_jsonl(R"({"id":"x","type":"Essay"})"); })
              .starts_with("InvalidQuestionList"));
}

TEST_CASE("response json round-trip")
{
    auto r = response("q", "e", {1, 2, 3, 4, 5, 6}, "an error");
    r.remarks = "nice";
    auto back = response_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(back.question_id == r.question_id);
    CHECK(back.ratings == r.ratings);
    CHECK(back.content_errors == r.content_errors);
    CHECK(back.remarks == r.remarks);
}

TEST_CASE("csv export")
{
    auto csv = to_csv(aggregate(paper_responses(), paper_questions()));
    CHECK(csv.starts_with("section,key,count,total\n"));
    CHECK(csv.find("agreement,FIT,28,30\n") != std::string::npos);
    CHECK(csv.find("agreement,SOLVABLE,27,30\n") != std::string::npos);
    CHECK(csv.find("errors,ALL,11,30\n") != std::string::npos);
    CHECK(csv.find("types,SingleChoice,12,30\n") != std::string::npos);
    CHECK(csv.find("types,MultipleChoice,18,30\n") != std::string::npos);
    CHECK(csv.find("types,FillInTheBlanks,0,30\n") != std::string::npos);
}
