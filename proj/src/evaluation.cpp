// SPDX-License-Identifier: Apache-2.0
#include "quizgen/evaluation.hpp"

#include "quizgen/error.hpp"
#include "quizgen/text_util.hpp"

#include <algorithm>
#include <set>

namespace quizgen::eval {

using nlohmann::ordered_json;

namespace {

constexpr std::array<Statement, kStatementCount> kStatements = {{
    {"FIT", "The GQ has a good FIT in terms of teaching material."},
    {"SOLVABLE", "The GQ can be solved using the available teaching material."},
    {"UNAMBIGUOUS", "The task description of the GQ cannot be misinterpreted (is not ambiguous)."},
    {"RELEVANT", "The GQ is relevant for the achievement of the specified Learning Objective."},
    {"FEEDBACK", "The feedback provided for the answer options of the GQ is helpful."},
    {"FORMAT", "The structure of the task corresponds to the specified task format."},
}};

ordered_json scale_json(const Scale& s)
{
    return {{"min", s.min}, {"max", s.max}, {"labels", s.labels}};
}

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn)
{
    std::size_t line_no = 0, p = 0;
    while (p <= text.size()) {
        auto nl = text.find('\n', p);
        auto line = text.substr(p, nl == std::string_view::npos ? text.size() - p : nl - p);
        ++line_no;
        if (!text::trim(line).empty())
            fn(line, line_no);
        if (nl == std::string_view::npos)
            break;
        p = nl + 1;
    }
}

} // namespace

std::span<const Statement, kStatementCount> statements() noexcept
{
    return kStatements;
}

const Scale& agreement_scale()
{
    static const Scale s{1,
                         7,
                         {"Strongly Disagree", "Disagree", "Somewhat Disagree", "Neither Agree nor Disagree",
                          "Somewhat Agree", "Agree", "Strongly Agree"}};
    return s;
}

const Scale& difficulty_scale()
{
    static const Scale s{1, 5, {"Very Difficult", "Difficult", "Neither Difficult nor Easy", "Easy", "Very Easy"}};
    return s;
}

ordered_json request_to_json(const prompt::GenerationRequest& request)
{
    ordered_json j;
    j["concepts"] = ordered_json::array();
    for (const auto& c : request.concepts)
        j["concepts"].push_back(c.uri);
    j["course_name"] = request.course_name;
    j["course_description"] = request.course_description;
    j["cognitive_dimension"] = to_string(request.cognitive_dimension);
    j["difficulty"] = to_string(request.difficulty);
    j["n_questions"] = request.n_questions;
    j["allowed_types"] = ordered_json::array();
    for (auto t : request.allowed_types)
        j["allowed_types"].push_back(to_string(t));
    j["granularity"] = to_string(request.granularity);
    j["token_budget"] = request.token_budget;
    return j;
}

SurveyInstrument build_instrument(const question::QuizQuestion& q, const prompt::GenerationRequest& request,
                                  const kg::KnowledgeGraph* graph)
{
    SurveyInstrument s;
    s.question_id = q.id;
    s.context_block = {{"parameters", request_to_json(request)},
                       {"question", question::to_render_model(q, question::Audience::Instructor, graph)}};
    s.content_error_prompt = "Please describe any content errors or inaccuracies in the GQ. Leave empty if none.";
    s.closing_remarks_prompt = "Any additional irregularities or remarks?";
    return s;
}

ordered_json to_json(const SurveyInstrument& instrument)
{
    ordered_json j;
    j["question_id"] = instrument.question_id;
    j["context"] = instrument.context_block;
    j["content_errors"] = {{"kind", "free_text"}, {"prompt", instrument.content_error_prompt}};
    j["difficulty"] = {{"kind", "likert"}, {"scale", scale_json(difficulty_scale())}};
    j["statements"] = ordered_json::array();
    for (const auto& st : statements())
        j["statements"].push_back({{"key", st.key}, {"text", st.text}, {"scale", scale_json(agreement_scale())}});
    j["closing_remarks"] = {{"kind", "free_text"}, {"prompt", instrument.closing_remarks_prompt}};
    return j;
}

ExpertResponse response_from_json(const nlohmann::json& j)
{
    auto fail = [](const std::string& msg) -> ExpertResponse { throw Error("InvalidResponse", msg); };
    if (!j.is_object())
        return fail("response must be a JSON object");
    ExpertResponse r;
    try {
        r.question_id = j.at("question_id").get<std::string>();
        r.expert_id = j.at("expert_id").get<std::string>();
        r.difficulty = j.at("difficulty").get<int>();
        auto ratings = j.at("ratings").get<std::vector<int>>();
        if (ratings.size() != kStatementCount)
            return fail("ratings must have 6 entries, got " + std::to_string(ratings.size()));
        std::copy(ratings.begin(), ratings.end(), r.ratings.begin());
        r.content_errors = j.value("content_errors", std::string{});
        r.remarks = j.value("remarks", std::string{});
    } catch (const nlohmann::json::exception& e) {
        return fail(e.what());
    }
    const auto& d = difficulty_scale();
    if (r.difficulty < d.min || r.difficulty > d.max)
        return fail("difficulty out of range: " + std::to_string(r.difficulty));
    const auto& a = agreement_scale();
    for (int v : r.ratings)
        if (v < a.min || v > a.max)
            return fail("rating out of range: " + std::to_string(v));
    return r;
}

ordered_json to_json(const ExpertResponse& r)
{
    return {{"question_id", r.question_id}, {"expert_id", r.expert_id},         {"difficulty", r.difficulty},
            {"ratings", r.ratings},         {"content_errors", r.content_errors}, {"remarks", r.remarks}};
}

std::vector<ExpertResponse> parse_responses_jsonl(std::string_view text)
{
    std::vector<ExpertResponse> out;
    for_each_line(text, [&](std::string_view line, std::size_t n) {
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error("InvalidResponse", "line " + std::to_string(n) + ": not JSON");
        try {
            out.push_back(response_from_json(j));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(n) + ": " + e.what());
        }
    });
    return out;
}

std::vector<RatedQuestion> parse_questions_jsonl(std::string_view text)
{
    std::vector<RatedQuestion> out;
    for_each_line(text, [&](std::string_view line, std::size_t n) {
        auto j = nlohmann::json::parse(line, nullptr, false);
        auto where = "line " + std::to_string(n) + ": ";
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("type"))
            throw Error("InvalidQuestionList", where + "expected {\"id\", \"type\", \"topic\"}");
        auto type = parse_question_type(j["type"].get<std::string>());
        if (!type)
            throw Error("InvalidQuestionList", where + "unknown type " + j["type"].dump());
        out.push_back({j["id"].get<std::string>(), *type, j.value("topic", std::string{})});
    });
    return out;
}

int median_high(std::vector<int> values)
{
    if (values.empty())
        throw Error("InvalidArgument", "median of no values");
    std::sort(values.begin(), values.end());
    return values[values.size() / 2];
}

AggregateReport aggregate(std::span<const ExpertResponse> responses, std::span<const RatedQuestion> questions)
{
    std::map<std::string, const RatedQuestion*> by_id;
    for (const auto& q : questions)
        by_id[q.id] = &q;

    std::map<std::string, std::vector<const ExpertResponse*>> per_question;
    for (const auto& r : responses) {
        if (!by_id.contains(r.question_id))
            throw Error("UnknownQuestionId", "response refers to unknown question '" + r.question_id + "'");
        per_question[r.question_id].push_back(&r);
    }

    AggregateReport report;
    report.total_questions = int(questions.size());
    for (const auto& q : questions)
        report.type_distribution[q.qtype] += 1;
    for (auto t : {QuestionType::SingleChoice, QuestionType::MultipleChoice, QuestionType::FillInTheBlanks})
        report.type_distribution.try_emplace(t, 0);

    const int rated = int(per_question.size());
    for (auto& c : report.agreement)
        c.total = rated;
    report.erroneous.total = rated;

    for (const auto& [id, rs] : per_question) {
        auto& topic = report.errors_by_topic[by_id.at(id)->topic];
        topic.total += 1;
        for (std::size_t s = 0; s < kStatementCount; ++s) {
            std::vector<int> values;
            for (const auto* r : rs)
                values.push_back(r->ratings[s]);
            if (median_high(values) >= kAgreementThreshold)
                report.agreement[s].count += 1;
        }
        const bool erroneous =
            std::any_of(rs.begin(), rs.end(), [](const auto* r) { return !text::trim(r->content_errors).empty(); });
        if (erroneous) {
            report.erroneous.count += 1;
            topic.count += 1;
        }
    }
    return report;
}

ordered_json to_json(const AggregateReport& report)
{
    ordered_json j;
    j["total_questions"] = report.total_questions;
    j["agreement"] = ordered_json::array();
    for (std::size_t s = 0; s < kStatementCount; ++s)
        j["agreement"].push_back({{"key", kStatements[s].key},
                                  {"statement", kStatements[s].text},
                                  {"count", report.agreement[s].count},
                                  {"total", report.agreement[s].total}});
    j["erroneous"] = {{"count", report.erroneous.count}, {"total", report.erroneous.total}};
    j["errors_by_topic"] = ordered_json::array();
    for (const auto& [topic, c] : report.errors_by_topic)
        j["errors_by_topic"].push_back({{"topic", topic}, {"count", c.count}, {"total", c.total}});
    j["type_distribution"] = ordered_json::object();
    for (const auto& [t, n] : report.type_distribution)
        j["type_distribution"][std::string(to_string(t))] = n;
    return j;
}

std::string to_csv(const AggregateReport& report)
{
    std::string out = "section,key,count,total\n";
    auto row = [&](std::string_view section, std::string_view key, int count, int total) {
        out += csv_field(section) + "," + csv_field(key) + "," + std::to_string(count) + "," + std::to_string(total) +
               "\n";
    };
    for (std::size_t s = 0; s < kStatementCount; ++s)
        row("agreement", kStatements[s].key, report.agreement[s].count, report.agreement[s].total);
    row("errors", "ALL", report.erroneous.count, report.erroneous.total);
    for (const auto& [topic, c] : report.errors_by_topic)
        row("errors_by_topic", topic, c.count, c.total);
    for (const auto& [t, n] : report.type_distribution)
        row("types", to_string(t), n, report.total_questions);
    return out;
}

} // namespace quizgen::eval
