// SPDX-License-Identifier: Apache-2.0
#include "quizgen/service.hpp"

#include "quizgen/text_util.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace quizgen::app {

using nlohmann::ordered_json;
using question::ReviewStatus;

namespace {

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error("MissingDocument", "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string short_hash(std::string_view data)
{
    return llm::sha256_hex(data).substr(0, 12);
}

template <class T, class Parse>
T parse_or_throw(const std::string& field, const std::string& value, Parse parse)
{
    auto v = parse(value);
    if (!v)
        throw Error("InvalidRequest", "invalid " + field + ": '" + value + "'");
    return *v;
}

} // namespace

std::vector<stex::SourceDocument> load_manifest(const std::filesystem::path& manifest)
{
    std::ifstream in(manifest);
    if (!in)
        throw Error("MissingManifest", "cannot read manifest " + manifest.string());
    const auto base = manifest.parent_path();
    std::vector<stex::SourceDocument> docs;
    std::string line;
    while (std::getline(in, line)) {
        auto entry = std::string(text::trim(line));
        if (entry.empty() || entry.starts_with('#'))
            continue;
        docs.push_back({entry, read_file(base / entry), stex::Origin::CourseMaterial});
    }
    return docs;
}

std::string corpus_id_for(const std::vector<stex::SourceDocument>& docs)
{
    std::string canon;
    for (const auto& d : docs)
        canon += d.doc_id + "\n" + std::to_string(d.text.size()) + "\n" + d.text;
    return "c-" + short_hash(canon);
}

ordered_json to_json(const CorpusSummary& s)
{
    return {{"corpus_id", s.corpus_id},   {"documents", s.documents}, {"modules", s.modules},
            {"symbols", s.symbols},       {"fragments", s.fragments}, {"top_level_sections", s.top_level_sections},
            {"diagnostics", s.diagnostics}};
}

std::vector<Fence> split_code_fences(std::string_view output)
{
    std::vector<Fence> fences;
    std::size_t p = 0;
    std::optional<std::size_t> open;
    while (p < output.size()) {
        auto nl = output.find('\n', p);
        auto line_end = nl == std::string_view::npos ? output.size() : nl;
        auto line = text::trim(output.substr(p, line_end - p));
        auto next = nl == std::string_view::npos ? output.size() : nl + 1;
        if (line.starts_with("```")) {
            if (!open) {
                open = next;
            } else {
                fences.push_back({std::string(output.substr(*open, p - *open)), *open, true});
                open.reset();
            }
        }
        p = next;
    }
    if (open)
        fences.push_back({std::string(output.substr(*open)), *open, false});
    return fences;
}

ApiGenerationRequest api_request_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw Error("InvalidRequest", "request must be a JSON object");
    ApiGenerationRequest r;
    try {
        if (j.contains("corpus") && !j["corpus"].is_null())
            r.corpus = j["corpus"].get<std::string>();
        r.concepts = j.at("concepts").get<std::vector<std::string>>();
        r.course_name = j.at("course_name").get<std::string>();
        r.course_description = j.value("course_description", std::string{});
        r.cognitive_dimension = j.value("cognitive_dimension", r.cognitive_dimension);
        r.difficulty = j.value("difficulty", r.difficulty);
        r.n_questions = j.value("n_questions", r.n_questions);
        if (j.contains("allowed_types"))
            r.allowed_types = j["allowed_types"].get<std::vector<std::string>>();
        r.granularity = j.value("granularity", r.granularity);
        r.token_budget = j.value("token_budget", r.token_budget);
        r.enable_search = j.value("enable_search", false);
        if (j.contains("topic_tag") && !j["topic_tag"].is_null())
            r.topic_tag = j["topic_tag"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidRequest", e.what());
    }
    return r;
}

ordered_json to_json(const ApiGenerationRequest& r)
{
    ordered_json j;
    j["corpus"] = r.corpus ? ordered_json(*r.corpus) : ordered_json(nullptr);
    j["concepts"] = r.concepts;
    j["course_name"] = r.course_name;
    j["course_description"] = r.course_description;
    j["cognitive_dimension"] = r.cognitive_dimension;
    j["difficulty"] = r.difficulty;
    j["n_questions"] = r.n_questions;
    j["allowed_types"] = r.allowed_types;
    j["granularity"] = r.granularity;
    j["token_budget"] = r.token_budget;
    j["enable_search"] = r.enable_search;
    j["topic_tag"] = r.topic_tag ? ordered_json(*r.topic_tag) : ordered_json(nullptr);
    return j;
}

prompt::GenerationRequest generation_request_from_json(const nlohmann::json& j)
{
    prompt::GenerationRequest r;
    for (const auto& c : j.at("concepts"))
        r.concepts.push_back({c.get<std::string>()});
    r.course_name = j.at("course_name").get<std::string>();
    r.course_description = j.at("course_description").get<std::string>();
    r.cognitive_dimension =
        parse_or_throw<CognitiveDimension>("cognitive_dimension", j.at("cognitive_dimension"), parse_dimension);
    r.difficulty = parse_or_throw<Difficulty>("difficulty", j.at("difficulty"), parse_difficulty);
    r.n_questions = j.at("n_questions").get<int>();
    for (const auto& t : j.at("allowed_types"))
        r.allowed_types.push_back(parse_or_throw<QuestionType>("allowed_types", t, parse_question_type));
    r.granularity = parse_or_throw<Granularity>("granularity", j.at("granularity"), parse_granularity);
    r.token_budget = j.at("token_budget").get<std::size_t>();
    return r;
}

// ---- Service --------------------------------------------------------------

Service::Service(store::Store& store, llm::Backend& backend, ServiceOptions options)
    : store_(store), backend_(backend), options_(std::move(options)),
      template_(options_.template_path ? prompt::load_template(*options_.template_path) : prompt::default_template())
{
}

CorpusSummary Service::ingest_corpus(const std::filesystem::path& manifest)
{
    return ingest_documents(load_manifest(manifest));
}

CorpusSummary Service::ingest_documents(std::vector<stex::SourceDocument> docs)
{
    auto graph = std::make_shared<const kg::KnowledgeGraph>(kg::build_graph(docs));
    CorpusSummary s;
    s.corpus_id = corpus_id_for(docs);
    s.documents = docs.size();
    s.modules = graph->modules.size();
    s.symbols = graph->symbols.size();
    s.fragments = graph->fragments.size();
    s.top_level_sections = graph->top_level_sections().size();
    for (const auto& d : graph->diagnostics)
        s.diagnostics.push_back(d.doc_id + ": " + d.message);

    ordered_json payload;
    payload["corpus_id"] = s.corpus_id;
    payload["documents"] = ordered_json::array();
    for (const auto& d : docs)
        payload["documents"].push_back({{"doc_id", d.doc_id}, {"text", d.text}});
    store_.put(store::Kind::Corpus, s.corpus_id, payload.dump());

    std::lock_guard lock(graph_mutex_);
    graphs_[s.corpus_id] = std::move(graph);
    return s;
}

std::shared_ptr<const kg::KnowledgeGraph> Service::graph(const std::string& corpus_id)
{
    {
        std::lock_guard lock(graph_mutex_);
        if (auto it = graphs_.find(corpus_id); it != graphs_.end())
            return it->second;
    }
    auto rec = store_.latest(store::Kind::Corpus, corpus_id);
    if (!rec)
        throw Error("UnknownCorpus", "no corpus '" + corpus_id + "'");
    auto j = nlohmann::json::parse(rec->payload);
    std::vector<stex::SourceDocument> docs;
    for (const auto& d : j.at("documents"))
        docs.push_back({d.at("doc_id").get<std::string>(), d.at("text").get<std::string>(),
                        stex::Origin::CourseMaterial});
    auto graph = std::make_shared<const kg::KnowledgeGraph>(kg::build_graph(docs));
    std::lock_guard lock(graph_mutex_);
    return graphs_.try_emplace(corpus_id, std::move(graph)).first->second;
}

std::vector<std::string> Service::corpus_ids() const
{
    std::vector<std::string> ids;
    for (const auto& rec : store_.latest_all(store::Kind::Corpus))
        ids.push_back(rec.id);
    return ids;
}

std::string Service::resolve_corpus(const std::optional<std::string>& requested)
{
    if (requested)
        return *requested;
    auto ids = corpus_ids();
    if (ids.size() != 1)
        throw Error("InvalidRequest", ids.empty() ? "no corpus has been ingested"
                                                  : "several corpora are stored; name one with \"corpus\"");
    return ids.front();
}

std::vector<SymbolHit> Service::symbols(const std::string& corpus_id, std::string_view query)
{
    auto g = graph(corpus_id);
    // Spaces match hyphens, so "arc consistency" finds arc-consistency.
    auto fold = [](std::string_view s) {
        auto out = text::to_lower(s);
        std::replace(out.begin(), out.end(), ' ', '-');
        return out;
    };
    const auto needle = fold(text::trim(query));
    std::vector<SymbolHit> hits;
    for (const auto& [id, sym] : g->symbols) {
        if (!needle.empty() && fold(sym.name).find(needle) == std::string::npos &&
            fold(id.uri).find(needle) == std::string::npos)
            continue;
        hits.push_back({id.uri, sym.name, sym.module, sym.defining_fragments.size()});
    }
    return hits;
}

prompt::GenerationRequest Service::to_generation_request(const ApiGenerationRequest& api,
                                                         const kg::KnowledgeGraph& graph)
{
    prompt::GenerationRequest r;
    for (const auto& c : api.concepts) {
        if (std::count(c.begin(), c.end(), '?') >= 2) {
            if (!graph.find_symbol({c}))
                throw Error("UnknownSymbol", "unknown symbol '" + c + "'");
            r.concepts.push_back({c});
            continue;
        }
        auto matches = graph.symbols_named(c);
        if (matches.empty())
            throw Error("UnknownSymbol", "unknown symbol '" + c + "'");
        if (matches.size() > 1) {
            std::vector<std::string> uris;
            for (const auto& m : matches)
                uris.push_back(m.uri);
            throw Error("AmbiguousSymbol", "'" + c + "' matches " + text::join(uris, ", "));
        }
        r.concepts.push_back(matches.front());
    }
    r.course_name = api.course_name;
    r.course_description = api.course_description;
    r.cognitive_dimension = parse_or_throw<CognitiveDimension>("cognitive_dimension", api.cognitive_dimension,
                                                               parse_dimension);
    r.difficulty = parse_or_throw<Difficulty>("difficulty", api.difficulty, parse_difficulty);
    r.n_questions = api.n_questions;
    for (const auto& t : api.allowed_types)
        r.allowed_types.push_back(parse_or_throw<QuestionType>("allowed_types", t, parse_question_type));
    r.granularity = parse_or_throw<Granularity>("granularity", api.granularity, parse_granularity);
    r.token_budget = api.token_budget;
    prompt::check_request(r);
    return r;
}

PipelineResult Service::run_generation_pipeline(const ApiGenerationRequest& api)
{
    const auto corpus_id = resolve_corpus(api.corpus);
    const auto g = graph(corpus_id);
    const auto request = to_generation_request(api, *g);
    const auto request_json = eval::request_to_json(request);

    ordered_json key = {{"corpus", corpus_id},
                        {"request", request_json},
                        {"enable_search", api.enable_search},
                        {"template_version", template_.version},
                        {"params", llm::to_json(llm::ChatExchange{{}, std::nullopt, options_.params})["params"]}};
    const auto req_hash = short_hash(key.dump());
    const auto transcript_id = "t-" + req_hash;
    const auto topic = api.topic_tag ? *api.topic_tag : std::string(request.concepts.front().name());

    llm::SessionOptions opts;
    opts.params = options_.params;
    opts.enable_search = api.enable_search;
    opts.tpl = &template_;
    auto session = llm::run_generation_session(request, *g, backend_, opts);

    PipelineResult result;
    result.transcript_id = transcript_id;
    const auto fences = split_code_fences(session.text);
    for (std::size_t f = 0; f < fences.size(); ++f) {
        const auto& fence = fences[f];
        if (!fence.terminated) {
            result.rejects.push_back({f, "UnterminatedFence", "code block is not closed", fence.text});
            continue;
        }
        stex::DocumentAst ast;
        try {
            ast = stex::parse_document({transcript_id + "#" + std::to_string(f), fence.text,
                                        stex::Origin::GeneratedOutput});
        } catch (const stex::ParseError& e) {
            result.rejects.push_back({f, e.code(), e.what(), fence.text});
            continue;
        }
        auto ex = question::from_ast(ast, fence.text);
        std::vector<question::QuizQuestion> found = std::move(ex.questions);
        for (auto& r : ex.rejects) {
            if (r.candidate)
                found.push_back(std::move(*r.candidate));
            else
                result.rejects.push_back({f, r.reason, r.message, fence.text});
        }
        std::sort(found.begin(), found.end(),
                  [](const auto& a, const auto& b) { return a.body.span.begin < b.body.span.begin; });
        if (found.empty() && ex.rejects.empty())
            result.rejects.push_back({f, "NoProblem", "code block contains no sproblem", fence.text});
        for (auto& q : found) {
            QuestionDraft d;
            q.id = "q-" + req_hash + "-" + std::to_string(result.drafts.size() + 1);
            d.report = validator::validate(q, *g, &request);
            d.prerequisites = question::extract_prerequisites(q, *g);
            d.question = std::move(q);
            d.transcript_ref = transcript_id;
            d.topic_tag = topic;
            d.corpus_id = corpus_id;
            d.request = request_json;
            result.drafts.push_back(std::move(d));
        }
    }

    ordered_json transcript = llm::to_json(session.transcript);
    transcript["id"] = transcript_id;
    transcript["corpus_id"] = corpus_id;
    transcript["request"] = request_json;
    transcript["enable_search"] = api.enable_search;
    transcript["output"] = session.text;
    transcript["drafts"] = ordered_json::array();
    for (const auto& d : result.drafts)
        transcript["drafts"].push_back(d.question.id);
    transcript["rejects"] = ordered_json::array();
    for (const auto& r : result.rejects)
        transcript["rejects"].push_back(
            {{"fence", r.fence}, {"reason", r.reason}, {"message", r.message}, {"text", r.text}});
    store_.put(store::Kind::Transcript, transcript_id, transcript.dump());

    if (result.drafts.empty())
        throw Error("EmptyOutput", "no code block of the model output contains a question (transcript " +
                                       transcript_id + ")");
    for (auto& d : result.drafts)
        d = persist(std::move(d));
    return result;
}

ordered_json Service::draft_json(const QuestionDraft& d)
{
    auto g = graph(d.corpus_id);
    ordered_json j;
    j["id"] = d.question.id;
    j["review_status"] = question::to_string(d.question.review_status);
    j["topic_tag"] = d.topic_tag;
    j["corpus_id"] = d.corpus_id;
    j["transcript_ref"] = d.transcript_ref;
    j["request"] = d.request;
    j["question"] = question::to_json(d.question);
    j["render"] = question::to_render_model(d.question, question::Audience::Instructor, g.get());
    j["report"] = validator::to_json(d.report);
    j["prerequisites"] = ordered_json::array();
    for (const auto& p : d.prerequisites.prerequisites)
        j["prerequisites"].push_back({{"dimension", to_string(p.dimension)}, {"symbol", p.symbol.uri}});
    j["unresolved"] = ordered_json::array();
    for (const auto& u : d.prerequisites.unresolved)
        j["unresolved"].push_back({{"name", u.name}, {"dimension", u.dimension}, {"reason", u.reason}});
    return j;
}

ordered_json Service::transcript(const std::string& transcript_id) const
{
    auto rec = store_.latest(store::Kind::Transcript, transcript_id);
    if (!rec)
        throw Error("NotFound", "no transcript '" + transcript_id + "'");
    return ordered_json::parse(rec->payload);
}

QuestionDraft Service::persist(QuestionDraft draft)
{
    auto rec = store_.put(store::Kind::Draft, draft.question.id, draft_json(draft).dump());
    draft.revision = rec.revision;
    return draft;
}

QuestionDraft Service::load_draft(const store::StoreRecord& rec)
{
    auto j = nlohmann::json::parse(rec.payload);
    QuestionDraft d;
    d.question = question::question_from_source(rec.id, j.at("question").at("source").get<std::string>());
    d.question.review_status =
        question::parse_review_status(j.at("review_status").get<std::string>()).value_or(ReviewStatus::Draft);
    d.transcript_ref = j.at("transcript_ref").get<std::string>();
    d.topic_tag = j.at("topic_tag").get<std::string>();
    d.corpus_id = j.at("corpus_id").get<std::string>();
    d.request = j.at("request");
    d.revision = rec.revision;
    auto g = graph(d.corpus_id);
    const auto request = generation_request_from_json(d.request);
    d.report = validator::validate(d.question, *g, &request);
    d.prerequisites = question::extract_prerequisites(d.question, *g);
    return d;
}

QuestionDraft Service::get_draft(const std::string& draft_id)
{
    auto rec = store_.latest(store::Kind::Draft, draft_id);
    if (!rec)
        throw Error("UnknownDraft", "no draft '" + draft_id + "'");
    return load_draft(*rec);
}

std::vector<QuestionDraft> Service::list_drafts(std::optional<ReviewStatus> status)
{
    std::vector<QuestionDraft> out;
    for (const auto& rec : store_.latest_all(store::Kind::Draft)) {
        auto d = load_draft(rec);
        if (!status || d.question.review_status == *status)
            out.push_back(std::move(d));
    }
    return out;
}

std::vector<store::StoreRecord> Service::draft_history(const std::string& draft_id) const
{
    return store_.history(store::Kind::Draft, draft_id);
}

QuestionDraft Service::set_review_status(const std::string& draft_id, ReviewStatus status,
                                         const std::optional<std::string>& edited_source)
{
    auto draft = get_draft(draft_id);
    if (status == ReviewStatus::Draft)
        throw Error("InvalidArgument", "review status must be Accepted, Rejected or Edited");

    ordered_json review = {{"status", question::to_string(status)}};
    if (status == ReviewStatus::Edited) {
        if (!edited_source)
            throw Error("InvalidArgument", "Edited requires edited_source");
        question::QuizQuestion q;
        try {
            q = question::question_from_source(draft_id, *edited_source);
        } catch (const Error& e) {
            throw EditRejected(e.what(), {{"question_id", draft_id},
                                          {"verdict", "Fail"},
                                          {"parse_error", {{"code", e.code()}, {"message", e.what()}}},
                                          {"issues", ordered_json::array()}});
        }
        const auto request = generation_request_from_json(draft.request);
        auto structural = validator::validate_structural(q, &request);
        if (std::any_of(structural.begin(), structural.end(),
                        [](const auto& i) { return i.severity == validator::Severity::Error; })) {
            auto report = validator::make_report(draft_id, std::move(structural));
            throw EditRejected("edited source fails structural validation", validator::to_json(report));
        }
        auto g = graph(draft.corpus_id);
        draft.question = std::move(q);
        draft.report = validator::validate(draft.question, *g, &request);
        draft.prerequisites = question::extract_prerequisites(draft.question, *g);
        review["edited_source"] = *edited_source;
    }
    draft.question.review_status = status;
    draft = persist(std::move(draft));
    review["draft_revision"] = draft.revision;
    store_.put(store::Kind::Review, draft_id, review.dump());
    return draft;
}

question::GradeResult Service::grade(const std::string& draft_id, const question::StudentResponse& response,
                                     question::Audience audience)
{
    auto draft = get_draft(draft_id);
    return question::grade(draft.question, response, question::Rational(1), audience);
}

eval::SurveyInstrument Service::survey(const std::string& draft_id)
{
    auto draft = get_draft(draft_id);
    auto g = graph(draft.corpus_id);
    return eval::build_instrument(draft.question, generation_request_from_json(draft.request), g.get());
}

void Service::add_survey_response(const eval::ExpertResponse& response)
{
    if (!store_.latest(store::Kind::Draft, response.question_id))
        throw Error("UnknownQuestionId", "no draft '" + response.question_id + "'");
    store_.put(store::Kind::SurveyResponse, response.question_id + "/" + response.expert_id,
               eval::to_json(response).dump());
}

eval::AggregateReport Service::aggregate_report()
{
    std::vector<eval::ExpertResponse> responses;
    std::set<std::string> rated;
    for (const auto& rec : store_.latest_all(store::Kind::SurveyResponse)) {
        responses.push_back(eval::response_from_json(nlohmann::json::parse(rec.payload)));
        rated.insert(responses.back().question_id);
    }
    std::vector<eval::RatedQuestion> questions;
    for (const auto& id : rated) {
        auto rec = store_.latest(store::Kind::Draft, id);
        auto j = nlohmann::json::parse(rec->payload);
        auto type = parse_question_type(j.at("question").at("type").get<std::string>());
        questions.push_back({id, type.value_or(QuestionType::MultipleChoice), j.at("topic_tag").get<std::string>()});
    }
    return eval::aggregate(responses, questions);
}

} // namespace quizgen::app
