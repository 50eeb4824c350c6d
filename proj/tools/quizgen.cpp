// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Every verb maps to one Service operation.
#include "quizgen/config.hpp"
#include "quizgen/http_api.hpp"
#include "quizgen/service.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace quizgen;
using nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("MissingFile", "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Globals {
    std::map<std::string, std::string> flags;
    std::string config_path;
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void add(CLI::App& app, const std::string& key, const std::string& help)
    {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        options.emplace_back(key, app.add_option(flag, flags[key], help + " (env " + config::env_name(key) + ")"));
    }

    config::Settings settings() const
    {
        config::Values given;
        for (const auto& [key, opt] : options)
            if (opt->count() > 0)
                given[key] = flags.at(key);
        auto env = config::process_environment();
        std::string path = config_path;
        if (path.empty())
            path = env("QUIZGEN_CONFIG").value_or("");
        return {given, env, path.empty() ? config::Values{} : config::load_config_file(path)};
    }
};

struct Runtime {
    config::Settings settings;
    std::unique_ptr<store::Store> store;
    std::unique_ptr<llm::Backend> inner;
    std::unique_ptr<llm::Backend> backend;
    std::unique_ptr<app::Service> service;

    explicit Runtime(config::Settings s, bool need_backend) : settings(std::move(s))
    {
        store = std::make_unique<store::Store>(settings.get_or("db", "quizgen.db"));
        const auto kind = settings.get_or("backend", "replay");
        if (!need_backend) {
            backend = std::make_unique<llm::ScriptedBackend>(std::vector<llm::ScriptedBackend::Step>{});
        } else if (kind == "replay") {
            auto dir = settings.get("replay_dir");
            if (!dir)
                throw Error("InvalidConfig", "the replay backend needs --replay-dir");
            backend = std::make_unique<llm::ReplayBackend>(*dir);
        } else if (kind == "http" || kind == "record") {
            auto http = llm::HttpConfig::from_environment();
            http.endpoint = settings.get_or("llm_endpoint", http.endpoint);
            inner = std::make_unique<llm::HttpBackend>(http);
            if (kind == "record") {
                auto dir = settings.get("record_dir");
                if (!dir)
                    throw Error("InvalidConfig", "the record backend needs --record-dir");
                backend = std::make_unique<llm::RecordingBackend>(*inner, *dir);
            } else {
                backend = std::move(inner);
            }
        } else {
            throw Error("InvalidConfig", "unknown backend '" + kind + "' (replay, http, record)");
        }

        app::ServiceOptions opts;
        opts.params.model = settings.get_or("llm_model", opts.params.model);
        if (auto t = settings.get("temperature"))
            opts.params.temperature = std::stod(*t);
        if (auto m = settings.get("max_output_tokens"))
            opts.params.max_output_tokens = std::stoi(*m);
        if (auto t = settings.get("template"))
            opts.template_path = *t;
        service = std::make_unique<app::Service>(*store, *backend, opts);
    }
};

void print(const ordered_json& j)
{
    std::cout << j.dump(2) << '\n';
}

ordered_json draft_summary(const app::QuestionDraft& d)
{
    return {{"id", d.question.id},
            {"type", to_string(d.question.qtype)},
            {"review_status", question::to_string(d.question.review_status)},
            {"verdict", validator::to_string(d.report.verdict)},
            {"issues", d.report.issues.size()},
            {"revision", d.revision}};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App cli{"quizgen: course-grounded quiz generation, validation and grading"};
    cli.require_subcommand(1);

    Globals g;
    cli.add_option("--config", g.config_path, "JSON config file (env QUIZGEN_CONFIG)");
    g.add(cli, "db", "SQLite database file");
    g.add(cli, "backend", "replay, http or record");
    g.add(cli, "replay_dir", "replay store directory");
    g.add(cli, "record_dir", "directory for recorded exchanges");
    g.add(cli, "llm_endpoint", "chat-completion URL");
    g.add(cli, "llm_model", "model name");
    g.add(cli, "temperature", "sampling temperature");
    g.add(cli, "max_output_tokens", "output token limit");
    g.add(cli, "template", "master prompt template file");

    std::function<int()> action;

    auto* ingest = cli.add_subcommand("ingest", "ingest a corpus manifest");
    std::string manifest;
    ingest->add_option("manifest", manifest)->required();
    ingest->callback([&] {
        action = [&] {
            Runtime rt(g.settings(), false);
            print(app::to_json(rt.service->ingest_corpus(manifest)));
            return 0;
        };
    });

    auto* symbols = cli.add_subcommand("symbols", "list symbols of a corpus");
    std::string corpus, query;
    symbols->add_option("--corpus", corpus);
    symbols->add_option("--query", query);
    symbols->callback([&] {
        action = [&] {
            Runtime rt(g.settings(), false);
            auto id = corpus;
            if (id.empty()) {
                auto ids = rt.service->corpus_ids();
                if (ids.size() != 1)
                    throw Error("InvalidRequest", "name a corpus with --corpus");
                id = ids.front();
            }
            auto arr = ordered_json::array();
            for (const auto& h : rt.service->symbols(id, query))
                arr.push_back({{"uri", h.uri}, {"name", h.name}, {"defining_fragments", h.defining_fragments}});
            print(arr);
            return 0;
        };
    });

    auto* generate = cli.add_subcommand("generate", "run the generation pipeline");
    std::string request_file;
    app::ApiGenerationRequest req;
    std::string gen_corpus, topic;
    generate->add_option("--request", request_file, "GenerationRequest JSON file");
    generate->add_option("--corpus", gen_corpus);
    generate->add_option("--concept", req.concepts, "symbol name or URI (repeatable)");
    generate->add_option("--course", req.course_name);
    generate->add_option("--description", req.course_description);
    generate->add_option("--dimension", req.cognitive_dimension);
    generate->add_option("--difficulty", req.difficulty);
    generate->add_option("--count", req.n_questions);
    generate->add_option("--types", req.allowed_types)->delimiter(',');
    generate->add_option("--granularity", req.granularity);
    generate->add_option("--budget", req.token_budget);
    generate->add_option("--topic", topic);
    generate->add_flag("--search", req.enable_search, "offer the search tool");
    generate->callback([&] {
        action = [&] {
            Runtime rt(g.settings(), true);
            auto r = request_file.empty() ? req : app::api_request_from_json(ordered_json::parse(read_file(request_file)));
            if (!gen_corpus.empty())
                r.corpus = gen_corpus;
            if (!topic.empty())
                r.topic_tag = topic;
            auto result = rt.service->run_generation_pipeline(r);
            ordered_json out = {{"transcript_ref", result.transcript_id}, {"drafts", ordered_json::array()},
                                {"rejects", ordered_json::array()}};
            for (const auto& d : result.drafts)
                out["drafts"].push_back(draft_summary(d));
            for (const auto& rj : result.rejects)
                out["rejects"].push_back({{"fence", rj.fence}, {"reason", rj.reason}, {"message", rj.message}});
            print(out);
            return 0;
        };
    });

    auto* validate = cli.add_subcommand("validate", "validate questions in a .tex file against a corpus");
    std::string tex_file, val_manifest;
    std::vector<std::string> val_types;
    validate->add_option("file", tex_file)->required();
    validate->add_option("--manifest", val_manifest, "corpus manifest")->required();
    validate->add_option("--types", val_types, "allowed question types")->delimiter(',');
    validate->callback([&] {
        action = [&] {
            auto docs = app::load_manifest(val_manifest);
            auto graph = kg::build_graph(docs);
            auto text = read_file(tex_file);
            auto ast = stex::parse_document({tex_file, text, stex::Origin::GeneratedOutput});
            auto ex = question::from_ast(ast, text);
            std::optional<prompt::GenerationRequest> request;
            if (!val_types.empty()) {
                request.emplace();
                for (const auto& t : val_types) {
                    auto qt = parse_question_type(t);
                    if (!qt)
                        throw Error("InvalidRequest", "unknown type " + t);
                    request->allowed_types.push_back(*qt);
                }
            }
            std::vector<question::QuizQuestion> qs = std::move(ex.questions);
            for (auto& r : ex.rejects)
                if (r.candidate)
                    qs.push_back(std::move(*r.candidate));
            int status = 0;
            auto arr = ordered_json::array();
            for (const auto& q : qs) {
                auto report = validator::validate(q, graph, request ? &*request : nullptr);
                if (report.verdict == validator::Verdict::Fail)
                    status = 1;
                arr.push_back(validator::to_json(report));
            }
            for (const auto& r : ex.rejects)
                if (!r.candidate) {
                    arr.push_back({{"reject", r.reason}, {"message", r.message}});
                    status = 1;
                }
            print(arr);
            return status;
        };
    });

    auto* grade = cli.add_subcommand("grade", "grade a response to a draft");
    std::string grade_id;
    std::vector<std::size_t> selected;
    std::optional<std::string> typed;
    bool instructor = false;
    grade->add_option("draft", grade_id)->required();
    grade->add_option("--select", selected, "chosen option index, 0-based (repeatable)");
    grade->add_option("--typed", typed, "fill-in-the-blanks answer");
    grade->add_flag("--instructor", instructor, "include feedback of missed correct options");
    grade->callback([&] {
        action = [&] {
            Runtime rt(g.settings(), false);
            question::StudentResponse r{{selected.begin(), selected.end()}, typed};
            print(question::to_json(rt.service->grade(
                grade_id, r, instructor ? question::Audience::Instructor : question::Audience::Student)));
            return 0;
        };
    });

    auto* review = cli.add_subcommand("review", "accept, reject or edit a draft");
    std::string review_id, review_status, review_source;
    review->add_option("draft", review_id)->required();
    review->add_option("--status", review_status, "Accepted, Rejected or Edited")->required();
    review->add_option("--source", review_source, "edited .tex file (with --status Edited)");
    review->callback([&] {
        action = [&] {
            Runtime rt(g.settings(), false);
            auto status = question::parse_review_status(review_status);
            if (!status)
                throw Error("InvalidRequest", "unknown status " + review_status);
            std::optional<std::string> source;
            if (!review_source.empty())
                source = read_file(review_source);
            print(draft_summary(rt.service->set_review_status(review_id, *status, source)));
            return 0;
        };
    });

    auto* drafts = cli.add_subcommand("drafts", "list drafts");
    std::string drafts_status;
    drafts->add_option("--status", drafts_status);
    drafts->callback([&] {
        action = [&] {
            Runtime rt(g.settings(), false);
            std::optional<question::ReviewStatus> st;
            if (!drafts_status.empty())
                st = question::parse_review_status(drafts_status);
            auto arr = ordered_json::array();
            for (const auto& d : rt.service->list_drafts(st))
                arr.push_back(draft_summary(d));
            print(arr);
            return 0;
        };
    });

    auto* survey = cli.add_subcommand("survey", "expert survey instruments and responses");
    survey->require_subcommand(1);
    auto* sexport = survey->add_subcommand("export", "print the survey instrument of a draft");
    std::string survey_id;
    sexport->add_option("draft", survey_id)->required();
    sexport->callback([&] {
        action = [&] {
            Runtime rt(g.settings(), false);
            print(eval::to_json(rt.service->survey(survey_id)));
            return 0;
        };
    });
    auto* simport = survey->add_subcommand("import", "import line-delimited ExpertResponse records");
    std::string responses_file;
    simport->add_option("file", responses_file)->required();
    simport->callback([&] {
        action = [&] {
            Runtime rt(g.settings(), false);
            auto rs = eval::parse_responses_jsonl(read_file(responses_file));
            for (const auto& r : rs)
                rt.service->add_survey_response(r);
            print({{"imported", rs.size()}});
            return 0;
        };
    });

    auto* report = cli.add_subcommand("report", "aggregate survey responses");
    bool csv = false;
    std::string questions_file, report_responses;
    report->add_flag("--csv", csv);
    report->add_option("--questions", questions_file, "offline: question list (JSONL)");
    report->add_option("--responses", report_responses, "offline: responses (JSONL)");
    report->callback([&] {
        action = [&] {
            eval::AggregateReport agg;
            if (!questions_file.empty() || !report_responses.empty()) {
                if (questions_file.empty() || report_responses.empty())
                    throw Error("InvalidRequest", "--questions and --responses go together");
                auto qs = eval::parse_questions_jsonl(read_file(questions_file));
                auto rs = eval::parse_responses_jsonl(read_file(report_responses));
                agg = eval::aggregate(rs, qs);
            } else {
                Runtime rt(g.settings(), false);
                agg = rt.service->aggregate_report();
            }
            if (csv)
                std::cout << eval::to_csv(agg);
            else
                print(eval::to_json(agg));
            return 0;
        };
    });

    auto* serve = cli.add_subcommand("serve", "run the HTTP API");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->callback([&] {
        action = [&] {
            auto settings = g.settings();
            const bool live = settings.get("replay_dir") || settings.get_or("backend", "replay") != "replay";
            Runtime rt(settings, live);
            app::HttpApi api(*rt.service);
            std::cerr << "listening on http://" << host << ":" << port << "\n";
            return api.listen(host, port) ? 0 : 1;
        };
    });

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return cli.exit(e);
    }
    try {
        return action ? action() : 0;
    } catch (const app::EditRejected& e) {
        std::cerr << "error " << e.code() << ": " << e.what() << "\n" << e.report().dump(2) << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error " << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
