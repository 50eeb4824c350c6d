// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include "quizgen/context.hpp"
#include "quizgen/evaluation.hpp"
#include "quizgen/question.hpp"
#include "quizgen/service.hpp"
#include "quizgen/stex.hpp"
#include "quizgen/validator.hpp"

#include "support.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

using namespace quizgen;
using quizgen::testing::fixture;
using quizgen::testing::slurp;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond) {
            if (!ok)
                detail << "; ";
            else
                detail.str("");
            ok = false;
            detail << what;
        }
    }
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void parser_round_trip(Outcome& o)
{
    const auto t0 = Clock::now();
    const auto files = testing::all_tex_fixtures();
    std::size_t equal = 0;
    for (const auto& f : files) {
        const auto text = slurp(f);
        try {
            auto first = stex::parse_document({f.string(), text, stex::Origin::CourseMaterial});
            auto again = stex::parse_document({f.string(), stex::serialize(first), stex::Origin::CourseMaterial});
            if (stex::structurally_equal(first.root, again.root))
                ++equal;
            else
                o.require(false, "not equal: " + f.filename().string());
        } catch (const std::exception& e) {
            o.require(false, f.filename().string() + ": " + e.what());
        }
    }
    const double secs = seconds_since(t0);
    o.require(files.size() >= 25, "only " + std::to_string(files.size()) + " fixtures");
    for (auto name : {"exemplar-mcq.tex", "exemplar-scq.tex", "exemplar-fib.tex"})
        o.require(std::find(files.begin(), files.end(), fixture(std::string("questions/") + name)) != files.end(),
                  std::string("missing ") + name);
    o.require(secs < 10.0, "took " + std::to_string(secs) + " s");
    if (o.ok)
        o.detail << equal << "/" << files.size() << " fixtures round-trip in " << secs << " s";
}

void two_plus_two(Outcome& o)
{
    auto q = question::question_from_source("two-plus-two", slurp(fixture("questions/two-plus-two.tex")));
    auto p = question::extract_prerequisites(q, testing::smglom_graph());
    std::ostringstream got;
    got << "[";
    for (std::size_t i = 0; i < p.prerequisites.size(); ++i)
        got << (i ? ", " : "") << "(" << to_string(p.prerequisites[i].dimension) << ", "
            << p.prerequisites[i].symbol.name() << ")";
    got << "]";
    o.require(got.str() == "[(remember, plus)]", "got " + got.str());
    o.require(p.unresolved.empty(), "unresolved symbols present");
    if (o.ok)
        o.detail << got.str();
}

// Option flags read straight from the macros, independent of the parser.
std::vector<bool> raw_flags(const std::string& source)
{
    static const std::regex opt(R"(\\(?:mcc|scc)\[([TF]))");
    std::vector<bool> out;
    for (auto it = std::sregex_iterator(source.begin(), source.end(), opt); it != std::sregex_iterator(); ++it)
        out.push_back((*it)[1] == "T");
    return out;
}

void grading_oracle(Outcome& o)
{
    std::size_t questions = 0, cases = 0, disagreements = 0;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(fixture("questions")))
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const auto src = slurp(f);
        auto ast = stex::parse_document({f.filename().string(), src, stex::Origin::GeneratedOutput});
        for (const auto& q : question::from_ast(ast, src).questions) {
            if (q.qtype == QuestionType::FillInTheBlanks || q.options.size() > 4)
                continue;
            const auto flags = raw_flags(q.source);
            if (flags.size() != q.options.size()) {
                o.require(false, f.filename().string() + ": option count differs from source");
                continue;
            }
            ++questions;
            const std::size_t n = flags.size();
            for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
                std::set<std::size_t> sel;
                for (std::size_t i = 0; i < n; ++i)
                    if (mask & (std::size_t(1) << i))
                        sel.insert(i);
                if (q.qtype == QuestionType::SingleChoice && sel.size() != 1)
                    continue;
                bool want = true;
                for (std::size_t i = 0; i < n; ++i)
                    want = want && flags[i] == sel.contains(i);
                ++cases;
                disagreements += question::grade(q, {sel, {}}).correct != want;
            }
        }
    }
    o.require(questions > 0, "no choice questions with at most 4 options");
    o.require(disagreements == 0, std::to_string(disagreements) + " disagreements");

    auto fib = question::question_from_source("fib", "\\begin{sproblem}\n  6 times 7 is \\fillinsol{42}\n\\end{sproblem}\n");
    const std::vector<std::pair<std::string, bool>> trims = {
        {"42", true}, {"  42 ", true}, {"\t42\n", true}, {"42.", false}, {"4 2", false}, {"", false}, {" 042", false},
    };
    std::size_t trim_ok = 0;
    for (const auto& [typed, want] : trims) {
        const bool got = question::grade(fib, {{}, typed}).correct;
        trim_ok += got == want;
        o.require(got == want, "trim case '" + typed + "'");
    }
    if (o.ok)
        o.detail << questions << " questions, " << cases << " responses, 0 disagreements; " << trim_ok << "/"
                 << trims.size() << " trim cases";
}

void seeded_defects(Outcome& o)
{
    const auto runs = testing::run_mutants();
    o.require(runs.size() >= 18, "only " + std::to_string(runs.size()) + " mutants");
    std::size_t tp = 0, fp = 0, fn = 0;
    std::set<std::string> covered;
    for (const auto& r : runs) {
        covered.insert(r.expected);
        std::set<std::string> flagged;
        for (const auto& c : r.codes) {
            const auto* info = validator::find_code(c);
            if (info && info->severity == validator::Severity::Error)
                flagged.insert(c);
        }
        const bool hit = flagged.contains(r.expected);
        tp += hit;
        fn += !hit;
        fp += flagged.size() - (hit ? 1 : 0);
        o.require(flagged == std::set<std::string>{r.expected}, r.file + " flagged wrongly");
    }
    std::size_t error_codes = 0;
    for (const auto& c : validator::defect_taxonomy())
        if (c.severity == validator::Severity::Error) {
            ++error_codes;
            o.require(covered.contains(std::string(c.code)), "no mutant for " + std::string(c.code));
        }
    const double precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    o.require(precision == 1.0 && recall == 1.0, "precision " + std::to_string(precision) + ", recall " +
                                                      std::to_string(recall));

    std::size_t pass = 0;
    for (auto name : {"exemplar-mcq.tex", "exemplar-scq.tex", "exemplar-fib.tex"}) {
        auto q = question::question_from_source(name, slurp(fixture(std::string("questions/") + name)));
        const bool ok = validator::validate(q, testing::smglom_graph()).verdict == validator::Verdict::Pass;
        pass += ok;
        o.require(ok, std::string(name) + " does not validate Pass");
    }
    if (o.ok)
        o.detail << runs.size() << " mutants over " << error_codes << " error codes, precision 1.0, recall 1.0; "
                 << pass << "/3 exemplars Pass";
}

void replay_determinism(Outcome& o)
{
    const auto t0 = Clock::now();
    const auto request =
        app::api_request_from_json(nlohmann::json::parse(slurp(fixture("replay/arc-consistency-session/request.json"))));
    std::vector<std::map<std::string, std::string>> runs;
    for (int i = 0; i < 2; ++i) {
        store::Store st(":memory:");
        llm::ReplayBackend replay(fixture("replay/arc-consistency-session/store"));
        app::Service svc(st, replay);
        svc.ingest_corpus(fixture("corpora/ai-course-mini/manifest.txt"));
        auto result = svc.run_generation_pipeline(request);
        std::map<std::string, std::string> persisted;
        for (const auto& d : result.drafts)
            for (const auto& r : st.history(store::Kind::Draft, d.question.id))
                persisted["draft/" + d.question.id + "/" + std::to_string(r.revision)] = r.payload;
        for (const auto& r : st.history(store::Kind::Transcript, result.transcript_id))
            persisted["transcript/" + result.transcript_id + "/" + std::to_string(r.revision)] = r.payload;
        o.require(!result.drafts.empty(), "no drafts generated");
        runs.push_back(std::move(persisted));
    }
    const double secs = seconds_since(t0);
    o.require(runs[0] == runs[1], "persisted payloads differ between runs");
    o.require(secs < 5.0, "took " + std::to_string(secs) + " s");
    if (o.ok)
        o.detail << runs[0].size() << " persisted records byte-identical across 2 runs in " << secs << " s";
}

void retrieval(Outcome& o)
{
    const auto& g = testing::course_graph();
    const std::vector<std::pair<std::string, std::string>> topics = {
        {"Arc Consistency", "course/arc-consistency.tex?arc-consistency?arc-consistency"},
        {"Alpha-Beta Search", "course/alpha-beta.tex?alpha-beta?alpha-beta-pruning"},
        {"Semantics of Propositional Logic", "course/prop-semantics.tex?prop-semantics?entailment"},
        {"Syntax of First-Order Logic", "course/fol-syntax.tex?fol-syntax?term"},
        {"The STRIPS Model", "course/strips.tex?strips?strips-task"},
        {"The Delete Relaxation", "course/delete-relaxation.tex?delete-relaxation?relaxed-plan"},
    };
    std::size_t entries = 0;
    for (const auto& [title, uri] : topics) {
        std::optional<std::size_t> root;
        for (const auto& s : g.sections)
            if (s.title == title)
                root = s.index;
        if (!root) {
            o.require(false, "no section " + title);
            continue;
        }
        std::vector<std::string> walk;
        std::function<void(std::size_t)> visit = [&](std::size_t s) {
            walk.insert(walk.end(), g.sections[s].fragment_ids.begin(), g.sections[s].fragment_ids.end());
            for (auto c : g.sections[s].children)
                visit(c);
        };
        visit(*root);
        std::sort(walk.begin(), walk.end(), [&](const auto& a, const auto& b) {
            return g.find_fragment(a)->index < g.find_fragment(b)->index;
        });

        const kg::SymbolId concepts[] = {kg::SymbolId{uri}};
        auto b = context::build_context(g, concepts, Granularity::Section);
        std::vector<std::string> got;
        for (const auto& e : b.entries)
            got.push_back(e.fragment_id);
        o.require(got == walk, title + ": entries differ from the section walk");
        const auto rendered = context::render_entries(b.entries);
        for (const auto& e : b.entries)
            o.require(rendered.find(e.fragment_id + "\n```\n" + e.text + "\n```") != std::string::npos,
                      title + ": entry " + e.fragment_id + " not prefixed with its id");
        entries += b.entries.size();
    }
    if (o.ok)
        o.detail << topics.size() << " topics, " << entries << " entries, all id-prefixed";
}

void survey_counts(Outcome& o)
{
    const auto rs = eval::parse_responses_jsonl(slurp(fixture("survey/paper-counts/responses.jsonl")));
    const auto qs = eval::parse_questions_jsonl(slurp(fixture("survey/paper-counts/questions.jsonl")));
    const auto r = eval::aggregate(rs, qs);
    auto frac = [](const eval::Count& c) { return std::to_string(c.count) + "/" + std::to_string(c.total); };
    auto type_count = [&](QuestionType t) {
        auto it = r.type_distribution.find(t);
        return it == r.type_distribution.end() ? 0 : int(it->second);
    };
    o.require(frac(r.agreement[0]) == "28/30", "FIT " + frac(r.agreement[0]));
    o.require(frac(r.agreement[1]) == "27/30", "solvable " + frac(r.agreement[1]));
    o.require(frac(r.erroneous) == "11/30", "erroneous " + frac(r.erroneous));
    const std::string types = std::to_string(type_count(QuestionType::SingleChoice)) + "/" +
                              std::to_string(type_count(QuestionType::MultipleChoice)) + "/" +
                              std::to_string(type_count(QuestionType::FillInTheBlanks));
    o.require(types == "12/18/0", "types " + types);
    if (o.ok)
        o.detail << "FIT " << frac(r.agreement[0]) << ", solvable " << frac(r.agreement[1]) << ", erroneous "
                 << frac(r.erroneous) << ", SC/MC/FIB " << types;
}

void prompt_snapshot(Outcome& o)
{
    const auto actual = testing::canonical_prompt();
    o.require(actual == slurp(fixture("snapshots/canonical_prompt.txt")), "prompt differs from the snapshot");
    std::size_t found = 0;
    for (const auto& s : testing::iteration_sentences()) {
        const bool hit = actual.find(s) != std::string::npos;
        found += hit;
        o.require(hit, "missing sentence: " + s.substr(0, 40));
    }
    o.require(testing::iteration_sentences().size() == 6, "expected six iteration sentences");

    std::size_t best = 0;
    for (auto p = actual.find("\\begin{mcb}"); p != std::string::npos; p = actual.find("\\begin{mcb}", p + 1)) {
        const auto end = actual.find("\\end{mcb}", p);
        const auto block = actual.substr(p, end == std::string::npos ? std::string::npos : end - p);
        std::size_t truths = 0;
        for (auto t = block.find("\\mcc[T"); t != std::string::npos; t = block.find("\\mcc[T", t + 1))
            ++truths;
        best = std::max(best, truths);
    }
    o.require(best >= 2, "no MCQ exemplar with at least two true options");
    if (o.ok)
        o.detail << actual.size() << " bytes match, " << found << "/6 sentences, MCQ exemplar with " << best
                 << " true options";
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"parser round-trip", parser_round_trip},
        {"prerequisite rule", two_plus_two},
        {"grading oracle", grading_oracle},
        {"validator seeded defects", seeded_defects},
        {"replay determinism", replay_determinism},
        {"retrieval", retrieval},
        {"survey aggregates", survey_counts},
        {"prompt snapshot", prompt_snapshot},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            check(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        failed += !o.ok;
        std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << "\n";
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed\n";
    return failed == 0 ? 0 : 1;
}
