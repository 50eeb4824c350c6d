// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "quizgen/service.hpp"
#include "quizgen/validator.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;

namespace quizgen::testing {

fs::path fixture(const std::string& relative)
{
    return fs::path(QUIZGEN_FIXTURE_DIR) / relative;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> all_tex_fixtures()
{
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(QUIZGEN_FIXTURE_DIR))
        if (e.is_regular_file() && e.path().extension() == ".tex")
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

const kg::KnowledgeGraph& course_graph()
{
    static const auto graph = kg::build_graph(app::load_manifest(fixture("corpora/ai-course-mini/manifest.txt")));
    return graph;
}

const kg::KnowledgeGraph& smglom_graph()
{
    static const auto graph = kg::build_graph(app::load_manifest(fixture("corpora/smglom-mini/manifest.txt")));
    return graph;
}

std::map<std::string, std::string> headers(const std::string& text)
{
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line) && line.starts_with("% ");) {
        auto colon = line.find(':');
        if (colon == std::string::npos)
            continue;
        auto value = line.substr(colon + 1);
        value.erase(0, value.find_first_not_of(' '));
        out[line.substr(2, colon - 2)] = value;
    }
    return out;
}

prompt::GenerationRequest canonical_request()
{
    prompt::GenerationRequest r;
    r.concepts = {kg::SymbolId{"course/arc-consistency.tex?arc-consistency?arc-consistency"}};
    r.course_name = "Artificial Intelligence";
    r.course_description =
        "An introductory course on symbolic AI: search, constraint satisfaction, logic and planning.";
    r.cognitive_dimension = CognitiveDimension::Understand;
    r.difficulty = Difficulty::Medium;
    r.n_questions = 5;
    r.allowed_types = {QuestionType::MultipleChoice, QuestionType::SingleChoice, QuestionType::FillInTheBlanks};
    r.granularity = Granularity::Section;
    return r;
}

std::string canonical_prompt()
{
    auto r = canonical_request();
    auto ctx = context::build_context(course_graph(), r.concepts, r.granularity, r.token_budget);
    return prompt::assemble_prompt(prompt::default_template(), r, ctx);
}

const std::vector<std::string>& iteration_sentences()
{
    static const std::vector<std::string> sentences = {
        "We do not want students to rote-memorize definitions, examples, or other text\n"
        "  in the learning objects, so never make the correct answer dependent on such\n"
        "  details (e.g. variable names, particular examples, etc.).",
        "Do not put any text in the LaTeX code that directly states which answer is\n"
        "  correct - the sTeX macros used above take optional arguments explicitly for\n"
        "  that purpose.",
        "Note that students are limited to replying to a question in the form the\n"
        "  question type is posed in, i.e. ticking boxes in single/multiple choice\n"
        "  questions, or filling in a short text in fill-in-the-blanks questions.",
        "They can not provide any additional text.",
        "The correct answer must be unambiguous, particularly for\n"
        "  fill-in-the-blanks questions.",
        "Importantly, the evaluation of student's answers in \\fillinsol is done\n"
        "  automatically via string matching, so \\fillinsol can only contain plain\n"
        "  text, no LaTeX code, and students need to type in the answer exactly to\n"
        "  get any points.",
    };
    return sentences;
}

fs::path scratch_dir(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("quizgen-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<MutantRun> run_mutants()
{
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(fixture("mutants")))
        if (e.path().extension() == ".tex")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::vector<MutantRun> out;
    for (const auto& path : files) {
        const auto text = slurp(path);
        const auto h = headers(text);
        auto q = question::question_from_source(path.stem().string(), text);
        MutantRun run{path.filename().string(), h.count("expect") ? h.at("expect") : std::string{}, {}};
        std::optional<prompt::GenerationRequest> request;
        if (h.count("types")) {
            request = canonical_request();
            request->allowed_types.clear();
            std::istringstream types(h.at("types"));
            for (std::string t; std::getline(types, t, ',');)
                request->allowed_types.push_back(*parse_question_type(t));
        }
        auto report = validator::validate(q, course_graph(), request ? &*request : nullptr);
        for (const auto& i : report.issues)
            run.codes.push_back(i.code);
        out.push_back(std::move(run));
    }
    return out;
}

} // namespace quizgen::testing
