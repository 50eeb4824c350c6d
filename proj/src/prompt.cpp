// SPDX-License-Identifier: Apache-2.0
#include "quizgen/prompt.hpp"

#include "quizgen/error.hpp"
#include "quizgen/text_util.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace quizgen::prompt {

namespace detail {
extern const std::string_view kMasterPromptSource;
}

namespace {

bool is_name_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

std::string strip_comment_lines(std::string_view source)
{
    std::string out;
    std::size_t p = 0;
    while (p < source.size()) {
        auto nl = source.find('\n', p);
        auto line_end = nl == std::string_view::npos ? source.size() : nl + 1;
        auto line = source.substr(p, line_end - p);
        if (!line.starts_with("##"))
            out += line;
        p = line_end;
    }
    return out;
}

} // namespace

void check_request(const GenerationRequest& request)
{
    if (request.concepts.empty())
        throw Error("InvalidRequest", "at least one concept is required");
    if (request.n_questions < 1 || request.n_questions > kMaxQuestionsPerRequest)
        throw Error("InvalidRequest", "n_questions must be between 1 and 5, got " +
                                          std::to_string(request.n_questions));
    if (request.allowed_types.empty())
        throw Error("InvalidRequest", "allowed_types must not be empty");
    if (request.token_budget == 0)
        throw Error("InvalidRequest", "token_budget must be positive");
}

MasterPromptTemplate parse_template(std::string_view source, std::string version)
{
    MasterPromptTemplate tpl;
    tpl.version = std::move(version);
    const auto text = strip_comment_lines(source);

    std::string literal;
    std::size_t p = 0;
    while (p < text.size()) {
        if (text.compare(p, 2, "{{") == 0) {
            auto close = text.find("}}", p + 2);
            if (close != std::string::npos && close > p + 2) {
                auto name = text.substr(p + 2, close - p - 2);
                if (std::all_of(name.begin(), name.end(), is_name_char)) {
                    if (!literal.empty())
                        tpl.segments.push_back({false, std::move(literal)});
                    literal.clear();
                    tpl.segments.push_back({true, name});
                    p = close + 2;
                    continue;
                }
            }
        }
        literal += text[p++];
    }
    if (!literal.empty())
        tpl.segments.push_back({false, std::move(literal)});
    return tpl;
}

MasterPromptTemplate load_template(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("TemplateNotFound", "cannot read template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_template(ss.str(), path.filename().string());
}

std::string_view default_template_source() noexcept
{
    return detail::kMasterPromptSource;
}

const MasterPromptTemplate& default_template()
{
    static const MasterPromptTemplate tpl = parse_template(detail::kMasterPromptSource,
                                                           std::string(kDefaultTemplateVersion));
    return tpl;
}

const std::set<std::string>& known_placeholders()
{
    static const std::set<std::string> names = {
        "concepts",   "course",      "course_description", "cognitive_dimension",
        "difficulty", "n_questions", "allowed_types",      "learning_objects",
    };
    return names;
}

std::set<std::string> list_placeholders(const MasterPromptTemplate& tpl)
{
    std::set<std::string> names;
    for (const auto& seg : tpl.segments)
        if (seg.placeholder)
            names.insert(seg.text);
    return names;
}

std::string render_concepts(const std::vector<kg::SymbolId>& concepts)
{
    std::vector<std::string> parts;
    for (const auto& c : concepts)
        parts.push_back(std::string(c.name()) + " (" + c.uri + ")");
    return text::join(parts, ", ");
}

std::string render_allowed_types(const std::vector<QuestionType>& types)
{
    std::vector<std::string> parts;
    for (auto t : {QuestionType::MultipleChoice, QuestionType::SingleChoice, QuestionType::FillInTheBlanks}) {
        if (std::find(types.begin(), types.end(), t) == types.end())
            continue;
        switch (t) {
        case QuestionType::MultipleChoice: parts.emplace_back("multiple choice"); break;
        case QuestionType::SingleChoice: parts.emplace_back("single choice"); break;
        case QuestionType::FillInTheBlanks: parts.emplace_back("fill-in-the-blanks"); break;
        }
    }
    return text::join(parts, ", ");
}

std::string assemble_prompt(const MasterPromptTemplate& tpl, const GenerationRequest& request,
                            const context::ContextBundle& context)
{
    check_request(request);
    for (const auto& name : list_placeholders(tpl))
        if (!known_placeholders().contains(name))
            throw Error("UnknownPlaceholder", "template placeholder {{" + name + "}} is not known");

    const std::map<std::string, std::string> values = {
        {"concepts", render_concepts(request.concepts)},
        {"course", request.course_name},
        {"course_description", request.course_description},
        {"cognitive_dimension", std::string(to_string(request.cognitive_dimension))},
        {"difficulty", std::string(to_string(request.difficulty))},
        {"n_questions", std::to_string(request.n_questions)},
        {"allowed_types", render_allowed_types(request.allowed_types)},
        {"learning_objects", context::render_entries(context.entries)},
    };

    std::string out;
    for (const auto& seg : tpl.segments) {
        if (!seg.placeholder) {
            out += seg.text;
            continue;
        }
        const auto& value = values.at(seg.text);
        if (text::trim(value).empty())
            throw Error("MissingPlaceholderValue", "no value for placeholder {{" + seg.text + "}}");
        out += value;
    }
    return out;
}

} // namespace quizgen::prompt
