// SPDX-License-Identifier: Apache-2.0
#include "quizgen/question.hpp"

#include "quizgen/error.hpp"
#include "quizgen/text_util.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <tuple>
#include <limits>
#include <numeric>

namespace quizgen::question {

using nlohmann::ordered_json;
using stex::Node;
using stex::NodeKind;

// ---- Rational -------------------------------------------------------------

Rational::Rational(std::int64_t num, std::int64_t den)
{
    if (den == 0)
        throw Error("InvalidNumber", "zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    auto g = std::gcd(num, den);
    num_ = num / (g ? g : 1);
    den_ = den / (g ? g : 1);
}

Rational Rational::parse(std::string_view s)
{
    s = text::trim(s);
    auto parse_int = [&](std::string_view part) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
            throw Error("InvalidNumber", "not a number: '" + std::string(s) + "'");
        return v;
    };
    if (auto slash = s.find('/'); slash != std::string_view::npos)
        return Rational(parse_int(text::trim(s.substr(0, slash))), parse_int(text::trim(s.substr(slash + 1))));
    if (auto dot = s.find('.'); dot != std::string_view::npos) {
        auto frac = s.substr(dot + 1);
        if (frac.size() > 12)
            throw Error("InvalidNumber", "too many decimals: '" + std::string(s) + "'");
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i)
            den *= 10;
        auto whole_part = s.substr(0, dot);
        bool negative = whole_part.starts_with('-');
        std::int64_t whole = whole_part.empty() || whole_part == "-" ? 0 : parse_int(whole_part);
        std::int64_t f = frac.empty() ? 0 : parse_int(frac);
        if (f < 0)
            throw Error("InvalidNumber", "not a number: '" + std::string(s) + "'");
        auto magnitude = std::abs(whole) * den + f;
        return Rational(negative ? -magnitude : magnitude, den);
    }
    return Rational(parse_int(s));
}

std::string Rational::to_string() const
{
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b)
{
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator-(const Rational& a, const Rational& b)
{
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b)
{
    return a.num_ * b.den_ <=> b.num_ * a.den_;
}

std::string_view to_string(GradingKind kind) noexcept
{
    switch (kind) {
    case GradingKind::Set: return "set";
    case GradingKind::Add: return "add";
    case GradingKind::Deduct: return "deduct";
    }
    return "";
}

std::string_view to_string(ReviewStatus s) noexcept
{
    switch (s) {
    case ReviewStatus::Draft: return "Draft";
    case ReviewStatus::Accepted: return "Accepted";
    case ReviewStatus::Rejected: return "Rejected";
    case ReviewStatus::Edited: return "Edited";
    }
    return "";
}

std::optional<ReviewStatus> parse_review_status(std::string_view s) noexcept
{
    for (auto v : {ReviewStatus::Draft, ReviewStatus::Accepted, ReviewStatus::Rejected, ReviewStatus::Edited})
        if (to_string(v) == s)
            return v;
    return std::nullopt;
}

// ---- extraction -----------------------------------------------------------

namespace {

struct Problem {
    std::optional<QuizQuestion> question;
    std::string reason;
    std::string message;
};

void collect(const Node& n, NodeKind kind, std::vector<const Node*>& out)
{
    stex::walk(n, [&](const Node& m) {
        if (m.kind == kind)
            out.push_back(&m);
    });
}

Problem build_question(const Node& problem, std::string_view text)
{
    QuizQuestion q;
    q.body = problem;
    if (problem.span.end <= text.size())
        q.source = std::string(text.substr(problem.span.begin, problem.span.end - problem.span.begin));
    else
        q.source = stex::serialize(problem);

    for (const auto& child : problem.children) {
        switch (child.kind) {
        case NodeKind::UseModule:
            q.used_modules.push_back({std::string(child.attr("archive")), std::string(child.attr("path"))});
            break;
        case NodeKind::Objective: {
            Annotation a{std::string(child.attr("dimension")), std::string(child.attr("symbol")), child.span};
            (child.attr("macro") == "precondition" ? q.preconditions : q.objectives).push_back(std::move(a));
            break;
        }
        case NodeKind::MultiChoiceBlock:
        case NodeKind::SingleChoiceBlock:
            break;
        default:
            q.stem.push_back(child);
        }
    }

    std::vector<const Node*> mcbs, scbs, blanks;
    collect(problem, NodeKind::MultiChoiceBlock, mcbs);
    collect(problem, NodeKind::SingleChoiceBlock, scbs);
    collect(problem, NodeKind::FillInSol, blanks);
    const auto kinds = int(!mcbs.empty()) + int(!scbs.empty()) + int(!blanks.empty());
    if (kinds == 0)
        return {std::nullopt, "NoAnswerBlock", "problem has no mcb, scb or \\fillinsol"};
    if (kinds > 1 || mcbs.size() > 1 || scbs.size() > 1)
        return {std::nullopt, "MixedAnswerBlocks", "problem has more than one answer block"};
    if (blanks.size() > 1)
        return {std::nullopt, "MultipleBlanks", "problem has more than one \\fillinsol"};

    if (!blanks.empty()) {
        q.qtype = QuestionType::FillInTheBlanks;
        q.fib_solution = std::string(blanks.front()->attr("solution"));
        if (q.fib_solution->find_first_of("\\{}") != std::string::npos)
            return {std::move(q), "FillInNotPlaintext", "\\fillinsol solution must be plain text"};
        return {std::move(q), {}, {}};
    }

    const Node& block = mcbs.empty() ? *scbs.front() : *mcbs.front();
    q.qtype = mcbs.empty() ? QuestionType::SingleChoice : QuestionType::MultipleChoice;
    for (const auto& opt : block.children) {
        if (opt.kind != NodeKind::ChoiceOption)
            continue;
        AnswerOption o;
        o.content = opt.children;
        o.text = stex::serialize_children(opt);
        o.span = opt.span;
        if (!opt.has_attr("flag"))
            return {std::nullopt, "MissingTruthFlag", "answer option without T or F flag"};
        o.correct = opt.attr("flag") == "T";
        if (opt.has_attr("feedback") && !text::trim(opt.attr("feedback")).empty())
            o.feedback = std::string(opt.attr("feedback"));
        for (auto kind : {GradingKind::Set, GradingKind::Add, GradingKind::Deduct}) {
            auto key = "kv.opt." + std::string(to_string(kind));
            if (!opt.has_attr(key))
                continue;
            if (o.grading_action)
                return {std::nullopt, "MalformedGradingAction", "answer option has more than one grading action"};
            try {
                auto points = Rational::parse(opt.attr(key));
                if (points < Rational(0))
                    return {std::nullopt, "MalformedGradingAction", "grading points must be non-negative"};
                o.grading_action = GradingAction{kind, points};
            } catch (const Error& e) {
                return {std::nullopt, "MalformedGradingAction", e.what()};
            }
        }
        q.options.push_back(std::move(o));
    }

    const auto n_true = std::count_if(q.options.begin(), q.options.end(), [](auto& o) { return o.correct; });
    if (q.qtype == QuestionType::SingleChoice && n_true > 1)
        return {std::move(q), "SingleChoiceMultipleTrue", "single choice block has more than one true option"};
    if (q.qtype == QuestionType::SingleChoice && n_true == 0)
        return {std::move(q), "SingleChoiceNoTrue", "single choice block has no true option"};
    if (q.qtype == QuestionType::MultipleChoice && n_true == 0)
        return {std::move(q), "MultipleChoiceNoTrue", "multiple choice block has no true option"};
    return {std::move(q), {}, {}};
}

} // namespace

Extraction from_ast(const stex::DocumentAst& ast, std::string_view text, std::string_view id_prefix)
{
    std::vector<const Node*> problems;
    std::function<void(const Node&)> find = [&](const Node& n) {
        if (n.kind == NodeKind::Problem) {
            problems.push_back(&n);
            return;
        }
        for (const auto& c : n.children)
            find(c);
    };
    find(ast.root);

    Extraction out;
    for (std::size_t k = 0; k < problems.size(); ++k) {
        auto built = build_question(*problems[k], text);
        if (built.question)
            built.question->id = std::string(id_prefix) + std::to_string(k + 1);
        if (built.reason.empty())
            out.questions.push_back(std::move(*built.question));
        else
            out.rejects.push_back({built.reason, built.message, problems[k]->span, std::move(built.question)});
    }
    return out;
}

QuizQuestion question_from_source(std::string id, const std::string& source)
{
    auto ast = stex::parse_document({id, source, stex::Origin::GeneratedOutput});
    auto ex = from_ast(ast, source);
    std::vector<QuizQuestion> all = std::move(ex.questions);
    for (auto& r : ex.rejects) {
        if (!r.candidate)
            throw Error("NotAQuestion", r.reason + ": " + r.message);
        all.push_back(std::move(*r.candidate));
    }
    if (all.size() != 1)
        throw Error("NotAQuestion", "expected exactly one sproblem, found " + std::to_string(all.size()));
    all.front().id = std::move(id);
    return std::move(all.front());
}

std::vector<kg::ModuleId> question_scope(const QuizQuestion& q, const kg::KnowledgeGraph& graph)
{
    std::vector<kg::ModuleId> scope;
    for (const auto& ref : q.used_modules)
        if (auto id = kg::resolve_module(graph, ref))
            scope.push_back(*id);
    return scope;
}

std::vector<stex::SymbolReference> body_references(const QuizQuestion& q)
{
    std::vector<stex::SymbolReference> refs;
    for (const auto& n : q.stem)
        for (auto& r : stex::extract_symbol_references(n))
            refs.push_back(std::move(r));
    for (const auto& o : q.options)
        for (const auto& n : o.content)
            for (auto& r : stex::extract_symbol_references(n))
                refs.push_back(std::move(r));
    return refs;
}

// ---- prerequisites --------------------------------------------------------

PrerequisiteResult extract_prerequisites(const QuizQuestion& q, const kg::KnowledgeGraph& graph)
{
    const auto scope = question_scope(q, graph);
    PrerequisiteResult out;
    std::set<std::pair<std::string, CognitiveDimension>> seen;

    auto add = [&](std::string_view dim_text, const std::string& name, stex::Span span) {
        auto dim = parse_dimension(dim_text);
        if (!dim) {
            out.unresolved.push_back({name, std::string(dim_text), "InvalidDimension", span});
            return;
        }
        auto r = kg::try_resolve(graph, name, scope);
        if (r.status != kg::ResolutionStatus::Resolved) {
            out.unresolved.push_back({name, std::string(dim_text),
                                      r.status == kg::ResolutionStatus::Ambiguous ? "AmbiguousSymbol" : "UnknownSymbol",
                                      span});
            return;
        }
        if (seen.insert({r.symbol->uri, *dim}).second)
            out.prerequisites.push_back({*dim, *r.symbol});
    };

    for (const auto& p : q.preconditions)
        add(p.dimension, p.symbol, p.span);
    for (const auto& ref : body_references(q))
        add("remember", ref.name, ref.span);

    std::sort(out.prerequisites.begin(), out.prerequisites.end(), [](const auto& a, const auto& b) {
        return std::tie(a.symbol, a.dimension) < std::tie(b.symbol, b.dimension);
    });
    return out;
}

// ---- grading --------------------------------------------------------------

GradeResult grade(const QuizQuestion& q, const StudentResponse& r, Rational default_points, Audience audience)
{
    GradeResult result;
    if (q.qtype == QuestionType::FillInTheBlanks) {
        if (!r.typed || !r.selected.empty())
            throw Error("ShapeMismatch", "fill-in-the-blanks response needs typed text and no selection");
        result.correct = q.fib_solution && text::trim(*r.typed) == *q.fib_solution;
        result.points = result.correct ? default_points : Rational(0);
        return result;
    }

    if (r.typed)
        throw Error("ShapeMismatch", "choice response must not contain typed text");
    for (auto i : r.selected)
        if (i >= q.options.size())
            throw Error("ShapeMismatch", "option index " + std::to_string(i) + " out of range");
    if (q.qtype == QuestionType::SingleChoice && r.selected.size() > 1)
        throw Error("ShapeMismatch", "single choice response selects more than one option");

    std::set<std::size_t> expected;
    for (std::size_t i = 0; i < q.options.size(); ++i)
        if (q.options[i].correct)
            expected.insert(i);
    result.correct = r.selected == expected;

    const bool has_actions =
        std::any_of(q.options.begin(), q.options.end(), [](const auto& o) { return o.grading_action.has_value(); });
    if (!has_actions) {
        result.points = result.correct ? default_points : Rational(0);
    } else {
        Rational points(0);
        for (auto i : r.selected) {
            const auto& action = q.options[i].grading_action;
            if (!action)
                continue;
            switch (action->kind) {
            case GradingKind::Set: points = action->points; break;
            case GradingKind::Add: points = points + action->points; break;
            case GradingKind::Deduct: points = points - action->points; break;
            }
        }
        result.points = std::max(points, Rational(0));
    }

    for (std::size_t i = 0; i < q.options.size(); ++i) {
        const auto& o = q.options[i];
        if (!o.feedback)
            continue;
        const bool chosen = r.selected.contains(i);
        const bool missed = !chosen && o.correct && audience == Audience::Instructor;
        if (chosen || missed)
            result.triggered_feedback.emplace_back(i, *o.feedback);
    }
    return result;
}

// ---- render model ---------------------------------------------------------

namespace {

std::string_view math_closer(std::string_view open)
{
    if (open == "\\[")
        return "\\]";
    if (open == "\\(")
        return "\\)";
    return open;
}

struct RichText {
    std::string html;
    ordered_json symbols = ordered_json::array();
};

class Renderer {
public:
    Renderer(const QuizQuestion& q, Audience audience, const kg::KnowledgeGraph* graph)
        : audience_(audience), graph_(graph)
    {
        if (graph)
            scope_ = question_scope(q, *graph);
    }

    ordered_json rich(const std::vector<Node>& nodes)
    {
        RichText out;
        for (const auto& n : nodes)
            render(n, out);
        return {{"html", text::trim(out.html)}, {"symbols", out.symbols}};
    }

    ordered_json rich(std::string_view source) { return rich(stex::parse_nodes(source)); }

    std::optional<std::string> uri_of(const std::string& name) const
    {
        if (!graph_)
            return std::nullopt;
        auto r = kg::try_resolve(*graph_, name, scope_);
        if (r.status != kg::ResolutionStatus::Resolved)
            return std::nullopt;
        return r.symbol->uri;
    }

private:
    void render(const Node& n, RichText& out)
    {
        switch (n.kind) {
        case NodeKind::Text:
            if (n.has_attr("open")) {
                for (const auto& c : n.children)
                    render(c, out);
            } else {
                out.html += text::html_escape(n.attr("text"));
            }
            return;
        case NodeKind::Math:
            out.html += "<span class=\"math\">" +
                        text::html_escape(std::string(n.attr("delim")) + std::string(n.attr("body")) +
                                          std::string(math_closer(n.attr("delim")))) +
                        "</span>";
            return;
        case NodeKind::SymbolRef: {
            const std::string name(n.attr("name"));
            const std::string verbal = n.attr("form") == "sn" ? name : std::string(n.attr("verbalization"));
            const auto uri = uri_of(name);
            out.html += "<span class=\"symref\" data-symbol=\"" + text::html_escape(uri.value_or(name)) +
                        "\" data-verbalization=\"" + text::html_escape(verbal) + "\"";
            if (!uri)
                out.html += " data-unresolved=\"true\"";
            out.html += ">" + text::html_escape(verbal) + "</span>";
            ordered_json sym = {{"name", name}, {"uri", nullptr}, {"verbalization", verbal}};
            if (uri)
                sym["uri"] = *uri;
            out.symbols.push_back(std::move(sym));
            return;
        }
        case NodeKind::FillInSol:
            out.html += "<input class=\"fillinsol\" type=\"text\">";
            return;
        case NodeKind::SectionMarker:
            out.html += text::html_escape(n.attr("title"));
            return;
        case NodeKind::UseModule:
        case NodeKind::Objective:
        case NodeKind::SymbolDecl:
        case NodeKind::SymbolDef:
            return;
        default:
            for (const auto& c : n.children)
                render(c, out);
        }
    }

    Audience audience_;
    const kg::KnowledgeGraph* graph_;
    std::vector<kg::ModuleId> scope_;
};

ordered_json annotations_json(const std::vector<Annotation>& list, const Renderer& renderer)
{
    auto arr = ordered_json::array();
    for (const auto& a : list) {
        ordered_json j = {{"dimension", a.dimension}, {"symbol", a.symbol}, {"uri", nullptr}};
        if (auto uri = renderer.uri_of(a.symbol))
            j["uri"] = *uri;
        arr.push_back(std::move(j));
    }
    return arr;
}

ordered_json grading_json(const std::optional<GradingAction>& g)
{
    if (!g)
        return nullptr;
    return {{"kind", to_string(g->kind)}, {"points", g->points.to_string()}};
}

} // namespace

ordered_json to_render_model(const QuizQuestion& q, Audience audience, const kg::KnowledgeGraph* graph)
{
    Renderer renderer(q, audience, graph);
    const bool instructor = audience == Audience::Instructor;

    ordered_json j;
    j["schema"] = "quizgen-render/1";
    j["audience"] = instructor ? "instructor" : "student";
    j["id"] = q.id;
    j["type"] = to_string(q.qtype);
    j["stem"] = renderer.rich(q.stem);
    j["options"] = ordered_json::array();
    for (std::size_t i = 0; i < q.options.size(); ++i) {
        const auto& o = q.options[i];
        ordered_json opt = {{"index", i}, {"content", renderer.rich(o.content)}};
        if (instructor) {
            opt["correct"] = o.correct;
            opt["feedback"] = o.feedback ? renderer.rich(*o.feedback) : ordered_json(nullptr);
            opt["grading_action"] = grading_json(o.grading_action);
        }
        j["options"].push_back(std::move(opt));
    }
    j["has_blank"] = q.qtype == QuestionType::FillInTheBlanks;
    if (instructor) {
        j["solution"] = q.fib_solution ? ordered_json(*q.fib_solution) : ordered_json(nullptr);
        j["objectives"] = annotations_json(q.objectives, renderer);
        j["preconditions"] = annotations_json(q.preconditions, renderer);
        j["used_modules"] = ordered_json::array();
        for (const auto& m : q.used_modules)
            j["used_modules"].push_back(m.to_string());
        j["review_status"] = to_string(q.review_status);
        j["source"] = q.source;
    }
    return j;
}

ordered_json to_json(const QuizQuestion& q)
{
    ordered_json j;
    j["id"] = q.id;
    j["type"] = to_string(q.qtype);
    j["review_status"] = to_string(q.review_status);
    j["source"] = q.source;
    j["options"] = ordered_json::array();
    for (const auto& o : q.options)
        j["options"].push_back({{"text", o.text},
                                {"correct", o.correct},
                                {"feedback", o.feedback ? ordered_json(*o.feedback) : ordered_json(nullptr)},
                                {"grading_action", grading_json(o.grading_action)}});
    j["fib_solution"] = q.fib_solution ? ordered_json(*q.fib_solution) : ordered_json(nullptr);
    auto ann = [](const std::vector<Annotation>& list) {
        auto arr = ordered_json::array();
        for (const auto& a : list)
            arr.push_back({{"dimension", a.dimension}, {"symbol", a.symbol}});
        return arr;
    };
    j["objectives"] = ann(q.objectives);
    j["preconditions"] = ann(q.preconditions);
    j["used_modules"] = ordered_json::array();
    for (const auto& m : q.used_modules)
        j["used_modules"].push_back({{"archive", m.archive}, {"path", m.path}});
    return j;
}

ordered_json to_json(const GradeResult& g)
{
    ordered_json j;
    j["correct"] = g.correct;
    j["points"] = g.points.to_string();
    j["triggered_feedback"] = ordered_json::array();
    for (const auto& [i, text] : g.triggered_feedback)
        j["triggered_feedback"].push_back({{"option", i}, {"feedback", text}});
    return j;
}

} // namespace quizgen::question
