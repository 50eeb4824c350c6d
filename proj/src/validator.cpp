// SPDX-License-Identifier: Apache-2.0
#include "quizgen/validator.hpp"

#include "quizgen/text_util.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <tuple>

namespace quizgen::validator {

using question::QuizQuestion;
using stex::Node;
using stex::NodeKind;

std::string_view to_string(Category c) noexcept
{
    switch (c) {
    case Category::Structural: return "Structural";
    case Category::Relational: return "Relational";
    case Category::Feedback: return "Feedback";
    case Category::Leakage: return "Leakage";
    case Category::Format: return "Format";
    }
    return "";
}

std::string_view to_string(Severity s) noexcept
{
    return s == Severity::Error ? "Error" : "Warning";
}

std::string_view to_string(Verdict v) noexcept
{
    switch (v) {
    case Verdict::Pass: return "Pass";
    case Verdict::PassWithWarnings: return "PassWithWarnings";
    case Verdict::Fail: return "Fail";
    }
    return "";
}

namespace {

constexpr std::array kTaxonomy = {
    CodeInfo{"MISSING_OBJECTIVE", Category::Structural, Severity::Error, "the problem declares no \\objective"},
    CodeInfo{"INVALID_DIMENSION", Category::Structural, Severity::Error,
             "an objective or precondition names a dimension outside the six taxonomy levels"},
    CodeInfo{"SC_MULTIPLE_TRUE", Category::Structural, Severity::Error, "single choice block with several [T] options"},
    CodeInfo{"SC_NO_TRUE", Category::Structural, Severity::Error, "single choice block without a [T] option"},
    CodeInfo{"MC_NO_TRUE", Category::Structural, Severity::Error, "multiple choice block without a [T] option"},
    CodeInfo{"FIB_NOT_PLAINTEXT", Category::Structural, Severity::Error,
             "\\fillinsol solution contains a backslash or braces"},
    CodeInfo{"WRONG_TYPE", Category::Format, Severity::Error, "question type not among the requested types"},
    CodeInfo{"HALLUCINATED_SYMBOL", Category::Relational, Severity::Error,
             "a referenced symbol is not visible through the question's imports"},
    CodeInfo{"DANGLING_USEMODULE", Category::Relational, Severity::Error, "\\usemodule target not in the corpus"},
    CodeInfo{"AMBIGUOUS_SYMBOL", Category::Relational, Severity::Warning,
             "a referenced name resolves to several visible symbols"},
    CodeInfo{"UNANNOTATED_TERM", Category::Relational, Severity::Warning,
             "the stem mentions a visible symbol in plain text without a reference"},
    CodeInfo{"MISSING_FEEDBACK", Category::Feedback, Severity::Warning, "an incorrect option has no feedback"},
    CodeInfo{"UNINFORMATIVE_FEEDBACK", Category::Feedback, Severity::Warning,
             "feedback merely restates the option text"},
    CodeInfo{"ANSWER_LEAK", Category::Leakage, Severity::Error,
             "option text reveals correctness or contains its own feedback"},
};

constexpr std::array<std::string_view, 6> kNegations = {"it is not the case that", "incorrect", "wrong",
                                                        "false",                   "not",       "no"};

constexpr std::array<std::string_view, 5> kLeakMarkers = {"correct answer", "this is correct", "(correct)", "(true)",
                                                           "(false)"};

ValidationIssue issue(std::string_view code, std::optional<stex::Span> span, std::string message)
{
    const auto* info = find_code(code);
    return {info->category, std::string(code), info->severity, span, std::move(message)};
}

class Relativizer {
public:
    explicit Relativizer(const QuizQuestion& q) : base_(q.body.span.begin) {}
    stex::Span operator()(stex::Span s) const
    {
        return {s.begin >= base_ ? s.begin - base_ : 0, s.end >= base_ ? s.end - base_ : 0};
    }

private:
    std::size_t base_;
};

void stem_text(const Node& n, std::string& out)
{
    if (n.kind == NodeKind::Text && !n.has_attr("open")) {
        out += n.attr("text");
        out += ' ';
        return;
    }
    if (n.kind == NodeKind::Math || n.kind == NodeKind::SymbolRef)
        return;
    for (const auto& c : n.children)
        stem_text(c, out);
}

bool contains_phrase(const std::vector<std::string>& haystack, const std::vector<std::string>& phrase)
{
    if (phrase.empty() || phrase.size() > haystack.size())
        return false;
    return std::search(haystack.begin(), haystack.end(), phrase.begin(), phrase.end()) != haystack.end();
}

} // namespace

std::span<const CodeInfo> defect_taxonomy() noexcept
{
    return kTaxonomy;
}

const CodeInfo* find_code(std::string_view code) noexcept
{
    for (const auto& c : kTaxonomy)
        if (c.code == code)
            return &c;
    return nullptr;
}

std::span<const std::string_view> negation_prefixes() noexcept
{
    return kNegations;
}

std::vector<std::string> normalize_feedback(std::string_view feedback)
{
    auto tokens = text::words_without_macros(feedback);
    bool changed = true;
    while (changed && !tokens.empty()) {
        changed = false;
        for (auto prefix : kNegations) {
            auto phrase = text::words(prefix);
            if (phrase.size() <= tokens.size() && std::equal(phrase.begin(), phrase.end(), tokens.begin())) {
                tokens.erase(tokens.begin(), tokens.begin() + std::ptrdiff_t(phrase.size()));
                changed = true;
                break;
            }
        }
    }
    return tokens;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    if (sa.empty() && sb.empty())
        return 0.0;
    std::size_t common = 0;
    for (const auto& t : sa)
        common += sb.contains(t);
    return double(common) / double(sa.size() + sb.size() - common);
}

std::vector<ValidationIssue> validate_structural(const QuizQuestion& q, const prompt::GenerationRequest* request)
{
    Relativizer rel(q);
    std::vector<ValidationIssue> out;
    if (q.objectives.empty())
        out.push_back(issue("MISSING_OBJECTIVE", std::nullopt, "question has no \\objective"));
    for (const auto* list : {&q.objectives, &q.preconditions})
        for (const auto& a : *list)
            if (!parse_dimension(a.dimension))
                out.push_back(issue("INVALID_DIMENSION", rel(a.span),
                                    "'" + a.dimension + "' is not a cognitive dimension"));

    const auto n_true = std::count_if(q.options.begin(), q.options.end(), [](auto& o) { return o.correct; });
    if (q.qtype == QuestionType::SingleChoice && n_true > 1)
        out.push_back(issue("SC_MULTIPLE_TRUE", std::nullopt,
                            std::to_string(n_true) + " options are marked [T] in a single choice block"));
    if (q.qtype == QuestionType::SingleChoice && n_true == 0)
        out.push_back(issue("SC_NO_TRUE", std::nullopt, "no option is marked [T]"));
    if (q.qtype == QuestionType::MultipleChoice && n_true == 0)
        out.push_back(issue("MC_NO_TRUE", std::nullopt, "no option is marked [T]"));
    if (q.qtype == QuestionType::FillInTheBlanks && q.fib_solution &&
        q.fib_solution->find_first_of("\\{}") != std::string::npos)
        out.push_back(issue("FIB_NOT_PLAINTEXT", std::nullopt,
                            "solution '" + *q.fib_solution + "' is not plain text"));
    if (request && std::find(request->allowed_types.begin(), request->allowed_types.end(), q.qtype) ==
                       request->allowed_types.end())
        out.push_back(issue("WRONG_TYPE", std::nullopt,
                            std::string(to_string(q.qtype)) + " was not among the requested question types"));
    return out;
}

std::vector<ValidationIssue> validate_relational(const QuizQuestion& q, const kg::KnowledgeGraph& graph)
{
    Relativizer rel(q);
    std::vector<ValidationIssue> out;

    std::vector<kg::ModuleId> scope;
    for (const auto& child : q.body.children) {
        if (child.kind != NodeKind::UseModule)
            continue;
        kg::ModuleRef ref{std::string(child.attr("archive")), std::string(child.attr("path"))};
        if (auto id = kg::resolve_module(graph, ref))
            scope.push_back(*id);
        else
            out.push_back(issue("DANGLING_USEMODULE", rel(child.span),
                                "module " + ref.to_string() + " does not exist in the corpus"));
    }

    auto check = [&](const std::string& name, std::optional<stex::Span> span, std::string_view where) {
        auto r = kg::try_resolve(graph, name, scope);
        if (r.status == kg::ResolutionStatus::Unknown)
            out.push_back(issue("HALLUCINATED_SYMBOL", span,
                                std::string(where) + " refers to '" + name + "', which is not visible"));
        else if (r.status == kg::ResolutionStatus::Ambiguous) {
            std::vector<std::string> uris;
            for (const auto& c : r.candidates)
                uris.push_back(c.uri);
            out.push_back(issue("AMBIGUOUS_SYMBOL", span,
                                std::string(where) + " '" + name + "' matches " + text::join(uris, ", ")));
        }
    };

    for (const auto& a : q.objectives)
        check(a.symbol, rel(a.span), "objective");
    for (const auto& a : q.preconditions)
        check(a.symbol, rel(a.span), "precondition");
    for (const auto& ref : question::body_references(q))
        check(ref.name, rel(ref.span), "reference");
    for (const auto& o : q.options) {
        if (!o.feedback)
            continue;
        for (const auto& n : stex::parse_nodes(*o.feedback))
            for (const auto& ref : stex::extract_symbol_references(n))
                check(ref.name, rel(o.span), "feedback reference");
    }

    std::string plain;
    for (const auto& n : q.stem)
        stem_text(n, plain);
    const auto stem_words = text::words_without_macros(plain);
    for (const auto& module_id : kg::visible_modules(graph, scope)) {
        auto it = graph.modules.find(module_id);
        if (it == graph.modules.end())
            continue;
        for (const auto& sym_id : it->second.symbols) {
            const auto& sym = graph.symbols.at(sym_id);
            std::vector<std::string> phrases = {sym.name};
            phrases.insert(phrases.end(), sym.verbalizations.begin(), sym.verbalizations.end());
            for (const auto& p : phrases) {
                if (contains_phrase(stem_words, text::words_without_macros(p))) {
                    out.push_back(issue("UNANNOTATED_TERM", std::nullopt,
                                        "'" + p + "' appears in the stem without a reference to " + sym_id.uri));
                    break;
                }
            }
        }
    }
    return out;
}

std::vector<ValidationIssue> check_feedback(const QuizQuestion& q)
{
    Relativizer rel(q);
    std::vector<ValidationIssue> out;
    for (std::size_t i = 0; i < q.options.size(); ++i) {
        const auto& o = q.options[i];
        const auto label = "option " + std::to_string(i + 1);
        if (!o.feedback) {
            if (!o.correct)
                out.push_back(issue("MISSING_FEEDBACK", rel(o.span), label + " is incorrect but has no feedback"));
            continue;
        }
        const auto score = jaccard(normalize_feedback(*o.feedback), text::words_without_macros(o.text));
        if (score >= kUninformativeJaccard)
            out.push_back(issue("UNINFORMATIVE_FEEDBACK", rel(o.span),
                                label + " feedback restates the option (Jaccard " + std::to_string(score) + ")"));
    }
    return out;
}

std::vector<ValidationIssue> check_leakage(const QuizQuestion& q)
{
    Relativizer rel(q);
    std::vector<ValidationIssue> out;
    for (std::size_t i = 0; i < q.options.size(); ++i) {
        const auto& o = q.options[i];
        const auto label = "option " + std::to_string(i + 1);
        const auto lowered = text::to_lower(o.text);
        bool leaked = false;
        for (auto marker : kLeakMarkers) {
            if (lowered.find(marker) != std::string::npos) {
                out.push_back(issue("ANSWER_LEAK", rel(o.span), label + " contains \"" + std::string(marker) + "\""));
                leaked = true;
                break;
            }
        }
        if (!leaked && o.feedback) {
            auto fb = text::trim(*o.feedback);
            if (!fb.empty() && o.text.find(fb) != std::string::npos)
                out.push_back(issue("ANSWER_LEAK", rel(o.span), label + " contains its own feedback"));
        }
    }
    return out;
}

ValidationReport make_report(std::string question_id, std::vector<ValidationIssue> issues)
{
    std::stable_sort(issues.begin(), issues.end(), [](const ValidationIssue& a, const ValidationIssue& b) {
        auto key = [](const ValidationIssue& i) {
            return std::make_tuple(i.span.has_value(), i.span ? i.span->begin : 0, std::string_view(i.code));
        };
        return key(a) < key(b);
    });
    ValidationReport report;
    report.question_id = std::move(question_id);
    report.issues = std::move(issues);
    if (report.issues.empty())
        report.verdict = Verdict::Pass;
    else if (std::any_of(report.issues.begin(), report.issues.end(),
                         [](const auto& i) { return i.severity == Severity::Error; }))
        report.verdict = Verdict::Fail;
    else
        report.verdict = Verdict::PassWithWarnings;
    return report;
}

ValidationReport validate(const QuizQuestion& q, const kg::KnowledgeGraph& graph,
                          const prompt::GenerationRequest* request)
{
    auto issues = validate_structural(q, request);
    for (auto&& more : {validate_relational(q, graph), check_feedback(q), check_leakage(q)})
        issues.insert(issues.end(), more.begin(), more.end());
    return make_report(q.id, std::move(issues));
}

nlohmann::ordered_json to_json(const ValidationReport& report)
{
    nlohmann::ordered_json j;
    j["question_id"] = report.question_id;
    j["verdict"] = to_string(report.verdict);
    j["issues"] = nlohmann::ordered_json::array();
    for (const auto& i : report.issues) {
        nlohmann::ordered_json ij;
        ij["category"] = to_string(i.category);
        ij["code"] = i.code;
        ij["severity"] = to_string(i.severity);
        if (i.span)
            ij["span"] = {{"begin", i.span->begin}, {"end", i.span->end}};
        else
            ij["span"] = nullptr;
        ij["message"] = i.message;
        j["issues"].push_back(std::move(ij));
    }
    return j;
}

} // namespace quizgen::validator
