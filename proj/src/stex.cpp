// SPDX-License-Identifier: Apache-2.0
#include "quizgen/stex.hpp"

#include <algorithm>
#include <optional>

namespace quizgen::stex {

namespace {

constexpr auto npos = std::string_view::npos;

bool is_letter(char c) noexcept
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_space(char c) noexcept
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

std::size_t skip_comment(std::string_view text, std::size_t pos)
{
    auto nl = text.find('\n', pos);
    return nl == npos ? text.size() : nl;
}

// Returns the delimiter that opens math at `pos`, or empty.
std::string_view math_opener(std::string_view text, std::size_t pos)
{
    if (text[pos] == '$')
        return (pos + 1 < text.size() && text[pos + 1] == '$') ? "$$" : "$";
    if (text[pos] == '\\' && pos + 1 < text.size()) {
        if (text[pos + 1] == '[')
            return "\\[";
        if (text[pos + 1] == '(')
            return "\\(";
    }
    return {};
}

std::string_view math_closer(std::string_view opener)
{
    if (opener == "\\[")
        return "\\]";
    if (opener == "\\(")
        return "\\)";
    return opener;
}

// Offset of the closing delimiter for math whose body starts at `from`.
std::size_t find_math_close(std::string_view text, std::size_t from, std::string_view opener)
{
    const auto closer = math_closer(opener);
    for (std::size_t p = from; p < text.size();) {
        if (text.compare(p, closer.size(), closer) == 0)
            return p;
        if (text[p] == '\\') {
            p += 2;
            continue;
        }
        ++p;
    }
    return npos;
}

std::size_t macro_name_end(std::string_view text, std::size_t from)
{
    std::size_t p = from;
    while (p < text.size() && is_letter(text[p]))
        ++p;
    return p;
}

// After `\begin` or `\end`: reads `{name}` (spaces allowed before the brace).
std::optional<std::pair<std::string, std::size_t>> read_env_name(std::string_view text, std::size_t p)
{
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t'))
        ++p;
    if (p >= text.size() || text[p] != '{')
        return std::nullopt;
    auto close = text.find('}', p + 1);
    if (close == npos)
        return std::nullopt;
    auto name = text.substr(p + 1, close - p - 1);
    if (name.empty() || name.find_first_of("{\\\n") != npos)
        return std::nullopt;
    return std::pair{std::string(name), close + 1};
}

// Index of the `}` matching the `{` at `open`, honoring escapes, comments and
// opaque math. npos if unmatched.
std::size_t find_group_end(std::string_view text, std::size_t open)
{
    int depth = 0;
    for (std::size_t p = open; p < text.size();) {
        char c = text[p];
        if (c == '%') {
            p = skip_comment(text, p);
            continue;
        }
        if (auto m = math_opener(text, p); !m.empty()) {
            auto close = find_math_close(text, p + m.size(), m);
            if (close != npos) {
                p = close + math_closer(m).size();
                continue;
            }
            p += m.size();
            continue;
        }
        if (c == '\\') {
            p += 2;
            continue;
        }
        if (c == '{')
            ++depth;
        else if (c == '}' && --depth == 0)
            return p;
        ++p;
    }
    return npos;
}

// Index of the `]` closing an optional argument opened at `open`.
std::size_t find_opt_end(std::string_view text, std::size_t open)
{
    int depth = 0;
    for (std::size_t p = open + 1; p < text.size(); ++p) {
        char c = text[p];
        if (c == '\\') {
            // An unbraced environment boundary means this '[' was plain text.
            if (depth == 0 && (text.substr(p, 7) == "\\begin{" || text.substr(p, 5) == "\\end{"))
                return npos;
            ++p;
            continue;
        }
        if (c == '{')
            ++depth;
        else if (c == '}')
            --depth;
        else if (c == ']' && depth == 0)
            return p;
        if (depth < 0)
            return npos;
    }
    return npos;
}

// Rejects input that is unbalanced at the brace/environment level, reporting
// the innermost unclosed construct at the point of failure (the outermost one
// at end of input).
void check_balance(std::string_view text)
{
    struct Open {
        bool env;
        std::string name;
        std::size_t offset;
        std::size_t end;
    };
    std::vector<Open> stack;

    auto fail_open = [](const Open& o) {
        if (o.env)
            throw ParseError("UnclosedEnvironment", o.name, {o.offset, o.end},
                             "environment '" + o.name + "' opened at offset " + std::to_string(o.offset) +
                                 " is not closed");
        throw ParseError("UnbalancedBraces", "", {o.offset, o.offset + 1},
                         "unclosed '{' at offset " + std::to_string(o.offset));
    };

    for (std::size_t p = 0; p < text.size();) {
        char c = text[p];
        if (c == '%') {
            p = skip_comment(text, p);
            continue;
        }
        if (auto m = math_opener(text, p); !m.empty()) {
            auto close = find_math_close(text, p + m.size(), m);
            p = close == npos ? p + m.size() : close + math_closer(m).size();
            continue;
        }
        if (c == '\\') {
            if (p + 1 < text.size() && is_letter(text[p + 1])) {
                auto name_end = macro_name_end(text, p + 1);
                auto name = text.substr(p + 1, name_end - p - 1);
                if (name == "begin" || name == "end") {
                    if (auto env = read_env_name(text, name_end)) {
                        if (name == "begin") {
                            stack.push_back({true, env->first, p, env->second});
                        } else {
                            if (stack.empty())
                                throw ParseError("UnclosedEnvironment", env->first, {p, env->second},
                                                 "\\end{" + env->first + "} at offset " + std::to_string(p) +
                                                     " has no matching \\begin");
                            if (!stack.back().env || stack.back().name != env->first)
                                fail_open(stack.back());
                            stack.pop_back();
                        }
                        p = env->second;
                        continue;
                    }
                }
                p = name_end;
                continue;
            }
            p += 2;
            continue;
        }
        if (c == '{') {
            stack.push_back({false, "", p, p + 1});
        } else if (c == '}') {
            if (stack.empty())
                throw ParseError("UnbalancedBraces", "", {p, p + 1},
                                 "unmatched '}' at offset " + std::to_string(p));
            if (stack.back().env)
                fail_open(stack.back());
            stack.pop_back();
        }
        ++p;
    }
    if (!stack.empty())
        fail_open(stack.front());
}

Node make_node(NodeKind kind, Span span)
{
    Node n;
    n.kind = kind;
    n.span = span;
    return n;
}

bool is_leaf_text(const Node& n)
{
    return n.kind == NodeKind::Text && !n.has_attr("open");
}

enum class Until { Eof, Brace, End };

class Parser {
public:
    Parser(std::string_view text, std::vector<Diagnostic>& diagnostics)
        : text_(text), diagnostics_(diagnostics)
    {
    }

    std::vector<Node> parse_until(Until until, NodeKind parent, std::string_view env = {})
    {
        std::vector<Node> out;
        std::size_t run = npos;

        auto begin_run = [&](std::size_t at) {
            if (run == npos)
                run = at;
        };
        auto flush = [&](std::size_t end) {
            if (run != npos && end > run) {
                auto node = make_node(NodeKind::Text, {run, end});
                node.attributes["text"] = std::string(text_.substr(run, end - run));
                out.push_back(std::move(node));
            }
            run = npos;
        };

        while (pos_ < text_.size()) {
            const std::size_t start = pos_;
            const char c = text_[pos_];

            if (c == '}' && until == Until::Brace) {
                flush(start);
                return out;
            }
            if (c == '%') {
                begin_run(start);
                pos_ = skip_comment(text_, pos_);
                continue;
            }
            if (auto m = math_opener(text_, pos_); !m.empty()) {
                auto close = find_math_close(text_, pos_ + m.size(), m);
                if (close == npos) {
                    diagnostics_.push_back({"unclosed math delimiter '" + std::string(m) + "'",
                                            {start, start + m.size()}});
                    begin_run(start);
                    pos_ += m.size();
                    continue;
                }
                flush(start);
                pos_ = close + math_closer(m).size();
                auto node = make_node(NodeKind::Math, {start, pos_});
                node.attributes["delim"] = std::string(m);
                node.attributes["body"] = std::string(text_.substr(start + m.size(), close - start - m.size()));
                out.push_back(std::move(node));
                continue;
            }
            if (c == '\\') {
                if (pos_ + 1 < text_.size() && is_letter(text_[pos_ + 1])) {
                    auto name_end = macro_name_end(text_, pos_ + 1);
                    auto name = text_.substr(pos_ + 1, name_end - pos_ - 1);
                    if (name == "end") {
                        auto env_name = read_env_name(text_, name_end);
                        if (!env_name) {
                            begin_run(start);
                            pos_ = name_end;
                            continue;
                        }
                        if (until == Until::End && env_name->first == env) {
                            flush(start);
                            return out;
                        }
                        throw ParseError("UnclosedEnvironment", env_name->first, {start, name_end},
                                         "unexpected \\end at offset " + std::to_string(start));
                    }
                    if (name == "begin") {
                        if (auto env_name = read_env_name(text_, name_end)) {
                            flush(start);
                            out.push_back(parse_environment(start, env_name->first, env_name->second));
                            continue;
                        }
                    }
                    if (auto node = try_macro(name, start, name_end, parent)) {
                        flush(start);
                        out.push_back(std::move(*node));
                        continue;
                    }
                    begin_run(start);
                    pos_ = name_end;
                    continue;
                }
                begin_run(start);
                pos_ = std::min(text_.size(), pos_ + 2);
                continue;
            }
            if (c == '{') {
                ++pos_;
                auto children = parse_until(Until::Brace, NodeKind::Text);
                expect('}');
                const bool plain = std::all_of(children.begin(), children.end(), is_leaf_text);
                if (plain) {
                    begin_run(start);
                } else {
                    flush(start);
                    auto node = make_node(NodeKind::Text, {start, pos_});
                    node.attributes["open"] = "{";
                    node.attributes["close"] = "}";
                    node.children = std::move(children);
                    out.push_back(std::move(node));
                }
                continue;
            }
            begin_run(start);
            ++pos_;
        }

        if (until != Until::Eof)
            throw ParseError(until == Until::End ? "UnclosedEnvironment" : "UnbalancedBraces", std::string(env),
                             {pos_, pos_}, "unexpected end of input");
        flush(pos_);
        return out;
    }

private:
    void expect(char c)
    {
        if (pos_ >= text_.size() || text_[pos_] != c)
            throw ParseError("UnbalancedBraces", "", {pos_, pos_},
                             std::string("expected '") + c + "' at offset " + std::to_string(pos_));
        ++pos_;
    }

    // `[...]` starting exactly at `p`; advances `p` past it.
    std::optional<std::string> read_opt(std::size_t& p) const
    {
        if (p >= text_.size() || text_[p] != '[')
            return std::nullopt;
        auto close = find_opt_end(text_, p);
        if (close == npos)
            return std::nullopt;
        std::string value(text_.substr(p + 1, close - p - 1));
        p = close + 1;
        return value;
    }

    // Skips inter-argument whitespace, stopping at a paragraph break.
    std::size_t skip_arg_space(std::size_t p) const
    {
        int newlines = 0;
        while (p < text_.size() && is_space(text_[p])) {
            if (text_[p] == '\n' && ++newlines > 1)
                break;
            ++p;
        }
        return p;
    }

    // `{...}` after optional whitespace; returns the raw interior and advances `p`.
    std::optional<std::string> read_arg(std::size_t& p) const
    {
        auto q = skip_arg_space(p);
        if (q >= text_.size() || text_[q] != '{')
            return std::nullopt;
        auto close = find_group_end(text_, q);
        if (close == npos)
            return std::nullopt;
        std::string value(text_.substr(q + 1, close - q - 1));
        p = close + 1;
        return value;
    }

    std::optional<Node> try_macro(std::string_view name, std::size_t start, std::size_t after_name, NodeKind parent)
    {
        std::size_t p = after_name;

        if (name == "usemodule" || name == "importmodule") {
            auto archive = read_opt(p);
            auto path = read_arg(p);
            if (!path)
                return std::nullopt;
            auto node = make_node(NodeKind::UseModule, {start, p});
            node.attributes["macro"] = std::string(name);
            if (archive)
                node.attributes["archive"] = *archive;
            node.attributes["path"] = *path;
            pos_ = p;
            return node;
        }
        if (name == "symdecl") {
            auto opt = read_opt(p);
            auto sym = read_arg(p);
            if (!sym)
                return std::nullopt;
            auto node = make_node(NodeKind::SymbolDecl, {start, p});
            if (opt)
                node.attributes["opt"] = *opt;
            node.attributes["name"] = *sym;
            pos_ = p;
            return node;
        }
        if (name == "symdef") {
            auto opt = read_opt(p);
            auto sym = read_arg(p);
            if (!sym)
                return std::nullopt;
            auto node = make_node(NodeKind::SymbolDef, {start, p});
            if (opt)
                node.attributes["opt"] = *opt;
            node.attributes["name"] = *sym;
            if (auto args = read_opt(p))
                node.attributes["args"] = *args;
            if (p < text_.size() && text_[p] == '{') {
                if (auto notation = read_arg(p))
                    node.attributes["notation"] = *notation;
            }
            node.span.end = p;
            pos_ = p;
            return node;
        }
        if (name == "symref" || name == "sr" || name == "sn") {
            auto opt = read_opt(p);
            auto sym = read_arg(p);
            if (!sym)
                return std::nullopt;
            std::optional<std::string> verbalization;
            if (name != "sn") {
                verbalization = read_arg(p);
                if (!verbalization)
                    return std::nullopt;
            }
            auto node = make_node(NodeKind::SymbolRef, {start, p});
            node.attributes["form"] = std::string(name);
            if (opt)
                node.attributes["opt"] = *opt;
            node.attributes["name"] = *sym;
            if (verbalization)
                node.attributes["verbalization"] = *verbalization;
            pos_ = p;
            return node;
        }
        if (name == "mcc" || name == "scc") {
            if (parent != NodeKind::MultiChoiceBlock && parent != NodeKind::SingleChoiceBlock) {
                diagnostics_.push_back({"\\" + std::string(name) + " outside a choice block is kept as text",
                                        {start, after_name}});
                return std::nullopt;
            }
            auto opt = read_opt(p);
            auto q = skip_arg_space(p);
            if (q >= text_.size() || text_[q] != '{')
                return std::nullopt;
            auto node = make_node(NodeKind::ChoiceOption, {start, start});
            node.attributes["macro"] = std::string(name);
            if (opt) {
                for (auto& [key, value] : parse_keyvals(*opt)) {
                    if (value.empty() && (key == "T" || key == "F"))
                        node.attributes["flag"] = key;
                    else if (key == "feedback")
                        node.attributes["feedback"] = value;
                    else
                        node.attributes["kv." + key] = value;
                }
            }
            pos_ = q + 1;
            node.children = parse_until(Until::Brace, NodeKind::ChoiceOption);
            expect('}');
            node.span.end = pos_;
            return node;
        }
        if (name == "fillinsol") {
            auto opt = read_opt(p);
            auto solution = read_arg(p);
            if (!solution)
                return std::nullopt;
            auto node = make_node(NodeKind::FillInSol, {start, p});
            if (opt)
                node.attributes["opt"] = *opt;
            node.attributes["solution"] = *solution;
            pos_ = p;
            return node;
        }
        if (name == "objective" || name == "precondition") {
            auto dimension = read_arg(p);
            auto symbol = dimension ? read_arg(p) : std::nullopt;
            if (!symbol)
                return std::nullopt;
            auto node = make_node(NodeKind::Objective, {start, p});
            node.attributes["macro"] = std::string(name);
            node.attributes["dimension"] = *dimension;
            node.attributes["symbol"] = *symbol;
            pos_ = p;
            return node;
        }
        if (name == "chapter" || name == "section" || name == "subsection") {
            bool star = p < text_.size() && text_[p] == '*';
            if (star)
                ++p;
            auto opt = read_opt(p);
            auto title = read_arg(p);
            if (!title)
                return std::nullopt;
            auto node = make_node(NodeKind::SectionMarker, {start, p});
            node.attributes["level"] = std::string(name);
            if (star)
                node.attributes["star"] = "*";
            if (opt)
                node.attributes["opt"] = *opt;
            node.attributes["title"] = *title;
            pos_ = p;
            return node;
        }
        return std::nullopt;
    }

    Node parse_environment(std::size_t start, const std::string& name, std::size_t after_header)
    {
        std::size_t p = after_header;
        auto opt = read_opt(p);

        NodeKind kind = NodeKind::Environment;
        std::optional<std::string> module_name;
        if (name == "smodule") {
            std::size_t q = p;
            module_name = read_arg(q);
            if (module_name) {
                kind = NodeKind::ModuleDecl;
                p = q;
            }
        } else if (name == "sproblem") {
            kind = NodeKind::Problem;
        } else if (name == "mcb") {
            kind = NodeKind::MultiChoiceBlock;
        } else if (name == "scb") {
            kind = NodeKind::SingleChoiceBlock;
        }

        auto node = make_node(kind, {start, start});
        if (kind == NodeKind::Environment)
            node.attributes["name"] = name;
        if (module_name)
            node.attributes["name"] = *module_name;
        if (opt)
            node.attributes["opt"] = *opt;

        pos_ = p;
        node.children = parse_until(Until::End, kind, name);
        // Positioned at `\end{name}`.
        auto end_name = read_env_name(text_, pos_ + 4);
        pos_ = end_name->second;
        node.span.end = pos_;
        return node;
    }

    std::string_view text_;
    std::vector<Diagnostic>& diagnostics_;
    std::size_t pos_ = 0;
};

bool needs_braces(std::string_view value)
{
    if (value.empty())
        return false;
    return value.find_first_of(",=]") != npos || value.front() == '{' || is_space(value.front()) ||
           is_space(value.back());
}

std::string serialize_choice_options(const Node& n)
{
    std::vector<std::string> items;
    if (n.has_attr("flag"))
        items.emplace_back(n.attr("flag"));
    if (n.has_attr("feedback"))
        items.push_back("feedback={" + std::string(n.attr("feedback")) + "}");
    for (const auto& [key, value] : n.attributes) {
        if (!key.starts_with("kv."))
            continue;
        auto k = key.substr(3);
        if (value.empty())
            items.push_back(k);
        else if (needs_braces(value))
            items.push_back(k + "={" + value + "}");
        else
            items.push_back(k + "=" + value);
    }
    if (items.empty())
        return {};
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i)
            out += ',';
        out += items[i];
    }
    out += ']';
    return out;
}

std::string opt_of(const Node& n)
{
    return n.has_attr("opt") ? "[" + std::string(n.attr("opt")) + "]" : std::string{};
}

std::string braced(std::string_view s)
{
    return "{" + std::string(s) + "}";
}

} // namespace

std::string_view to_string(NodeKind kind) noexcept
{
    switch (kind) {
    case NodeKind::ModuleDecl: return "ModuleDecl";
    case NodeKind::UseModule: return "UseModule";
    case NodeKind::SymbolDecl: return "SymbolDecl";
    case NodeKind::SymbolDef: return "SymbolDef";
    case NodeKind::SymbolRef: return "SymbolRef";
    case NodeKind::Problem: return "Problem";
    case NodeKind::MultiChoiceBlock: return "MultiChoiceBlock";
    case NodeKind::SingleChoiceBlock: return "SingleChoiceBlock";
    case NodeKind::ChoiceOption: return "ChoiceOption";
    case NodeKind::FillInSol: return "FillInSol";
    case NodeKind::Objective: return "Objective";
    case NodeKind::SectionMarker: return "SectionMarker";
    case NodeKind::Text: return "Text";
    case NodeKind::Math: return "Math";
    case NodeKind::Environment: return "Environment";
    }
    return "";
}

std::string_view Node::attr(std::string_view key) const
{
    auto it = attributes.find(std::string(key));
    return it == attributes.end() ? std::string_view{} : std::string_view(it->second);
}

bool Node::has_attr(std::string_view key) const
{
    return attributes.contains(std::string(key));
}

DocumentAst parse_document(const SourceDocument& doc)
{
    check_balance(doc.text);
    DocumentAst ast;
    ast.doc_id = doc.doc_id;
    Parser parser(doc.text, ast.diagnostics);
    ast.root = make_node(NodeKind::Environment, {0, doc.text.size()});
    ast.root.children = parser.parse_until(Until::Eof, NodeKind::Environment);
    return ast;
}

std::vector<Node> parse_nodes(std::string_view text, NodeKind context)
{
    check_balance(text);
    std::vector<Diagnostic> ignored;
    Parser parser(text, ignored);
    return parser.parse_until(Until::Eof, context);
}

std::string serialize(const DocumentAst& ast)
{
    return serialize(ast.root);
}

std::string serialize_children(const Node& node)
{
    std::string out;
    for (const auto& child : node.children)
        out += serialize(child);
    return out;
}

std::string serialize(const Node& n)
{
    switch (n.kind) {
    case NodeKind::Text:
        if (n.has_attr("open"))
            return std::string(n.attr("open")) + serialize_children(n) + std::string(n.attr("close"));
        return std::string(n.attr("text"));
    case NodeKind::Math:
        return std::string(n.attr("delim")) + std::string(n.attr("body")) +
               std::string(math_closer(n.attr("delim")));
    case NodeKind::ModuleDecl:
        return "\\begin{smodule}" + opt_of(n) + braced(n.attr("name")) + serialize_children(n) + "\\end{smodule}";
    case NodeKind::Problem:
        return "\\begin{sproblem}" + opt_of(n) + serialize_children(n) + "\\end{sproblem}";
    case NodeKind::MultiChoiceBlock:
        return "\\begin{mcb}" + opt_of(n) + serialize_children(n) + "\\end{mcb}";
    case NodeKind::SingleChoiceBlock:
        return "\\begin{scb}" + opt_of(n) + serialize_children(n) + "\\end{scb}";
    case NodeKind::Environment:
        if (!n.has_attr("name"))
            return serialize_children(n);
        return "\\begin" + braced(n.attr("name")) + opt_of(n) + serialize_children(n) + "\\end" +
               braced(n.attr("name"));
    case NodeKind::UseModule: {
        std::string out = "\\" + std::string(n.attr("macro"));
        if (n.has_attr("archive"))
            out += "[" + std::string(n.attr("archive")) + "]";
        return out + braced(n.attr("path"));
    }
    case NodeKind::SymbolDecl:
        return "\\symdecl" + opt_of(n) + braced(n.attr("name"));
    case NodeKind::SymbolDef: {
        std::string out = "\\symdef" + opt_of(n) + braced(n.attr("name"));
        if (n.has_attr("args"))
            out += "[" + std::string(n.attr("args")) + "]";
        if (n.has_attr("notation"))
            out += braced(n.attr("notation"));
        return out;
    }
    case NodeKind::SymbolRef: {
        std::string out = "\\" + std::string(n.attr("form")) + opt_of(n) + braced(n.attr("name"));
        if (n.has_attr("verbalization"))
            out += braced(n.attr("verbalization"));
        return out;
    }
    case NodeKind::ChoiceOption:
        return "\\" + std::string(n.attr("macro")) + serialize_choice_options(n) + "{" + serialize_children(n) + "}";
    case NodeKind::FillInSol:
        return "\\fillinsol" + opt_of(n) + braced(n.attr("solution"));
    case NodeKind::Objective:
        return "\\" + std::string(n.attr("macro")) + braced(n.attr("dimension")) + braced(n.attr("symbol"));
    case NodeKind::SectionMarker:
        return "\\" + std::string(n.attr("level")) + std::string(n.attr("star")) + opt_of(n) + braced(n.attr("title"));
    }
    return {};
}

bool structurally_equal(const Node& a, const Node& b)
{
    if (a.kind != b.kind || a.attributes != b.attributes || a.children.size() != b.children.size())
        return false;
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!structurally_equal(a.children[i], b.children[i]))
            return false;
    return true;
}

std::vector<SymbolReference> extract_symbol_references(const Node& node)
{
    std::vector<SymbolReference> refs;
    walk(node, [&](const Node& n) {
        if (n.kind != NodeKind::SymbolRef)
            return;
        SymbolReference ref;
        ref.name = std::string(n.attr("name"));
        ref.verbalization = n.attr("form") == "sn" ? ref.name : std::string(n.attr("verbalization"));
        ref.span = n.span;
        refs.push_back(std::move(ref));
    });
    return refs;
}

std::vector<SymbolReference> extract_symbol_references(const DocumentAst& ast)
{
    return extract_symbol_references(ast.root);
}

std::vector<std::pair<std::string, std::string>> parse_keyvals(std::string_view options)
{
    auto trim = [](std::string_view s) {
        while (!s.empty() && is_space(s.front()))
            s.remove_prefix(1);
        while (!s.empty() && is_space(s.back()))
            s.remove_suffix(1);
        return s;
    };

    std::vector<std::string_view> items;
    int depth = 0;
    std::size_t item_start = 0;
    for (std::size_t p = 0; p < options.size(); ++p) {
        char c = options[p];
        if (c == '\\') {
            ++p;
            continue;
        }
        if (c == '{')
            ++depth;
        else if (c == '}')
            --depth;
        else if (c == ',' && depth == 0) {
            items.push_back(options.substr(item_start, p - item_start));
            item_start = p + 1;
        }
    }
    items.push_back(options.substr(item_start));

    std::vector<std::pair<std::string, std::string>> out;
    for (auto raw : items) {
        auto item = trim(raw);
        if (item.empty())
            continue;
        // First '=' outside braces.
        std::size_t eq = npos;
        depth = 0;
        for (std::size_t p = 0; p < item.size(); ++p) {
            if (item[p] == '{')
                ++depth;
            else if (item[p] == '}')
                --depth;
            else if (item[p] == '=' && depth == 0) {
                eq = p;
                break;
            }
        }
        if (eq == npos) {
            out.emplace_back(std::string(item), std::string{});
            continue;
        }
        auto key = trim(item.substr(0, eq));
        auto value = trim(item.substr(eq + 1));
        if (!value.empty() && value.front() == '{' && find_group_end(value, 0) == value.size() - 1)
            value = value.substr(1, value.size() - 2);
        out.emplace_back(std::string(key), std::string(value));
    }
    return out;
}

} // namespace quizgen::stex
