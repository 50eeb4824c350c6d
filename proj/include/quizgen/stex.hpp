// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/error.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

/// Tokenizer, parser and serializer for the sTeX subset used by course
/// materials and generated quiz questions. The recognized grammar is listed in
/// docs/grammar.md. Anything outside it is preserved verbatim as Text or
/// Environment nodes.
namespace quizgen::stex {

enum class NodeKind {
    ModuleDecl,
    UseModule,
    SymbolDecl,
    SymbolDef,
    SymbolRef,
    Problem,
    MultiChoiceBlock,
    SingleChoiceBlock,
    ChoiceOption,
    FillInSol,
    Objective,
    SectionMarker,
    Text,
    Math,
    Environment,
};

[[nodiscard]] std::string_view to_string(NodeKind kind) noexcept;

/// Half-open byte range [begin, end) into the source text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] bool contains(const Span& other) const noexcept
    {
        return begin <= other.begin && other.end <= end;
    }
    friend bool operator==(const Span&, const Span&) = default;
};

struct Node {
    NodeKind kind = NodeKind::Text;
    std::map<std::string, std::string> attributes;
    std::vector<Node> children;
    Span span;

    /// Empty view when the attribute is absent.
    [[nodiscard]] std::string_view attr(std::string_view key) const;
    [[nodiscard]] bool has_attr(std::string_view key) const;
};

enum class Origin { CourseMaterial, GeneratedOutput };

struct SourceDocument {
    std::string doc_id;
    std::string text;
    Origin origin = Origin::CourseMaterial;
};

struct Diagnostic {
    std::string message;
    Span span;
};

struct DocumentAst {
    Node root; // kind Environment without a "name" attribute
    std::string doc_id;
    std::vector<Diagnostic> diagnostics;
};

/// Raised for input that is not balanced at the brace/environment level.
/// `code()` is "UnbalancedBraces" or "UnclosedEnvironment"; `span()` points at
/// the earliest offending construct.
class ParseError : public Error {
public:
    ParseError(std::string code, std::string environment, Span span, const std::string& message)
        : Error(std::move(code), message), environment_(std::move(environment)), span_(span)
    {
    }

    [[nodiscard]] const std::string& environment() const noexcept { return environment_; }
    [[nodiscard]] Span span() const noexcept { return span_; }

private:
    std::string environment_;
    Span span_;
};

[[nodiscard]] DocumentAst parse_document(const SourceDocument& doc);

/// Parses `text` as the content of a node of kind `context`. Used to re-parse
/// slices such as choice options, which are only recognized inside choice
/// blocks.
[[nodiscard]] std::vector<Node> parse_nodes(std::string_view text,
                                            NodeKind context = NodeKind::Environment);

[[nodiscard]] std::string serialize(const DocumentAst& ast);
[[nodiscard]] std::string serialize(const Node& node);
[[nodiscard]] std::string serialize_children(const Node& node);

/// Equality of kind, attributes and children, ignoring spans.
[[nodiscard]] bool structurally_equal(const Node& a, const Node& b);

struct SymbolReference {
    std::string name;
    std::string verbalization;
    Span span;
};

[[nodiscard]] std::vector<SymbolReference> extract_symbol_references(const DocumentAst& ast);
[[nodiscard]] std::vector<SymbolReference> extract_symbol_references(const Node& node);

/// Splits a `[key=value, flag, key={nested, value}]` option list at top-level
/// commas. Bare items get an empty value; braces around a value are removed.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> parse_keyvals(std::string_view options);

/// Calls `fn` on `node` and every descendant in document order.
template <class Fn>
void walk(const Node& node, Fn&& fn)
{
    fn(node);
    for (const auto& child : node.children)
        walk(child, fn);
}

} // namespace quizgen::stex
