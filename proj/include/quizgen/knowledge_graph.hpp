// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/error.hpp"
#include "quizgen/stex.hpp"
#include "quizgen/types.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quizgen::kg {

/// `<doc_id>?<module>?<name>`
struct SymbolId {
    std::string uri;

    [[nodiscard]] std::string_view name() const;
    friend auto operator<=>(const SymbolId&, const SymbolId&) = default;
};

/// `<doc_id>?<module>`
using ModuleId = std::string;

/// A `\usemodule` / `\importmodule` target as written in the source.
struct ModuleRef {
    std::string archive;
    std::string path;

    [[nodiscard]] std::string module_name() const; // segment after the last '?'
    [[nodiscard]] std::string to_string() const;   // "[archive]{path}" form
    friend bool operator==(const ModuleRef&, const ModuleRef&) = default;
};

struct ModuleEntry {
    ModuleId id;
    std::string name;
    std::string doc_id;
    std::vector<ModuleId> imports;
    std::vector<ModuleRef> dangling_imports;
    std::vector<SymbolId> symbols;
};

enum class FragmentKind { Definition, Example, Remark, Plain };
[[nodiscard]] std::string_view to_string(FragmentKind kind) noexcept;

struct Fragment {
    std::string id; // "<doc_id>#<ordinal>"
    FragmentKind kind = FragmentKind::Plain;
    std::vector<std::string> section_path;
    std::string text;
    std::set<SymbolId> mentioned_symbols;
    std::string doc_id;
    std::optional<ModuleId> module;
    std::optional<std::size_t> section; // index into KnowledgeGraph::sections
    std::size_t index = 0;              // position in KnowledgeGraph::fragments
};

struct SymbolEntry {
    SymbolId id;
    std::string name;
    ModuleId module;
    std::string macro; // "symdecl" or "symdef"
    std::vector<std::string> defining_fragments;
    std::set<std::string> verbalizations; // collected from references in the corpus
};

enum class SectionLevel { Chapter = 0, Section = 1, Subsection = 2 };

struct SectionNode {
    std::size_t index = 0;
    std::optional<std::size_t> parent;
    SectionLevel level = SectionLevel::Section;
    std::string title;
    std::string doc_id;
    std::vector<std::size_t> children;
    std::vector<std::string> fragment_ids; // direct members only
};

struct GraphDiagnostic {
    std::string doc_id;
    std::string message;
};

class KnowledgeGraph {
public:
    std::map<ModuleId, ModuleEntry> modules;
    std::map<SymbolId, SymbolEntry> symbols;
    std::vector<Fragment> fragments;
    std::vector<SectionNode> sections; // document order; parents precede children
    std::vector<std::string> doc_ids;
    std::vector<GraphDiagnostic> diagnostics;

    [[nodiscard]] std::vector<std::size_t> top_level_sections() const;
    [[nodiscard]] const Fragment* find_fragment(std::string_view id) const;
    [[nodiscard]] const SymbolEntry* find_symbol(const SymbolId& id) const;
    /// All symbols with the given bare name, in URI order.
    [[nodiscard]] std::vector<SymbolId> symbols_named(std::string_view name) const;
    /// True if section `inner` is `outer` or one of its descendants.
    [[nodiscard]] bool section_within(std::size_t inner, std::size_t outer) const;
};

[[nodiscard]] KnowledgeGraph build_graph(std::span<const stex::SourceDocument> docs);

/// Resolves a module reference by module name, using the archive/path as a
/// disambiguating hint. Returns nullopt when no unique module matches.
[[nodiscard]] std::optional<ModuleId> resolve_module(const KnowledgeGraph& graph, const ModuleRef& ref);

/// The scope modules plus everything reachable through imports.
[[nodiscard]] std::set<ModuleId> visible_modules(const KnowledgeGraph& graph, std::span<const ModuleId> scope);

enum class ResolutionStatus { Resolved, Unknown, Ambiguous };

struct Resolution {
    ResolutionStatus status = ResolutionStatus::Unknown;
    std::optional<SymbolId> symbol;
    std::vector<SymbolId> candidates;
};

/// Non-throwing resolution of `name` (optionally `module?name`) within the
/// modules visible from `scope`.
[[nodiscard]] Resolution try_resolve(const KnowledgeGraph& graph, std::string_view name,
                                     std::span<const ModuleId> scope);

/// Throws Error("UnknownSymbol") or Error("AmbiguousSymbol"); never guesses.
[[nodiscard]] SymbolId resolve_symbol(const KnowledgeGraph& graph, std::string_view name, const ModuleId& scope);

[[nodiscard]] std::vector<const Fragment*> fragments_for_concept(const KnowledgeGraph& graph, const SymbolId& symbol,
                                                                 Granularity granularity);

inline constexpr std::size_t kDefaultSearchResults = 10;

[[nodiscard]] std::vector<std::vector<const Fragment*>>
search_definitions(const KnowledgeGraph& graph, std::span<const std::string> queries,
                   std::size_t k = kDefaultSearchResults);

/// Score used by search_definitions, exposed for diagnostics.
[[nodiscard]] double definition_score(const KnowledgeGraph& graph, const Fragment& fragment, std::string_view query);

} // namespace quizgen::kg
