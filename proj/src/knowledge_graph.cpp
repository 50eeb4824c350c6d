// SPDX-License-Identifier: Apache-2.0
#include "quizgen/knowledge_graph.hpp"

#include "quizgen/text_util.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <unordered_map>

namespace quizgen::kg {

namespace {

constexpr auto npos = std::string_view::npos;

std::optional<SectionLevel> section_level(std::string_view macro)
{
    if (macro == "chapter")
        return SectionLevel::Chapter;
    if (macro == "section")
        return SectionLevel::Section;
    if (macro == "subsection")
        return SectionLevel::Subsection;
    return std::nullopt;
}

FragmentKind kind_for_environment(std::string_view env)
{
    if (env == "definition" || env == "sdefinition")
        return FragmentKind::Definition;
    if (env == "example" || env == "sexample")
        return FragmentKind::Example;
    if (env == "remark")
        return FragmentKind::Remark;
    return FragmentKind::Plain;
}

bool is_blank(char c)
{
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
}

struct PendingRef {
    std::string name;
    std::string verbalization;
};

struct PendingFragment {
    std::size_t fragment = 0;
    std::vector<PendingRef> refs;
    std::vector<std::string> defines;
};

struct PendingImport {
    ModuleId module;
    ModuleRef ref;
};

struct Pending {
    std::vector<PendingFragment> fragments;
    std::vector<PendingImport> imports;
    std::map<std::string, std::vector<ModuleRef>> doc_uses;
};

class Walker {
public:
    Walker(const stex::SourceDocument& doc, KnowledgeGraph& graph, Pending& pending)
        : doc_(doc), graph_(graph), pending_(pending)
    {
    }

    void run(const stex::DocumentAst& ast)
    {
        visit(ast.root.children);
        flush_paragraph();
    }

private:
    void visit(const std::vector<stex::Node>& nodes)
    {
        using stex::NodeKind;
        for (const auto& n : nodes) {
            switch (n.kind) {
            case NodeKind::Text:
                if (n.has_attr("open"))
                    add_node(n);
                else
                    add_text(n);
                break;
            case NodeKind::SectionMarker:
                flush_paragraph();
                open_section(n);
                break;
            case NodeKind::ModuleDecl:
                flush_paragraph();
                open_module(n);
                break;
            case NodeKind::Environment:
                flush_paragraph();
                if (n.attr("name") == "document") {
                    visit(n.children);
                    flush_paragraph();
                } else {
                    environment_fragment(n, kind_for_environment(n.attr("name")));
                }
                break;
            case NodeKind::Problem:
            case NodeKind::MultiChoiceBlock:
            case NodeKind::SingleChoiceBlock:
                flush_paragraph();
                environment_fragment(n, FragmentKind::Plain);
                break;
            case NodeKind::UseModule: {
                ModuleRef ref{std::string(n.attr("archive")), std::string(n.attr("path"))};
                if (!module_stack_.empty())
                    pending_.imports.push_back({module_stack_.back(), std::move(ref)});
                else
                    pending_.doc_uses[doc_.doc_id].push_back(std::move(ref));
                add_node(n);
                break;
            }
            case NodeKind::SymbolDecl:
            case NodeKind::SymbolDef:
                declare_symbol(n);
                add_node(n);
                break;
            default:
                add_node(n);
            }
        }
    }

    void add_text(const stex::Node& n)
    {
        auto text = n.attr("text");
        const std::size_t base = n.span.begin;
        std::size_t seg = 0;
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] != '\n')
                continue;
            std::size_t j = i + 1;
            while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r'))
                ++j;
            if (j < text.size() && text[j] == '\n') {
                add_piece(base + seg, base + i);
                flush_paragraph();
                seg = j;
                i = j - 1;
            }
        }
        add_piece(base + seg, base + text.size());
    }

    void add_piece(std::size_t begin, std::size_t end)
    {
        while (begin < end && is_blank(doc_.text[begin]))
            ++begin;
        while (end > begin && is_blank(doc_.text[end - 1]))
            --end;
        if (begin == end)
            return;
        para_begin_ = std::min(para_begin_, begin);
        para_end_ = std::max(para_end_, end);
    }

    void add_node(const stex::Node& n)
    {
        para_begin_ = std::min(para_begin_, n.span.begin);
        para_end_ = std::max(para_end_, n.span.end);
        para_nodes_.push_back(&n);
    }

    void flush_paragraph()
    {
        if (para_begin_ != npos)
            make_fragment(FragmentKind::Plain, {para_begin_, para_end_}, para_nodes_, {});
        para_begin_ = npos;
        para_end_ = 0;
        para_nodes_.clear();
    }

    void environment_fragment(const stex::Node& n, FragmentKind kind)
    {
        std::vector<std::string> defines;
        if (n.has_attr("opt")) {
            for (auto& [key, value] : stex::parse_keyvals(n.attr("opt"))) {
                if (key != "for")
                    continue;
                for (auto& [name, unused] : stex::parse_keyvals(value))
                    defines.push_back(name);
            }
        }
        make_fragment(kind, n.span, {&n}, std::move(defines));
    }

    void make_fragment(FragmentKind kind, stex::Span span, const std::vector<const stex::Node*>& nodes,
                       std::vector<std::string> defines)
    {
        Fragment f;
        f.id = doc_.doc_id + "#" + std::to_string(ordinal_++);
        f.kind = kind;
        f.text = doc_.text.substr(span.begin, span.end - span.begin);
        f.doc_id = doc_.doc_id;
        if (!module_stack_.empty())
            f.module = module_stack_.back();
        if (!section_stack_.empty()) {
            f.section = section_stack_.back();
            for (auto s : section_stack_)
                f.section_path.push_back(graph_.sections[s].title);
            graph_.sections[section_stack_.back()].fragment_ids.push_back(f.id);
        }
        f.index = graph_.fragments.size();

        PendingFragment pending{f.index, {}, std::move(defines)};
        for (const auto* node : nodes) {
            stex::walk(*node, [&](const stex::Node& inner) {
                if (inner.kind == stex::NodeKind::SymbolRef) {
                    std::string name(inner.attr("name"));
                    std::string verbalization(inner.attr("form") == "sn" ? inner.attr("name")
                                                                          : inner.attr("verbalization"));
                    pending.refs.push_back({std::move(name), std::move(verbalization)});
                } else if ((inner.kind == stex::NodeKind::SymbolDecl || inner.kind == stex::NodeKind::SymbolDef) &&
                           f.module) {
                    f.mentioned_symbols.insert(SymbolId{*f.module + "?" + std::string(inner.attr("name"))});
                }
            });
        }
        graph_.fragments.push_back(std::move(f));
        pending_.fragments.push_back(std::move(pending));
    }

    void open_section(const stex::Node& n)
    {
        auto level = section_level(n.attr("level")).value_or(SectionLevel::Section);
        while (!section_stack_.empty() && graph_.sections[section_stack_.back()].level >= level)
            section_stack_.pop_back();
        SectionNode node;
        node.index = graph_.sections.size();
        node.level = level;
        node.title = std::string(n.attr("title"));
        node.doc_id = doc_.doc_id;
        if (!section_stack_.empty()) {
            node.parent = section_stack_.back();
            graph_.sections[section_stack_.back()].children.push_back(node.index);
        }
        section_stack_.push_back(node.index);
        graph_.sections.push_back(std::move(node));
    }

    void open_module(const stex::Node& n)
    {
        ModuleEntry entry;
        entry.name = std::string(n.attr("name"));
        entry.id = doc_.doc_id + "?" + entry.name;
        entry.doc_id = doc_.doc_id;
        if (graph_.modules.contains(entry.id))
            graph_.diagnostics.push_back({doc_.doc_id, "module '" + entry.name + "' declared twice; bodies merged"});
        else
            graph_.modules.emplace(entry.id, entry);

        module_stack_.push_back(entry.id);
        visit(n.children);
        flush_paragraph();
        module_stack_.pop_back();
    }

    void declare_symbol(const stex::Node& n)
    {
        std::string name(n.attr("name"));
        if (module_stack_.empty()) {
            graph_.diagnostics.push_back({doc_.doc_id, "symbol '" + name + "' declared outside a module is ignored"});
            return;
        }
        const auto& module = module_stack_.back();
        SymbolId id{module + "?" + name};
        if (graph_.symbols.contains(id))
            throw Error("DuplicateSymbol", "module '" + module + "' declares '" + name + "' twice");
        SymbolEntry entry;
        entry.id = id;
        entry.name = name;
        entry.module = module;
        entry.macro = n.kind == stex::NodeKind::SymbolDef ? "symdef" : "symdecl";
        graph_.symbols.emplace(id, std::move(entry));
        graph_.modules[module].symbols.push_back(id);
    }

    const stex::SourceDocument& doc_;
    KnowledgeGraph& graph_;
    Pending& pending_;
    std::vector<ModuleId> module_stack_;
    std::vector<std::size_t> section_stack_;
    std::size_t ordinal_ = 0;
    std::size_t para_begin_ = npos;
    std::size_t para_end_ = 0;
    std::vector<const stex::Node*> para_nodes_;
};

// Search terms keep inner hyphens so that "arc-consistency" stays one token
// and can match the symbol of that name.
std::vector<std::string> search_tokens(std::string_view s)
{
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        while (!current.empty() && current.back() == '-')
            current.pop_back();
        auto first = current.find_first_not_of('-');
        if (first != std::string::npos)
            out.push_back(current.substr(first));
        current.clear();
    };
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-')
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else
            flush();
    }
    flush();
    return out;
}

std::size_t granularity_level(Granularity g)
{
    switch (g) {
    case Granularity::Chapter: return 0;
    case Granularity::Section: return 1;
    case Granularity::Subsection: return 2;
    }
    return 1;
}

} // namespace

std::string_view SymbolId::name() const
{
    auto q = uri.rfind('?');
    return q == std::string::npos ? std::string_view(uri) : std::string_view(uri).substr(q + 1);
}

std::string ModuleRef::module_name() const
{
    auto q = path.rfind('?');
    return q == std::string::npos ? path : path.substr(q + 1);
}

std::string ModuleRef::to_string() const
{
    return (archive.empty() ? std::string{} : "[" + archive + "]") + "{" + path + "}";
}

std::string_view to_string(FragmentKind kind) noexcept
{
    switch (kind) {
    case FragmentKind::Definition: return "Definition";
    case FragmentKind::Example: return "Example";
    case FragmentKind::Remark: return "Remark";
    case FragmentKind::Plain: return "Plain";
    }
    return "";
}

std::vector<std::size_t> KnowledgeGraph::top_level_sections() const
{
    std::vector<std::size_t> out;
    for (const auto& s : sections)
        if (!s.parent)
            out.push_back(s.index);
    return out;
}

const Fragment* KnowledgeGraph::find_fragment(std::string_view id) const
{
    for (const auto& f : fragments)
        if (f.id == id)
            return &f;
    return nullptr;
}

const SymbolEntry* KnowledgeGraph::find_symbol(const SymbolId& id) const
{
    auto it = symbols.find(id);
    return it == symbols.end() ? nullptr : &it->second;
}

std::vector<SymbolId> KnowledgeGraph::symbols_named(std::string_view name) const
{
    std::vector<SymbolId> out;
    for (const auto& [id, entry] : symbols)
        if (entry.name == name)
            out.push_back(id);
    return out;
}

bool KnowledgeGraph::section_within(std::size_t inner, std::size_t outer) const
{
    std::optional<std::size_t> cur = inner;
    while (cur) {
        if (*cur == outer)
            return true;
        cur = sections[*cur].parent;
    }
    return false;
}

std::optional<ModuleId> resolve_module(const KnowledgeGraph& graph, const ModuleRef& ref)
{
    const auto name = ref.module_name();
    std::vector<ModuleId> candidates;
    for (const auto& [id, entry] : graph.modules)
        if (entry.name == name)
            candidates.push_back(id);
    if (candidates.size() == 1)
        return candidates.front();
    if (candidates.empty())
        return std::nullopt;

    std::string hint = ref.archive;
    if (auto q = ref.path.rfind('?'); q != std::string::npos) {
        if (!hint.empty())
            hint += '/';
        hint += ref.path.substr(0, q);
    }
    if (hint.empty())
        return std::nullopt;
    std::vector<ModuleId> filtered;
    for (const auto& id : candidates)
        if (graph.modules.at(id).doc_id.find(hint) != std::string::npos)
            filtered.push_back(id);
    if (filtered.size() == 1)
        return filtered.front();
    return std::nullopt;
}

KnowledgeGraph build_graph(std::span<const stex::SourceDocument> docs)
{
    KnowledgeGraph graph;
    Pending pending;

    for (const auto& doc : docs) {
        stex::DocumentAst ast;
        try {
            ast = stex::parse_document(doc);
        } catch (const stex::ParseError& e) {
            throw Error("ParseFailure", doc.doc_id + ": " + e.what());
        }
        graph.doc_ids.push_back(doc.doc_id);
        for (const auto& d : ast.diagnostics)
            graph.diagnostics.push_back({doc.doc_id, d.message});
        Walker(doc, graph, pending).run(ast);
    }

    for (const auto& imp : pending.imports) {
        auto& module = graph.modules.at(imp.module);
        if (auto target = resolve_module(graph, imp.ref)) {
            if (std::find(module.imports.begin(), module.imports.end(), *target) == module.imports.end())
                module.imports.push_back(*target);
        } else {
            module.dangling_imports.push_back(imp.ref);
            graph.diagnostics.push_back({module.doc_id, "dangling import " + imp.ref.to_string() + " in module '" +
                                                            module.name + "'"});
        }
    }

    std::map<std::string, std::vector<ModuleId>> doc_scope;
    for (const auto& [doc_id, refs] : pending.doc_uses)
        for (const auto& ref : refs)
            if (auto target = resolve_module(graph, ref))
                doc_scope[doc_id].push_back(*target);

    for (const auto& pf : pending.fragments) {
        auto& fragment = graph.fragments[pf.fragment];
        std::vector<ModuleId> scope;
        if (fragment.module)
            scope.push_back(*fragment.module);
        else
            scope = doc_scope[fragment.doc_id];

        for (const auto& ref : pf.refs) {
            auto r = try_resolve(graph, ref.name, scope);
            if (r.status != ResolutionStatus::Resolved) {
                graph.diagnostics.push_back({fragment.doc_id, "unresolved reference '" + ref.name + "' in fragment " +
                                                                  fragment.id});
                continue;
            }
            fragment.mentioned_symbols.insert(*r.symbol);
            if (!ref.verbalization.empty() && ref.verbalization != ref.name)
                graph.symbols.at(*r.symbol).verbalizations.insert(ref.verbalization);
        }
        for (const auto& name : pf.defines) {
            auto r = try_resolve(graph, name, scope);
            if (r.status != ResolutionStatus::Resolved) {
                graph.diagnostics.push_back({fragment.doc_id, "definition target '" + name + "' not resolvable"});
                continue;
            }
            fragment.mentioned_symbols.insert(*r.symbol);
            if (fragment.kind == FragmentKind::Definition)
                graph.symbols.at(*r.symbol).defining_fragments.push_back(fragment.id);
        }
    }
    return graph;
}

std::set<ModuleId> visible_modules(const KnowledgeGraph& graph, std::span<const ModuleId> scope)
{
    std::set<ModuleId> seen;
    std::deque<ModuleId> queue(scope.begin(), scope.end());
    while (!queue.empty()) {
        auto id = std::move(queue.front());
        queue.pop_front();
        if (!seen.insert(id).second)
            continue;
        auto it = graph.modules.find(id);
        if (it == graph.modules.end())
            continue;
        for (const auto& imp : it->second.imports)
            queue.push_back(imp);
    }
    return seen;
}

Resolution try_resolve(const KnowledgeGraph& graph, std::string_view name, std::span<const ModuleId> scope)
{
    std::string_view module_filter;
    std::string_view symbol_name = name;
    if (auto q = name.rfind('?'); q != npos) {
        module_filter = name.substr(0, q);
        if (auto q2 = module_filter.rfind('?'); q2 != npos)
            module_filter = module_filter.substr(q2 + 1);
        symbol_name = name.substr(q + 1);
    }

    Resolution result;
    for (const auto& module_id : visible_modules(graph, scope)) {
        auto it = graph.modules.find(module_id);
        if (it == graph.modules.end())
            continue;
        if (!module_filter.empty() && it->second.name != module_filter)
            continue;
        for (const auto& sym : it->second.symbols)
            if (sym.name() == symbol_name)
                result.candidates.push_back(sym);
    }
    std::sort(result.candidates.begin(), result.candidates.end());
    result.candidates.erase(std::unique(result.candidates.begin(), result.candidates.end()), result.candidates.end());

    if (result.candidates.size() == 1) {
        result.status = ResolutionStatus::Resolved;
        result.symbol = result.candidates.front();
    } else {
        result.status = result.candidates.empty() ? ResolutionStatus::Unknown : ResolutionStatus::Ambiguous;
    }
    return result;
}

SymbolId resolve_symbol(const KnowledgeGraph& graph, std::string_view name, const ModuleId& scope)
{
    const ModuleId scopes[] = {scope};
    auto r = try_resolve(graph, name, scopes);
    switch (r.status) {
    case ResolutionStatus::Resolved:
        return *r.symbol;
    case ResolutionStatus::Unknown:
        throw Error("UnknownSymbol", "no symbol named '" + std::string(name) + "' is visible in " + scope);
    case ResolutionStatus::Ambiguous: {
        std::string list;
        for (const auto& c : r.candidates)
            list += (list.empty() ? "" : ", ") + c.uri;
        throw Error("AmbiguousSymbol", "'" + std::string(name) + "' is ambiguous in " + scope + ": " + list);
    }
    }
    throw Error("UnknownSymbol", std::string(name));
}

std::vector<const Fragment*> fragments_for_concept(const KnowledgeGraph& graph, const SymbolId& symbol,
                                                   Granularity granularity)
{
    const auto* entry = graph.find_symbol(symbol);
    if (!entry)
        throw Error("UnknownSymbol", "unknown symbol " + symbol.uri);
    if (entry->defining_fragments.empty())
        return {};
    const auto* first = graph.find_fragment(entry->defining_fragments.front());

    std::vector<const Fragment*> out;
    if (!first->section) {
        for (const auto& f : graph.fragments)
            if (f.doc_id == first->doc_id && !f.section)
                out.push_back(&f);
        return out;
    }

    // Deepest enclosing section at or above the requested level; falls back
    // to the outermost section when nothing is coarse enough.
    const auto wanted = granularity_level(granularity);
    std::optional<std::size_t> chosen;
    std::size_t outermost = *first->section;
    for (std::optional<std::size_t> cur = first->section; cur; cur = graph.sections[*cur].parent) {
        outermost = *cur;
        if (!chosen && static_cast<std::size_t>(graph.sections[*cur].level) <= wanted)
            chosen = *cur;
    }
    const auto root = chosen.value_or(outermost);
    for (const auto& f : graph.fragments)
        if (f.section && graph.section_within(*f.section, root))
            out.push_back(&f);
    return out;
}

double definition_score(const KnowledgeGraph& graph, const Fragment& fragment, std::string_view query)
{
    auto query_tokens = search_tokens(query);
    if (query_tokens.empty())
        return 0.0;
    std::unordered_map<std::string, int> tf;
    for (auto& w : search_tokens(fragment.text))
        ++tf[w];

    std::set<std::string> boosted;
    if (fragment.module) {
        if (auto it = graph.modules.find(*fragment.module); it != graph.modules.end())
            for (const auto& sym : it->second.symbols)
                boosted.insert(text::to_lower(sym.name()));
    }

    double score = 0.0;
    for (const auto& t : query_tokens) {
        auto it = tf.find(t);
        if (it == tf.end())
            continue;
        score += it->second * (boosted.contains(t) ? 2.0 : 1.0);
    }
    return score;
}

std::vector<std::vector<const Fragment*>> search_definitions(const KnowledgeGraph& graph,
                                                             std::span<const std::string> queries, std::size_t k)
{
    if (k == 0)
        throw Error("InvalidArgument", "search_definitions requires k >= 1");
    std::vector<std::vector<const Fragment*>> results;
    for (const auto& query : queries) {
        std::vector<std::pair<double, const Fragment*>> scored;
        for (const auto& f : graph.fragments) {
            if (f.kind != FragmentKind::Definition)
                continue;
            if (auto s = definition_score(graph, f, query); s > 0.0)
                scored.emplace_back(s, &f);
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<const Fragment*> top;
        for (std::size_t i = 0; i < scored.size() && i < k; ++i)
            top.push_back(scored[i].second);
        results.push_back(std::move(top));
    }
    return results;
}

} // namespace quizgen::kg
