// SPDX-License-Identifier: Apache-2.0
#include "quizgen/context.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace quizgen;
using namespace quizgen::context;
using quizgen::testing::course_graph;

namespace {

kg::SymbolId sym(const std::string& doc, const std::string& module, const std::string& name)
{
    return kg::SymbolId{doc + "?" + module + "?" + name};
}

std::size_t section_index(const kg::KnowledgeGraph& g, const std::string& title)
{
    for (const auto& s : g.sections)
        if (s.title == title)
            return s.index;
    throw std::runtime_error("no section " + title);
}

// Fragment ids of a section subtree in document order, from the tree alone.
std::vector<std::string> section_walk(const kg::KnowledgeGraph& g, std::size_t root)
{
    std::vector<std::string> out;
    std::function<void(std::size_t)> visit = [&](std::size_t s) {
        for (const auto& id : g.sections[s].fragment_ids)
            out.push_back(id);
        for (auto c : g.sections[s].children)
            visit(c);
    };
    visit(root);
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
        return g.find_fragment(a)->index < g.find_fragment(b)->index;
    });
    return out;
}

std::vector<std::string> entry_ids(const ContextBundle& b)
{
    std::vector<std::string> out;
    for (const auto& e : b.entries)
        out.push_back(e.fragment_id);
    return out;
}

// Greedy packing re-simulated from the section walk: defining fragments
// first, then the rest, each group in document order.
std::vector<std::string> greedy(const kg::KnowledgeGraph& g, const kg::SymbolId& s, std::size_t budget,
                                bool& truncated)
{
    const auto& defining = g.symbols.at(s).defining_fragments;
    // Widen to the enclosing \section, as Section granularity does.
    auto top = *g.find_fragment(defining.front())->section;
    while (g.sections[top].parent && g.sections[top].level != kg::SectionLevel::Section)
        top = *g.sections[top].parent;
    const auto all = section_walk(g, top);

    std::vector<std::string> order;
    for (const auto& id : all)
        if (std::find(defining.begin(), defining.end(), id) != defining.end())
            order.push_back(id);
    for (const auto& id : all)
        if (std::find(defining.begin(), defining.end(), id) == defining.end())
            order.push_back(id);

    std::vector<std::string> kept;
    std::size_t bytes = 0;
    truncated = false;
    for (const auto& id : order) {
        const auto* f = g.find_fragment(id);
        std::size_t add = id.size() + 5 + f->text.size() + 4 + (kept.empty() ? 0 : 2);
        if ((bytes + add + 3) / 4 > budget) {
            truncated = true;
            break;
        }
        bytes += add;
        kept.push_back(id);
    }
    std::sort(kept.begin(), kept.end(), [&](const auto& a, const auto& b) {
        return g.find_fragment(a)->index < g.find_fragment(b)->index;
    });
    return kept;
}

} // namespace

TEST_CASE("token estimate")
{
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("abcdefgh") == 2);
    CHECK(estimate_tokens("abcdefghi") == 3);

    const auto& g = course_graph();
    std::string chapter;
    for (const auto& f : g.fragments)
        if (f.doc_id == "course/strips.tex")
            chapter += f.text;
    const double exact = double(chapter.size()) / 4.0;
    CHECK(estimate_tokens(chapter) == std::size_t(std::ceil(exact)));
}

TEST_CASE("rendered entries carry their id")
{
    ContextEntry e{"doc.tex#3", "body"};
    CHECK(render_entry(e) == "doc.tex#3\n```\nbody\n```");
    std::vector<ContextEntry> two{e, {"doc.tex#4", "more"}};
    CHECK(render_entries(two) == "doc.tex#3\n```\nbody\n```\n\ndoc.tex#4\n```\nmore\n```");
}

TEST_CASE("small section fits entirely")
{
    const auto& g = course_graph();
    const kg::SymbolId concepts[] = {sym("course/strips.tex", "strips", "action")};
    auto b = build_context(g, concepts, Granularity::Subsection);
    CHECK(entry_ids(b) == std::vector<std::string>{"course/strips.tex#2", "course/strips.tex#3"});
    CHECK_FALSE(b.truncated);
    CHECK(b.estimated_tokens == estimate_tokens(render_entries(b.entries)));
}

TEST_CASE("budget pressure drops trailing fragments")
{
    const auto& g = course_graph();
    const auto s = sym("course/arc-consistency.tex", "arc-consistency", "revise");
    const kg::SymbolId concepts[] = {s};
    auto full = build_context(g, concepts, Granularity::Section);
    REQUIRE(full.entries.size() == 7);

    bool truncated = false;
    for (std::size_t budget = 1; budget <= full.estimated_tokens + 5; ++budget) {
        INFO("budget " << budget);
        auto expected = greedy(g, s, budget, truncated);
        if (expected.empty()) {
            CHECK_THROWS_WITH(build_context(g, concepts, Granularity::Section, budget),
                              Catch::Matchers::ContainsSubstring("budget"));
            continue;
        }
        auto b = build_context(g, concepts, Granularity::Section, budget);
        CHECK(entry_ids(b) == expected);
        CHECK(b.truncated == truncated);
        CHECK(b.estimated_tokens <= budget);
    }
}

TEST_CASE("budget below the defining fragment")
{
    const auto& g = course_graph();
    const kg::SymbolId concepts[] = {sym("course/strips.tex", "strips", "action")};
    try {
        (void)build_context(g, concepts, Granularity::Section, 3);
        FAIL("expected BudgetTooSmall");
    } catch (const Error& e) {
        CHECK(e.code() == "BudgetTooSmall");
    }
    CHECK_THROWS(build_context(g, concepts, Granularity::Section, 0));
}

TEST_CASE("larger budgets only add entries")
{
    const auto& g = course_graph();
    for (const auto& [id, entry] : g.symbols) {
        if (entry.defining_fragments.empty())
            continue;
        const kg::SymbolId concepts[] = {id};
        std::vector<std::string> previous;
        for (std::size_t budget = 1; budget < 700; budget += 7) {
            ContextBundle b;
            try {
                b = build_context(g, concepts, Granularity::Section, budget);
            } catch (const Error&) {
                CHECK(previous.empty());
                continue;
            }
            auto now = entry_ids(b);
            for (const auto& p : previous)
                CHECK(std::find(now.begin(), now.end(), p) != now.end());
            previous = now;
        }
    }
}

TEST_CASE("each course topic retrieves exactly its section")
{
    const auto& g = course_graph();
    const std::vector<std::pair<std::string, kg::SymbolId>> topics = {
        {"Arc Consistency", sym("course/arc-consistency.tex", "arc-consistency", "arc-consistency")},
        {"Alpha-Beta Search", sym("course/alpha-beta.tex", "alpha-beta", "alpha-beta-pruning")},
        {"Semantics of Propositional Logic", sym("course/prop-semantics.tex", "prop-semantics", "entailment")},
        {"Syntax of First-Order Logic", sym("course/fol-syntax.tex", "fol-syntax", "term")},
        {"The STRIPS Model", sym("course/strips.tex", "strips", "strips-task")},
        {"The Delete Relaxation", sym("course/delete-relaxation.tex", "delete-relaxation", "relaxed-plan")},
    };
    for (const auto& [title, concept_id] : topics) {
        INFO(title);
        const kg::SymbolId concepts[] = {concept_id};
        auto b = build_context(g, concepts, Granularity::Section);
        CHECK(entry_ids(b) == section_walk(g, section_index(g, title)));
        CHECK_FALSE(b.truncated);
        auto rendered = render_entries(b.entries);
        for (const auto& e : b.entries)
            CHECK(rendered.find(e.fragment_id + "\n```\n" + e.text + "\n```") != std::string::npos);
    }
}
