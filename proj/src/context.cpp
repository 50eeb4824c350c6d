// SPDX-License-Identifier: Apache-2.0
#include "quizgen/context.hpp"

#include <algorithm>
#include <set>

namespace quizgen::context {

std::string render_entry(const ContextEntry& entry)
{
    std::string out = entry.fragment_id;
    out += "\n```\n";
    out += entry.text;
    out += "\n```";
    return out;
}

std::string render_entries(std::span<const ContextEntry> entries)
{
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i)
            out += "\n\n";
        out += render_entry(entries[i]);
    }
    return out;
}

ContextBundle build_context(const kg::KnowledgeGraph& graph, std::span<const kg::SymbolId> concepts,
                            Granularity granularity, std::size_t budget)
{
    if (budget == 0)
        throw Error("InvalidArgument", "token budget must be positive");

    std::set<std::size_t> candidate_set;
    std::set<std::string> defining;
    for (const auto& concept_id : concepts) {
        for (const auto* f : kg::fragments_for_concept(graph, concept_id, granularity))
            candidate_set.insert(f->index);
        for (const auto& id : graph.symbols.at(concept_id).defining_fragments)
            defining.insert(id);
    }

    // Packing order: defining fragments first, each group in document order.
    std::vector<const kg::Fragment*> order;
    for (auto idx : candidate_set)
        if (defining.contains(graph.fragments[idx].id))
            order.push_back(&graph.fragments[idx]);
    for (auto idx : candidate_set)
        if (!defining.contains(graph.fragments[idx].id))
            order.push_back(&graph.fragments[idx]);

    ContextBundle bundle;
    bundle.budget = budget;
    std::vector<const kg::Fragment*> packed;
    std::size_t bytes = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto* f = order[i];
        const auto entry_bytes = render_entry({f->id, f->text}).size() + (packed.empty() ? 0 : 2);
        if ((bytes + entry_bytes + 3) / 4 > budget) {
            if (i == 0)
                throw Error("BudgetTooSmall", "defining fragment " + f->id + " needs " +
                                                  std::to_string((entry_bytes + 3) / 4) + " tokens; budget is " +
                                                  std::to_string(budget));
            bundle.truncated = true;
            break;
        }
        bytes += entry_bytes;
        packed.push_back(f);
    }

    std::sort(packed.begin(), packed.end(), [](auto* a, auto* b) { return a->index < b->index; });
    for (const auto* f : packed)
        bundle.entries.push_back({f->id, f->text});
    bundle.estimated_tokens = estimate_tokens(render_entries(bundle.entries));
    return bundle;
}

} // namespace quizgen::context
