// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/knowledge_graph.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quizgen::context {

/// Stays below the 128k-token window of the reference model, leaving room
/// for instructions and output.
inline constexpr std::size_t kDefaultTokenBudget = 100'000;

/// ceil(bytes / 4).
[[nodiscard]] constexpr std::size_t estimate_tokens(std::string_view text) noexcept
{
    return (text.size() + 3) / 4;
}

struct ContextEntry {
    std::string fragment_id;
    std::string text;
    friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

struct ContextBundle {
    std::vector<ContextEntry> entries; // document order
    std::size_t estimated_tokens = 0;
    std::size_t budget = 0;
    bool truncated = false;
};

/// One learning object as it appears in the prompt: the id line followed by
/// the fenced source.
[[nodiscard]] std::string render_entry(const ContextEntry& entry);

/// All entries joined by blank lines. `estimated_tokens` is measured on this.
[[nodiscard]] std::string render_entries(std::span<const ContextEntry> entries);

/// Packs the fragments of every concept's section. Defining fragments are
/// packed first; the rest follow in document order until the next one would
/// exceed the budget.
[[nodiscard]] ContextBundle build_context(const kg::KnowledgeGraph& graph, std::span<const kg::SymbolId> concepts,
                                          Granularity granularity, std::size_t budget = kDefaultTokenBudget);

} // namespace quizgen::context
