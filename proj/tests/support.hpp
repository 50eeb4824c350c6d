// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/knowledge_graph.hpp"
#include "quizgen/prompt.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace quizgen::testing {

std::filesystem::path fixture(const std::string& relative);
std::string slurp(const std::filesystem::path& path);

/// Every `.tex` file below the fixture root, sorted.
std::vector<std::filesystem::path> all_tex_fixtures();

const kg::KnowledgeGraph& course_graph(); // ai-course-mini
const kg::KnowledgeGraph& smglom_graph(); // smglom-mini

/// `% key: value` lines at the top of a fixture.
std::map<std::string, std::string> headers(const std::string& text);

/// The frozen snapshot request: understand / medium / 5 questions on arc
/// consistency, context packed at Section granularity from the course corpus.
prompt::GenerationRequest canonical_request();
std::string canonical_prompt();

/// The sentences added to the criteria list while iterating on the prompt.
const std::vector<std::string>& iteration_sentences();

struct MutantRun {
    std::string file;
    std::string expected;           // the `% expect:` header
    std::vector<std::string> codes; // every issue code the validator reported
};

/// Validates each seeded-defect question against the course graph, with a
/// request restricted to the `% types:` header when present.
std::vector<MutantRun> run_mutants();

/// Fresh scratch directory below the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

} // namespace quizgen::testing
