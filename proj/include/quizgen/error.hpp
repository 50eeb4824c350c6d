// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace quizgen {

/// Base for every error raised by the library. `code()` is a stable
/// identifier (e.g. "UnknownSymbol") that the CLI and HTTP layer surface
/// verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code))
    {
    }

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace quizgen
