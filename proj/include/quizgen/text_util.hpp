// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace quizgen::text {

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;
[[nodiscard]] std::string to_lower(std::string_view s);

/// Lowercased maximal runs of ASCII letters and digits.
[[nodiscard]] std::vector<std::string> words(std::string_view s);

/// Like `words`, but drops TeX control sequences (`\sn`, `\compose`, ...).
[[nodiscard]] std::vector<std::string> words_without_macros(std::string_view s);

[[nodiscard]] std::string html_escape(std::string_view s);

[[nodiscard]] std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace quizgen::text
