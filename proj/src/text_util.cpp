// SPDX-License-Identifier: Apache-2.0
#include "quizgen/text_util.hpp"

#include <cctype>

namespace quizgen::text {

namespace {

bool is_word_char(char c) noexcept
{
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::vector<std::string> split_words(std::string_view s, bool skip_macros)
{
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (skip_macros && c == '\\') {
            if (!current.empty())
                out.push_back(std::move(current));
            current.clear();
            ++i;
            while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i])))
                ++i;
            --i;
            continue;
        }
        if (is_word_char(c)) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty())
        out.push_back(std::move(current));
    return out;
}

} // namespace

std::string_view trim(std::string_view s) noexcept
{
    auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (!s.empty() && space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && space(s.back()))
        s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> words(std::string_view s)
{
    return split_words(s, false);
}

std::vector<std::string> words_without_macros(std::string_view s)
{
    return split_words(s, true);
}

std::string html_escape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += sep;
        out += parts[i];
    }
    return out;
}

} // namespace quizgen::text
