// SPDX-License-Identifier: Apache-2.0
#include "quizgen/config.hpp"

#include "quizgen/error.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <fstream>

namespace quizgen::config {

Values load_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("InvalidConfig", "cannot read config file " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error("InvalidConfig", path.string() + ": expected a JSON object");
    Values out;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string())
            out[key] = value.get<std::string>();
        else if (value.is_number() || value.is_boolean())
            out[key] = value.dump();
        else
            throw Error("InvalidConfig", path.string() + ": '" + key + "' must be a string, number or boolean");
    }
    return out;
}

std::string env_name(const std::string& key)
{
    std::string out = "QUIZGEN_";
    for (char c : key)
        out += c == '-' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

EnvLookup process_environment()
{
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v || !*v)
            return std::nullopt;
        return std::string(v);
    };
}

Settings::Settings(Values flags, EnvLookup env, Values file)
    : flags_(std::move(flags)), env_(std::move(env)), file_(std::move(file))
{
}

std::optional<std::string> Settings::get(const std::string& key) const
{
    if (auto it = flags_.find(key); it != flags_.end())
        return it->second;
    if (env_)
        if (auto v = env_(env_name(key)))
            return v;
    if (auto it = file_.find(key); it != file_.end())
        return it->second;
    return std::nullopt;
}

std::string Settings::get_or(const std::string& key, const std::string& fallback) const
{
    return get(key).value_or(fallback);
}

} // namespace quizgen::config
