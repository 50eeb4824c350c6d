// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace quizgen::config {

using Values = std::map<std::string, std::string>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// A flat JSON object; numbers and booleans are kept as their JSON text.
/// Throws Error("InvalidConfig").
[[nodiscard]] Values load_config_file(const std::filesystem::path& path);

/// "replay_dir" -> "QUIZGEN_REPLAY_DIR".
[[nodiscard]] std::string env_name(const std::string& key);

[[nodiscard]] EnvLookup process_environment();

/// Flags win over the environment, which wins over the config file.
class Settings {
public:
    Settings(Values flags, EnvLookup env, Values file);

    [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
    [[nodiscard]] std::string get_or(const std::string& key, const std::string& fallback) const;

private:
    Values flags_;
    EnvLookup env_;
    Values file_;
};

} // namespace quizgen::config
