// SPDX-License-Identifier: Apache-2.0
#include "quizgen/config.hpp"
#include "quizgen/error.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>

using namespace quizgen::config;
using quizgen::testing::scratch_dir;

namespace {

std::filesystem::path write(const std::string& name, const std::string& text)
{
    auto p = scratch_dir("config") / name;
    std::ofstream(p) << text;
    return p;
}

EnvLookup env_of(Values vars)
{
    return [vars](const std::string& name) -> std::optional<std::string> {
        if (auto it = vars.find(name); it != vars.end())
            return it->second;
        return std::nullopt;
    };
}

} // namespace

TEST_CASE("environment names")
{
    CHECK(env_name("replay_dir") == "QUIZGEN_REPLAY_DIR");
    CHECK(env_name("store") == "QUIZGEN_STORE");
    CHECK(env_name("max-tool-rounds") == "QUIZGEN_MAX_TOOL_ROUNDS");
}

TEST_CASE("flags beat environment beats file")
{
    Values file = {{"store", "file.db"}, {"model", "file-model"}, {"backend", "replay"}};
    auto env = env_of({{"QUIZGEN_STORE", "env.db"}, {"QUIZGEN_MODEL", "env-model"}});
    Values flags = {{"store", "flag.db"}};
    Settings s(flags, env, file);

    CHECK(s.get("store") == "flag.db");
    CHECK(s.get("model") == "env-model");
    CHECK(s.get("backend") == "replay");
    CHECK_FALSE(s.get("missing"));
    CHECK(s.get_or("missing", "dflt") == "dflt");
    CHECK(s.get_or("store", "dflt") == "flag.db");
}

TEST_CASE("no environment lookup")
{
    Settings s({}, nullptr, {{"a", "1"}});
    CHECK(s.get("a") == "1");
}

TEST_CASE("config files")
{
    auto ok = write("ok.json", R"({"store": "q.db", "max_tool_rounds": 4, "trace": true})");
    auto v = load_config_file(ok);
    CHECK(v.at("store") == "q.db");
    CHECK(v.at("max_tool_rounds") == "4");
    CHECK(v.at("trace") == "true");

    auto code_of = [](const std::filesystem::path& p) {
        try {
            (void)load_config_file(p);
        } catch (const quizgen::Error& e) {
            return e.code();
        }
        return std::string("none");
    };
    CHECK(code_of(write("broken.json", "{not json")) == "InvalidConfig");
    CHECK(code_of(write("array.json", "[1,2]")) == "InvalidConfig");
    CHECK(code_of(write("nested.json", R"({"a": {"b": 1}})")) == "InvalidConfig");
    CHECK(code_of(scratch_dir("config-missing") / "absent.json") == "InvalidConfig");
}
