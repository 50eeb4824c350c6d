// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

struct sqlite3;

namespace quizgen::store {

enum class Kind { Corpus, Draft, Review, SurveyResponse, Transcript };
[[nodiscard]] std::string_view to_string(Kind kind) noexcept;

struct StoreRecord {
    Kind kind = Kind::Draft;
    std::string id;
    std::int64_t revision = 0;
    std::string created_at; // UTC, ISO 8601
    std::string payload;
};

/// Append-only record store in a single SQLite file. Every put adds a new
/// revision; nothing is ever updated in place or deleted.
class Store {
public:
    /// ":memory:" opens a private in-memory database.
    explicit Store(const std::filesystem::path& path);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    StoreRecord put(Kind kind, const std::string& id, const std::string& payload);

    [[nodiscard]] std::optional<StoreRecord> latest(Kind kind, const std::string& id) const;
    [[nodiscard]] std::vector<StoreRecord> history(Kind kind, const std::string& id) const;
    /// Latest revision of every id of this kind, ordered by id.
    [[nodiscard]] std::vector<StoreRecord> latest_all(Kind kind) const;

    /// Replaces the timestamp source (tests).
    void set_clock(std::function<std::string()> clock);

private:
    sqlite3* db_ = nullptr;
    mutable std::mutex mutex_;
    std::function<std::string()> clock_;
};

} // namespace quizgen::store
