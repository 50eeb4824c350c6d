// SPDX-License-Identifier: Apache-2.0
#include "quizgen/store.hpp"

#include "quizgen/error.hpp"

#include <sqlite3.h>

#include <chrono>
#include <ctime>

namespace quizgen::store {

std::string_view to_string(Kind kind) noexcept
{
    switch (kind) {
    case Kind::Corpus: return "Corpus";
    case Kind::Draft: return "Draft";
    case Kind::Review: return "Review";
    case Kind::SurveyResponse: return "SurveyResponse";
    case Kind::Transcript: return "Transcript";
    }
    return "";
}

namespace {

class Statement {
public:
    Statement(sqlite3* db, const char* sql)
    {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
            throw Error("StoreFailure", sqlite3_errmsg(db));
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    void bind(int i, std::string_view s) { sqlite3_bind_text(stmt_, i, s.data(), int(s.size()), SQLITE_TRANSIENT); }
    void bind_blob(int i, std::string_view s)
    {
        sqlite3_bind_blob(stmt_, i, s.data(), int(s.size()), SQLITE_TRANSIENT);
    }
    void bind(int i, std::int64_t v) { sqlite3_bind_int64(stmt_, i, v); }
    int step() { return sqlite3_step(stmt_); }

    std::string text(int col) const
    {
        auto* p = reinterpret_cast<const char*>(sqlite3_column_blob(stmt_, col));
        return p ? std::string(p, std::size_t(sqlite3_column_bytes(stmt_, col))) : std::string{};
    }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

private:
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql)
{
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "sqlite error";
        sqlite3_free(err);
        throw Error("StoreFailure", msg);
    }
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

StoreRecord read_row(const Statement& st, Kind kind)
{
    return {kind, st.text(0), st.integer(1), st.text(2), st.text(3)};
}

} // namespace

Store::Store(const std::filesystem::path& path) : clock_(utc_now)
{
    if (sqlite3_open_v2(path.string().c_str(), &db_,
                        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "cannot open database";
        sqlite3_close(db_);
        throw Error("StoreFailure", path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec(db_, "CREATE TABLE IF NOT EXISTS records ("
              " kind TEXT NOT NULL, id TEXT NOT NULL, revision INTEGER NOT NULL,"
              " created_at TEXT NOT NULL, payload BLOB NOT NULL,"
              " PRIMARY KEY (kind, id, revision))");
}

Store::~Store()
{
    sqlite3_close(db_);
}

void Store::set_clock(std::function<std::string()> clock)
{
    std::lock_guard lock(mutex_);
    clock_ = std::move(clock);
}

StoreRecord Store::put(Kind kind, const std::string& id, const std::string& payload)
{
    std::lock_guard lock(mutex_);
    exec(db_, "BEGIN IMMEDIATE");
    try {
        Statement q(db_, "SELECT COALESCE(MAX(revision), 0) FROM records WHERE kind = ?1 AND id = ?2");
        q.bind(1, to_string(kind));
        q.bind(2, id);
        q.step();
        StoreRecord rec{kind, id, q.integer(0) + 1, clock_(), payload};

        Statement ins(db_, "INSERT INTO records (kind, id, revision, created_at, payload) VALUES (?1, ?2, ?3, ?4, ?5)");
        ins.bind(1, to_string(kind));
        ins.bind(2, id);
        ins.bind(3, rec.revision);
        ins.bind(4, rec.created_at);
        ins.bind_blob(5, payload);
        if (ins.step() != SQLITE_DONE)
            throw Error("StoreFailure", sqlite3_errmsg(db_));
        exec(db_, "COMMIT");
        return rec;
    } catch (...) {
        sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
        throw;
    }
}

std::optional<StoreRecord> Store::latest(Kind kind, const std::string& id) const
{
    std::lock_guard lock(mutex_);
    Statement q(db_, "SELECT id, revision, created_at, payload FROM records WHERE kind = ?1 AND id = ?2"
                     " ORDER BY revision DESC LIMIT 1");
    q.bind(1, to_string(kind));
    q.bind(2, id);
    if (q.step() != SQLITE_ROW)
        return std::nullopt;
    return read_row(q, kind);
}

std::vector<StoreRecord> Store::history(Kind kind, const std::string& id) const
{
    std::lock_guard lock(mutex_);
    Statement q(db_, "SELECT id, revision, created_at, payload FROM records WHERE kind = ?1 AND id = ?2"
                     " ORDER BY revision");
    q.bind(1, to_string(kind));
    q.bind(2, id);
    std::vector<StoreRecord> out;
    while (q.step() == SQLITE_ROW)
        out.push_back(read_row(q, kind));
    return out;
}

std::vector<StoreRecord> Store::latest_all(Kind kind) const
{
    std::lock_guard lock(mutex_);
    Statement q(db_, "SELECT r.id, r.revision, r.created_at, r.payload FROM records r"
                     " JOIN (SELECT id, MAX(revision) AS rev FROM records WHERE kind = ?1 GROUP BY id) m"
                     " ON r.id = m.id AND r.revision = m.rev WHERE r.kind = ?1 ORDER BY r.id");
    q.bind(1, to_string(kind));
    std::vector<StoreRecord> out;
    while (q.step() == SQLITE_ROW)
        out.push_back(read_row(q, kind));
    return out;
}

} // namespace quizgen::store
