// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quizgen/service.hpp"

#include <memory>
#include <string>

namespace quizgen::app {

/// JSON-over-HTTP front of a Service. Routes and schemas: docs/http-api.md.
class HttpApi {
public:
    explicit HttpApi(Service& service);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds and serves until stop(); blocks.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and returns it; serve with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP status used for an error code.
[[nodiscard]] int http_status_for(std::string_view error_code) noexcept;

} // namespace quizgen::app
