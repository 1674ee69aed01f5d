#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "citelens/error.hpp"
#include "citelens/workspace.hpp"

namespace citelens::server {

struct ServerOptions {
    std::string host = "0.0.0.0";
    int port = 8080;

    /// Reads CITELENS_PORT.
    static ServerOptions from_env();
};

/// HTTP status for an error kind: 404 for missing things, 400 for bad
/// input, 409 for conflicts and 500 otherwise.
int http_status(ErrorKind kind) noexcept;

/// JSON error body: {"schema_version", "error": {"kind", "message"}}.
nlohmann::json error_body(ErrorKind kind, const std::string& message);

/// JSON API over a Workspace. Every response carries schema_version.
class Server {
public:
    explicit Server(Workspace& workspace);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Blocks until stop(); false when the address cannot be bound.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it (-1 on failure); serve with
    /// listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace citelens::server
