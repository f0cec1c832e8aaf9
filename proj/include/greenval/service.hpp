#pragma once

// HTTP/JSON front end.
//
//   GET  /api/case-studies          ids of the registered datasets
//   GET  /api/case-studies/{id}     one dataset document
//   POST /api/evaluate | /api/compare | /api/sweep | /api/forecast
//
// POST bodies name a registered dataset ({"dataset": "sicily"}) or carry one
// inline ({"document": {...}}), plus run parameters. Errors are returned as
// {"error": {"code": ..., "message": ...}} with 400 (malformed payload),
// 404 (unknown dataset or route), 413 (payload over 1 MiB) or 422 (domain
// validation failure).

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "greenval/engine.hpp"

namespace greenval {

inline constexpr std::size_t kMaxRequestBytes = 1 << 20;
inline constexpr int kDefaultPort = 8080;

/// Read-only set of datasets keyed by metadata id, in registration order.
class Registry {
public:
    void add(CaseStudyDocument doc);
    const CaseStudyDocument* find(std::string_view id) const;
    std::vector<std::string> ids() const;

    /// Loads every dataset listed in `dir/index.json` (an array of file
    /// names), or every *.json file in name order when there is no index.
    static Registry load_directory(const std::filesystem::path& dir);

private:
    std::vector<CaseStudyDocument> docs_;
};

struct ApiResponse {
    int status = 200;
    std::string body;
};

/// Stateless request handler used by the HTTP server.
ApiResponse handle_request(const Registry& registry, std::string_view method, std::string_view path,
                           std::string_view body);

/// Builds a run request from a JSON payload. Throws nlohmann::json
/// exceptions or DomainError for malformed or invalid fields.
RunRequest parse_api_request(Command command, const nlohmann::json& payload);

class Service {
public:
    explicit Service(const Registry& registry);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds to host:port; port 0 picks a free port. Returns the bound
    /// port or -1 on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    bool listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Port from the flag, then GREENVAL_PORT, then the default.
int resolve_port(std::optional<int> flag);

}  // namespace greenval
