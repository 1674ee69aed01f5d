#include "citelens/server.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace citelens::server {

using nlohmann::json;

ServerOptions ServerOptions::from_env() {
    ServerOptions o;
    if (const char* port = std::getenv("CITELENS_PORT"); port != nullptr && *port != '\0') {
        int value = 0;
        const auto* end = port + std::char_traits<char>::length(port);
        auto [ptr, ec] = std::from_chars(port, end, value);
        if (ec != std::errc() || ptr != end || value <= 0 || value > 65535) {
            throw Error(ErrorKind::invalid_input, std::string("bad CITELENS_PORT: ") + port);
        }
        o.port = value;
    }
    return o;
}

int http_status(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::unknown_paper:
        case ErrorKind::unknown_marker:
        case ErrorKind::unparsed_document:
        case ErrorKind::not_in_library:
            return 404;
        case ErrorKind::invalid_event:
        case ErrorKind::invalid_input:
        case ErrorKind::invalid_metadata:
        case ErrorKind::malformed_references:
            return 400;
        case ErrorKind::unresolved_citation:
            return 409;
        case ErrorKind::provider_unavailable:
            return 503;
        case ErrorKind::corrupt_log:
        case ErrorKind::io:
            return 500;
    }
    return 500;
}

json error_body(ErrorKind kind, const std::string& message) {
    return {{"schema_version", kSchemaVersion},
            {"error", {{"kind", std::string(to_string(kind))}, {"message", message}}}};
}

namespace {

void send(httplib::Response& res, int status, json body) {
    if (body.is_object() && !body.contains("schema_version")) body["schema_version"] = kSchemaVersion;
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

using Handler = std::function<json(const httplib::Request&)>;

httplib::Server::Handler wrap(Handler handler) {
    return [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
        try {
            send(res, 200, handler(req));
        } catch (const Error& e) {
            send(res, http_status(e.kind()), error_body(e.kind(), e.what()));
        } catch (const json::exception& e) {
            send(res, 400, error_body(ErrorKind::invalid_input, e.what()));
        } catch (const std::exception& e) {
            spdlog::error("{} {}: {}", req.method, req.path, e.what());
            send(res, 500, error_body(ErrorKind::io, e.what()));
        }
    };
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::invalid_input, std::string("request body is not JSON: ") + e.what());
    }
}

std::optional<int> int_param(const httplib::Request& req, const std::string& name) {
    if (!req.has_param(name)) return std::nullopt;
    const auto raw = req.get_param_value(name);
    int value = 0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc() || ptr != raw.data() + raw.size()) {
        throw Error(ErrorKind::invalid_input, name + " must be an integer");
    }
    return value;
}

bool flag_param(const httplib::Request& req, const std::string& name) {
    if (!req.has_param(name)) return false;
    const auto v = req.get_param_value(name);
    return v.empty() || v == "1" || v == "true";
}

PaperId path_id(const httplib::Request& req, const std::string& name = "id") {
    return PaperId(req.path_params.at(name));
}

// Settings toggles with the comma-separated `hide` classes switched off.
std::optional<augment::Toggles> toggles_param(const httplib::Request& req, const Workspace& ws) {
    if (!req.has_param("hide")) return std::nullopt;
    json patch = json::object();
    const auto raw = req.get_param_value("hide");
    std::size_t start = 0;
    while (start <= raw.size()) {
        const auto comma = std::min(raw.find(',', start), raw.size());
        if (comma > start) patch[raw.substr(start, comma - start)] = false;
        start = comma + 1;
    }
    augment::Toggles t = ws.settings().type_toggles;
    augment::from_json(patch, t);
    return t;
}

json history_json(Workspace& ws, const std::vector<activity::HistoryEntry>& entries) {
    json out = json::array();
    for (const auto& h : entries) {
        const auto meta = ws.corpus().get(h.paper_id);
        out.push_back({{"paper_id", h.paper_id},
                       {"title", meta ? json(meta->title) : json(nullptr)},
                       {"last_opened", h.last_opened},
                       {"progress", h.progress.fraction()},
                       {"saved", h.saved}});
    }
    return out;
}

json library_json(Workspace& ws) {
    json out = json::array();
    for (const auto& [id, item] : ws.library()) {
        const auto meta = ws.corpus().get(id);
        json prov = nullptr;
        if (item.provenance) {
            prov = {{"source_paper_id", item.provenance->source_paper_id},
                    {"citing_sentence", item.provenance->citing_sentence},
                    {"saved_at", item.provenance->saved_at}};
        }
        out.push_back({{"paper_id", id},
                       {"title", meta ? json(meta->title) : json(nullptr)},
                       {"saved_at", item.saved_at},
                       {"provenance", prov}});
    }
    return out;
}

void install_routes(httplib::Server& http, Workspace& ws) {
    http.Get("/health", wrap([](const httplib::Request&) { return json{{"status", "ok"}}; }));

    http.Post("/papers", wrap([&ws](const httplib::Request& req) {
        IngestOptions opts;
        opts.own = flag_param(req, "own");
        opts.create_missing = flag_param(req, "create_missing");
        return to_json(ws.ingest_json(req.body, opts));
    }));

    http.Post("/corpus", wrap([&ws](const httplib::Request& req) {
        const auto body = parse_body(req);
        std::vector<corpus::PaperMetadata> papers;
        try {
            if (body.is_array()) {
                papers = body.get<std::vector<corpus::PaperMetadata>>();
            } else {
                papers.push_back(body.get<corpus::PaperMetadata>());
            }
        } catch (const json::exception& e) {
            throw Error(ErrorKind::invalid_metadata, e.what());
        }
        return json{{"paper_ids", ws.upsert_papers(papers)}};
    }));

    http.Get("/papers/:id", wrap([&ws](const httplib::Request& req) {
        const auto meta = ws.corpus().get(path_id(req));
        if (!meta) throw Error(ErrorKind::unknown_paper, "unknown paper: " + path_id(req).value);
        json out = *meta;
        out["has_document"] = ws.document(meta->paper_id) != nullptr;
        return out;
    }));

    http.Get("/papers/:id/view", wrap([&ws](const httplib::Request& req) {
        return to_json(ws.view(path_id(req), int_param(req, "window"), toggles_param(req, ws)));
    }));

    http.Get("/papers/:id/markers/:mid/card", wrap([&ws](const httplib::Request& req) {
        std::optional<PaperId> cited;
        if (req.has_param("cited")) cited = PaperId(req.get_param_value("cited"));
        return to_json(ws.card(path_id(req), req.path_params.at("mid"), cited, int_param(req, "window")));
    }));

    http.Get("/papers/:id/engagement", wrap([&ws](const httplib::Request& req) {
        const auto id = path_id(req);
        if (!ws.corpus().get(id)) throw Error(ErrorKind::unknown_paper, "unknown paper: " + id.value);
        const auto e = ws.engagement(id);
        return json{{"paper_id", id}, {"progress", e.progress.fraction()}, {"saved", e.saved}};
    }));

    http.Post("/events", wrap([&ws](const httplib::Request& req) {
        const auto seq = ws.record_event(activity::event_from_json(parse_body(req)));
        return json{{"seq", seq}};
    }));

    http.Get("/history", wrap([&ws](const httplib::Request& req) {
        const auto window = int_param(req, "window");
        return json{{"window", window ? *window : ws.settings().window_size},
                    {"entries", history_json(ws, ws.history(window))}};
    }));

    http.Get("/library", wrap([&ws](const httplib::Request&) { return json{{"items", library_json(ws)}}; }));

    http.Get("/library/:id/card", wrap([&ws](const httplib::Request& req) {
        return cards::to_json(ws.library_card(path_id(req)));
    }));

    http.Delete("/library/:id", wrap([&ws](const httplib::Request& req) {
        const auto id = path_id(req);
        if (ws.library().count(id) == 0) throw Error(ErrorKind::not_in_library, "paper not in library: " + id.value);
        activity::ActivityEvent e;
        e.kind = activity::EventKind::unsave;
        e.paper_id = id;
        return json{{"removed", id}, {"seq", ws.record_event(std::move(e))}};
    }));

    http.Get("/settings", wrap([&ws](const httplib::Request&) { return to_json(ws.settings()); }));
    http.Put("/settings", wrap([&ws](const httplib::Request& req) {
        return to_json(ws.update_settings(parse_body(req)));
    }));

    http.Get("/profile", wrap([&ws](const httplib::Request&) { return json{{"own_paper_ids", ws.own_papers()}}; }));
    http.Put("/profile", wrap([&ws](const httplib::Request& req) {
        const auto body = parse_body(req);
        ws.set_own_papers(body.at("own_paper_ids").get<std::set<PaperId>>());
        return json{{"own_paper_ids", ws.own_papers()}};
    }));

    http.Post("/eval/strategies", wrap([&ws](const httplib::Request& req) {
        const auto body = parse_body(req);
        const auto k = body.value("k", 5);
        if (k < 1) throw Error(ErrorKind::invalid_input, "k must be at least 1");
        const auto report = ws.evaluate(body.at("doc_id").get<PaperId>(),
                                        body.value("peer_ids", std::vector<PaperId>{}), static_cast<std::size_t>(k),
                                        body.value("seed", std::uint64_t{0}), body.value("whole_document", false));
        return strategies::to_json(report);
    }));

    http.Get("/stats/usage", wrap([&ws](const httplib::Request&) { return usage::to_json(ws.usage_stats()); }));

    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        if (res.status == 404) {
            send(res, 404, {{"error", {{"kind", "no_route"}, {"message", "no route for " + req.method + " " + req.path}}}});
        }
    });
    http.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
    });
}

}  // namespace

struct Server::Impl {
    httplib::Server http;
};

Server::Server(Workspace& workspace) : impl_(std::make_unique<Impl>()) { install_routes(impl_->http, workspace); }

Server::~Server() = default;

bool Server::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }

int Server::bind_to_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }

bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

void Server::stop() { impl_->http.stop(); }

}  // namespace citelens::server
