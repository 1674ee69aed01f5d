#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "citelens/server.hpp"
#include "citelens/simulate.hpp"
#include "citelens/workspace.hpp"

namespace citelens::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string data_dir;
    std::string format = "text";
    std::uint64_t seed = 0;

    bool as_json() const { return format == "json"; }

    WorkspaceOptions workspace_options() const {
        if (!data_dir.empty()) return WorkspaceOptions::for_data_dir(data_dir);
        return WorkspaceOptions::from_env();
    }
};

/// Usage problems found after parsing (missing files, unknown ids).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool is_missing_id(const Error& e) {
    return e.kind() == ErrorKind::unknown_paper || e.kind() == ErrorKind::unparsed_document;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::vector<std::string> paths;
    bool own = false;
    bool create_missing = false;
};

std::string describe(const IngestReport& r) {
    const auto& p = r.parse_report;
    std::ostringstream out;
    out << r.paper_id.value << ": " << p.markers << " markers, " << p.linked << " linked, " << p.unresolved
        << " unresolved keys, " << r.resolved << "/" << p.entries << " entries resolved (" << to_string(p.style_used)
        << (r.cache_hit ? ", cached)" : ")");
    for (const auto& w : p.warnings) out << "\n  warning: " << w;
    return out.str();
}

int cmd_ingest(const Globals& g, const IngestArgs& a, std::ostream& out, std::ostream& err) {
    Workspace ws(g.workspace_options());
    int code = kOk;
    json reports = json::array();
    for (const auto& path : a.paths) {
        std::string raw;
        try {
            raw = read_text(path);
        } catch (const UsageError& e) {
            err << path << ": " << e.what() << "\n";
            code = std::max(code, kUsage);
            continue;
        }
        try {
            const auto j = json::parse(raw);
            const bool metadata = j.is_array() || (j.is_object() && j.contains("papers") && !j.contains("sections"));
            if (metadata) {
                const auto& list = j.is_array() ? j : j.at("papers");
                std::vector<corpus::PaperMetadata> papers;
                try {
                    papers = list.get<std::vector<corpus::PaperMetadata>>();
                } catch (const json::exception& e) {
                    throw Error(ErrorKind::invalid_metadata, e.what());
                }
                const auto ids = ws.upsert_papers(papers);
                if (g.as_json()) {
                    reports.push_back({{"file", path}, {"paper_ids", ids}});
                } else {
                    out << path << ": " << ids.size() << " corpus papers\n";
                }
                continue;
            }
            const auto report = ws.ingest_json(raw, {a.own, a.create_missing});
            if (g.as_json()) {
                auto rj = to_json(report);
                rj["file"] = path;
                reports.push_back(std::move(rj));
            } else {
                out << path << " -> " << describe(report) << "\n";
            }
        } catch (const std::exception& e) {
            err << path << ": " << e.what() << "\n";
            code = std::max(code, kFailure);
        }
    }
    if (g.as_json()) out << json{{"schema_version", kSchemaVersion}, {"reports", reports}}.dump(2) << "\n";
    return code;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Globals& g, const std::string& script_path, std::ostream& out, std::ostream& err) {
    std::ifstream script(script_path);
    if (!script) {
        err << script_path << ": cannot read script\n";
        return kUsage;
    }
    // Each run starts from an empty in-memory workspace.
    WorkspaceOptions options;
    Workspace ws(options);
    try {
        const auto result = simulate::run(script, g.seed, ws);
        if (g.as_json()) {
            auto j = simulate::to_json(result);
            j["schema_version"] = kSchemaVersion;
            out << j.dump(2) << "\n";
        } else {
            out << simulate::render_text(result);
        }
        return kOk;
    } catch (const simulate::ScriptError& e) {
        err << script_path << ":" << e.line() << ": " << e.what() << "\n";
        return kFailure;
    }
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string doc;
    std::vector<std::string> peers;
    int k = 5;
    bool whole_document = false;
};

std::string render_report(const strategies::StrategyReport& r, const corpus::Corpus& corpus) {
    std::ostringstream out;
    out << "k=" << r.k << " seed=" << r.seed << "\n";
    for (const auto& [name, ranking] : r.per_strategy) {
        out << "\n" << strategies::to_string(name) << ":\n";
        for (const auto& item : ranking) {
            const auto meta = corpus.get(item.paper_id);
            out << "  " << item.paper_id.value << "  " << item.score;
            if (meta) out << "  " << meta->title;
            out << "\n";
        }
    }
    out << "\npooled (" << r.pooled.size() << "):\n";
    for (const auto& id : r.pooled) {
        out << "  " << id.value << "  [";
        bool first = true;
        for (const auto& s : r.attribution.at(id)) {
            out << (first ? "" : ", ") << strategies::to_string(s);
            first = false;
        }
        out << "]\n";
    }
    out << "\noverlap:";
    for (const auto& [n, count] : r.overlap_histogram) out << " " << n << "=" << count;
    out << "\n";
    return out.str();
}

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out, std::ostream& err) {
    if (a.k < 1) {
        err << "k must be at least 1\n";
        return kUsage;
    }
    Workspace ws(g.workspace_options());
    std::vector<PaperId> peers;
    for (const auto& p : a.peers) peers.emplace_back(p);
    try {
        const auto report = ws.evaluate(PaperId(a.doc), peers, static_cast<std::size_t>(a.k), g.seed, a.whole_document);
        if (g.as_json()) {
            auto j = strategies::to_json(report);
            j["schema_version"] = kSchemaVersion;
            out << j.dump(2) << "\n";
        } else {
            out << render_report(report, ws.corpus());
        }
        return kOk;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return is_missing_id(e) ? kUsage : kFailure;
    }
}

// ---------------------------------------------------------------------------

int cmd_stats(const Globals& g, std::ostream& out) {
    Workspace ws(g.workspace_options());
    const auto stats = ws.usage_stats();
    if (g.as_json()) {
        auto j = usage::to_json(stats);
        j["schema_version"] = kSchemaVersion;
        out << j.dump(2) << "\n";
    } else {
        out << usage::render_table(stats);
    }
    return kOk;
}

int cmd_serve(const Globals& g, const std::string& host, int port, std::ostream& out) {
    Workspace ws(g.workspace_options());
    server::Server server(ws);
    const int chosen = port > 0 ? port : server::ServerOptions::from_env().port;
    out << "serving " << ws.data_dir().string() << " on http://" << host << ":" << chosen << std::endl;
    return server.listen(host, chosen) ? kOk : kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Citation reencounter engine: ingest papers, simulate sessions, evaluate strategies, serve the API."};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--data-dir", g.data_dir, "Data directory (default $CITELENS_DATA_DIR or ./data)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--seed", g.seed, "Seed for tie shuffles");
    app.fallthrough();

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse document bundles or load corpus metadata files");
    ingest_cmd->add_option("paths", ingest.paths, "Bundle or metadata JSON files")->required();
    ingest_cmd->add_flag("--own", ingest.own, "Mark the documents as the user's own papers");
    ingest_cmd->add_flag("--create-missing", ingest.create_missing, "Add unresolved references to the corpus");

    std::string script;
    auto* sim_cmd = app.add_subcommand("simulate", "Replay a session script and report usage statistics");
    sim_cmd->add_option("script", script, "Session script (one JSON object per line)")->required();

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Pool the top-k citations of the four strategies");
    eval_cmd->add_option("doc", eval.doc, "Document paper id")->required();
    eval_cmd->add_option("peers", eval.peers, "Peer document ids of the same topic");
    eval_cmd->add_option("-k", eval.k, "Citations per strategy");
    eval_cmd->add_flag("--whole-document", eval.whole_document, "Use every section, not only the introduction");

    auto* stats_cmd = app.add_subcommand("stats", "Usage statistics from the event log");

    std::string host = "0.0.0.0";
    int port = 0;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port (default $CITELENS_PORT or 8080)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(g, ingest, out, err);
        if (*sim_cmd) return cmd_simulate(g, script, out, err);
        if (*eval_cmd) return cmd_eval(g, eval, out, err);
        if (*stats_cmd) return cmd_stats(g, out);
        if (*serve_cmd) return cmd_serve(g, host, port, out);
    } catch (const UsageError& e) {
        err << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

}  // namespace citelens::cli
