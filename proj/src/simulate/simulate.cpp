#include "citelens/simulate.hpp"

#include <sstream>

namespace citelens::simulate {

using nlohmann::json;

ScriptError::ScriptError(std::size_t line, ErrorKind kind, const std::string& message)
    : Error(kind, "script line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

bool is_blank(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (c != ' ' && c != '\t' && c != '\r') return false;
    }
    return true;
}

Instant time_of(const json& step, Instant previous) {
    if (!step.contains("t")) return previous;
    if (!step.at("t").is_number_integer()) throw Error(ErrorKind::invalid_input, "t must be an integer");
    const Instant t = step.at("t").get<Instant>();
    if (t < previous) throw Error(ErrorKind::invalid_input, "t must not decrease");
    return t;
}

void run_step(const json& step, Instant& t, Workspace& ws) {
    if (!step.is_object()) throw Error(ErrorKind::invalid_input, "each line must be a JSON object");
    if (step.contains("paper")) {
        ws.upsert_papers({step.at("paper").get<corpus::PaperMetadata>()});
        return;
    }
    if (step.contains("document")) {
        IngestOptions opts;
        opts.own = step.value("own", false);
        opts.create_missing = step.value("create_missing", false);
        ws.ingest_json(step.at("document").dump(), opts);
        return;
    }
    t = time_of(step, t);
    if (step.contains("card")) {
        const auto& c = step.at("card");
        std::optional<PaperId> cited;
        if (c.contains("cited")) cited = c.at("cited").get<PaperId>();
        ws.card(c.at("reading").get<PaperId>(), c.at("marker_id").get<std::string>(), cited, std::nullopt, kEpoch + t);
        return;
    }
    json event = step;
    event.erase("t");
    auto e = activity::event_from_json(event);
    if (e.seq != 0) throw Error(ErrorKind::invalid_input, "scripts must not set seq");
    e.timestamp = kEpoch + t;
    ws.record_event(std::move(e));
}

}  // namespace

Result run(std::istream& script, std::uint64_t seed, Workspace& ws) {
    Result r;
    r.seed = seed;
    std::string line;
    std::size_t number = 0;
    Instant t = 0;
    while (std::getline(script, line)) {
        ++number;
        if (is_blank(line)) continue;
        try {
            run_step(json::parse(line), t, ws);
        } catch (const Error& e) {
            throw ScriptError(number, e.kind(), e.what());
        } catch (const json::exception& e) {
            throw ScriptError(number, ErrorKind::invalid_input, e.what());
        }
        ++r.steps;
    }
    r.last_seq = ws.activity().last_seq();
    r.stats = ws.usage_stats();
    r.history = ws.history();
    for (const auto& [id, _] : ws.library()) r.library.push_back(id);
    return r;
}

json to_json(const Result& r) {
    json history = json::array();
    for (const auto& h : r.history) {
        history.push_back({{"paper_id", h.paper_id},
                           {"last_opened", h.last_opened},
                           {"progress", h.progress.fraction()},
                           {"saved", h.saved}});
    }
    return {{"seed", r.seed},
            {"steps", r.steps},
            {"last_seq", r.last_seq},
            {"stats", usage::to_json(r.stats)},
            {"history", history},
            {"library", r.library}};
}

std::string render_text(const Result& r) {
    std::ostringstream out;
    out << "seed " << r.seed << ", " << r.steps << " steps, " << r.last_seq << " events\n\n";
    out << usage::render_table(r.stats) << "\n";
    out << "history (" << r.history.size() << "):";
    for (const auto& h : r.history) out << " " << h.paper_id.value;
    out << "\nlibrary (" << r.library.size() << "):";
    for (const auto& id : r.library) out << " " << id.value;
    out << "\n";
    return out.str();
}

}  // namespace citelens::simulate
