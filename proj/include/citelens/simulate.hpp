#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "citelens/error.hpp"
#include "citelens/usage.hpp"
#include "citelens/workspace.hpp"

namespace citelens::simulate {

/// Session start; script times are milliseconds after it.
inline constexpr Instant kEpoch = 1'700'000'000'000;

/// A script line that could not be run. `line` is 1-based.
class ScriptError : public Error {
public:
    ScriptError(std::size_t line, ErrorKind kind, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct Result {
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    std::int64_t last_seq = 0;
    usage::UsageStats stats;
    std::vector<activity::HistoryEntry> history;
    std::vector<PaperId> library;
};

/// Runs a session script against `ws`, one JSON object per line. Blank
/// lines and lines starting with '#' are skipped. A line is one of
///
///   {"paper": {...metadata}}                       corpus upsert
///   {"document": {...bundle}, "own": b, "create_missing": b}
///   {"t": ms, "card": {"reading": id, "marker_id": m, "cited": id}}
///   {"t": ms, "kind": k, "paper_id": id, "payload": {...}}
///
/// `t` defaults to the previous line's time and must not decrease. Cards go
/// through Workspace::card, so their logged class is the engine's own.
/// The seed is echoed in the result.
Result run(std::istream& script, std::uint64_t seed, Workspace& ws);

nlohmann::json to_json(const Result& r);
std::string render_text(const Result& r);

}  // namespace citelens::simulate
