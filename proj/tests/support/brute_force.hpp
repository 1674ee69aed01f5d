#pragma once

// From-scratch recomputation of citation classes straight from an event list
// and a citation graph. Shares no code with the engine beyond plain types.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "citelens/activity.hpp"

namespace citelens::test {

struct BruteInputs {
    std::map<std::string, std::set<std::string>> cites;  // citing -> cited
    std::set<std::string> own;
    int window = 20;
    std::string open_paper;
};

struct BruteResult {
    int score_hundredths = 0;
    std::set<std::string> contributors;
    std::string color;  // "saved_red", "visited_green", "reencountered_yellow", "none"
    bool own_heart = false;
    bool cited_quote = false;
};

inline BruteResult brute_force(const std::vector<activity::ActivityEvent>& log, const BruteInputs& in,
                               const std::string& cited) {
    using activity::EventKind;
    // Last open position per paper, cleared by delete_history.
    std::map<std::string, std::int64_t> last_open;
    std::map<std::string, int> best_scroll;
    std::map<std::string, bool> marked_read;
    std::map<std::string, bool> saved;
    std::map<std::string, bool> suppressed;
    for (const auto& e : log) {
        const std::string& p = e.paper_id.value;
        switch (e.kind) {
            case EventKind::open: last_open[p] = e.seq; break;
            case EventKind::scroll:
                best_scroll[p] = std::max(best_scroll[p], std::get<activity::ScrollPayload>(e.payload).progress.hundredths);
                break;
            case EventKind::mark_read: marked_read[p] = true; break;
            case EventKind::save: saved[p] = true; break;
            case EventKind::unsave: saved[p] = false; break;
            case EventKind::delete_history:
                last_open.erase(p);
                best_scroll.erase(p);
                marked_read.erase(p);
                break;
            case EventKind::suppress_highlight: suppressed[p] = true; break;
            case EventKind::unsuppress_highlight: suppressed[p] = false; break;
            default: break;
        }
    }
    std::vector<std::pair<std::int64_t, std::string>> recent;
    for (const auto& [p, seq] : last_open) recent.emplace_back(seq, p);
    std::sort(recent.begin(), recent.end(), std::greater<>());
    if (static_cast<int>(recent.size()) > in.window) recent.resize(static_cast<std::size_t>(in.window));

    BruteResult r;
    int total = 0;
    for (const auto& [_, p] : recent) {
        if (p == in.open_paper) continue;
        auto it = in.cites.find(p);
        if (it == in.cites.end() || !it->second.count(cited)) continue;
        const int progress = marked_read[p] ? 100 : best_scroll[p];
        total += 100 + progress + (saved[p] ? 200 : 0);
        r.contributors.insert(p);
    }
    r.score_hundredths = total > 500 ? 500 : total;

    std::set<std::string> cited_by_own;
    for (const auto& o : in.own) {
        if (auto it = in.cites.find(o); it != in.cites.end()) cited_by_own.insert(it->second.begin(), it->second.end());
    }
    r.own_heart = in.own.count(cited) > 0;
    r.cited_quote = cited_by_own.count(cited) > 0;
    if (saved[cited]) {
        r.color = "saved_red";
    } else if (last_open.count(cited)) {
        r.color = "visited_green";
    } else if (r.score_hundredths > 0 && !r.own_heart && !r.cited_quote && !suppressed[cited]) {
        r.color = "reencountered_yellow";
    } else {
        r.color = "none";
    }
    return r;
}

}  // namespace citelens::test
