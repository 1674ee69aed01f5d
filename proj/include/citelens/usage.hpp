#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "citelens/activity.hpp"
#include "citelens/types.hpp"

namespace citelens::usage {

/// Counts per bucket; percentages are taken against `total` exactly.
struct Breakdown {
    std::map<UsageBucket, std::int64_t> counts;
    std::int64_t total = 0;

    std::int64_t count(UsageBucket b) const;
    friend bool operator==(const Breakdown&, const Breakdown&) = default;
};

/// Usage aggregates, one row per metric:
/// paper opens, card opens by the class shown at click time, and saves by
/// where the paper was discovered.
struct UsageStats {
    std::int64_t paper_opens = 0;
    std::int64_t distinct_papers_opened = 0;
    Breakdown card_opens;  // familiar, reencountered, no_augmentation
    Breakdown saves;       // the above plus external
    friend bool operator==(const UsageStats&, const UsageStats&) = default;
};

/// Saves count only when they create library membership. A save is
/// attributed to the card_class it carries, else to the latest card_open of
/// the same paper from its provenance source, else to search/external.
UsageStats compute(const std::vector<activity::ActivityEvent>& events);

/// 100 * num / den rounded half-to-even to one decimal ("33.3"). "0.0" when
/// den is zero.
std::string percent(std::int64_t num, std::int64_t den);

nlohmann::json to_json(const UsageStats& s);

/// Fixed-width table with one row per metric and sub-bucket.
std::string render_table(const UsageStats& s);

}  // namespace citelens::usage
