#include "citelens/usage.hpp"

#include <set>
#include <sstream>

namespace citelens::usage {

using nlohmann::json;
using activity::EventKind;

std::int64_t Breakdown::count(UsageBucket b) const {
    auto it = counts.find(b);
    return it == counts.end() ? 0 : it->second;
}

UsageStats compute(const std::vector<activity::ActivityEvent>& events) {
    UsageStats s;
    std::set<PaperId> opened;
    std::set<PaperId> library;
    // (subject, reading paper) -> class of the latest card open
    std::map<std::pair<PaperId, PaperId>, AugmentationClass> last_card;
    for (UsageBucket b : {UsageBucket::familiar, UsageBucket::reencountered, UsageBucket::no_augmentation}) {
        s.card_opens.counts[b] = 0;
        s.saves.counts[b] = 0;
    }
    s.saves.counts[UsageBucket::external] = 0;

    for (const auto& e : events) {
        switch (e.kind) {
            case EventKind::open:
                ++s.paper_opens;
                opened.insert(e.paper_id);
                break;
            case EventKind::card_open: {
                const auto& p = std::get<activity::CardOpenPayload>(e.payload);
                ++s.card_opens.counts[usage_bucket(p.augmentation)];
                ++s.card_opens.total;
                last_card[{e.paper_id, p.reading_paper_id}] = p.augmentation;
                break;
            }
            case EventKind::save: {
                if (!library.insert(e.paper_id).second) break;
                UsageBucket bucket = UsageBucket::external;
                if (const auto* p = std::get_if<activity::SavePayload>(&e.payload)) {
                    if (p->card_class) {
                        bucket = usage_bucket(*p->card_class);
                    } else if (p->provenance) {
                        auto it = last_card.find({e.paper_id, p->provenance->source_paper_id});
                        if (it != last_card.end()) bucket = usage_bucket(it->second);
                    }
                }
                ++s.saves.counts[bucket];
                ++s.saves.total;
                break;
            }
            case EventKind::unsave:
                library.erase(e.paper_id);
                break;
            default:
                break;
        }
    }
    s.distinct_papers_opened = static_cast<std::int64_t>(opened.size());
    return s;
}

std::string percent(std::int64_t num, std::int64_t den) {
    if (den <= 0) return "0.0";
    const std::int64_t scaled = num * 1000;
    std::int64_t q = scaled / den;
    const std::int64_t r = scaled % den;
    if (2 * r > den || (2 * r == den && q % 2 == 1)) ++q;
    return std::to_string(q / 10) + "." + std::to_string(q % 10);
}

namespace {

json breakdown_json(const Breakdown& b) {
    json rows = json::array();
    for (const auto& [bucket, n] : b.counts) {
        rows.push_back({{"bucket", std::string(to_string(bucket))},
                        {"count", n},
                        {"fraction", {{"num", n}, {"den", b.total}}},
                        {"percent", percent(n, b.total)}});
    }
    return {{"total", b.total}, {"rows", rows}};
}

}  // namespace

json to_json(const UsageStats& s) {
    return {{"paper_opens", s.paper_opens},
            {"distinct_papers_opened", s.distinct_papers_opened},
            {"card_opens", breakdown_json(s.card_opens)},
            {"paper_saves", breakdown_json(s.saves)}};
}

std::string render_table(const UsageStats& s) {
    std::ostringstream out;
    auto row = [&](const std::string& label, const std::string& value) {
        out << label << std::string(label.size() < 24 ? 24 - label.size() : 1, ' ') << value << "\n";
    };
    auto sub = [&](const Breakdown& b, UsageBucket bucket, const std::string& label) {
        row("  - " + label, percent(b.count(bucket), b.total) + "%  (" + std::to_string(b.count(bucket)) + ")");
    };
    row("Paper Opens", std::to_string(s.paper_opens));
    row("Card Opens", std::to_string(s.card_opens.total));
    sub(s.card_opens, UsageBucket::familiar, "Familiar");
    sub(s.card_opens, UsageBucket::reencountered, "Reencountered");
    sub(s.card_opens, UsageBucket::no_augmentation, "No Augmentation");
    row("Paper Saves", std::to_string(s.saves.total));
    sub(s.saves, UsageBucket::familiar, "Familiar");
    sub(s.saves, UsageBucket::reencountered, "Reencountered");
    sub(s.saves, UsageBucket::no_augmentation, "No Augmentation");
    sub(s.saves, UsageBucket::external, "Search/External");
    return out.str();
}

}  // namespace citelens::usage
