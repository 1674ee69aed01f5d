#include <fstream>
#include <map>
#include <random>
#include <set>

#include <doctest.h>

#include "citelens/activity.hpp"
#include "citelens/error.hpp"
#include "../support/temp_dir.hpp"

using namespace citelens;
using namespace citelens::activity;

namespace {

ActivityEvent ev(EventKind kind, const std::string& paper, Payload payload = {}) {
    ActivityEvent e;
    e.kind = kind;
    e.paper_id = PaperId(paper);
    e.payload = std::move(payload);
    return e;
}

ActivityEvent scroll(const std::string& paper, double f) {
    return ev(EventKind::scroll, paper, ScrollPayload{Progress::from_fraction(f)});
}

// Written separately from apply(): a table of per-paper facts rebuilt by a
// straight scan, used as the oracle for replay and live state.
struct OracleState {
    std::map<std::string, std::int64_t> open_seq;
    std::map<std::string, int> progress;
    std::map<std::string, bool> saved;
    std::set<std::string> suppressed;
    int window = 20;
};

OracleState oracle_fold(const std::vector<ActivityEvent>& events) {
    OracleState o;
    for (const auto& e : events) {
        const auto& id = e.paper_id.value;
        if (e.kind == EventKind::open) o.open_seq[id] = e.seq;
        if (e.kind == EventKind::scroll) {
            int h = std::get<ScrollPayload>(e.payload).progress.hundredths;
            if (!o.progress.count(id) || o.progress[id] < h) o.progress[id] = h;
        }
        if (e.kind == EventKind::mark_read) o.progress[id] = 100;
        if (e.kind == EventKind::save) o.saved[id] = true;
        if (e.kind == EventKind::unsave) o.saved[id] = false;
        if (e.kind == EventKind::delete_history) {
            o.open_seq.erase(id);
            o.progress.erase(id);
        }
        if (e.kind == EventKind::suppress_highlight) o.suppressed.insert(id);
        if (e.kind == EventKind::unsuppress_highlight) o.suppressed.erase(id);
        if (e.kind == EventKind::set_window) o.window = std::get<WindowPayload>(e.payload).window;
    }
    return o;
}

void check_against_oracle(const ActivityState& s, const std::vector<ActivityEvent>& events) {
    const auto o = oracle_fold(events);
    CHECK(s.window == o.window);
    CHECK(s.suppressed.size() == o.suppressed.size());
    for (const auto& id : o.suppressed) CHECK(s.suppressed.count(PaperId(id)) == 1);
    for (const auto& [id, saved] : o.saved) CHECK(s.is_saved(PaperId(id)) == saved);
    for (const auto& [id, h] : o.progress) CHECK(s.progress(PaperId(id)).hundredths == h);
    std::vector<std::pair<std::int64_t, std::string>> order;
    for (const auto& [id, seq] : o.open_seq) order.emplace_back(seq, id);
    std::sort(order.rbegin(), order.rend());
    const auto hist = reading_history(s, 50);
    REQUIRE(hist.size() == std::min<std::size_t>(order.size(), 50));
    for (std::size_t i = 0; i < hist.size(); ++i) CHECK(hist[i].paper_id.value == order[i].second);
}

std::vector<ActivityEvent> random_events(std::mt19937_64& rng, int n) {
    std::vector<ActivityEvent> out;
    std::uniform_int_distribution<int> paper(0, 14);
    std::uniform_int_distribution<int> kind(0, 9);
    std::uniform_int_distribution<int> pct(0, 100);
    std::uniform_int_distribution<int> win(1, 50);
    for (int i = 0; i < n; ++i) {
        const std::string p = "P" + std::to_string(paper(rng));
        switch (kind(rng)) {
            case 0: case 1: out.push_back(ev(EventKind::open, p)); break;
            case 2: out.push_back(scroll(p, pct(rng) / 100.0)); break;
            case 3: out.push_back(ev(EventKind::mark_read, p)); break;
            case 4:
                out.push_back(ev(EventKind::save, p,
                                 SavePayload{Provenance{PaperId("Q"), "A sentence.", 5}, std::nullopt}));
                break;
            case 5: out.push_back(ev(EventKind::unsave, p)); break;
            case 6: out.push_back(ev(EventKind::delete_history, p)); break;
            case 7: out.push_back(ev(EventKind::suppress_highlight, p)); break;
            case 8: out.push_back(ev(EventKind::unsuppress_highlight, p)); break;
            default: {
                ActivityEvent e = ev(EventKind::set_window, "", WindowPayload{win(rng)});
                out.push_back(e);
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("append assigns strictly increasing sequence numbers") {
    ActivityStore store;
    CHECK(store.append(ev(EventKind::open, "P")) == 1);
    CHECK(store.append(ev(EventKind::open, "Q")) == 2);
    const auto events = store.events();
    CHECK(events[0].seq == 1);
    CHECK(events[1].seq == 2);
    CHECK(events[0].timestamp > 0);
}

TEST_CASE("scroll outside [0,1] is rejected") {
    CHECK_THROWS_AS(Progress::from_fraction(1.3), Error);
    CHECK_THROWS_AS(Progress::from_fraction(-0.1), Error);
    ActivityStore store;
    auto bad = ev(EventKind::scroll, "P", ScrollPayload{Progress{130}});
    try {
        store.append(bad);
        FAIL("expected InvalidEvent");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_event);
    }
    CHECK(store.last_seq() == 0);
    nlohmann::json j = {{"kind", "scroll"}, {"paper_id", "P"}, {"payload", {{"fraction", 1.3}}}};
    CHECK_THROWS_AS(event_from_json(j), Error);
    CHECK_THROWS_AS(event_from_json({{"kind", "teleport"}, {"paper_id", "P"}}), Error);
}

TEST_CASE("window payload must be within range") {
    ActivityStore store;
    CHECK_THROWS_AS(store.append(ev(EventKind::set_window, "", WindowPayload{0})), Error);
    CHECK_THROWS_AS(store.append(ev(EventKind::set_window, "", WindowPayload{51})), Error);
    store.append(ev(EventKind::set_window, "", WindowPayload{50}));
    CHECK(store.state().window == 50);
}

TEST_CASE("reading history truncates to the window, most recent first") {
    ActivityStore store;
    for (auto p : {"P1", "P2", "P3"}) store.append(ev(EventKind::open, p));
    const auto h = reading_history(store.state(), 2);
    REQUIRE(h.size() == 2);
    CHECK(h[0].paper_id.value == "P3");
    CHECK(h[1].paper_id.value == "P2");
}

TEST_CASE("delete_history removes the paper from history") {
    ActivityStore store;
    store.append(ev(EventKind::open, "P1"));
    store.append(ev(EventKind::delete_history, "P1"));
    CHECK(reading_history(store.state(), 20).empty());
    CHECK_FALSE(store.state().is_visited(PaperId("P1")));
}

TEST_CASE("delete_history keeps library membership") {
    ActivityStore store;
    store.append(ev(EventKind::open, "P1"));
    store.append(ev(EventKind::save, "P1"));
    store.append(ev(EventKind::delete_history, "P1"));
    CHECK(store.state().is_saved(PaperId("P1")));
    CHECK(reading_history(store.state(), 20).empty());
}

TEST_CASE("progress is the maximum scroll, not the last") {
    ActivityStore store;
    store.append(ev(EventKind::open, "P1"));
    store.append(scroll("P1", 0.4));
    store.append(scroll("P1", 0.2));
    store.append(ev(EventKind::open, "P2"));
    const auto h = reading_history(store.state(), 20);
    REQUIRE(h.size() == 2);
    CHECK(h[1].paper_id.value == "P1");
    CHECK(h[1].progress.hundredths == 40);
}

TEST_CASE("card opens and saves do not reorder history") {
    ActivityStore store;
    store.append(ev(EventKind::open, "P1"));
    store.append(ev(EventKind::open, "P2"));
    store.append(ev(EventKind::save, "P1"));
    store.append(ev(EventKind::card_open, "P1", CardOpenPayload{PaperId("P2"), {}}));
    const auto h = reading_history(store.state(), 20);
    CHECK(h[0].paper_id.value == "P2");
    CHECK(h[1].saved);
}

TEST_CASE("engagement") {
    ActivityStore store;
    store.append(ev(EventKind::mark_read, "P"));
    CHECK(engagement(store.state(), PaperId("P")).progress.fraction() == 1.0);
    store.append(ev(EventKind::save, "S"));
    store.append(ev(EventKind::unsave, "S"));
    CHECK_FALSE(engagement(store.state(), PaperId("S")).saved);
    const auto never = engagement(store.state(), PaperId("N"));
    CHECK(never.progress.hundredths == 0);
    CHECK_FALSE(never.saved);
}

TEST_CASE("re-saving keeps the original provenance") {
    ActivityStore store;
    store.append(ev(EventKind::save, "C", SavePayload{Provenance{PaperId("Q"), "First.", 1}, std::nullopt}));
    store.append(ev(EventKind::save, "C", SavePayload{Provenance{PaperId("R"), "Second.", 2}, std::nullopt}));
    const auto s = store.state();
    REQUIRE(s.library.at(PaperId("C")).provenance);
    CHECK(s.library.at(PaperId("C")).provenance->source_paper_id.value == "Q");
    CHECK(s.library.at(PaperId("C")).provenance->citing_sentence == "First.");
    store.append(ev(EventKind::save, "T"));
    CHECK_FALSE(store.state().library.at(PaperId("T")).provenance);
}

TEST_CASE("provenance needs a citing sentence") {
    ActivityStore store;
    CHECK_THROWS_AS(
        store.append(ev(EventKind::save, "C", SavePayload{Provenance{PaperId("Q"), "", 1}, std::nullopt})), Error);
}

TEST_CASE("progress is monotone until delete") {
    ActivityStore store;
    store.append(ev(EventKind::open, "P"));
    int last = 0;
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        store.append(scroll("P", std::uniform_int_distribution<int>(0, 100)(rng) / 100.0));
        const int now = store.state().progress(PaperId("P")).hundredths;
        CHECK(now >= last);
        last = now;
    }
    store.append(ev(EventKind::delete_history, "P"));
    CHECK(store.state().progress(PaperId("P")).hundredths == 0);
}

TEST_CASE("empty log replays to empty state") {
    const auto r = replay("");
    CHECK(r.state == ActivityState{});
    CHECK_FALSE(r.corruption);
}

TEST_CASE("1000 random events: replay equals live state and the oracle fold") {
    test::TempDir dir;
    const auto log = dir.path() / "events.ndjson";
    std::mt19937_64 rng(20231029);
    ActivityState live;
    {
        ActivityStore store(log);
        for (auto& e : random_events(rng, 1000)) {
            store.append(e);
            if (store.last_seq() % 97 == 0) {
                std::ifstream in(log);
                std::string text((std::istreambuf_iterator<char>(in)), {});
                CHECK(replay(text).state == store.state());
            }
        }
        live = store.state();
        check_against_oracle(live, store.events());
    }
    ActivityStore reopened(log);
    CHECK(reopened.state() == live);
    CHECK_FALSE(reopened.recovery());
}

TEST_CASE("truncated final line: state at n-1 and a corruption report") {
    test::TempDir dir;
    const auto log = dir.path() / "events.ndjson";
    ActivityState before;
    {
        ActivityStore store(log);
        store.append(ev(EventKind::open, "P1"));
        store.append(scroll("P1", 0.5));
        before = store.state();
        store.append(ev(EventKind::open, "P2"));
    }
    const auto full = std::filesystem::file_size(log);
    std::filesystem::resize_file(log, full - 10);
    std::ifstream in(log);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    const auto r = replay(text);
    REQUIRE(r.corruption);
    CHECK(r.corruption->line == 3);
    CHECK(r.corruption->last_valid_seq == 2);
    CHECK(r.state == before);

    ActivityStore recovered(log);
    REQUIRE(recovered.recovery());
    CHECK(recovered.state() == before);
    CHECK(recovered.append(ev(EventKind::open, "P3")) == 3);
    ActivityStore again(log);
    CHECK_FALSE(again.recovery());
    CHECK(again.last_seq() == 3);
}

TEST_CASE("garbage and out-of-order lines stop replay") {
    const std::string a = to_json([] { auto e = ev(EventKind::open, "A"); e.seq = 1; return e; }()).dump();
    const std::string b = to_json([] { auto e = ev(EventKind::open, "B"); e.seq = 1; return e; }()).dump();
    auto r = replay(a + "\n" + b + "\n");
    REQUIRE(r.corruption);
    CHECK(r.corruption->line == 2);
    CHECK(r.events.size() == 1);
    r = replay(a + "\n{not json\n");
    REQUIRE(r.corruption);
    CHECK(r.valid_bytes == a.size() + 1);
}

TEST_CASE("event JSON round trip") {
    std::mt19937_64 rng(3);
    std::int64_t seq = 0;
    for (auto e : random_events(rng, 300)) {
        e.seq = ++seq;
        e.timestamp = 1000 + seq;
        CHECK(event_from_json(nlohmann::json::parse(to_json(e).dump())) == e);
    }
    AugmentationClass cls{Color::reencountered_yellow, true, false};
    auto card = ev(EventKind::card_open, "C", CardOpenPayload{PaperId("R"), cls});
    card.seq = 1;
    CHECK(event_from_json(to_json(card)) == card);
}
