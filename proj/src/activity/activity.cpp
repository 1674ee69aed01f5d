#include "citelens/activity.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>

#include "citelens/error.hpp"
#include "../fsutil.hpp"

namespace citelens::activity {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 10> kKindNames = {{
    {EventKind::open, "open"},
    {EventKind::scroll, "scroll"},
    {EventKind::mark_read, "mark_read"},
    {EventKind::save, "save"},
    {EventKind::unsave, "unsave"},
    {EventKind::delete_history, "delete_history"},
    {EventKind::suppress_highlight, "suppress_highlight"},
    {EventKind::unsuppress_highlight, "unsuppress_highlight"},
    {EventKind::card_open, "card_open"},
    {EventKind::set_window, "set_window"},
}};

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::invalid_event, what); }

}  // namespace

std::string_view to_string(EventKind k) noexcept {
    for (const auto& [kind, name] : kKindNames) {
        if (kind == k) return name;
    }
    return "unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) noexcept {
    for (const auto& [kind, name] : kKindNames) {
        if (name == s) return kind;
    }
    return std::nullopt;
}

Progress Progress::from_fraction(double fraction) {
    if (!std::isfinite(fraction) || fraction < 0.0 || fraction > 1.0) {
        invalid("scroll fraction must be within [0, 1]");
    }
    return Progress{static_cast<int>(std::lround(fraction * 100.0))};
}

void validate(const ActivityEvent& e) {
    if (e.kind != EventKind::set_window && e.paper_id.empty()) {
        invalid(std::string(to_string(e.kind)) + " event needs a paper_id");
    }
    switch (e.kind) {
        case EventKind::scroll: {
            const auto* p = std::get_if<ScrollPayload>(&e.payload);
            if (p == nullptr) invalid("scroll event needs a fraction");
            if (p->progress.hundredths < 0 || p->progress.hundredths > 100) invalid("scroll fraction out of range");
            break;
        }
        case EventKind::save: {
            const auto* p = std::get_if<SavePayload>(&e.payload);
            if (p != nullptr && p->provenance) {
                if (p->provenance->citing_sentence.empty()) invalid("provenance needs a citing sentence");
                if (p->provenance->source_paper_id.empty()) invalid("provenance needs a source paper");
            }
            if (!std::holds_alternative<std::monostate>(e.payload) && p == nullptr) invalid("bad save payload");
            break;
        }
        case EventKind::card_open: {
            const auto* p = std::get_if<CardOpenPayload>(&e.payload);
            if (p == nullptr || p->reading_paper_id.empty()) invalid("card_open needs the reading paper");
            break;
        }
        case EventKind::set_window: {
            const auto* p = std::get_if<WindowPayload>(&e.payload);
            if (p == nullptr || p->window < kMinWindow || p->window > kMaxWindow) {
                invalid("window must be within [" + std::to_string(kMinWindow) + ", " +
                        std::to_string(kMaxWindow) + "]");
            }
            break;
        }
        default:
            if (!std::holds_alternative<std::monostate>(e.payload)) {
                invalid(std::string(to_string(e.kind)) + " event takes no payload");
            }
    }
}

json to_json(const ActivityEvent& e) {
    json payload = json::object();
    if (const auto* s = std::get_if<ScrollPayload>(&e.payload)) {
        payload["fraction"] = s->progress.fraction();
    } else if (const auto* s = std::get_if<SavePayload>(&e.payload)) {
        if (s->provenance) {
            payload["provenance"] = {{"source_paper_id", s->provenance->source_paper_id},
                                     {"citing_sentence", s->provenance->citing_sentence},
                                     {"saved_at", s->provenance->saved_at}};
        }
        if (s->card_class) payload["card_class"] = *s->card_class;
    } else if (const auto* c = std::get_if<CardOpenPayload>(&e.payload)) {
        payload["reading_paper_id"] = c->reading_paper_id;
        payload["class"] = c->augmentation;
    } else if (const auto* w = std::get_if<WindowPayload>(&e.payload)) {
        payload["window"] = w->window;
    }
    return json{{"seq", e.seq},
                {"ts", e.timestamp},
                {"kind", std::string(to_string(e.kind))},
                {"paper_id", e.paper_id},
                {"payload", payload}};
}

ActivityEvent event_from_json(const json& j) {
    if (!j.is_object()) invalid("event must be a JSON object");
    ActivityEvent e;
    try {
        const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) invalid("unknown event kind: " + j.at("kind").get<std::string>());
        e.kind = *kind;
        e.seq = j.value("seq", std::int64_t{0});
        e.timestamp = j.value("ts", Instant{0});
        e.paper_id = PaperId(j.value("paper_id", ""));
        const json payload = j.contains("payload") && !j.at("payload").is_null() ? j.at("payload") : json::object();
        switch (e.kind) {
            case EventKind::scroll: {
                if (!payload.contains("fraction") || !payload.at("fraction").is_number()) {
                    invalid("scroll event needs a numeric fraction");
                }
                e.payload = ScrollPayload{Progress::from_fraction(payload.at("fraction").get<double>())};
                break;
            }
            case EventKind::save: {
                SavePayload s;
                if (payload.contains("provenance") && !payload.at("provenance").is_null()) {
                    const auto& p = payload.at("provenance");
                    s.provenance = Provenance{PaperId(p.at("source_paper_id").get<std::string>()),
                                              p.at("citing_sentence").get<std::string>(),
                                              p.value("saved_at", Instant{0})};
                }
                if (payload.contains("card_class") && !payload.at("card_class").is_null()) {
                    s.card_class = payload.at("card_class").get<AugmentationClass>();
                }
                if (s.provenance || s.card_class) e.payload = std::move(s);
                break;
            }
            case EventKind::card_open:
                e.payload = CardOpenPayload{PaperId(payload.at("reading_paper_id").get<std::string>()),
                                            payload.at("class").get<AugmentationClass>()};
                break;
            case EventKind::set_window:
                e.payload = WindowPayload{payload.at("window").get<int>()};
                break;
            default:
                break;
        }
    } catch (const json::exception& ex) {
        invalid(std::string("malformed event: ") + ex.what());
    } catch (const Error& ex) {
        if (ex.kind() == ErrorKind::invalid_event) throw;
        invalid(ex.what());
    }
    validate(e);
    return e;
}

// ---------------------------------------------------------------------------

bool ActivityState::is_visited(const PaperId& id) const {
    auto it = papers.find(id);
    return it != papers.end() && it->second.opened;
}

Progress ActivityState::progress(const PaperId& id) const {
    auto it = papers.find(id);
    return it == papers.end() ? Progress{} : it->second.progress;
}

void apply(ActivityState& state, const ActivityEvent& e) {
    state.last_seq = e.seq;
    switch (e.kind) {
        case EventKind::open: {
            auto& p = state.papers[e.paper_id];
            p.opened = true;
            p.last_open_seq = e.seq;
            p.last_opened = e.timestamp;
            break;
        }
        case EventKind::scroll: {
            auto& p = state.papers[e.paper_id];
            p.progress = std::max(p.progress, std::get<ScrollPayload>(e.payload).progress);
            break;
        }
        case EventKind::mark_read:
            state.papers[e.paper_id].progress = Progress{100};
            break;
        case EventKind::save:
            if (!state.library.count(e.paper_id)) {
                LibraryItem item{e.timestamp, std::nullopt};
                if (const auto* s = std::get_if<SavePayload>(&e.payload)) item.provenance = s->provenance;
                state.library.emplace(e.paper_id, std::move(item));
            }
            break;
        case EventKind::unsave:
            state.library.erase(e.paper_id);
            break;
        case EventKind::delete_history:
            state.papers.erase(e.paper_id);
            break;
        case EventKind::suppress_highlight:
            state.suppressed.insert(e.paper_id);
            break;
        case EventKind::unsuppress_highlight:
            state.suppressed.erase(e.paper_id);
            break;
        case EventKind::card_open:
            break;
        case EventKind::set_window:
            state.window = std::get<WindowPayload>(e.payload).window;
            break;
    }
}

std::vector<HistoryEntry> reading_history(const ActivityState& state, int window) {
    std::vector<std::pair<std::int64_t, const PaperId*>> opened;
    for (const auto& [id, p] : state.papers) {
        if (p.opened) opened.emplace_back(p.last_open_seq, &id);
    }
    std::sort(opened.begin(), opened.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    if (window < 1) window = 1;
    if (opened.size() > static_cast<std::size_t>(window)) opened.resize(static_cast<std::size_t>(window));
    std::vector<HistoryEntry> out;
    out.reserve(opened.size());
    for (const auto& [_, id] : opened) {
        const auto& p = state.papers.at(*id);
        out.push_back({*id, p.last_opened, p.progress, state.is_saved(*id)});
    }
    return out;
}

Engagement engagement(const ActivityState& state, const PaperId& id) {
    return {state.progress(id), state.is_saved(id)};
}

// ---------------------------------------------------------------------------

ReplayResult replay(std::string_view log_text) {
    ReplayResult result;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < log_text.size()) {
        const auto nl = log_text.find('\n', pos);
        ++line_no;
        if (nl == std::string_view::npos) {
            // A final line without its newline was never acknowledged.
            result.corruption = CorruptLog{line_no, result.state.last_seq, "truncated final line"};
            break;
        }
        const auto line = log_text.substr(pos, nl - pos);
        if (line.empty()) {
            pos = nl + 1;
            result.valid_bytes = pos;
            continue;
        }
        try {
            auto e = event_from_json(json::parse(line));
            if (e.seq <= result.state.last_seq) {
                throw Error(ErrorKind::corrupt_log, "sequence number " + std::to_string(e.seq) + " out of order");
            }
            apply(result.state, e);
            result.events.push_back(std::move(e));
        } catch (const std::exception& ex) {
            result.corruption = CorruptLog{line_no, result.state.last_seq, ex.what()};
            break;
        }
        pos = nl + 1;
        result.valid_bytes = pos;
    }
    return result;
}

ActivityStore::ActivityStore() = default;

ActivityStore::ActivityStore(std::filesystem::path log_path) {
    if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
    const auto content = fsutil::read_file(log_path).value_or(std::string());
    auto result = replay(content);
    if (result.corruption) {
        std::filesystem::resize_file(log_path, result.valid_bytes);
        recovery_ = result.corruption;
    }
    state_ = std::move(result.state);
    events_ = std::move(result.events);
    fd_ = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorKind::io, "cannot open event log " + log_path.string() + ": " + std::strerror(errno));
}

ActivityStore::~ActivityStore() {
    if (fd_ >= 0) ::close(fd_);
}

std::int64_t ActivityStore::append(ActivityEvent event) {
    std::unique_lock lock(mutex_);
    event.seq = state_.last_seq + 1;
    if (event.timestamp == 0) event.timestamp = now_ms();
    validate(event);
    if (fd_ >= 0) {
        const auto line = to_json(event).dump() + "\n";
        std::size_t written = 0;
        while (written < line.size()) {
            const auto n = ::write(fd_, line.data() + written, line.size() - written);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorKind::io, std::string("event log write failed: ") + std::strerror(errno));
            }
            written += static_cast<std::size_t>(n);
        }
        if (::fsync(fd_) != 0) throw Error(ErrorKind::io, std::string("event log fsync failed: ") + std::strerror(errno));
    }
    apply(state_, event);
    events_.push_back(std::move(event));
    return state_.last_seq;
}

ActivityState ActivityStore::state() const {
    std::shared_lock lock(mutex_);
    return state_;
}

std::vector<ActivityEvent> ActivityStore::events() const {
    std::shared_lock lock(mutex_);
    return events_;
}

std::int64_t ActivityStore::last_seq() const {
    std::shared_lock lock(mutex_);
    return state_.last_seq;
}

}  // namespace citelens::activity
