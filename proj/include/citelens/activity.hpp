#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "citelens/types.hpp"

namespace citelens::activity {

enum class EventKind {
    open,
    scroll,
    mark_read,
    save,
    unsave,
    delete_history,
    suppress_highlight,
    unsuppress_highlight,
    card_open,
    set_window,
};

std::string_view to_string(EventKind k) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view s) noexcept;

inline constexpr int kDefaultWindow = 20;
inline constexpr int kMinWindow = 1;
inline constexpr int kMaxWindow = 50;

/// Reading progress in hundredths (0..100). Scroll fractions are quantized
/// on entry so every score is an exact sum.
struct Progress {
    int hundredths = 0;

    static Progress from_fraction(double fraction);  // throws Error(invalid_event)
    double fraction() const noexcept { return hundredths / 100.0; }
    friend auto operator<=>(const Progress&, const Progress&) = default;
};

struct Provenance {
    PaperId source_paper_id;
    std::string citing_sentence;
    Instant saved_at = 0;
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ScrollPayload {
    Progress progress;
    friend bool operator==(const ScrollPayload&, const ScrollPayload&) = default;
};

struct SavePayload {
    std::optional<Provenance> provenance;
    /// Class of the citation on the card the save came from, when known.
    std::optional<AugmentationClass> card_class;
    friend bool operator==(const SavePayload&, const SavePayload&) = default;
};

struct CardOpenPayload {
    PaperId reading_paper_id;
    AugmentationClass augmentation;
    friend bool operator==(const CardOpenPayload&, const CardOpenPayload&) = default;
};

struct WindowPayload {
    int window = kDefaultWindow;
    friend bool operator==(const WindowPayload&, const WindowPayload&) = default;
};

using Payload = std::variant<std::monostate, ScrollPayload, SavePayload, CardOpenPayload, WindowPayload>;

struct ActivityEvent {
    std::int64_t seq = 0;
    Instant timestamp = 0;
    EventKind kind = EventKind::open;
    PaperId paper_id;
    Payload payload;
    friend bool operator==(const ActivityEvent&, const ActivityEvent&) = default;
};

/// Throws Error(invalid_event) for payloads that do not fit the kind.
void validate(const ActivityEvent& e);

nlohmann::json to_json(const ActivityEvent& e);
/// Parses one event. Missing seq/ts are left at 0 for the store to assign.
ActivityEvent event_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Derived state

struct PaperActivity {
    bool opened = false;
    std::int64_t last_open_seq = 0;
    Instant last_opened = 0;
    Progress progress;
    friend bool operator==(const PaperActivity&, const PaperActivity&) = default;
};

struct LibraryItem {
    Instant saved_at = 0;
    std::optional<Provenance> provenance;
    friend bool operator==(const LibraryItem&, const LibraryItem&) = default;
};

struct ActivityState {
    std::int64_t last_seq = 0;
    std::map<PaperId, PaperActivity> papers;
    std::map<PaperId, LibraryItem> library;
    std::set<PaperId> suppressed;
    int window = kDefaultWindow;

    bool is_saved(const PaperId& id) const { return library.count(id) > 0; }
    /// Opened at least once since the last history deletion.
    bool is_visited(const PaperId& id) const;
    Progress progress(const PaperId& id) const;

    friend bool operator==(const ActivityState&, const ActivityState&) = default;
};

/// The single state transition used by both live appends and replay.
void apply(ActivityState& state, const ActivityEvent& event);

struct HistoryEntry {
    PaperId paper_id;
    Instant last_opened = 0;
    Progress progress;
    bool saved = false;
    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// Distinct opened papers, most recently opened first, truncated to `window`.
std::vector<HistoryEntry> reading_history(const ActivityState& state, int window);

struct Engagement {
    Progress progress;
    bool saved = false;
};

Engagement engagement(const ActivityState& state, const PaperId& id);

// ---------------------------------------------------------------------------
// Persistence

struct CorruptLog {
    std::size_t line = 0;  // 1-based line that failed
    std::int64_t last_valid_seq = 0;
    std::string message;
};

struct ReplayResult {
    ActivityState state;
    std::vector<ActivityEvent> events;
    std::optional<CorruptLog> corruption;
    /// Byte length of the valid prefix of the log.
    std::size_t valid_bytes = 0;
};

/// Folds newline-delimited JSON events, stopping at the first malformed or
/// out-of-order line.
ReplayResult replay(std::string_view log_text);

/// Append-only event store. With a log path every append is written and
/// fsynced before it is applied and acknowledged.
class ActivityStore {
public:
    ActivityStore();
    /// Opens (or creates) the log, replays it and truncates a corrupt tail.
    explicit ActivityStore(std::filesystem::path log_path);
    ~ActivityStore();

    ActivityStore(const ActivityStore&) = delete;
    ActivityStore& operator=(const ActivityStore&) = delete;

    /// Assigns seq (and the timestamp when zero); throws Error(invalid_event).
    std::int64_t append(ActivityEvent event);

    ActivityState state() const;
    std::vector<ActivityEvent> events() const;
    std::int64_t last_seq() const;
    const std::optional<CorruptLog>& recovery() const noexcept { return recovery_; }

    /// Runs `f(const ActivityState&)` under the shared lock.
    template <typename F>
    decltype(auto) read(F&& f) const {
        std::shared_lock lock(mutex_);
        return f(state_);
    }

private:
    mutable std::shared_mutex mutex_;
    ActivityState state_;
    std::vector<ActivityEvent> events_;
    std::optional<CorruptLog> recovery_;
    int fd_ = -1;
};

}  // namespace citelens::activity
