#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "citelens/activity.hpp"
#include "citelens/augment.hpp"
#include "citelens/cards.hpp"
#include "citelens/citeparse.hpp"
#include "citelens/corpus.hpp"
#include "citelens/strategies.hpp"
#include "citelens/usage.hpp"

namespace citelens {

inline constexpr int kSchemaVersion = 1;

struct WorkspaceOptions {
    /// Empty path keeps everything in memory.
    std::filesystem::path data_dir;
    std::shared_ptr<corpus::MetadataClient> external;
    /// Adds a similarity line to cards when set.
    std::shared_ptr<strategies::EmbeddingProvider> card_similarity;
    cards::Summarizer summarizer = cards::first_sentence_summary;

    /// Reads CITELENS_DATA_DIR (default "./data") and CITELENS_METADATA_URL.
    /// Without a URL, a stub client is loaded from
    /// <data_dir>/external_metadata.json when that file exists.
    static WorkspaceOptions from_env();
    /// As from_env() with an explicit data directory.
    static WorkspaceOptions for_data_dir(std::filesystem::path dir);
};

struct Settings {
    int window_size = activity::kDefaultWindow;
    augment::Toggles type_toggles;
};

nlohmann::json to_json(const Settings& s);

struct IngestOptions {
    /// Marks the document as one of the user's own papers.
    bool own = false;
    /// Registers unresolved reference entries as new corpus papers.
    bool create_missing = false;
};

struct EntryResolution {
    std::string entry_key;
    std::optional<PaperId> paper_id;
    corpus::MatchMethod method = corpus::MatchMethod::none;
    double confidence = 0.0;
};

struct IngestReport {
    PaperId paper_id;
    citeparse::ParseReport parse_report;
    std::string content_hash;
    bool cache_hit = false;
    std::vector<EntryResolution> entries;
    std::size_t resolved = 0;
};

nlohmann::json to_json(const IngestReport& r);

struct AugmentedView {
    std::shared_ptr<const augment::ResolvedDocument> document;
    std::vector<augment::Decoration> decorations;
    augment::OverviewStats overview;
    int window = activity::kDefaultWindow;
    augment::Toggles toggles;
};

nlohmann::json to_json(const AugmentedView& v);

/// Card response; `degraded` cards carry only the raw reference text.
struct CardResult {
    std::optional<cards::PaperCard> card;
    bool degraded = false;
    std::string marker_id;
    std::vector<std::string> raw_references;
    AugmentationClass logged_class;
};

nlohmann::json to_json(const CardResult& r);

/// The engine shared by the HTTP server and the CLI: corpus, parsed
/// documents, the activity log, settings and the user's own papers.
class Workspace {
public:
    explicit Workspace(WorkspaceOptions options);

    corpus::Corpus& corpus() noexcept { return *corpus_; }
    activity::ActivityStore& activity() noexcept { return *activity_; }
    const std::filesystem::path& data_dir() const noexcept { return options_.data_dir; }

    /// Parses (or loads from the cache), resolves entries and records the
    /// document. Extra "metadata" in the bundle JSON (authors, year,
    /// abstract, citation_count, paper_id) describes the document itself.
    IngestReport ingest(const citeparse::DocumentBundle& bundle, const corpus::PaperMetadata& extra,
                        const IngestOptions& options = {});
    /// Accepts the on-disk bundle JSON text.
    IngestReport ingest_json(std::string_view raw, const IngestOptions& options = {});

    std::vector<PaperId> upsert_papers(const std::vector<corpus::PaperMetadata>& papers);

    std::shared_ptr<const augment::ResolvedDocument> document(const PaperId& id) const;
    std::vector<PaperId> documents() const;

    Settings settings() const;
    /// Window changes are logged as set_window events; toggles persist in
    /// settings.json. Throws Error(invalid_input).
    Settings update_settings(const nlohmann::json& patch);

    augment::UserProfile profile() const;
    std::set<PaperId> own_papers() const;
    void set_own_papers(std::set<PaperId> own);

    /// Throws Error(unknown_paper) or Error(invalid_event).
    std::int64_t record_event(activity::ActivityEvent event);

    /// Throws Error(unknown_paper) / Error(unparsed_document).
    AugmentedView view(const PaperId& id, std::optional<int> window = std::nullopt,
                       std::optional<augment::Toggles> toggles = std::nullopt) const;
    augment::OverviewStats overview(const PaperId& id, std::optional<int> window = std::nullopt) const;

    /// Builds the card and appends one card_open event with the class shown,
    /// stamped `at` (now when zero).
    CardResult card(const PaperId& reading, const std::string& marker_id, const std::optional<PaperId>& cited = {},
                    std::optional<int> window = std::nullopt, Instant at = 0);
    cards::PaperCard library_card(const PaperId& id) const;

    std::vector<activity::HistoryEntry> history(std::optional<int> window = std::nullopt) const;
    std::map<PaperId, activity::LibraryItem> library() const;
    activity::Engagement engagement(const PaperId& id) const;

    strategies::StrategyReport evaluate(const PaperId& doc, const std::vector<PaperId>& peers, std::size_t k,
                                        std::uint64_t seed, bool whole_document = false) const;

    usage::UsageStats usage_stats() const;

private:
    struct DocRecord {
        std::string content_hash;
        std::map<std::string, PaperId> resolution;
    };

    cards::CardContext card_context(const activity::ActivityState& state, const corpus::Snapshot& snap,
                                    const augment::UserProfile& profile, int window,
                                    const augment::Toggles& toggles) const;
    std::shared_ptr<const augment::ResolvedDocument> require_document(const PaperId& id) const;
    void load();
    void save_documents_index() const;
    void save_settings() const;
    void save_profile() const;
    std::optional<citeparse::ParsedDocument> load_cached(const std::string& hash) const;
    int effective_window(std::optional<int> window) const;

    WorkspaceOptions options_;
    std::unique_ptr<corpus::Corpus> corpus_;
    std::unique_ptr<activity::ActivityStore> activity_;

    mutable std::shared_mutex mutex_;
    std::map<PaperId, DocRecord> records_;
    std::map<PaperId, std::shared_ptr<const augment::ResolvedDocument>> documents_;
    augment::Toggles toggles_;
    std::set<PaperId> own_;
};

}  // namespace citelens
