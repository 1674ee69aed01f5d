#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citelens/citeparse.hpp"
#include "citelens/types.hpp"

namespace citelens::corpus {

struct PaperMetadata {
    PaperId paper_id;
    std::string title;
    std::vector<std::string> authors;
    std::optional<int> year;
    std::string abstract;
    std::optional<std::string> summary;
    /// Absent when no global count is known; citation_stats then falls back
    /// to in-degree over the local corpus.
    std::optional<std::int64_t> citation_count;
    std::optional<std::int64_t> reference_count;
    std::vector<PaperId> outgoing_refs;

    friend bool operator==(const PaperMetadata&, const PaperMetadata&) = default;
};

void to_json(nlohmann::json& j, const PaperMetadata& m);
void from_json(const nlohmann::json& j, PaperMetadata& m);

enum class MatchMethod { exact_norm, fuzzy, external, none };
std::string_view to_string(MatchMethod m) noexcept;

inline constexpr double kAcceptanceThreshold = 0.9;
inline constexpr int kYearTolerance = 1;

struct MatchResult {
    std::optional<PaperId> paper_id;
    double confidence = 0.0;
    MatchMethod method = MatchMethod::none;
};

enum class CountSource { stored, in_degree };
std::string_view to_string(CountSource s) noexcept;

struct CitationStats {
    std::int64_t citation_count = 0;
    std::int64_t reference_count = 0;
    CountSource source = CountSource::stored;
};

/// Lowercase, Latin diacritics stripped, punctuation turned into spaces,
/// whitespace collapsed and trimmed.
std::string normalize_title(std::string_view title);

// ---------------------------------------------------------------------------
// External metadata lookup

struct ExternalRequest {
    std::string title;
    std::optional<int> year;
};

nlohmann::json to_json(const ExternalRequest& r);

/// Transport-agnostic lookup. Implementations throw on transport failure;
/// the corpus turns failures into "nothing found".
class MetadataClient {
public:
    virtual ~MetadataClient() = default;
    virtual std::optional<PaperMetadata> fetch(const ExternalRequest& request) = 0;
};

/// In-process client backed by a fixed table keyed on normalized title.
class StubMetadataClient : public MetadataClient {
public:
    void add(PaperMetadata meta);
    /// Loads a JSON array of PaperMetadata records.
    void load(const std::filesystem::path& file);
    /// Every subsequent fetch throws as if the transport timed out.
    void simulate_timeout(bool on) { timeout_ = on; }

    std::optional<PaperMetadata> fetch(const ExternalRequest& request) override;

private:
    std::map<std::string, PaperMetadata> by_title_;
    bool timeout_ = false;
};

/// POSTs {title, year?} to `<base_url><path>`; a PaperMetadata body means a
/// hit, 204/404 or an empty object means nothing.
class HttpMetadataClient : public MetadataClient {
public:
    HttpMetadataClient(std::string base_url, std::string path = "/lookup",
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(3000));

    std::optional<PaperMetadata> fetch(const ExternalRequest& request) override;

private:
    std::string base_url_;
    std::string path_;
    std::chrono::milliseconds timeout_;
};

// ---------------------------------------------------------------------------
// Corpus

/// Immutable view of the corpus at one point in time.
class Snapshot {
public:
    const PaperMetadata* find(const PaperId& id) const;
    std::vector<PaperId> ids() const;
    std::size_t size() const noexcept { return papers_.size(); }
    /// Number of corpus papers whose outgoing_refs contain `id`.
    std::int64_t in_degree(const PaperId& id) const;
    /// Stored counts, falling back to in-degree; nullopt for unknown papers.
    std::optional<CitationStats> citation_stats(const PaperId& id) const;

private:
    friend class Corpus;
    std::map<PaperId, std::shared_ptr<const PaperMetadata>> papers_;
    std::map<std::string, PaperId> index_;                   // "normalized|year" -> id
    std::multimap<std::string, PaperId> by_title_;           // normalized -> ids
};

/// Multi-reader, single-writer paper store. Writers publish a new snapshot;
/// readers holding an older snapshot are unaffected.
class Corpus {
public:
    Corpus();
    /// Loads and persists under `dir` (one JSON file per paper + index.json).
    explicit Corpus(std::filesystem::path dir);

    std::shared_ptr<const Snapshot> snapshot() const;

    /// Idempotent on (normalized title, year). Throws Error(invalid_metadata).
    PaperId upsert_paper(PaperMetadata meta);

    std::optional<PaperMetadata> get(const PaperId& id) const;

    /// Exact normalized match, then fuzzy token-set Jaccard, then the
    /// external client when one is configured.
    MatchResult resolve_entry(const citeparse::ReferenceEntry& entry);

    /// Throws Error(unknown_paper).
    CitationStats citation_stats(const PaperId& id) const;

    std::optional<PaperMetadata> fetch_external(const citeparse::ReferenceEntry& entry);

    void set_external_client(std::shared_ptr<MetadataClient> client);

private:
    static std::string index_key(const std::string& normalized, const std::optional<int>& year);
    void persist(const PaperMetadata& meta, const Snapshot& snap) const;

    mutable std::mutex write_mutex_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
    std::shared_ptr<MetadataClient> external_;
    std::optional<std::filesystem::path> dir_;
};

}  // namespace citelens::corpus
