#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace citelens::citeparse {

enum class Style { numeric, author_year, auto_detect };

std::string_view to_string(Style s) noexcept;
Style style_from_string(std::string_view s);

/// Half-open range of Unicode scalar offsets into a section body.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool contains(std::size_t offset) const noexcept { return offset >= begin && offset < end; }
    friend bool operator==(const Span&, const Span&) = default;
};

struct Section {
    std::string name;
    std::string body;
    friend bool operator==(const Section&, const Section&) = default;
};

/// One ingestion unit. The hash identifies the raw input bytes.
struct DocumentBundle {
    std::string content_hash;
    std::string hash_algorithm;
    std::string title;
    std::vector<Section> sections;
    std::string references_block;
    Style style_hint = Style::auto_detect;

    /// Parses the on-disk JSON form; the hash is taken over `raw` verbatim.
    static DocumentBundle from_json_text(std::string_view raw);

    /// Builds a bundle in memory; the hash is taken over its canonical JSON.
    static DocumentBundle make(std::string title, std::vector<Section> sections,
                               std::string references_block,
                               Style style_hint = Style::auto_detect);

    nlohmann::json to_json() const;
    friend bool operator==(const DocumentBundle&, const DocumentBundle&) = default;
};

struct CitationMarker {
    std::string marker_id;
    std::size_t section_index = 0;
    Span span;
    std::string raw_text;
    std::vector<std::string> keys;
    /// Sub-span of each key inside the marker (parallel to `keys`); keys
    /// expanded from one range share the range's span.
    std::vector<Span> key_spans;
    friend bool operator==(const CitationMarker&, const CitationMarker&) = default;
};

struct ReferenceEntry {
    std::string entry_key;
    std::string raw_text;
    std::string title_guess;
    std::vector<std::string> authors_guess;
    std::optional<int> year_guess;
    std::string year_suffix;
    std::string first_author_key;
    friend bool operator==(const ReferenceEntry&, const ReferenceEntry&) = default;
};

struct SentenceSpan {
    std::size_t section_index = 0;
    Span span;
    std::string text;
    friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

struct ParseReport {
    std::size_t markers = 0;
    std::size_t linked = 0;
    std::size_t unresolved = 0;
    std::size_t skipped = 0;
    std::size_t entries = 0;
    Style style_used = Style::numeric;
    std::vector<std::string> warnings;
    friend bool operator==(const ParseReport&, const ParseReport&) = default;
};

struct UnresolvedKey {
    std::string marker_id;
    std::string key;
    friend bool operator==(const UnresolvedKey&, const UnresolvedKey&) = default;
};

struct ParsedDocument {
    DocumentBundle bundle;
    std::vector<CitationMarker> markers;
    std::vector<ReferenceEntry> entries;
    /// marker_id -> linked entry keys, in the marker's key order.
    std::map<std::string, std::vector<std::string>> links;
    std::vector<UnresolvedKey> unresolved;
    std::vector<SentenceSpan> sentences;
    ParseReport report;

    const CitationMarker* find_marker(std::string_view marker_id) const;
    const ReferenceEntry* find_entry(std::string_view entry_key) const;
    friend bool operator==(const ParsedDocument&, const ParsedDocument&) = default;
};

struct Detection {
    std::vector<CitationMarker> markers;
    std::size_t skipped = 0;
};

struct LinkResult {
    std::map<std::string, std::vector<std::string>> links;
    std::vector<UnresolvedKey> unresolved;
};

/// Splits a section body into sentences that partition it exactly. A span
/// owns the whitespace trailing its sentence; `text` is the trimmed sentence.
std::vector<SentenceSpan> segment_sentences(std::string_view body, std::size_t section_index = 0);

/// Finds inline citation markers. With Style::auto_detect and no reference
/// entries to link against, the style producing more markers wins (ties go
/// to numeric); parse_bundle resolves auto by link count instead.
Detection detect_markers(std::string_view body, Style style, std::size_t section_index = 0);

/// Throws Error(malformed_references) when no entry can be delimited.
std::vector<ReferenceEntry> parse_reference_section(std::string_view block);

LinkResult link_markers(const std::vector<CitationMarker>& markers,
                        const std::vector<ReferenceEntry>& entries);

/// Throws Error(unknown_marker).
std::string extract_citing_sentence(const ParsedDocument& doc, std::string_view marker_id);

ParsedDocument parse_bundle(const DocumentBundle& bundle);

nlohmann::json to_json(const ParsedDocument& doc);
nlohmann::json to_json(const ParseReport& r);
ParsedDocument parsed_document_from_json(const nlohmann::json& j);
DocumentBundle bundle_from_json(const nlohmann::json& j, std::string content_hash,
                                std::string hash_algorithm);

}  // namespace citelens::citeparse
