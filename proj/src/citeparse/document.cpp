#include <algorithm>

#include "citelens/citeparse.hpp"
#include "citelens/error.hpp"
#include "citelens/text.hpp"

namespace citelens::citeparse {

using nlohmann::json;

std::string_view to_string(Style s) noexcept {
    switch (s) {
        case Style::numeric: return "numeric";
        case Style::author_year: return "author_year";
        case Style::auto_detect: return "auto";
    }
    return "auto";
}

Style style_from_string(std::string_view s) {
    if (s == "numeric") return Style::numeric;
    if (s == "author_year") return Style::author_year;
    if (s == "auto" || s.empty()) return Style::auto_detect;
    throw Error(ErrorKind::invalid_input, "unknown style hint: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Bundles

json DocumentBundle::to_json() const {
    json sections_json = json::array();
    for (const auto& s : sections) sections_json.push_back({{"name", s.name}, {"body", s.body}});
    return json{{"title", title},
                {"sections", sections_json},
                {"references_block", references_block},
                {"style_hint", std::string(to_string(style_hint))}};
}

DocumentBundle bundle_from_json(const json& j, std::string content_hash, std::string hash_algorithm) {
    if (!j.is_object()) throw Error(ErrorKind::invalid_input, "bundle must be a JSON object");
    DocumentBundle b;
    b.content_hash = std::move(content_hash);
    b.hash_algorithm = std::move(hash_algorithm);
    try {
        b.title = j.value("title", "");
        if (!j.contains("sections") || !j.at("sections").is_array()) {
            throw Error(ErrorKind::invalid_input, "bundle has no sections array");
        }
        for (const auto& s : j.at("sections")) {
            b.sections.push_back({s.value("name", ""), s.at("body").get<std::string>()});
        }
        b.references_block = j.value("references_block", "");
        b.style_hint = style_from_string(j.value("style_hint", "auto"));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_input, std::string("malformed bundle: ") + e.what());
    }
    if (b.sections.empty()) throw Error(ErrorKind::invalid_input, "bundle has no sections");
    return b;
}

DocumentBundle DocumentBundle::from_json_text(std::string_view raw) {
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::invalid_input, std::string("bundle is not valid JSON: ") + e.what());
    }
    return bundle_from_json(j, text::content_digest(raw), std::string(text::digest_algorithm()));
}

DocumentBundle DocumentBundle::make(std::string title, std::vector<Section> sections,
                                    std::string references_block, Style style_hint) {
    DocumentBundle b;
    b.title = std::move(title);
    b.sections = std::move(sections);
    b.references_block = std::move(references_block);
    b.style_hint = style_hint;
    if (b.sections.empty()) throw Error(ErrorKind::invalid_input, "bundle has no sections");
    b.content_hash = text::content_digest(b.to_json().dump());
    b.hash_algorithm = std::string(text::digest_algorithm());
    return b;
}

// ---------------------------------------------------------------------------
// Linking

namespace {

struct AuthorYearKey {
    std::string surname;
    int year = 0;
    std::string suffix;
};

bool is_numeric_key(std::string_view key) {
    return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<AuthorYearKey> split_author_year_key(std::string_view key) {
    const auto p = key.find_first_of("0123456789");
    if (p == std::string_view::npos || p == 0 || p + 4 > key.size()) return std::nullopt;
    AuthorYearKey k;
    k.surname = std::string(key.substr(0, p));
    for (std::size_t i = p; i < p + 4; ++i) {
        if (key[i] < '0' || key[i] > '9') return std::nullopt;
        k.year = k.year * 10 + (key[i] - '0');
    }
    k.suffix = std::string(key.substr(p + 4));
    return k;
}

const ReferenceEntry* resolve_key(const std::string& key, const std::vector<ReferenceEntry>& entries) {
    if (is_numeric_key(key)) {
        for (const auto& e : entries) {
            if (e.entry_key == key) return &e;
        }
        return nullptr;
    }
    const auto ak = split_author_year_key(key);
    if (!ak) return nullptr;
    std::vector<const ReferenceEntry*> candidates;
    for (const auto& e : entries) {
        if (e.first_author_key == ak->surname && e.year_guess == ak->year) candidates.push_back(&e);
    }
    if (!ak->suffix.empty()) {
        const ReferenceEntry* exact = nullptr;
        for (const auto* c : candidates) {
            if (c->year_suffix == ak->suffix) {
                if (exact != nullptr) return nullptr;
                exact = c;
            }
        }
        if (exact != nullptr) return exact;
    }
    return candidates.size() == 1 ? candidates.front() : nullptr;
}

}  // namespace

LinkResult link_markers(const std::vector<CitationMarker>& markers,
                        const std::vector<ReferenceEntry>& entries) {
    LinkResult result;
    for (const auto& m : markers) {
        std::vector<std::string> linked;
        for (const auto& key : m.keys) {
            if (const auto* entry = resolve_key(key, entries)) {
                linked.push_back(entry->entry_key);
            } else {
                result.unresolved.push_back({m.marker_id, key});
            }
        }
        if (!linked.empty()) result.links.emplace(m.marker_id, std::move(linked));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Documents

const CitationMarker* ParsedDocument::find_marker(std::string_view marker_id) const {
    for (const auto& m : markers) {
        if (m.marker_id == marker_id) return &m;
    }
    return nullptr;
}

const ReferenceEntry* ParsedDocument::find_entry(std::string_view entry_key) const {
    for (const auto& e : entries) {
        if (e.entry_key == entry_key) return &e;
    }
    return nullptr;
}

std::string extract_citing_sentence(const ParsedDocument& doc, std::string_view marker_id) {
    const auto* marker = doc.find_marker(marker_id);
    if (marker == nullptr) {
        throw Error(ErrorKind::unknown_marker, "unknown marker: " + std::string(marker_id));
    }
    for (const auto& s : doc.sentences) {
        if (s.section_index == marker->section_index && s.span.contains(marker->span.begin)) {
            return s.text;
        }
    }
    return {};
}

namespace {

struct StyleRun {
    std::vector<CitationMarker> markers;
    std::size_t skipped = 0;
    LinkResult links;
    std::size_t fully_linked = 0;
};

StyleRun run_style(const DocumentBundle& bundle, Style style,
                   const std::vector<ReferenceEntry>& entries) {
    StyleRun run;
    for (std::size_t i = 0; i < bundle.sections.size(); ++i) {
        auto d = detect_markers(bundle.sections[i].body, style, i);
        run.skipped += d.skipped;
        for (auto& m : d.markers) run.markers.push_back(std::move(m));
    }
    run.links = link_markers(run.markers, entries);
    std::vector<std::string> unresolved_ids;
    for (const auto& u : run.links.unresolved) unresolved_ids.push_back(u.marker_id);
    for (const auto& m : run.markers) {
        if (std::find(unresolved_ids.begin(), unresolved_ids.end(), m.marker_id) ==
            unresolved_ids.end()) {
            ++run.fully_linked;
        }
    }
    return run;
}

}  // namespace

ParsedDocument parse_bundle(const DocumentBundle& bundle) {
    ParsedDocument doc;
    doc.bundle = bundle;
    try {
        doc.entries = parse_reference_section(bundle.references_block);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::malformed_references) throw;
        doc.report.warnings.push_back(std::string(to_string(e.kind())) + ": " + e.what());
    }

    StyleRun chosen;
    if (bundle.style_hint == Style::auto_detect) {
        auto numeric = run_style(bundle, Style::numeric, doc.entries);
        auto author_year = run_style(bundle, Style::author_year, doc.entries);
        if (author_year.fully_linked > numeric.fully_linked) {
            chosen = std::move(author_year);
            doc.report.style_used = Style::author_year;
        } else {
            chosen = std::move(numeric);
            doc.report.style_used = Style::numeric;
        }
    } else {
        chosen = run_style(bundle, bundle.style_hint, doc.entries);
        doc.report.style_used = bundle.style_hint;
    }

    doc.markers = std::move(chosen.markers);
    doc.links = std::move(chosen.links.links);
    doc.unresolved = std::move(chosen.links.unresolved);
    for (std::size_t i = 0; i < bundle.sections.size(); ++i) {
        for (auto& s : segment_sentences(bundle.sections[i].body, i)) doc.sentences.push_back(std::move(s));
    }

    doc.report.markers = doc.markers.size();
    doc.report.linked = chosen.fully_linked;
    doc.report.unresolved = doc.report.markers - doc.report.linked;
    doc.report.skipped = chosen.skipped;
    doc.report.entries = doc.entries.size();
    return doc;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json span_json(const Span& s) { return json::array({s.begin, s.end}); }
Span span_from(const json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

}  // namespace

json to_json(const ParsedDocument& doc) {
    json bundle = doc.bundle.to_json();
    bundle["content_hash"] = doc.bundle.content_hash;
    bundle["hash_algorithm"] = doc.bundle.hash_algorithm;

    json markers = json::array();
    for (const auto& m : doc.markers) {
        json key_spans = json::array();
        for (const auto& s : m.key_spans) key_spans.push_back(span_json(s));
        markers.push_back({{"marker_id", m.marker_id},
                           {"section_index", m.section_index},
                           {"char_span", span_json(m.span)},
                           {"raw_text", m.raw_text},
                           {"keys", m.keys},
                           {"key_spans", key_spans}});
    }
    json entries = json::array();
    for (const auto& e : doc.entries) {
        entries.push_back({{"entry_key", e.entry_key},
                           {"raw_text", e.raw_text},
                           {"title_guess", e.title_guess},
                           {"authors_guess", e.authors_guess},
                           {"year_guess", e.year_guess ? json(*e.year_guess) : json(nullptr)},
                           {"year_suffix", e.year_suffix},
                           {"first_author_key", e.first_author_key}});
    }
    json unresolved = json::array();
    for (const auto& u : doc.unresolved) unresolved.push_back({{"marker_id", u.marker_id}, {"key", u.key}});
    json sentences = json::array();
    for (const auto& s : doc.sentences) {
        sentences.push_back(
            {{"section_index", s.section_index}, {"char_span", span_json(s.span)}, {"text", s.text}});
    }
    return json{{"bundle", bundle},         {"markers", markers},       {"entries", entries},
                {"links", doc.links},       {"unresolved", unresolved}, {"sentences", sentences},
                {"report", to_json(doc.report)}};
}

json to_json(const ParseReport& r) {
    return json{{"markers", r.markers},   {"linked", r.linked},   {"unresolved", r.unresolved},
                {"skipped", r.skipped},   {"entries", r.entries}, {"style_used", std::string(to_string(r.style_used))},
                {"warnings", r.warnings}};
}

ParsedDocument parsed_document_from_json(const json& j) {
    try {
        ParsedDocument doc;
        const auto& b = j.at("bundle");
        doc.bundle = bundle_from_json(b, b.at("content_hash").get<std::string>(),
                                      b.at("hash_algorithm").get<std::string>());
        for (const auto& m : j.at("markers")) {
            CitationMarker cm;
            cm.marker_id = m.at("marker_id").get<std::string>();
            cm.section_index = m.at("section_index").get<std::size_t>();
            cm.span = span_from(m.at("char_span"));
            cm.raw_text = m.at("raw_text").get<std::string>();
            cm.keys = m.at("keys").get<std::vector<std::string>>();
            for (const auto& s : m.at("key_spans")) cm.key_spans.push_back(span_from(s));
            doc.markers.push_back(std::move(cm));
        }
        for (const auto& e : j.at("entries")) {
            ReferenceEntry re;
            re.entry_key = e.at("entry_key").get<std::string>();
            re.raw_text = e.at("raw_text").get<std::string>();
            re.title_guess = e.at("title_guess").get<std::string>();
            re.authors_guess = e.at("authors_guess").get<std::vector<std::string>>();
            if (!e.at("year_guess").is_null()) re.year_guess = e.at("year_guess").get<int>();
            re.year_suffix = e.at("year_suffix").get<std::string>();
            re.first_author_key = e.at("first_author_key").get<std::string>();
            doc.entries.push_back(std::move(re));
        }
        doc.links = j.at("links").get<std::map<std::string, std::vector<std::string>>>();
        for (const auto& u : j.at("unresolved")) {
            doc.unresolved.push_back({u.at("marker_id").get<std::string>(), u.at("key").get<std::string>()});
        }
        for (const auto& s : j.at("sentences")) {
            doc.sentences.push_back({s.at("section_index").get<std::size_t>(), span_from(s.at("char_span")),
                                     s.at("text").get<std::string>()});
        }
        const auto& r = j.at("report");
        doc.report.markers = r.at("markers").get<std::size_t>();
        doc.report.linked = r.at("linked").get<std::size_t>();
        doc.report.unresolved = r.at("unresolved").get<std::size_t>();
        doc.report.skipped = r.at("skipped").get<std::size_t>();
        doc.report.entries = r.at("entries").get<std::size_t>();
        doc.report.style_used = style_from_string(r.at("style_used").get<std::string>());
        doc.report.warnings = r.at("warnings").get<std::vector<std::string>>();
        return doc;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_input, std::string("malformed parsed document: ") + e.what());
    }
}

}  // namespace citelens::citeparse
