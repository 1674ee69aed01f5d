#include "citelens/workspace.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>

#include <spdlog/spdlog.h>

#include "citelens/error.hpp"
#include "../fsutil.hpp"

namespace citelens {

namespace fs = std::filesystem;
using nlohmann::json;

WorkspaceOptions WorkspaceOptions::from_env() {
    const char* dir = std::getenv("CITELENS_DATA_DIR");
    return for_data_dir(dir != nullptr && *dir != '\0' ? fs::path(dir) : fs::path("./data"));
}

WorkspaceOptions WorkspaceOptions::for_data_dir(fs::path dir) {
    WorkspaceOptions o;
    o.data_dir = std::move(dir);
    if (const char* url = std::getenv("CITELENS_METADATA_URL"); url != nullptr && *url != '\0') {
        o.external = std::make_shared<corpus::HttpMetadataClient>(url);
    } else if (fs::exists(o.data_dir / "external_metadata.json")) {
        auto stub = std::make_shared<corpus::StubMetadataClient>();
        stub->load(o.data_dir / "external_metadata.json");
        o.external = stub;
    }
    return o;
}

json to_json(const Settings& s) {
    return {{"window_size", s.window_size}, {"type_toggles", s.type_toggles}};
}

json to_json(const IngestReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"entry_key", e.entry_key},
                           {"paper_id", e.paper_id ? json(*e.paper_id) : json(nullptr)},
                           {"method", std::string(corpus::to_string(e.method))},
                           {"confidence", e.confidence}});
    }
    return {{"paper_id", r.paper_id},
            {"content_hash", r.content_hash},
            {"cache_hit", r.cache_hit},
            {"parse_report", citeparse::to_json(r.parse_report)},
            {"resolved", r.resolved},
            {"entries", entries}};
}

json to_json(const AugmentedView& v) {
    const auto& rd = *v.document;
    const auto& doc = rd.doc;
    json sections = json::array();
    for (const auto& s : doc.bundle.sections) sections.push_back({{"name", s.name}, {"body", s.body}});
    json sentences = json::array();
    for (const auto& s : doc.sentences) {
        sentences.push_back({{"section_index", s.section_index}, {"span", {s.span.begin, s.span.end}}});
    }
    json markers = json::array();
    for (const auto& m : doc.markers) {
        json resolved = json::array();
        for (const auto& [_, id] : rd.marker_targets(m.marker_id)) resolved.push_back(id);
        markers.push_back({{"marker_id", m.marker_id},
                           {"section_index", m.section_index},
                           {"span", {m.span.begin, m.span.end}},
                           {"raw_text", m.raw_text},
                           {"keys", m.keys},
                           {"resolved", resolved}});
    }
    json references = json::array();
    for (const auto& e : doc.entries) {
        auto it = rd.resolution.find(e.entry_key);
        references.push_back({{"entry_key", e.entry_key},
                              {"raw_text", e.raw_text},
                              {"paper_id", it == rd.resolution.end() ? json(nullptr) : json(it->second)}});
    }
    json decorations = json::array();
    for (const auto& d : v.decorations) decorations.push_back(augment::to_json(d));
    return {{"paper_id", rd.paper_id},
            {"title", doc.bundle.title},
            {"window", v.window},
            {"type_toggles", v.toggles},
            {"sections", sections},
            {"sentences", sentences},
            {"markers", markers},
            {"references", references},
            {"decorations", decorations},
            {"overview", augment::to_json(v.overview)}};
}

json to_json(const CardResult& r) {
    if (r.degraded || !r.card) {
        return {{"degraded", true}, {"marker_id", r.marker_id}, {"raw_references", r.raw_references}};
    }
    return cards::to_json(*r.card);
}

// ---------------------------------------------------------------------------

Workspace::Workspace(WorkspaceOptions options) : options_(std::move(options)) {
    if (options_.data_dir.empty()) {
        corpus_ = std::make_unique<corpus::Corpus>();
        activity_ = std::make_unique<activity::ActivityStore>();
    } else {
        fs::create_directories(options_.data_dir);
        corpus_ = std::make_unique<corpus::Corpus>(options_.data_dir / "corpus");
        activity_ = std::make_unique<activity::ActivityStore>(options_.data_dir / "events.ndjson");
        if (const auto& r = activity_->recovery()) {
            spdlog::warn("event log recovered at line {} (last valid seq {}): {}", r->line, r->last_valid_seq,
                         r->message);
        }
        load();
    }
    if (options_.external) corpus_->set_external_client(options_.external);
}

void Workspace::load() {
    const auto& dir = options_.data_dir;
    if (auto text = fsutil::read_file(dir / "settings.json")) {
        try {
            const auto j = json::parse(*text);
            if (j.contains("type_toggles")) toggles_ = j.at("type_toggles").get<augment::Toggles>();
        } catch (const std::exception& e) {
            spdlog::warn("ignoring unreadable settings.json: {}", e.what());
        }
    }
    if (auto text = fsutil::read_file(dir / "profile.json")) {
        try {
            const auto j = json::parse(*text);
            for (const auto& id : j.at("own_paper_ids")) own_.insert(id.get<PaperId>());
        } catch (const std::exception& e) {
            spdlog::warn("ignoring unreadable profile.json: {}", e.what());
        }
    }
    if (auto text = fsutil::read_file(dir / "documents.json")) {
        json index;
        try {
            index = json::parse(*text);
        } catch (const std::exception& e) {
            spdlog::warn("ignoring unreadable documents.json: {}", e.what());
            return;
        }
        for (const auto& [id, rec] : index.items()) {
            DocRecord record;
            record.content_hash = rec.at("content_hash").get<std::string>();
            for (const auto& [key, target] : rec.at("resolution").items()) {
                record.resolution.emplace(key, target.get<PaperId>());
            }
            auto parsed = load_cached(record.content_hash);
            if (!parsed) {
                spdlog::warn("parsed cache missing for {}; re-ingest the document", id);
                continue;
            }
            auto rd = std::make_shared<augment::ResolvedDocument>();
            rd->paper_id = PaperId(id);
            rd->doc = std::move(*parsed);
            rd->resolution = record.resolution;
            records_[PaperId(id)] = std::move(record);
            documents_[PaperId(id)] = std::move(rd);
        }
    }
}

std::optional<citeparse::ParsedDocument> Workspace::load_cached(const std::string& hash) const {
    if (options_.data_dir.empty()) return std::nullopt;
    auto text = fsutil::read_file(options_.data_dir / "cache" / (hash + ".parsed.json"));
    if (!text) return std::nullopt;
    try {
        return citeparse::parsed_document_from_json(json::parse(*text));
    } catch (const std::exception& e) {
        spdlog::warn("ignoring unreadable cache entry {}: {}", hash, e.what());
        return std::nullopt;
    }
}

void Workspace::save_documents_index() const {
    if (options_.data_dir.empty()) return;
    json index = json::object();
    for (const auto& [id, rec] : records_) {
        json resolution = json::object();
        for (const auto& [key, target] : rec.resolution) resolution[key] = target;
        index[id.value] = {{"content_hash", rec.content_hash}, {"resolution", resolution}};
    }
    fsutil::write_atomic(options_.data_dir / "documents.json", index.dump(2));
}

void Workspace::save_settings() const {
    if (options_.data_dir.empty()) return;
    fsutil::write_atomic(options_.data_dir / "settings.json", json{{"type_toggles", toggles_}}.dump(2));
}

void Workspace::save_profile() const {
    if (options_.data_dir.empty()) return;
    fsutil::write_atomic(options_.data_dir / "profile.json", json{{"own_paper_ids", own_}}.dump(2));
}

// ---------------------------------------------------------------------------

IngestReport Workspace::ingest_json(std::string_view raw, const IngestOptions& options) {
    auto bundle = citeparse::DocumentBundle::from_json_text(raw);
    corpus::PaperMetadata extra;
    const auto j = json::parse(raw);
    if (j.contains("metadata") && j.at("metadata").is_object()) {
        auto m = j.at("metadata");
        if (!m.contains("title")) m["title"] = bundle.title;
        try {
            extra = m.get<corpus::PaperMetadata>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::invalid_metadata, std::string("bad document metadata: ") + e.what());
        }
    }
    return ingest(bundle, extra, options);
}

IngestReport Workspace::ingest(const citeparse::DocumentBundle& bundle, const corpus::PaperMetadata& extra,
                               const IngestOptions& options) {
    std::unique_lock lock(mutex_);
    IngestReport report;
    report.content_hash = bundle.content_hash;

    auto cached = load_cached(bundle.content_hash);
    report.cache_hit = cached.has_value();
    citeparse::ParsedDocument parsed = cached ? std::move(*cached) : citeparse::parse_bundle(bundle);
    if (!cached && !options_.data_dir.empty()) {
        fsutil::write_atomic(options_.data_dir / "cache" / (bundle.content_hash + ".parsed.json"),
                             citeparse::to_json(parsed).dump());
    }
    report.parse_report = parsed.report;

    corpus::PaperMetadata meta = extra;
    if (meta.title.empty()) meta.title = bundle.title;
    if (corpus::normalize_title(meta.title).empty()) {
        throw Error(ErrorKind::invalid_metadata, "document has no title");
    }

    // Keep what the corpus already knows about this paper.
    std::optional<corpus::PaperMetadata> existing;
    if (!meta.paper_id.empty()) existing = corpus_->get(meta.paper_id);
    if (!existing) {
        citeparse::ReferenceEntry self;
        self.title_guess = meta.title;
        self.year_guess = meta.year;
        const auto snap = corpus_->snapshot();
        for (const auto& id : snap->ids()) {
            const auto* m = snap->find(id);
            if (corpus::normalize_title(m->title) == corpus::normalize_title(meta.title) &&
                (!meta.year || !m->year || *m->year == *meta.year)) {
                existing = *m;
                break;
            }
        }
    }
    if (existing) {
        if (meta.paper_id.empty()) meta.paper_id = existing->paper_id;
        if (meta.authors.empty()) meta.authors = existing->authors;
        if (!meta.year) meta.year = existing->year;
        if (meta.abstract.empty()) meta.abstract = existing->abstract;
        if (!meta.summary) meta.summary = existing->summary;
        if (!meta.citation_count) meta.citation_count = existing->citation_count;
    }

    std::map<std::string, PaperId> resolution;
    std::vector<PaperId> outgoing;
    for (const auto& entry : parsed.entries) {
        EntryResolution er;
        er.entry_key = entry.entry_key;
        auto match = corpus_->resolve_entry(entry);
        er.method = match.method;
        er.confidence = match.confidence;
        er.paper_id = match.paper_id;
        if (!er.paper_id && options.create_missing && !corpus::normalize_title(entry.title_guess).empty()) {
            corpus::PaperMetadata cited;
            cited.title = entry.title_guess;
            cited.authors = entry.authors_guess;
            cited.year = entry.year_guess;
            er.paper_id = corpus_->upsert_paper(cited);
        }
        if (er.paper_id && (meta.paper_id.empty() || *er.paper_id != meta.paper_id)) {
            resolution[entry.entry_key] = *er.paper_id;
            if (std::find(outgoing.begin(), outgoing.end(), *er.paper_id) == outgoing.end()) {
                outgoing.push_back(*er.paper_id);
            }
            ++report.resolved;
        } else {
            er.paper_id.reset();
        }
        report.entries.push_back(std::move(er));
    }
    meta.outgoing_refs = outgoing;
    if (!meta.reference_count) {
        meta.reference_count = static_cast<std::int64_t>(std::max(parsed.entries.size(), outgoing.size()));
    }
    report.paper_id = corpus_->upsert_paper(meta);
    // The document may itself appear in its references under another entry.
    for (auto it = resolution.begin(); it != resolution.end();) {
        it = it->second == report.paper_id ? resolution.erase(it) : std::next(it);
    }

    auto rd = std::make_shared<augment::ResolvedDocument>();
    rd->paper_id = report.paper_id;
    rd->doc = std::move(parsed);
    rd->resolution = resolution;
    records_[report.paper_id] = DocRecord{bundle.content_hash, resolution};
    documents_[report.paper_id] = std::move(rd);
    save_documents_index();
    if (options.own && own_.insert(report.paper_id).second) save_profile();
    return report;
}

std::vector<PaperId> Workspace::upsert_papers(const std::vector<corpus::PaperMetadata>& papers) {
    std::vector<PaperId> ids;
    for (const auto& p : papers) ids.push_back(corpus_->upsert_paper(p));
    return ids;
}

std::shared_ptr<const augment::ResolvedDocument> Workspace::document(const PaperId& id) const {
    std::shared_lock lock(mutex_);
    auto it = documents_.find(id);
    return it == documents_.end() ? nullptr : it->second;
}

std::vector<PaperId> Workspace::documents() const {
    std::shared_lock lock(mutex_);
    std::vector<PaperId> out;
    for (const auto& [id, _] : documents_) out.push_back(id);
    return out;
}

std::shared_ptr<const augment::ResolvedDocument> Workspace::require_document(const PaperId& id) const {
    if (auto doc = document(id)) return doc;
    if (!corpus_->get(id)) throw Error(ErrorKind::unknown_paper, "unknown paper: " + id.value);
    throw Error(ErrorKind::unparsed_document, "paper has no parsed document: " + id.value);
}

// ---------------------------------------------------------------------------

Settings Workspace::settings() const {
    Settings s;
    s.window_size = activity_->read([](const activity::ActivityState& st) { return st.window; });
    std::shared_lock lock(mutex_);
    s.type_toggles = toggles_;
    return s;
}

Settings Workspace::update_settings(const json& patch) {
    if (!patch.is_object()) throw Error(ErrorKind::invalid_input, "settings must be a JSON object");
    std::optional<int> window;
    std::optional<augment::Toggles> toggles;
    for (const auto& [key, value] : patch.items()) {
        if (key == "window_size") {
            if (!value.is_number_integer()) throw Error(ErrorKind::invalid_input, "window_size must be an integer");
            const int w = value.get<int>();
            if (w < activity::kMinWindow || w > activity::kMaxWindow) {
                throw Error(ErrorKind::invalid_input, "window_size must be within [1, 50]");
            }
            window = w;
        } else if (key == "type_toggles") {
            augment::Toggles t = settings().type_toggles;
            augment::from_json(value, t);
            toggles = t;
        } else if (key != "schema_version") {
            throw Error(ErrorKind::invalid_input, "unknown setting: " + key);
        }
    }
    if (window && *window != settings().window_size) {
        activity::ActivityEvent e;
        e.kind = activity::EventKind::set_window;
        e.payload = activity::WindowPayload{*window};
        activity_->append(std::move(e));
    }
    if (toggles) {
        std::unique_lock lock(mutex_);
        toggles_ = *toggles;
        save_settings();
    }
    return settings();
}

augment::UserProfile Workspace::profile() const {
    return augment::UserProfile::from_own(own_papers(), *corpus_->snapshot());
}

std::set<PaperId> Workspace::own_papers() const {
    std::shared_lock lock(mutex_);
    return own_;
}

void Workspace::set_own_papers(std::set<PaperId> own) {
    for (const auto& id : own) {
        if (!corpus_->get(id)) throw Error(ErrorKind::unknown_paper, "unknown paper: " + id.value);
    }
    std::unique_lock lock(mutex_);
    own_ = std::move(own);
    save_profile();
}

std::int64_t Workspace::record_event(activity::ActivityEvent event) {
    using activity::EventKind;
    if ((event.kind == EventKind::save || event.kind == EventKind::unsave) && !corpus_->get(event.paper_id)) {
        throw Error(ErrorKind::unknown_paper, "unknown paper: " + event.paper_id.value);
    }
    if (auto* p = std::get_if<activity::SavePayload>(&event.payload); p && p->provenance && !p->provenance->saved_at) {
        p->provenance->saved_at = event.timestamp ? event.timestamp : now_ms();
    }
    return activity_->append(std::move(event));
}

int Workspace::effective_window(std::optional<int> window) const {
    if (window) {
        if (*window < activity::kMinWindow || *window > activity::kMaxWindow) {
            throw Error(ErrorKind::invalid_input, "window must be within [1, 50]");
        }
        return *window;
    }
    return activity_->read([](const activity::ActivityState& st) { return st.window; });
}

AugmentedView Workspace::view(const PaperId& id, std::optional<int> window,
                              std::optional<augment::Toggles> toggles) const {
    AugmentedView v;
    v.document = require_document(id);
    v.window = effective_window(window);
    v.toggles = toggles ? *toggles : settings().type_toggles;
    const auto state = activity_->state();
    const auto snap = corpus_->snapshot();
    const auto prof = profile();
    const augment::AugmentInputs in{state, *snap, prof, v.window, v.toggles};
    v.decorations = augment::augment_document(*v.document, in);
    v.overview = augment::overview(*v.document, in);
    return v;
}

augment::OverviewStats Workspace::overview(const PaperId& id, std::optional<int> window) const {
    const auto doc = require_document(id);
    const auto state = activity_->state();
    const auto snap = corpus_->snapshot();
    const auto prof = profile();
    return augment::overview(*doc, {state, *snap, prof, effective_window(window), {}});
}

cards::CardContext Workspace::card_context(const activity::ActivityState& state, const corpus::Snapshot& snap,
                                           const augment::UserProfile& prof, int window,
                                           const augment::Toggles& toggles) const {
    cards::CardContext ctx{state, snap, prof, window, toggles, {}, options_.summarizer, options_.card_similarity.get()};
    ctx.documents = [this](const PaperId& id) { return document(id); };
    return ctx;
}

CardResult Workspace::card(const PaperId& reading, const std::string& marker_id, const std::optional<PaperId>& cited,
                           std::optional<int> window, Instant at) {
    const auto doc = require_document(reading);
    const int w = effective_window(window);
    const auto state = activity_->state();
    const auto snap = corpus_->snapshot();
    const auto prof = profile();
    const auto ctx = card_context(state, *snap, prof, w, settings().type_toggles);
    CardResult result;
    result.marker_id = marker_id;
    try {
        result.card = cards::build_card(ctx, *doc, marker_id, cited);
    } catch (const cards::UnresolvedCitation& e) {
        result.degraded = true;
        result.raw_references = e.raw_references();
        if (result.raw_references.empty()) {
            for (const auto& u : doc->doc.unresolved) {
                if (u.marker_id == marker_id) result.raw_references.push_back(u.key);
            }
        }
        return result;
    }
    result.logged_class = result.card->cls;
    activity::ActivityEvent e;
    e.kind = activity::EventKind::card_open;
    e.timestamp = at;
    e.paper_id = result.card->meta.paper_id;
    e.payload = activity::CardOpenPayload{reading, result.card->cls};
    activity_->append(std::move(e));
    return result;
}

cards::PaperCard Workspace::library_card(const PaperId& id) const {
    const auto state = activity_->state();
    const auto snap = corpus_->snapshot();
    const auto prof = profile();
    return cards::card_for_library_item(card_context(state, *snap, prof, state.window, settings().type_toggles), id);
}

std::vector<activity::HistoryEntry> Workspace::history(std::optional<int> window) const {
    const int w = effective_window(window);
    return activity_->read([w](const activity::ActivityState& st) { return activity::reading_history(st, w); });
}

std::map<PaperId, activity::LibraryItem> Workspace::library() const {
    return activity_->read([](const activity::ActivityState& st) { return st.library; });
}

activity::Engagement Workspace::engagement(const PaperId& id) const {
    return activity_->read([&](const activity::ActivityState& st) { return activity::engagement(st, id); });
}

strategies::StrategyReport Workspace::evaluate(const PaperId& doc_id, const std::vector<PaperId>& peer_ids,
                                               std::size_t k, std::uint64_t seed, bool whole_document) const {
    const auto doc = require_document(doc_id);
    std::vector<std::shared_ptr<const augment::ResolvedDocument>> peers;
    std::vector<const augment::ResolvedDocument*> peer_ptrs;
    for (const auto& id : peer_ids) {
        if (id == doc_id) continue;
        peers.push_back(require_document(id));
        peer_ptrs.push_back(peers.back().get());
    }
    const auto snap = corpus_->snapshot();
    std::shared_ptr<strategies::EmbeddingProvider> provider = options_.card_similarity;
    if (!provider) {
        std::vector<std::string> texts;
        for (const auto& id : snap->ids()) texts.push_back(strategies::paper_text(id, *snap, document(id).get()));
        provider = std::make_shared<strategies::LexicalProvider>(texts);
    }
    return strategies::pool_topk(*doc, peer_ptrs, *snap, provider.get(), k, seed,
                                 strategies::SectionFilter{whole_document});
}

usage::UsageStats Workspace::usage_stats() const { return usage::compute(activity_->events()); }

}  // namespace citelens
