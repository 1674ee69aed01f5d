#include "citelens/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "citelens/error.hpp"
#include "citelens/text.hpp"
#include "../fsutil.hpp"

namespace citelens::corpus {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(MatchMethod m) noexcept {
    switch (m) {
        case MatchMethod::exact_norm: return "exact_norm";
        case MatchMethod::fuzzy: return "fuzzy";
        case MatchMethod::external: return "external";
        case MatchMethod::none: return "none";
    }
    return "none";
}

std::string_view to_string(CountSource s) noexcept {
    return s == CountSource::stored ? "stored" : "in_degree";
}

void to_json(json& j, const PaperMetadata& m) {
    j = json{{"paper_id", m.paper_id},
             {"title", m.title},
             {"authors", m.authors},
             {"year", m.year ? json(*m.year) : json(nullptr)},
             {"abstract", m.abstract},
             {"summary", m.summary ? json(*m.summary) : json(nullptr)},
             {"citation_count", m.citation_count ? json(*m.citation_count) : json(nullptr)},
             {"reference_count", m.reference_count ? json(*m.reference_count) : json(nullptr)},
             {"outgoing_refs", m.outgoing_refs}};
}

void from_json(const json& j, PaperMetadata& m) {
    auto opt_int = [&](const char* key) -> std::optional<std::int64_t> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<std::int64_t>();
    };
    m.paper_id = PaperId(j.value("paper_id", ""));
    m.title = j.at("title").get<std::string>();
    m.authors = j.value("authors", std::vector<std::string>{});
    if (auto y = opt_int("year")) m.year = static_cast<int>(*y);
    m.abstract = j.value("abstract", "");
    if (j.contains("summary") && !j.at("summary").is_null()) m.summary = j.at("summary").get<std::string>();
    m.citation_count = opt_int("citation_count");
    m.reference_count = opt_int("reference_count");
    m.outgoing_refs.clear();
    if (j.contains("outgoing_refs")) {
        for (const auto& r : j.at("outgoing_refs")) m.outgoing_refs.emplace_back(r.get<std::string>());
    }
}

std::string normalize_title(std::string_view title) {
    std::u32string out;
    bool pending_space = false;
    for (char32_t c : text::fold(text::to_u32(title))) {
        if (text::is_alnum(c)) {
            if (pending_space && !out.empty()) out.push_back(U' ');
            pending_space = false;
            out.push_back(c);
        } else {
            pending_space = true;
        }
    }
    return text::to_utf8(out);
}

namespace {

double token_jaccard(const std::string& a, const std::string& b) {
    const auto ta = text::word_tokens(a);
    const auto tb = text::word_tokens(b);
    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

bool years_close(const std::optional<int>& a, const std::optional<int>& b) {
    return std::abs(*a - *b) <= kYearTolerance;
}

std::string sanitize_id(const std::string& id) {
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_' || c == '.';
        if (!ok || id == "." || id == "..") {
            throw Error(ErrorKind::invalid_metadata, "paper id must be [A-Za-z0-9._-]: " + id);
        }
    }
    return id;
}

}  // namespace

// ---------------------------------------------------------------------------

const PaperMetadata* Snapshot::find(const PaperId& id) const {
    auto it = papers_.find(id);
    return it == papers_.end() ? nullptr : it->second.get();
}

std::vector<PaperId> Snapshot::ids() const {
    std::vector<PaperId> out;
    out.reserve(papers_.size());
    for (const auto& [id, _] : papers_) out.push_back(id);
    return out;
}

std::int64_t Snapshot::in_degree(const PaperId& id) const {
    std::int64_t n = 0;
    for (const auto& [_, meta] : papers_) {
        if (std::find(meta->outgoing_refs.begin(), meta->outgoing_refs.end(), id) != meta->outgoing_refs.end()) {
            ++n;
        }
    }
    return n;
}

// ---------------------------------------------------------------------------

Corpus::Corpus() : snapshot_(std::make_shared<Snapshot>()) {}

Corpus::Corpus(fs::path dir) : snapshot_(std::make_shared<Snapshot>()), dir_(std::move(dir)) {
    const auto papers_dir = *dir_ / "papers";
    fs::create_directories(papers_dir);
    auto snap = std::make_shared<Snapshot>();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(papers_dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        const auto content = fsutil::read_file(file);
        if (!content) continue;
        try {
            auto meta = json::parse(*content).get<PaperMetadata>();
            const auto norm = normalize_title(meta.title);
            auto ptr = std::make_shared<const PaperMetadata>(std::move(meta));
            snap->index_[index_key(norm, ptr->year)] = ptr->paper_id;
            snap->by_title_.emplace(norm, ptr->paper_id);
            snap->papers_[ptr->paper_id] = std::move(ptr);
        } catch (const std::exception& e) {
            spdlog::warn("corpus: skipping unreadable paper file {}: {}", file.string(), e.what());
        }
    }
    snapshot_ = std::move(snap);
}

std::shared_ptr<const Snapshot> Corpus::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

std::string Corpus::index_key(const std::string& normalized, const std::optional<int>& year) {
    return normalized + "|" + (year ? std::to_string(*year) : std::string());
}

std::optional<PaperMetadata> Corpus::get(const PaperId& id) const {
    const auto snap = snapshot();
    if (const auto* m = snap->find(id)) return *m;
    return std::nullopt;
}

PaperId Corpus::upsert_paper(PaperMetadata meta) {
    const auto norm = normalize_title(meta.title);
    if (norm.empty()) throw Error(ErrorKind::invalid_metadata, "paper title is empty");
    if (meta.citation_count && *meta.citation_count < 0) {
        throw Error(ErrorKind::invalid_metadata, "citation_count must be non-negative");
    }
    if (!meta.paper_id.empty()) sanitize_id(meta.paper_id.value);

    std::lock_guard write(write_mutex_);
    const auto current = snapshot();
    auto next = std::make_shared<Snapshot>(*current);
    const auto key = index_key(norm, meta.year);

    PaperId id;
    if (auto it = next->index_.find(key); it != next->index_.end()) {
        id = it->second;
    } else if (!meta.paper_id.empty() && next->papers_.count(meta.paper_id)) {
        // Known id under a changed title/year: move its index entries.
        id = meta.paper_id;
        const auto& old = *next->papers_.at(id);
        const auto old_norm = normalize_title(old.title);
        next->index_.erase(index_key(old_norm, old.year));
        for (auto [b, e] = next->by_title_.equal_range(old_norm); b != e; ++b) {
            if (b->second == id) {
                next->by_title_.erase(b);
                break;
            }
        }
    } else if (!meta.paper_id.empty()) {
        id = meta.paper_id;
    } else {
        const auto digest = text::content_digest(key);
        std::string candidate = "p" + digest.substr(0, 16);
        for (int n = 2; next->papers_.count(PaperId(candidate)); ++n) {
            candidate = "p" + digest.substr(0, 16) + "-" + std::to_string(n);
        }
        id = PaperId(candidate);
    }

    meta.paper_id = id;
    if (!next->index_.count(key)) {
        next->index_[key] = id;
        next->by_title_.emplace(norm, id);
    }
    auto stored = std::make_shared<const PaperMetadata>(std::move(meta));
    next->papers_[id] = stored;
    if (dir_) persist(*stored, *next);
    {
        std::lock_guard lock(snapshot_mutex_);
        snapshot_ = std::move(next);
    }
    return id;
}

void Corpus::persist(const PaperMetadata& meta, const Snapshot& snap) const {
    fsutil::write_atomic(*dir_ / "papers" / (meta.paper_id.value + ".json"), json(meta).dump(2));
    json index = json::object();
    for (const auto& [k, id] : snap.index_) index[k] = id.value;
    fsutil::write_atomic(*dir_ / "index.json", index.dump(2));
}

MatchResult Corpus::resolve_entry(const citeparse::ReferenceEntry& entry) {
    const auto norm = normalize_title(entry.title_guess);
    if (norm.empty()) return {};
    const auto snap = snapshot();

    // Exact normalized title; the closest year wins, unknown years accepted.
    std::optional<PaperId> best;
    int best_gap = 1 << 30;
    for (auto [b, e] = snap->by_title_.equal_range(norm); b != e; ++b) {
        const auto* meta = snap->find(b->second);
        int gap = 0;
        if (entry.year_guess && meta->year) {
            if (!years_close(entry.year_guess, meta->year)) continue;
            gap = std::abs(*entry.year_guess - *meta->year);
        }
        if (gap < best_gap || (gap == best_gap && b->second < *best)) {
            best = b->second;
            best_gap = gap;
        }
    }
    if (best) return {best, 1.0, MatchMethod::exact_norm};

    if (entry.year_guess) {
        double best_score = 0.0;
        for (const auto& [id, meta] : snap->papers_) {
            if (!meta->year || !years_close(entry.year_guess, meta->year)) continue;
            const double j = token_jaccard(norm, normalize_title(meta->title));
            if (j >= kAcceptanceThreshold && j > best_score) {
                best_score = j;
                best = id;
            }
        }
        if (best) return {best, best_score, MatchMethod::fuzzy};
    }

    if (external_) {
        if (auto meta = fetch_external(entry)) return {meta->paper_id, 1.0, MatchMethod::external};
    }
    return {};
}

std::optional<CitationStats> Snapshot::citation_stats(const PaperId& id) const {
    const auto* meta = find(id);
    if (meta == nullptr) return std::nullopt;
    CitationStats stats;
    if (meta->citation_count) {
        stats.citation_count = *meta->citation_count;
        stats.source = CountSource::stored;
    } else {
        stats.citation_count = in_degree(id);
        stats.source = CountSource::in_degree;
    }
    stats.reference_count = meta->reference_count ? *meta->reference_count
                                                  : static_cast<std::int64_t>(meta->outgoing_refs.size());
    return stats;
}

CitationStats Corpus::citation_stats(const PaperId& id) const {
    auto stats = snapshot()->citation_stats(id);
    if (!stats) throw Error(ErrorKind::unknown_paper, "unknown paper: " + id.value);
    return *stats;
}

std::optional<PaperMetadata> Corpus::fetch_external(const citeparse::ReferenceEntry& entry) {
    std::shared_ptr<MetadataClient> client;
    {
        std::lock_guard lock(snapshot_mutex_);
        client = external_;
    }
    if (!client) return std::nullopt;
    std::optional<PaperMetadata> meta;
    try {
        meta = client->fetch({entry.title_guess, entry.year_guess});
    } catch (const std::exception& e) {
        spdlog::warn("external metadata lookup failed for \"{}\": {}", entry.title_guess, e.what());
        return std::nullopt;
    }
    if (!meta || normalize_title(meta->title).empty()) return std::nullopt;
    meta->paper_id = upsert_paper(*meta);
    return meta;
}

void Corpus::set_external_client(std::shared_ptr<MetadataClient> client) {
    std::lock_guard lock(snapshot_mutex_);
    external_ = std::move(client);
}

}  // namespace citelens::corpus
