#include "citelens/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <httplib.h>

#include "citelens/error.hpp"
#include "citelens/text.hpp"

namespace citelens::strategies {

using nlohmann::json;

std::string_view to_string(StrategyName s) noexcept {
    switch (s) {
        case StrategyName::embedding: return "embedding";
        case StrategyName::global: return "global";
        case StrategyName::linear: return "linear";
        case StrategyName::reencountered: return "reencountered";
    }
    return "unknown";
}

std::optional<StrategyName> strategy_from_string(std::string_view s) noexcept {
    for (auto n : kAllStrategies) {
        if (to_string(n) == s) return n;
    }
    return std::nullopt;
}

bool SectionFilter::matches(std::string_view section_name) const {
    if (whole_document) return true;
    const auto folded = text::to_utf8(text::fold(text::to_u32(section_name)));
    return folded.find("introduction") != std::string::npos || folded.find("related") != std::string::npos;
}

std::vector<PaperId> candidates(const augment::ResolvedDocument& doc, const SectionFilter& filter) {
    std::vector<const citeparse::CitationMarker*> markers;
    for (const auto& m : doc.doc.markers) {
        if (m.section_index < doc.doc.bundle.sections.size() &&
            filter.matches(doc.doc.bundle.sections[m.section_index].name)) {
            markers.push_back(&m);
        }
    }
    std::stable_sort(markers.begin(), markers.end(), [](const auto* a, const auto* b) {
        return std::tie(a->section_index, a->span.begin) < std::tie(b->section_index, b->span.begin);
    });
    std::vector<PaperId> out;
    std::set<PaperId> seen;
    for (const auto* m : markers) {
        for (const auto& [_, id] : doc.marker_targets(m->marker_id)) {
            if (seen.insert(id).second) out.push_back(id);
        }
    }
    return out;
}

namespace {

// Descending score, then ascending paper id.
void sort_ranking(Ranking& r) {
    std::stable_sort(r.begin(), r.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.paper_id < b.paper_id;
    });
}

}  // namespace

Ranking rank_linear(const augment::ResolvedDocument& doc, const SectionFilter& filter) {
    Ranking out;
    double position = 0;
    for (auto& id : candidates(doc, filter)) out.push_back({std::move(id), -(++position)});
    return out;
}

Ranking rank_global(const augment::ResolvedDocument& doc, const corpus::Snapshot& corpus,
                    const SectionFilter& filter) {
    Ranking out;
    for (auto& id : candidates(doc, filter)) {
        const auto stats = corpus.citation_stats(id);
        const double count = stats ? static_cast<double>(stats->citation_count) : 0.0;
        out.push_back({std::move(id), count});
    }
    sort_ranking(out);
    return out;
}

Ranking rank_reencountered(const augment::ResolvedDocument& doc,
                           const std::vector<const augment::ResolvedDocument*>& peers, const SectionFilter& filter) {
    std::vector<std::set<PaperId>> peer_cited;
    for (const auto* p : peers) {
        if (p != nullptr && p->paper_id != doc.paper_id) peer_cited.push_back(p->cited_papers());
    }
    Ranking out;
    for (auto& id : candidates(doc, filter)) {
        const auto n = std::count_if(peer_cited.begin(), peer_cited.end(), [&](const auto& s) { return s.count(id); });
        if (n > 0) out.push_back({std::move(id), static_cast<double>(n)});
    }
    sort_ranking(out);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> lexical_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::u32string current;
    for (char32_t c : text::fold(text::to_u32(s))) {
        if (text::is_alnum(c)) {
            current.push_back(c);
        } else if (!current.empty()) {
            out.push_back(text::to_utf8(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(text::to_utf8(current));
    return out;
}

}  // namespace

LexicalProvider::LexicalProvider(const std::vector<std::string>& corpus_texts) {
    std::map<std::string, std::size_t> df;
    for (const auto& t : corpus_texts) {
        const auto toks = lexical_tokens(t);
        for (const auto& term : std::set<std::string>(toks.begin(), toks.end())) ++df[term];
    }
    const double n = static_cast<double>(corpus_texts.size());
    for (const auto& [term, count] : df) {
        index_[term] = vocab_.size();
        vocab_.push_back(term);
        idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
}

double LexicalProvider::idf(const std::string& term) const {
    auto it = index_.find(term);
    return it == index_.end() ? 0.0 : idf_[it->second];
}

Vector LexicalProvider::embed_one(const std::string& text) const {
    Vector v(vocab_.size(), 0.0);
    for (const auto& tok : lexical_tokens(text)) {
        if (auto it = index_.find(tok); it != index_.end()) v[it->second] += 1.0;
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] *= idf_[i];
        norm += v[i] * v[i];
    }
    if (norm > 0) {
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
    }
    return v;
}

std::vector<Vector> LexicalProvider::embed(const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, std::string path,
                                             std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_(timeout) {}

std::vector<Vector> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    auto fail = [](const std::string& why) { return Error(ErrorKind::provider_unavailable, why); };
    httplib::Client client(base_url_);
    const auto secs = timeout_.count() / 1000;
    const auto usecs = (timeout_.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    auto res = client.Post(path_, json{{"texts", texts}}.dump(), "application/json");
    if (!res) throw fail("embedding service unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) throw fail("embedding service status " + std::to_string(res->status));
    std::vector<Vector> out;
    try {
        out = json::parse(res->body).at("vectors").get<std::vector<Vector>>();
    } catch (const json::exception& e) {
        throw fail(std::string("bad embedding response: ") + e.what());
    }
    if (out.size() != texts.size()) throw fail("embedding service returned the wrong number of vectors");
    for (const auto& v : out) {
        if (v.size() != out.front().size()) throw fail("embedding vectors differ in length");
        if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
            throw fail("embedding vector has a non-finite entry");
        }
    }
    return out;
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::invalid_input, "cosine of vectors with different sizes");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::string paper_text(const PaperId& id, const corpus::Snapshot& corpus, const augment::ResolvedDocument* doc) {
    if (const auto* meta = corpus.find(id); meta != nullptr && !meta->abstract.empty()) {
        return meta->title + "\n" + meta->abstract;
    }
    if (doc != nullptr) {
        std::string out = doc->doc.bundle.title;
        for (const auto& s : doc->doc.bundle.sections) out += "\n" + s.body;
        return out;
    }
    if (const auto* meta = corpus.find(id)) return meta->title;
    return {};
}

Ranking rank_embedding(const augment::ResolvedDocument& doc,
                       const std::vector<const augment::ResolvedDocument*>& topic_docs,
                       const corpus::Snapshot& corpus, EmbeddingProvider* provider, const SectionFilter& filter) {
    if (provider == nullptr) throw Error(ErrorKind::provider_unavailable, "no embedding provider configured");
    auto cands = candidates(doc, filter);
    if (cands.empty() || topic_docs.empty()) return {};
    std::vector<std::string> texts;
    for (const auto* t : topic_docs) texts.push_back(paper_text(t->paper_id, corpus, t));
    for (const auto& c : cands) texts.push_back(paper_text(c, corpus));
    const auto vectors = provider->embed(texts);
    if (vectors.size() != texts.size()) {
        throw Error(ErrorKind::provider_unavailable, "provider returned the wrong number of vectors");
    }
    const std::size_t dim = vectors.front().size();
    Vector query(dim, 0.0);
    for (std::size_t i = 0; i < topic_docs.size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) query[d] += vectors[i][d];
    }
    for (auto& x : query) x /= static_cast<double>(topic_docs.size());
    Ranking out;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        out.push_back({cands[i], cosine(query, vectors[topic_docs.size() + i])});
    }
    sort_ranking(out);
    return out;
}

// ---------------------------------------------------------------------------

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    // Largest multiple of bound that fits, to avoid modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

Ranking take_top_k(const Ranking& ranking, std::size_t k, std::mt19937_64& rng) {
    Ranking out;
    std::size_t i = 0;
    while (i < ranking.size() && out.size() < k) {
        std::size_t j = i;
        while (j < ranking.size() && ranking[j].score == ranking[i].score) ++j;
        Ranking group(ranking.begin() + static_cast<std::ptrdiff_t>(i), ranking.begin() + static_cast<std::ptrdiff_t>(j));
        if (out.size() + group.size() > k) {
            for (std::size_t n = group.size(); n > 1; --n) {
                std::swap(group[n - 1], group[uniform_below(rng, n)]);
            }
            group.resize(k - out.size());
        }
        out.insert(out.end(), group.begin(), group.end());
        i = j;
    }
    return out;
}

json to_json(const StrategyReport& r) {
    json per = json::object();
    for (const auto& [name, ranking] : r.per_strategy) {
        json list = json::array();
        for (const auto& item : ranking) list.push_back({{"paper_id", item.paper_id}, {"score", item.score}});
        per[std::string(to_string(name))] = list;
    }
    json attribution = json::object();
    for (const auto& [id, names] : r.attribution) {
        json list = json::array();
        for (auto n : names) list.push_back(std::string(to_string(n)));
        attribution[id.value] = list;
    }
    json hist = json::object();
    for (int k = 1; k <= 4; ++k) {
        auto it = r.overlap_histogram.find(k);
        hist[std::to_string(k)] = it == r.overlap_histogram.end() ? 0 : it->second;
    }
    return {{"k", r.k},
            {"seed", r.seed},
            {"per_strategy", per},
            {"pooled", r.pooled},
            {"attribution", attribution},
            {"overlap_histogram", hist}};
}

StrategyReport pool_rankings(const std::map<StrategyName, Ranking>& rankings, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw Error(ErrorKind::invalid_input, "k must be at least 1");
    StrategyReport r;
    r.k = k;
    r.seed = seed;
    std::mt19937_64 rng(seed);
    // std::map iterates in enum order, which is alphabetical.
    for (const auto& [name, ranking] : rankings) {
        auto top = take_top_k(ranking, k, rng);
        for (const auto& item : top) {
            r.pooled.insert(item.paper_id);
            r.attribution[item.paper_id].insert(name);
        }
        r.per_strategy[name] = std::move(top);
    }
    for (int n = 1; n <= 4; ++n) r.overlap_histogram[n] = 0;
    for (const auto& [_, names] : r.attribution) ++r.overlap_histogram[static_cast<int>(names.size())];
    return r;
}

StrategyReport pool_topk(const augment::ResolvedDocument& doc,
                         const std::vector<const augment::ResolvedDocument*>& peers, const corpus::Snapshot& corpus,
                         EmbeddingProvider* provider, std::size_t k, std::uint64_t seed,
                         const SectionFilter& filter) {
    std::vector<const augment::ResolvedDocument*> topic{&doc};
    topic.insert(topic.end(), peers.begin(), peers.end());
    std::map<StrategyName, Ranking> rankings;
    rankings[StrategyName::embedding] = rank_embedding(doc, topic, corpus, provider, filter);
    rankings[StrategyName::global] = rank_global(doc, corpus, filter);
    rankings[StrategyName::linear] = rank_linear(doc, filter);
    rankings[StrategyName::reencountered] = rank_reencountered(doc, peers, filter);
    return pool_rankings(rankings, k, seed);
}

}  // namespace citelens::strategies
