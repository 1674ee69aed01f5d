#include "citelens/cards.hpp"

#include <algorithm>

namespace citelens::cards {

using nlohmann::json;

UnresolvedCitation::UnresolvedCitation(std::string marker_id, std::vector<std::string> raw_references)
    : Error(ErrorKind::unresolved_citation, "citation " + marker_id + " did not resolve to a known paper"),
      marker_id_(std::move(marker_id)),
      raw_(std::move(raw_references)) {}

std::optional<std::string> first_sentence_summary(const corpus::PaperMetadata& meta) {
    for (const auto& s : citeparse::segment_sentences(meta.abstract)) {
        if (!s.text.empty()) return s.text;
    }
    return std::nullopt;
}

namespace {

json provenance_json(const activity::Provenance& p) {
    return {{"source_paper_id", p.source_paper_id}, {"citing_sentence", p.citing_sentence}, {"saved_at", p.saved_at}};
}

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

// First sentence of `doc` citing `subject`, when it does.
std::optional<std::string> citing_sentence_in(const augment::ResolvedDocument& doc, const PaperId& subject) {
    const auto* marker = doc.first_marker_citing(subject);
    if (marker == nullptr) return std::nullopt;
    return citeparse::extract_citing_sentence(doc.doc, marker->marker_id);
}

std::string title_of(const CardContext& ctx, const PaperId& id, const augment::ResolvedDocument* doc) {
    if (const auto* meta = ctx.corpus.find(id)) return meta->title;
    return doc != nullptr ? doc->doc.bundle.title : std::string();
}

}  // namespace

json to_json(const PaperCard& c) {
    json mentions = json::array();
    for (const auto& m : c.history_mentions) {
        mentions.push_back({{"paper_id", m.paper_id},
                            {"title", m.title},
                            {"last_opened", m.last_opened},
                            {"progress", m.progress.fraction()},
                            {"citing_sentence", m.citing_sentence}});
    }
    json own = json::array();
    for (const auto& m : c.own_mentions) {
        own.push_back({{"paper_id", m.paper_id}, {"title", m.title}, {"citing_sentence", m.citing_sentence}});
    }
    json meta = c.meta;
    meta["citation_count"] = c.stats.citation_count;
    meta["reference_count"] = c.stats.reference_count;
    meta["citation_count_source"] = std::string(corpus::to_string(c.stats.source));
    return {{"meta", meta},
            {"history_mentions", mentions},
            {"own_mentions", own},
            {"saved_from", c.saved_from ? provenance_json(*c.saved_from) : json(nullptr)},
            {"class", c.cls},
            {"score", c.score ? augment::to_json(*c.score) : json(nullptr)},
            {"library_state", c.library_state},
            {"suppressed", c.suppressed},
            {"similarity", opt(c.similarity)},
            {"reading_paper_id", opt(c.reading_paper_id)},
            {"marker_id", opt(c.marker_id)},
            {"citing_sentence", opt(c.citing_sentence)},
            {"degraded", false}};
}

PaperCard card_for_paper(const CardContext& ctx, const PaperId& subject, const augment::ResolvedDocument* reading) {
    const auto* meta = ctx.corpus.find(subject);
    if (meta == nullptr) throw Error(ErrorKind::unknown_paper, "unknown paper: " + subject.value);
    PaperCard card;
    card.meta = *meta;
    if (!card.meta.summary && ctx.summarizer) card.meta.summary = ctx.summarizer(card.meta);
    card.stats = *ctx.corpus.citation_stats(subject);

    std::optional<PaperId> open;
    if (reading != nullptr) {
        open = reading->paper_id;
        card.reading_paper_id = reading->paper_id;
    }
    const auto score = augment::reencounter_score(ctx.state, ctx.corpus, subject, ctx.window, open);
    card.cls = augment::apply_toggles(augment::classify(ctx.profile, ctx.state, subject, score), ctx.toggles);
    if (score.positive()) card.score = score;
    card.library_state = ctx.state.is_saved(subject);
    card.suppressed = ctx.state.suppressed.count(subject) > 0;
    if (auto it = ctx.state.library.find(subject); it != ctx.state.library.end()) card.saved_from = it->second.provenance;

    for (const auto& h : activity::reading_history(ctx.state, ctx.window)) {
        if (open && h.paper_id == *open) continue;
        auto doc = ctx.documents ? ctx.documents(h.paper_id) : nullptr;
        if (!doc) continue;
        if (auto sentence = citing_sentence_in(*doc, subject)) {
            card.history_mentions.push_back(
                {h.paper_id, title_of(ctx, h.paper_id, doc.get()), h.last_opened, h.progress, *sentence});
        }
    }
    for (const auto& own : ctx.profile.own_paper_ids) {
        if (open && own == *open) continue;
        auto doc = ctx.documents ? ctx.documents(own) : nullptr;
        if (!doc) continue;
        if (auto sentence = citing_sentence_in(*doc, subject)) {
            card.own_mentions.push_back({own, title_of(ctx, own, doc.get()), *sentence});
        }
    }

    if (ctx.similarity != nullptr && reading != nullptr) {
        const auto vectors = ctx.similarity->embed(
            {strategies::paper_text(reading->paper_id, ctx.corpus, reading), strategies::paper_text(subject, ctx.corpus)});
        if (vectors.size() == 2) card.similarity = strategies::cosine(vectors[0], vectors[1]);
    }
    return card;
}

PaperCard build_card(const CardContext& ctx, const augment::ResolvedDocument& reading, const std::string& marker_id,
                     const std::optional<PaperId>& cited) {
    const auto* marker = reading.doc.find_marker(marker_id);
    if (marker == nullptr) throw Error(ErrorKind::unknown_marker, "unknown marker: " + marker_id);
    const auto targets = reading.marker_targets(marker_id);
    if (targets.empty()) {
        std::vector<std::string> raw;
        if (auto it = reading.doc.links.find(marker_id); it != reading.doc.links.end()) {
            for (const auto& key : it->second) {
                if (const auto* e = reading.doc.find_entry(key)) raw.push_back(e->raw_text);
            }
        }
        throw UnresolvedCitation(marker_id, std::move(raw));
    }
    PaperId subject = targets.front().second;
    if (cited) {
        const bool found = std::any_of(targets.begin(), targets.end(), [&](const auto& t) { return t.second == *cited; });
        if (!found) throw Error(ErrorKind::unknown_paper, "marker " + marker_id + " does not cite " + cited->value);
        subject = *cited;
    }
    auto card = card_for_paper(ctx, subject, &reading);
    card.marker_id = marker_id;
    card.citing_sentence = citeparse::extract_citing_sentence(reading.doc, marker_id);
    return card;
}

PaperCard card_for_library_item(const CardContext& ctx, const PaperId& paper) {
    if (!ctx.state.is_saved(paper)) throw Error(ErrorKind::not_in_library, "paper not in library: " + paper.value);
    return card_for_paper(ctx, paper, nullptr);
}

}  // namespace citelens::cards
