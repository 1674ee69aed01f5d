#include "citelens/augment.hpp"

#include <algorithm>
#include <set>

#include "citelens/error.hpp"

namespace citelens::augment {

using nlohmann::json;

UserProfile UserProfile::from_own(std::set<PaperId> own, const corpus::Snapshot& corpus) {
    UserProfile p;
    p.own_paper_ids = std::move(own);
    for (const auto& id : p.own_paper_ids) {
        if (const auto* meta = corpus.find(id)) {
            p.cited_by_own.insert(meta->outgoing_refs.begin(), meta->outgoing_refs.end());
        }
    }
    return p;
}

void to_json(json& j, const Toggles& t) {
    j = json{{"saved_red", t.saved_red},
             {"visited_green", t.visited_green},
             {"reencountered_yellow", t.reencountered_yellow},
             {"own_heart", t.own_heart},
             {"cited_quote", t.cited_quote}};
}

void from_json(const json& j, Toggles& t) {
    if (!j.is_object()) throw Error(ErrorKind::invalid_input, "type_toggles must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!value.is_boolean()) throw Error(ErrorKind::invalid_input, "toggle " + key + " must be a boolean");
        const bool on = value.get<bool>();
        if (key == "saved_red") t.saved_red = on;
        else if (key == "visited_green") t.visited_green = on;
        else if (key == "reencountered_yellow") t.reencountered_yellow = on;
        else if (key == "own_heart") t.own_heart = on;
        else if (key == "cited_quote") t.cited_quote = on;
        else throw Error(ErrorKind::invalid_input, "unknown augmentation type: " + key);
    }
}

json to_json(const ReencounterScore& s) {
    json contributors = json::array();
    for (const auto& c : s.contributors) {
        contributors.push_back({{"paper_id", c.paper_id}, {"points", c.points_hundredths / 100.0}});
    }
    return {{"value", s.value()}, {"contributors", contributors}};
}

namespace {

bool cites(const corpus::Snapshot& corpus, const PaperId& citing, const PaperId& cited) {
    const auto* meta = corpus.find(citing);
    if (meta == nullptr) return false;
    return std::find(meta->outgoing_refs.begin(), meta->outgoing_refs.end(), cited) != meta->outgoing_refs.end();
}

// Links list the resolved keys of a marker in key order, skipping the
// unresolved ones, so walking both recovers each entry's key span.
std::optional<citeparse::Span> key_span_of(const citeparse::ParsedDocument& doc,
                                           const citeparse::CitationMarker& marker, const std::string& entry_key) {
    auto links = doc.links.find(marker.marker_id);
    if (links == doc.links.end()) return std::nullopt;
    std::multiset<std::string> unresolved;
    for (const auto& u : doc.unresolved) {
        if (u.marker_id == marker.marker_id) unresolved.insert(u.key);
    }
    std::size_t next = 0;
    for (std::size_t i = 0; i < marker.keys.size(); ++i) {
        if (auto u = unresolved.find(marker.keys[i]); u != unresolved.end()) {
            unresolved.erase(u);
            continue;
        }
        if (next >= links->second.size()) break;
        if (links->second[next++] == entry_key && i < marker.key_spans.size()) return marker.key_spans[i];
    }
    return std::nullopt;
}

}  // namespace

ReencounterScore reencounter_score(const activity::ActivityState& state, const corpus::Snapshot& corpus,
                                   const PaperId& cited, int window, const std::optional<PaperId>& open_paper) {
    ReencounterScore score;
    int sum = 0;
    for (const auto& h : activity::reading_history(state, window)) {
        if (open_paper && h.paper_id == *open_paper) continue;
        if (!cites(corpus, h.paper_id, cited)) continue;
        const int points = 100 + h.progress.hundredths + (h.saved ? 200 : 0);
        score.contributors.push_back({h.paper_id, points});
        sum += points;
    }
    score.value_hundredths = std::min(sum, kScoreCapHundredths);
    return score;
}

AugmentationClass classify(const UserProfile& profile, const activity::ActivityState& state, const PaperId& cited,
                           const ReencounterScore& score) {
    AugmentationClass c;
    c.own_heart = profile.own_paper_ids.count(cited) > 0;
    c.cited_quote = profile.cited_by_own.count(cited) > 0;
    if (state.is_saved(cited)) {
        c.color = Color::saved_red;
    } else if (state.is_visited(cited)) {
        c.color = Color::visited_green;
    } else if (score.positive() && !c.own_heart && !c.cited_quote && !state.suppressed.count(cited)) {
        c.color = Color::reencountered_yellow;
    }
    return c;
}

AugmentationClass classify_citation(const UserProfile& profile, const activity::ActivityState& state,
                                    const corpus::Snapshot& corpus, const PaperId& cited, int window,
                                    const std::optional<PaperId>& open_paper) {
    return classify(profile, state, cited, reencounter_score(state, corpus, cited, window, open_paper));
}

AugmentationClass apply_toggles(AugmentationClass c, const Toggles& t) {
    if ((c.color == Color::saved_red && !t.saved_red) || (c.color == Color::visited_green && !t.visited_green) ||
        (c.color == Color::reencountered_yellow && !t.reencountered_yellow)) {
        c.color = Color::none;
    }
    c.own_heart = c.own_heart && t.own_heart;
    c.cited_quote = c.cited_quote && t.cited_quote;
    return c;
}

int shade_bucket(const ReencounterScore& score) {
    const int bucket = (score.value_hundredths + 99) / 100;
    return std::clamp(bucket, 1, 5);
}

std::vector<std::pair<std::string, PaperId>> ResolvedDocument::marker_targets(const std::string& marker_id) const {
    std::vector<std::pair<std::string, PaperId>> out;
    auto it = doc.links.find(marker_id);
    if (it == doc.links.end()) return out;
    for (const auto& key : it->second) {
        auto r = resolution.find(key);
        if (r == resolution.end()) continue;
        const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& p) { return p.second == r->second; });
        if (!dup) out.emplace_back(key, r->second);
    }
    return out;
}

const citeparse::CitationMarker* ResolvedDocument::first_marker_citing(const PaperId& cited) const {
    for (const auto& m : doc.markers) {
        for (const auto& [_, id] : marker_targets(m.marker_id)) {
            if (id == cited) return &m;
        }
    }
    return nullptr;
}

std::set<PaperId> ResolvedDocument::cited_papers() const {
    std::set<PaperId> out;
    for (const auto& [_, id] : resolution) out.insert(id);
    return out;
}

json to_json(const Decoration& d) {
    json j = {{"marker_id", d.marker_id},
              {"entry_key", d.entry_key},
              {"cited_paper_id", d.cited_paper_id},
              {"class", d.cls}};
    if (d.key_span) j["key_span"] = {d.key_span->begin, d.key_span->end};
    j["score"] = d.score ? to_json(*d.score) : json(nullptr);
    j["shade_bucket"] = d.shade_bucket ? json(*d.shade_bucket) : json(nullptr);
    j["intensity"] = d.intensity ? json(*d.intensity) : json(nullptr);
    return j;
}

std::vector<Decoration> augment_document(const ResolvedDocument& rd, const AugmentInputs& in) {
    std::map<PaperId, std::pair<ReencounterScore, AugmentationClass>> memo;
    auto lookup = [&](const PaperId& cited) -> const std::pair<ReencounterScore, AugmentationClass>& {
        auto it = memo.find(cited);
        if (it != memo.end()) return it->second;
        auto score = reencounter_score(in.state, in.corpus, cited, in.window, rd.paper_id);
        auto cls = classify(in.profile, in.state, cited, score);
        return memo.emplace(cited, std::make_pair(std::move(score), cls)).first->second;
    };

    std::vector<Decoration> out;
    for (const auto& marker : rd.doc.markers) {
        for (const auto& [key, cited] : rd.marker_targets(marker.marker_id)) {
            const auto& [score, raw] = lookup(cited);
            Decoration d;
            d.marker_id = marker.marker_id;
            d.entry_key = key;
            d.cited_paper_id = cited;
            d.key_span = key_span_of(rd.doc, marker, key);
            d.cls = apply_toggles(raw, in.toggles);
            if (score.positive()) {
                d.score = score;
                d.intensity = score.value() / 5.0;
            }
            if (d.cls.color == Color::reencountered_yellow) d.shade_bucket = shade_bucket(score);
            out.push_back(std::move(d));
        }
    }
    return out;
}

json to_json(const OverviewStats& s) {
    return {{"total_citations", s.total_citations},
            {"unresolved", s.unresolved},
            {"rows",
             json::array({{{"type", "own"}, {"count", s.own}},
                          {{"type", "cited_by_own"}, {"count", s.cited_by_own}},
                          {{"type", "reencountered"}, {"count", s.reencountered}},
                          {{"type", "saved"}, {"count", s.saved}},
                          {{"type", "visited"}, {"count", s.visited}}})}};
}

OverviewStats overview(const ResolvedDocument& rd, const AugmentInputs& in) {
    OverviewStats s;
    const auto cited = rd.cited_papers();
    s.total_citations = cited.size();
    for (const auto& e : rd.doc.entries) {
        if (!rd.resolution.count(e.entry_key)) ++s.unresolved;
    }
    for (const auto& id : cited) {
        const auto c = classify_citation(in.profile, in.state, in.corpus, id, in.window, rd.paper_id);
        if (c.own_heart) ++s.own;
        if (c.cited_quote) ++s.cited_by_own;
        switch (c.color) {
            case Color::reencountered_yellow: ++s.reencountered; break;
            case Color::saved_red: ++s.saved; break;
            case Color::visited_green: ++s.visited; break;
            case Color::none: break;
        }
    }
    return s;
}

}  // namespace citelens::augment
