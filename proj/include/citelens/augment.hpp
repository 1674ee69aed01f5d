#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "citelens/activity.hpp"
#include "citelens/citeparse.hpp"
#include "citelens/corpus.hpp"
#include "citelens/types.hpp"

namespace citelens::augment {

/// Publication record of the user.
struct UserProfile {
    std::set<PaperId> own_paper_ids;
    std::set<PaperId> cited_by_own;

    /// Recomputes cited_by_own from the outgoing_refs of each own paper.
    static UserProfile from_own(std::set<PaperId> own, const corpus::Snapshot& corpus);
};

/// Per-class display switches; a switched-off class degrades to no color or
/// no overlay while scores are still computed.
struct Toggles {
    bool saved_red = true;
    bool visited_green = true;
    bool reencountered_yellow = true;
    bool own_heart = true;
    bool cited_quote = true;

    static Toggles all_off() { return {false, false, false, false, false}; }
    friend bool operator==(const Toggles&, const Toggles&) = default;
};

void to_json(nlohmann::json& j, const Toggles& t);
/// Unknown keys raise Error(invalid_input); missing keys keep their value.
void from_json(const nlohmann::json& j, Toggles& t);

inline constexpr int kScoreCapHundredths = 500;

struct Contributor {
    PaperId paper_id;
    int points_hundredths = 0;  // 100 + progress + 200 if saved
    friend bool operator==(const Contributor&, const Contributor&) = default;
};

/// Score in hundredths of a point so every sum is exact.
struct ReencounterScore {
    int value_hundredths = 0;
    std::vector<Contributor> contributors;

    double value() const noexcept { return value_hundredths / 100.0; }
    bool positive() const noexcept { return value_hundredths > 0; }
    friend bool operator==(const ReencounterScore&, const ReencounterScore&) = default;
};

nlohmann::json to_json(const ReencounterScore& s);

/// Contributors are history papers within the window, other than
/// `open_paper`, whose outgoing_refs contain `cited`.
ReencounterScore reencounter_score(const activity::ActivityState& state, const corpus::Snapshot& corpus,
                                   const PaperId& cited, int window,
                                   const std::optional<PaperId>& open_paper = std::nullopt);

/// Precedence: saved > visited > reencountered. Yellow needs a positive
/// score, a paper outside own and cited_by_own, and no suppression.
AugmentationClass classify(const UserProfile& profile, const activity::ActivityState& state,
                           const PaperId& cited, const ReencounterScore& score);

AugmentationClass classify_citation(const UserProfile& profile, const activity::ActivityState& state,
                                    const corpus::Snapshot& corpus, const PaperId& cited, int window,
                                    const std::optional<PaperId>& open_paper = std::nullopt);

AugmentationClass apply_toggles(AugmentationClass c, const Toggles& toggles);

/// ceil(score) clamped to [1, 5].
int shade_bucket(const ReencounterScore& score);

/// A parsed document plus the corpus paper each reference entry resolved to.
struct ResolvedDocument {
    PaperId paper_id;
    citeparse::ParsedDocument doc;
    std::map<std::string, PaperId> resolution;  // entry_key -> paper

    /// Distinct papers a marker resolves to, in key order.
    std::vector<std::pair<std::string, PaperId>> marker_targets(const std::string& marker_id) const;
    /// First marker (document order) linking to `cited`, if any.
    const citeparse::CitationMarker* first_marker_citing(const PaperId& cited) const;
    std::set<PaperId> cited_papers() const;
};

struct Decoration {
    std::string marker_id;
    std::string entry_key;
    PaperId cited_paper_id;
    std::optional<citeparse::Span> key_span;
    AugmentationClass cls;
    std::optional<ReencounterScore> score;  // present when positive
    std::optional<int> shade_bucket;        // present iff color is yellow
    std::optional<double> intensity;        // score / 5, with the score
    friend bool operator==(const Decoration&, const Decoration&) = default;
};

nlohmann::json to_json(const Decoration& d);

struct AugmentInputs {
    const activity::ActivityState& state;
    const corpus::Snapshot& corpus;
    const UserProfile& profile;
    int window = activity::kDefaultWindow;
    Toggles toggles;
};

/// One decoration per (marker, resolved cited paper), in marker order.
std::vector<Decoration> augment_document(const ResolvedDocument& rd, const AugmentInputs& in);

struct OverviewStats {
    std::size_t total_citations = 0;
    std::size_t own = 0;
    std::size_t cited_by_own = 0;
    std::size_t reencountered = 0;
    std::size_t saved = 0;
    std::size_t visited = 0;
    std::size_t unresolved = 0;
    friend bool operator==(const OverviewStats&, const OverviewStats&) = default;
};

/// Rows are emitted in display order: own, cited_by_own, reencountered,
/// saved, visited.
nlohmann::json to_json(const OverviewStats& s);

/// Counts over distinct resolved cited papers; `unresolved` counts reference
/// entries without a corpus paper.
OverviewStats overview(const ResolvedDocument& rd, const AugmentInputs& in);

}  // namespace citelens::augment
