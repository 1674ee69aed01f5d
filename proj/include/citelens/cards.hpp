#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citelens/activity.hpp"
#include "citelens/augment.hpp"
#include "citelens/corpus.hpp"
#include "citelens/error.hpp"
#include "citelens/strategies.hpp"

namespace citelens::cards {

struct HistoryMention {
    PaperId paper_id;
    std::string title;
    Instant last_opened = 0;
    activity::Progress progress;
    std::string citing_sentence;
    friend bool operator==(const HistoryMention&, const HistoryMention&) = default;
};

/// A paper of the user's own citing the subject.
struct OwnMention {
    PaperId paper_id;
    std::string title;
    std::string citing_sentence;
    friend bool operator==(const OwnMention&, const OwnMention&) = default;
};

struct PaperCard {
    corpus::PaperMetadata meta;
    corpus::CitationStats stats;
    std::vector<HistoryMention> history_mentions;
    std::vector<OwnMention> own_mentions;
    std::optional<activity::Provenance> saved_from;
    AugmentationClass cls;
    std::optional<augment::ReencounterScore> score;
    bool library_state = false;
    bool suppressed = false;
    /// Cosine between the reading paper and the subject; only with a provider.
    std::optional<double> similarity;

    std::optional<PaperId> reading_paper_id;
    std::optional<std::string> marker_id;
    std::optional<std::string> citing_sentence;
};

nlohmann::json to_json(const PaperCard& c);

/// Raised for markers whose entries did not resolve to a corpus paper.
class UnresolvedCitation : public Error {
public:
    UnresolvedCitation(std::string marker_id, std::vector<std::string> raw_references);
    const std::string& marker_id() const noexcept { return marker_id_; }
    const std::vector<std::string>& raw_references() const noexcept { return raw_; }

private:
    std::string marker_id_;
    std::vector<std::string> raw_;
};

using Summarizer = std::function<std::optional<std::string>(const corpus::PaperMetadata&)>;

/// First sentence of the abstract, if any.
std::optional<std::string> first_sentence_summary(const corpus::PaperMetadata& meta);

using DocumentLookup = std::function<std::shared_ptr<const augment::ResolvedDocument>(const PaperId&)>;

struct CardContext {
    const activity::ActivityState& state;
    const corpus::Snapshot& corpus;
    const augment::UserProfile& profile;
    int window = activity::kDefaultWindow;
    augment::Toggles toggles;
    DocumentLookup documents;
    Summarizer summarizer = first_sentence_summary;
    strategies::EmbeddingProvider* similarity = nullptr;
};

/// Card for `subject`, seen from `reading` when given. Throws
/// Error(unknown_paper) when the subject is not in the corpus.
PaperCard card_for_paper(const CardContext& ctx, const PaperId& subject,
                         const augment::ResolvedDocument* reading = nullptr);

/// Card for a marker of the reading document. `cited` selects among the
/// papers of a multi-key marker (default: the first resolved one).
/// Throws Error(unknown_marker), Error(unknown_paper) or UnresolvedCitation.
PaperCard build_card(const CardContext& ctx, const augment::ResolvedDocument& reading, const std::string& marker_id,
                     const std::optional<PaperId>& cited = std::nullopt);

/// Throws Error(not_in_library).
PaperCard card_for_library_item(const CardContext& ctx, const PaperId& paper);

}  // namespace citelens::cards
