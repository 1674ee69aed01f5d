#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "citelens/augment.hpp"
#include "citelens/corpus.hpp"

namespace citelens::strategies {

/// Declared in alphabetical order, which is also the order tie shuffles
/// consume the shared generator.
enum class StrategyName { embedding, global, linear, reencountered };

inline constexpr std::array<StrategyName, 4> kAllStrategies = {
    StrategyName::embedding, StrategyName::global, StrategyName::linear, StrategyName::reencountered};

std::string_view to_string(StrategyName s) noexcept;
std::optional<StrategyName> strategy_from_string(std::string_view s) noexcept;

/// Sections whose name contains "introduction" or "related"
/// (case-insensitive), or the whole document.
struct SectionFilter {
    bool whole_document = false;
    bool matches(std::string_view section_name) const;
};

struct Ranked {
    PaperId paper_id;
    double score = 0.0;
    friend bool operator==(const Ranked&, const Ranked&) = default;
};

/// Best first. Entries with equal score form a tie group.
using Ranking = std::vector<Ranked>;

/// Distinct resolved cited papers of the filtered sections, in first-mention
/// order.
std::vector<PaperId> candidates(const augment::ResolvedDocument& doc, const SectionFilter& filter);

/// Score is the 1-based first-mention position negated, so larger is better.
Ranking rank_linear(const augment::ResolvedDocument& doc, const SectionFilter& filter = {});

/// Descending citation count; equal counts ordered by paper id.
Ranking rank_global(const augment::ResolvedDocument& doc, const corpus::Snapshot& corpus,
                    const SectionFilter& filter = {});

/// Number of peer documents citing each candidate; zero scores excluded.
Ranking rank_reencountered(const augment::ResolvedDocument& doc,
                           const std::vector<const augment::ResolvedDocument*>& peers,
                           const SectionFilter& filter = {});

// ---------------------------------------------------------------------------
// Embeddings

using Vector = std::vector<double>;

/// Batch text embedding. Implementations throw Error(provider_unavailable).
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
};

/// tf-idf over folded alphanumeric tokens with idf = ln((1+N)/(1+df)) + 1,
/// L2-normalized. Tokens outside the corpus vocabulary are dropped.
class LexicalProvider : public EmbeddingProvider {
public:
    explicit LexicalProvider(const std::vector<std::string>& corpus_texts);

    std::vector<Vector> embed(const std::vector<std::string>& texts) override;
    Vector embed_one(const std::string& text) const;

    const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
    double idf(const std::string& term) const;

private:
    std::vector<std::string> vocab_;
    std::map<std::string, std::size_t> index_;
    std::vector<double> idf_;
};

/// POSTs {"texts": [...]} to `<base_url><path>` and expects
/// {"vectors": [[...], ...]} with one finite vector per text, all the same
/// length.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string base_url, std::string path = "/embed",
                          std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));
    std::vector<Vector> embed(const std::vector<std::string>& texts) override;

private:
    std::string base_url_;
    std::string path_;
    std::chrono::milliseconds timeout_;
};

/// 0 when either vector is zero; throws Error(invalid_input) on size mismatch.
double cosine(const Vector& a, const Vector& b);

/// Title and abstract from the corpus, else the document's own text.
std::string paper_text(const PaperId& id, const corpus::Snapshot& corpus,
                       const augment::ResolvedDocument* doc = nullptr);

/// Query is the mean of the topic vectors; score is cosine to each candidate.
Ranking rank_embedding(const augment::ResolvedDocument& doc,
                       const std::vector<const augment::ResolvedDocument*>& topic_docs,
                       const corpus::Snapshot& corpus, EmbeddingProvider* provider,
                       const SectionFilter& filter = {});

// ---------------------------------------------------------------------------
// Pooling

/// Uniform integer in [0, bound) by rejection sampling on the raw 64-bit
/// output, so results do not depend on the standard library.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Top k of `ranking`; the tie group straddling the cut is shuffled with
/// `rng` before truncation.
Ranking take_top_k(const Ranking& ranking, std::size_t k, std::mt19937_64& rng);

struct StrategyReport {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::map<StrategyName, Ranking> per_strategy;
    std::set<PaperId> pooled;
    std::map<PaperId, std::set<StrategyName>> attribution;
    std::map<int, std::size_t> overlap_histogram;  // keys 1..4
    friend bool operator==(const StrategyReport&, const StrategyReport&) = default;
};

nlohmann::json to_json(const StrategyReport& r);

/// Pools the top k of precomputed rankings.
StrategyReport pool_rankings(const std::map<StrategyName, Ranking>& rankings, std::size_t k, std::uint64_t seed);

/// Runs all four strategies on `doc`; `peers` also serve, together with
/// `doc`, as the embedding topic set.
StrategyReport pool_topk(const augment::ResolvedDocument& doc,
                         const std::vector<const augment::ResolvedDocument*>& peers,
                         const corpus::Snapshot& corpus, EmbeddingProvider* provider, std::size_t k,
                         std::uint64_t seed, const SectionFilter& filter = {});

}  // namespace citelens::strategies
