#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace citelens {

/// Milliseconds since the Unix epoch.
using Instant = std::int64_t;

Instant now_ms();

/// Stable identifier of a paper in the corpus.
struct PaperId {
    std::string value;

    PaperId() = default;
    explicit PaperId(std::string v) : value(std::move(v)) {}

    bool empty() const noexcept { return value.empty(); }
    friend auto operator<=>(const PaperId&, const PaperId&) = default;
};

inline void to_json(nlohmann::json& j, const PaperId& id) { j = id.value; }
inline void from_json(const nlohmann::json& j, PaperId& id) { id.value = j.get<std::string>(); }

enum class Color { none, reencountered_yellow, visited_green, saved_red };

std::string_view to_string(Color c) noexcept;
std::optional<Color> color_from_string(std::string_view s) noexcept;

/// Visual class of one citation: exactly one color plus independent overlays.
struct AugmentationClass {
    Color color = Color::none;
    bool own_heart = false;
    bool cited_quote = false;

    bool has_overlay() const noexcept { return own_heart || cited_quote; }
    friend bool operator==(const AugmentationClass&, const AugmentationClass&) = default;
};

void to_json(nlohmann::json& j, const AugmentationClass& c);
void from_json(const nlohmann::json& j, AugmentationClass& c);

/// Coarse buckets used by the usage analytics (card opens and saves).
enum class UsageBucket { familiar, reencountered, no_augmentation, external };

std::string_view to_string(UsageBucket b) noexcept;

/// Familiar = saved/visited color or an own/cited overlay; yellow counts as
/// reencountered; everything else is unaugmented.
UsageBucket usage_bucket(const AugmentationClass& c) noexcept;

}  // namespace citelens

template <>
struct std::hash<citelens::PaperId> {
    std::size_t operator()(const citelens::PaperId& id) const noexcept {
        return std::hash<std::string>{}(id.value);
    }
};
