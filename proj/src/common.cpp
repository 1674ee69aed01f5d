#include <chrono>

#include "citelens/error.hpp"
#include "citelens/types.hpp"

namespace citelens {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::malformed_references: return "MalformedReferences";
        case ErrorKind::unknown_marker: return "UnknownMarker";
        case ErrorKind::invalid_metadata: return "InvalidMetadata";
        case ErrorKind::unknown_paper: return "UnknownPaper";
        case ErrorKind::invalid_event: return "InvalidEvent";
        case ErrorKind::corrupt_log: return "CorruptLog";
        case ErrorKind::unparsed_document: return "UnparsedDocument";
        case ErrorKind::unresolved_citation: return "UnresolvedCitation";
        case ErrorKind::not_in_library: return "NotInLibrary";
        case ErrorKind::provider_unavailable: return "ProviderUnavailable";
        case ErrorKind::invalid_input: return "InvalidInput";
        case ErrorKind::io: return "IoError";
    }
    return "Unknown";
}

Instant now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string_view to_string(Color c) noexcept {
    switch (c) {
        case Color::none: return "none";
        case Color::reencountered_yellow: return "reencountered_yellow";
        case Color::visited_green: return "visited_green";
        case Color::saved_red: return "saved_red";
    }
    return "none";
}

std::optional<Color> color_from_string(std::string_view s) noexcept {
    for (Color c : {Color::none, Color::reencountered_yellow, Color::visited_green,
                    Color::saved_red}) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

void to_json(nlohmann::json& j, const AugmentationClass& c) {
    auto overlays = nlohmann::json::array();
    if (c.own_heart) overlays.push_back("own_heart");
    if (c.cited_quote) overlays.push_back("cited_quote");
    j = nlohmann::json{{"color", to_string(c.color)}, {"overlays", overlays}};
}

void from_json(const nlohmann::json& j, AugmentationClass& c) {
    auto color = color_from_string(j.at("color").get<std::string>());
    if (!color) throw Error(ErrorKind::invalid_input, "unknown color in augmentation class");
    c.color = *color;
    c.own_heart = false;
    c.cited_quote = false;
    if (j.contains("overlays")) {
        for (const auto& o : j.at("overlays")) {
            const auto name = o.get<std::string>();
            if (name == "own_heart") {
                c.own_heart = true;
            } else if (name == "cited_quote") {
                c.cited_quote = true;
            } else {
                throw Error(ErrorKind::invalid_input, "unknown overlay: " + name);
            }
        }
    }
}

std::string_view to_string(UsageBucket b) noexcept {
    switch (b) {
        case UsageBucket::familiar: return "familiar";
        case UsageBucket::reencountered: return "reencountered";
        case UsageBucket::no_augmentation: return "no_augmentation";
        case UsageBucket::external: return "external";
    }
    return "external";
}

UsageBucket usage_bucket(const AugmentationClass& c) noexcept {
    if (c.color == Color::saved_red || c.color == Color::visited_green || c.has_overlay()) {
        return UsageBucket::familiar;
    }
    if (c.color == Color::reencountered_yellow) return UsageBucket::reencountered;
    return UsageBucket::no_augmentation;
}

}  // namespace citelens
