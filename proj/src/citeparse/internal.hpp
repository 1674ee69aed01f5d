#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace citelens::citeparse::detail {

/// True when the '.' at `dot` closes an abbreviation or an author initial
/// rather than a sentence.
bool is_abbreviation_dot(std::u32string_view s, std::size_t dot);

struct YearToken {
    std::size_t begin = 0;
    std::size_t end = 0;  // past the suffix letter, if any
    int year = 0;
    std::string suffix;
};

/// A 4-digit year in 1900..2099 at `pos`, not glued to other digits, with an
/// optional single lowercase suffix letter ("2020a").
std::optional<YearToken> year_at(std::u32string_view s, std::size_t pos);
std::optional<YearToken> find_year(std::u32string_view s, std::size_t from = 0);

/// Collapses runs of whitespace to single spaces and trims.
std::u32string collapse_whitespace(std::u32string_view s);

bool is_initial_token(std::u32string_view token);

}  // namespace citelens::citeparse::detail
