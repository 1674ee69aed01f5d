#include <algorithm>
#include <array>

#include "citelens/citeparse.hpp"
#include "citelens/text.hpp"
#include "internal.hpp"

namespace citelens::citeparse {

namespace detail {

namespace {

constexpr std::array<std::u32string_view, 17> kAbbreviations = {
    U"al", U"e.g", U"i.e", U"fig", U"figs", U"eq", U"eqs", U"vs", U"cf",
    U"sec", U"secs", U"approx", U"resp", U"ref", U"refs", U"dr", U"prof",
};

bool is_token_break(char32_t c) {
    return text::is_space(c) || c == U'(' || c == U'[' || c == U'"' || c == 0x201C;
}

std::u32string_view token_before(std::u32string_view s, std::size_t end) {
    std::size_t b = end;
    while (b > 0 && !is_token_break(s[b - 1])) --b;
    return s.substr(b, end - b);
}

}  // namespace

bool is_initial_token(std::u32string_view token) {
    // "J", "JK", "J.K" style initials (without the final dot).
    if (token.empty() || token.size() > 4) return false;
    std::size_t letters = 0;
    for (char32_t c : token) {
        if (text::is_upper(c)) {
            ++letters;
        } else if (c != U'.' && c != U'-') {
            return false;
        }
    }
    return letters >= 1 && letters <= 3;
}

bool is_abbreviation_dot(std::u32string_view s, std::size_t dot) {
    const auto token = token_before(s, dot);
    if (token.empty()) return false;
    const auto folded = text::fold(token);
    for (auto abbr : kAbbreviations) {
        if (folded == abbr) return true;
    }
    // Single capital letter: an initial when the preceding word looks like a
    // name, another initial, or the start of a list ("Smith, J." / "A. B.").
    if (token.size() == 1 && text::is_upper(token[0])) {
        std::size_t p = dot - token.size();
        while (p > 0 && text::is_space(s[p - 1])) --p;
        if (p == 0) return true;
        const char32_t last = s[p - 1];
        if (last == U',' || last == U'(' || last == U'[') return true;
        const auto prev = token_before(s, p);
        if (prev.empty()) return false;
        if (prev.back() == U'.') {
            const auto core = prev.substr(0, prev.size() - 1);
            return core.size() == 1 && text::is_upper(core[0]);
        }
        return text::is_upper(prev.front());
    }
    return false;
}

std::optional<YearToken> year_at(std::u32string_view s, std::size_t pos) {
    if (pos + 4 > s.size()) return std::nullopt;
    if (pos > 0 && text::is_digit(s[pos - 1])) return std::nullopt;
    int year = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        if (!text::is_digit(s[pos + k])) return std::nullopt;
        year = year * 10 + static_cast<int>(s[pos + k] - U'0');
    }
    std::size_t end = pos + 4;
    if (end < s.size() && text::is_digit(s[end])) return std::nullopt;
    if (year < 1900 || year > 2099) return std::nullopt;
    YearToken tok{pos, end, year, {}};
    if (end < s.size() && s[end] >= U'a' && s[end] <= U'z' &&
        (end + 1 == s.size() || !text::is_alpha(s[end + 1]))) {
        tok.suffix = std::string(1, static_cast<char>(s[end]));
        tok.end = end + 1;
    }
    return tok;
}

std::optional<YearToken> find_year(std::u32string_view s, std::size_t from) {
    for (std::size_t i = from; i + 4 <= s.size(); ++i) {
        if (auto y = year_at(s, i)) return y;
    }
    return std::nullopt;
}

std::u32string collapse_whitespace(std::u32string_view s) {
    std::u32string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char32_t c : s) {
        if (text::is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(U' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace detail

namespace {

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

}  // namespace

std::vector<SentenceSpan> segment_sentences(std::string_view body, std::size_t section_index) {
    std::vector<SentenceSpan> spans;
    const auto s = text::to_u32(body);
    const std::size_t n = s.size();
    if (n == 0) return spans;

    auto emit = [&](std::size_t b, std::size_t e) {
        spans.push_back({section_index, {b, e}, text::to_utf8(text::trim(s.substr(b, e - b)))});
    };

    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_terminator(s[i])) continue;
        if (i + 1 < n && is_terminator(s[i + 1])) continue;  // "?!", "..."
        std::size_t j = i + 1;
        while (j < n && text::is_space(s[j])) ++j;
        const bool at_end = j == n;
        const bool has_gap = j > i + 1;
        if (!at_end && !(has_gap && text::is_upper(s[j]))) continue;
        if (s[i] == U'.' && detail::is_abbreviation_dot(s, i)) continue;
        emit(start, j);
        start = j;
        i = j - 1;
    }
    if (start < n) emit(start, n);
    return spans;
}

}  // namespace citelens::citeparse
