#include <algorithm>
#include <array>
#include <optional>

#include "citelens/citeparse.hpp"
#include "citelens/text.hpp"
#include "internal.hpp"

namespace citelens::citeparse {

namespace {

using detail::YearToken;

constexpr std::size_t kMaxBracketLength = 200;
constexpr std::size_t kMaxParenLength = 400;
constexpr long kMaxNumericKey = 99999;
constexpr long kMaxRangeWidth = 500;

struct KeyedSpan {
    std::string key;
    Span span;
};

void skip_spaces(std::u32string_view s, std::size_t& i, std::size_t end) {
    while (i < end && text::is_space(s[i])) ++i;
}

std::optional<long> read_number(std::u32string_view s, std::size_t& i, std::size_t end) {
    const std::size_t b = i;
    long value = 0;
    while (i < end && text::is_digit(s[i])) {
        if (i - b >= 5) return std::nullopt;
        value = value * 10 + static_cast<long>(s[i] - U'0');
        ++i;
    }
    if (i == b) return std::nullopt;
    return value;
}

// "3, 7-9" -> {3,7,8,9}; nullopt if anything else appears between the brackets.
std::optional<std::vector<KeyedSpan>> parse_numeric_list(std::u32string_view s, std::size_t b,
                                                         std::size_t e) {
    std::vector<KeyedSpan> keys;
    std::size_t i = b;
    while (true) {
        skip_spaces(s, i, e);
        const std::size_t item_begin = i;
        auto first = read_number(s, i, e);
        if (!first || *first < 1 || *first > kMaxNumericKey) return std::nullopt;
        long last = *first;
        std::size_t item_end = i;
        std::size_t j = i;
        skip_spaces(s, j, e);
        if (j < e && text::is_dash(s[j])) {
            ++j;
            skip_spaces(s, j, e);
            auto second = read_number(s, j, e);
            if (!second || *second < *first || *second - *first > kMaxRangeWidth) {
                return std::nullopt;
            }
            last = *second;
            item_end = j;
            i = j;
        }
        for (long k = *first; k <= last; ++k) {
            keys.push_back({std::to_string(k), {item_begin, item_end}});
        }
        skip_spaces(s, i, e);
        if (i == e) break;
        if (s[i] != U',' && s[i] != U';') return std::nullopt;
        ++i;
    }
    return keys;
}

bool starts_with_ci(std::u32string_view s, std::size_t pos, std::u32string_view prefix) {
    if (pos + prefix.size() > s.size()) return false;
    return text::fold(s.substr(pos, prefix.size())) == prefix;
}

constexpr std::array<std::u32string_view, 10> kItemPrefixes = {
    U"e.g.,", U"e.g.", U"i.e.,", U"i.e.", U"see also", U"see", U"cf.", U"cf", U"compare",
    U"for example,",
};

constexpr std::array<std::u32string_view, 8> kLocators = {
    U"p.", U"pp.", U"chap.", U"ch.", U"sec.", U"fig.", U"table", U"page",
};

constexpr std::array<std::u32string_view, 16> kParticles = {
    U"van", U"von", U"der", U"den", U"de", U"del", U"della", U"di",
    U"da", U"du", U"la", U"le", U"dos", U"das", U"ter", U"ten",
};

constexpr std::array<std::u32string_view, 56> kNotNames = {
    U"In", U"The", U"This", U"That", U"These", U"Those", U"Since", U"Until",
    U"From", U"By", U"On", U"At", U"Of", U"For", U"And", U"As",
    U"To", U"A", U"An", U"Table", U"Figure", U"Fig", U"Section", U"Eq",
    U"Equation", U"Appendix", U"Chapter", U"Algorithm", U"See", U"Also", U"Both", U"Then",
    U"When", U"While", U"After", U"Before", U"During", U"We", U"Our", U"It",
    U"They", U"Version", U"Release", U"January", U"February", U"March", U"April", U"May",
    U"June", U"July", U"August", U"September", U"October", U"November", U"December", U"Since",
};

bool is_particle(std::u32string_view w) {
    return std::find(kParticles.begin(), kParticles.end(), w) != kParticles.end();
}

bool is_name_char(char32_t c) {
    return text::is_alpha(c) || c == U'-' || c == U'\'' || c == 0x2019;
}

// Validates a first-author chunk like "Smith", "van der Berg", "O'Neil".
bool looks_like_name(std::u32string_view chunk) {
    chunk = text::trim(chunk);
    if (chunk.empty()) return false;
    bool last_capitalized = false;
    std::size_t i = 0;
    while (i < chunk.size()) {
        while (i < chunk.size() && text::is_space(chunk[i])) ++i;
        const std::size_t w = i;
        while (i < chunk.size() && !text::is_space(chunk[i])) {
            if (!is_name_char(chunk[i]) && chunk[i] != U'.') return false;
            ++i;
        }
        if (i == w) break;
        const auto word = chunk.substr(w, i - w);
        if (text::is_upper(word.front())) {
            last_capitalized = true;
        } else if (!is_particle(word)) {
            return false;
        } else {
            last_capitalized = false;
        }
    }
    return last_capitalized;
}

// Cuts "Smith et al." / "Smith and Doe" / "Smith & Doe" / "Smith, Doe" to the first author.
std::u32string_view first_author_chunk(std::u32string_view authors) {
    std::size_t cut = authors.size();
    for (std::u32string_view sep : {std::u32string_view(U" et al"), std::u32string_view(U" and "),
                                    std::u32string_view(U" & "), std::u32string_view(U","),
                                    std::u32string_view(U"&")}) {
        const auto pos = authors.find(sep);
        if (pos != std::u32string_view::npos) cut = std::min(cut, pos);
    }
    return text::trim(authors.substr(0, cut));
}

bool authors_charset_ok(std::u32string_view a) {
    for (char32_t c : a) {
        if (!(is_name_char(c) || text::is_space(c) || c == U'.' || c == U'&' || c == U',')) {
            return false;
        }
    }
    return true;
}

// Parses years after the first one: ", 2020b, 2021" and an optional locator.
// Returns false on trailing garbage.
bool parse_year_tail(std::u32string_view s, std::size_t i, std::size_t e,
                     std::vector<YearToken>& years) {
    while (true) {
        skip_spaces(s, i, e);
        if (i == e) return true;
        if (s[i] != U',') return false;
        ++i;
        skip_spaces(s, i, e);
        if (auto y = detail::year_at(s.substr(0, e), i)) {
            years.push_back(*y);
            i = y->end;
            continue;
        }
        for (auto loc : kLocators) {
            if (starts_with_ci(s, i, loc)) return true;
        }
        return false;
    }
}

std::optional<std::vector<KeyedSpan>> parse_author_year_item(std::u32string_view s, std::size_t b,
                                                             std::size_t e) {
    while (b < e && text::is_space(s[b])) ++b;
    while (e > b && text::is_space(s[e - 1])) --e;
    if (b == e) return std::nullopt;
    const std::size_t item_begin = b;
    for (int round = 0; round < 2; ++round) {
        for (auto prefix : kItemPrefixes) {
            if (starts_with_ci(s, b, prefix) && b + prefix.size() < e &&
                text::is_space(s[b + prefix.size()])) {
                b += prefix.size();
                skip_spaces(s, b, e);
                break;
            }
        }
    }
    const auto body = s.substr(0, e);
    auto first_year = detail::find_year(body, b);
    if (!first_year) return std::nullopt;

    auto authors = text::trim(s.substr(b, first_year->begin - b));
    while (!authors.empty() && (authors.back() == U',' || text::is_space(authors.back()))) {
        authors.remove_suffix(1);
    }
    if (authors.empty() || !authors_charset_ok(authors)) return std::nullopt;
    const auto first = first_author_chunk(authors);
    if (!looks_like_name(first)) return std::nullopt;
    const auto surname = text::surname_key(first);
    if (surname.empty()) return std::nullopt;

    std::vector<YearToken> years{*first_year};
    if (!parse_year_tail(s, first_year->end, e, years)) return std::nullopt;

    std::vector<KeyedSpan> keys;
    for (const auto& y : years) {
        keys.push_back({surname + std::to_string(y.year) + y.suffix, {item_begin, e}});
    }
    return keys;
}

// "2020" / "2019a, 2020" with nothing else inside the parentheses.
std::optional<std::vector<YearToken>> parse_years_only(std::u32string_view s, std::size_t b,
                                                       std::size_t e) {
    std::vector<YearToken> years;
    std::size_t i = b;
    const auto body = s.substr(0, e);
    while (true) {
        skip_spaces(s, i, e);
        auto y = detail::year_at(body, i);
        if (!y) return std::nullopt;
        years.push_back(*y);
        i = y->end;
        skip_spaces(s, i, e);
        if (i == e) return years;
        if (s[i] != U',' && s[i] != U';') return std::nullopt;
        ++i;
    }
}

std::u32string_view word_ending_at(std::u32string_view s, std::size_t end, std::size_t& begin) {
    begin = end;
    while (begin > 0 && is_name_char(s[begin - 1])) --begin;
    return s.substr(begin, end - begin);
}

// Start of a capitalized surname (with lowercase particles) ending at `end`.
std::optional<std::size_t> name_start_before(std::u32string_view s, std::size_t end) {
    std::size_t begin = 0;
    const auto word = word_ending_at(s, end, begin);
    if (word.empty() || !text::is_upper(word.front())) return std::nullopt;
    if (word.size() > 2 && word.back() == U's' &&
        (word[word.size() - 2] == U'\'' || word[word.size() - 2] == 0x2019)) {
        return std::nullopt;
    }
    if (begin > 0 && (text::is_alnum(s[begin - 1]) || s[begin - 1] == U'.')) return std::nullopt;
    if (std::find(kNotNames.begin(), kNotNames.end(), word) != kNotNames.end()) return std::nullopt;
    std::size_t start = begin;
    while (true) {
        std::size_t p = start;
        while (p > 0 && text::is_space(s[p - 1])) --p;
        if (p == start) break;
        std::size_t wb = 0;
        const auto prev = word_ending_at(s, p, wb);
        if (prev.empty() || !is_particle(prev)) break;
        start = wb;
    }
    return start;
}

bool ends_with_word(std::u32string_view s, std::size_t end, std::u32string_view word,
                    std::size_t& word_begin) {
    if (end < word.size()) return false;
    word_begin = end - word.size();
    if (s.substr(word_begin, word.size()) != word) return false;
    return word_begin == 0 || !text::is_alnum(s[word_begin - 1]);
}

struct NarrativeHead {
    std::size_t begin;
    std::string surname;
};

// Locates "Smith", "Smith et al.", "Smith and Doe" immediately before `paren`.
std::optional<NarrativeHead> narrative_head(std::u32string_view s, std::size_t paren) {
    std::size_t e = paren;
    while (e > 0 && text::is_space(s[e - 1])) --e;
    if (e == 0) return std::nullopt;

    std::size_t wb = 0;
    std::size_t name_end = 0;
    bool et_al = false;
    if (ends_with_word(s, e, U"al.", wb) || ends_with_word(s, e, U"al", wb)) {
        std::size_t p = wb;
        while (p > 0 && text::is_space(s[p - 1])) --p;
        std::size_t eb = 0;
        if (p < wb && ends_with_word(s, p, U"et", eb)) {
            name_end = eb;
            while (name_end > 0 && text::is_space(s[name_end - 1])) --name_end;
            et_al = true;
        }
    }
    if (!et_al) name_end = e;

    auto last_start = name_start_before(s, name_end);
    if (!last_start) return std::nullopt;
    std::size_t first_start = *last_start;
    std::size_t first_end = name_end;

    if (!et_al) {
        std::size_t p = *last_start;
        while (p > 0 && text::is_space(s[p - 1])) --p;
        std::size_t cb = 0;
        if (p < *last_start &&
            (ends_with_word(s, p, U"and", cb) || (p > 0 && s[p - 1] == U'&' && (cb = p - 1, true)))) {
            std::size_t q = cb;
            while (q > 0 && text::is_space(s[q - 1])) --q;
            if (q < cb) {
                if (auto other = name_start_before(s, q)) {
                    first_start = *other;
                    first_end = q;
                }
            }
        }
    }
    auto surname = text::surname_key(s.substr(first_start, first_end - first_start));
    if (surname.empty()) return std::nullopt;
    return NarrativeHead{first_start, std::move(surname)};
}

bool has_year(std::u32string_view s, std::size_t b, std::size_t e) {
    return detail::find_year(s.substr(0, e), b).has_value();
}

CitationMarker make_marker(std::u32string_view s, std::size_t section, Span span,
                           std::vector<KeyedSpan> keyed) {
    CitationMarker m;
    m.section_index = section;
    m.span = span;
    m.raw_text = text::to_utf8(s.substr(span.begin, span.size()));
    for (auto& k : keyed) {
        if (std::find(m.keys.begin(), m.keys.end(), k.key) != m.keys.end()) continue;
        m.keys.push_back(std::move(k.key));
        m.key_spans.push_back(k.span);
    }
    return m;
}

Detection detect_numeric(std::u32string_view s, std::size_t section) {
    Detection out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != U'[') continue;
        std::size_t j = i + 1;
        while (j < s.size() && j - i <= kMaxBracketLength && s[j] != U']' && s[j] != U'[') ++j;
        if (j >= s.size() || s[j] != U']') continue;
        if (auto keys = parse_numeric_list(s, i + 1, j)) {
            out.markers.push_back(make_marker(s, section, {i, j + 1}, std::move(*keys)));
        } else {
            ++out.skipped;
        }
        i = j;
    }
    return out;
}

Detection detect_author_year(std::u32string_view s, std::size_t section) {
    Detection out;
    std::size_t last_end = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != U'(') continue;
        std::size_t j = i + 1;
        while (j < s.size() && j - i <= kMaxParenLength && s[j] != U')' && s[j] != U'(') ++j;
        if (j >= s.size() || s[j] != U')') continue;

        if (auto years = parse_years_only(s, i + 1, j)) {
            auto head = narrative_head(s, i);
            if (head && head->begin >= last_end) {
                std::vector<KeyedSpan> keyed;
                for (const auto& y : *years) {
                    keyed.push_back({head->surname + std::to_string(y.year) + y.suffix,
                                     {head->begin, j + 1}});
                }
                out.markers.push_back(make_marker(s, section, {head->begin, j + 1}, std::move(keyed)));
                last_end = j + 1;
            } else {
                ++out.skipped;
            }
            i = j;
            continue;
        }

        std::vector<KeyedSpan> keyed;
        std::size_t item_begin = i + 1;
        for (std::size_t k = i + 1; k <= j; ++k) {
            if (k == j || s[k] == U';') {
                if (auto item = parse_author_year_item(s, item_begin, k)) {
                    for (auto& key : *item) keyed.push_back(std::move(key));
                }
                item_begin = k + 1;
            }
        }
        if (!keyed.empty()) {
            out.markers.push_back(make_marker(s, section, {i, j + 1}, std::move(keyed)));
            last_end = j + 1;
        } else if (has_year(s, i + 1, j)) {
            ++out.skipped;
        }
        i = j;
    }
    return out;
}

void assign_ids(Detection& d, std::size_t section) {
    for (std::size_t n = 0; n < d.markers.size(); ++n) {
        d.markers[n].marker_id = "m" + std::to_string(section) + "." + std::to_string(n);
    }
}

}  // namespace

Detection detect_markers(std::string_view body, Style style, std::size_t section_index) {
    const auto s = text::to_u32(body);
    Detection result;
    switch (style) {
        case Style::numeric:
            result = detect_numeric(s, section_index);
            break;
        case Style::author_year:
            result = detect_author_year(s, section_index);
            break;
        case Style::auto_detect: {
            auto numeric = detect_numeric(s, section_index);
            auto author_year = detect_author_year(s, section_index);
            result = author_year.markers.size() > numeric.markers.size() ? std::move(author_year)
                                                                         : std::move(numeric);
            break;
        }
    }
    assign_ids(result, section_index);
    return result;
}

}  // namespace citelens::citeparse
