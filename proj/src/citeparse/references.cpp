#include <algorithm>
#include <set>

#include "citelens/citeparse.hpp"
#include "citelens/error.hpp"
#include "citelens/text.hpp"
#include "internal.hpp"

namespace citelens::citeparse {

namespace {

struct Chunk {
    std::string key;  // numeric key, empty for author-year chunks
    std::u32string text;
};

std::vector<std::u32string_view> split_lines(std::u32string_view s) {
    std::vector<std::u32string_view> lines;
    std::size_t b = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == U'\n') {
            auto line = s.substr(b, i - b);
            if (!line.empty() && line.back() == U'\r') line.remove_suffix(1);
            lines.push_back(line);
            b = i + 1;
        }
    }
    return lines;
}

// Position of a leading "[n]" token on a line, if any.
std::optional<std::pair<std::string, std::size_t>> leading_numeric_token(std::u32string_view line) {
    std::size_t i = 0;
    while (i < line.size() && text::is_space(line[i])) ++i;
    if (i >= line.size() || line[i] != U'[') return std::nullopt;
    std::size_t j = i + 1;
    long value = 0;
    while (j < line.size() && text::is_digit(line[j]) && j - i <= 5) {
        value = value * 10 + static_cast<long>(line[j] - U'0');
        ++j;
    }
    if (j == i + 1 || j >= line.size() || line[j] != U']' || value < 1) return std::nullopt;
    return std::make_pair(std::to_string(value), j + 1);
}

std::vector<Chunk> numeric_chunks(const std::vector<std::u32string_view>& lines) {
    std::vector<Chunk> chunks;
    for (auto line : lines) {
        if (auto tok = leading_numeric_token(line)) {
            chunks.push_back({tok->first, std::u32string(line.substr(tok->second))});
        } else if (!chunks.empty()) {
            chunks.back().text.push_back(U' ');
            chunks.back().text.append(line);
        }
    }
    return chunks;
}

bool is_blank(std::u32string_view line) { return text::trim(line).empty(); }

std::vector<Chunk> author_year_chunks(const std::vector<std::u32string_view>& lines) {
    std::vector<Chunk> chunks;
    // Only blank lines between entries count as separators.
    bool has_blank_lines = false;
    bool seen_text = false;
    bool gap = false;
    for (auto line : lines) {
        if (is_blank(line)) {
            gap = seen_text;
        } else {
            if (gap) has_blank_lines = true;
            seen_text = true;
        }
    }
    bool open = false;
    for (auto line : lines) {
        if (is_blank(line)) {
            open = false;
            continue;
        }
        const bool indented = text::is_space(line.front());
        const bool starts_entry = has_blank_lines ? !open : !indented || chunks.empty();
        if (starts_entry) {
            chunks.push_back({{}, std::u32string(line)});
            open = true;
        } else {
            chunks.back().text.push_back(U' ');
            chunks.back().text.append(line);
        }
    }
    return chunks;
}

bool is_sentence_end(std::u32string_view s, std::size_t i) {
    const char32_t c = s[i];
    if (c != U'.' && c != U'?' && c != U'!') return false;
    if (i + 1 < s.size() && !text::is_space(s[i + 1])) return false;
    if (c == U'.' && detail::is_abbreviation_dot(s, i)) return false;
    return true;
}

// First sentence-like segment of `s`; '?' and '!' stay in the segment.
std::u32string_view first_segment(std::u32string_view s, std::size_t& consumed) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (is_sentence_end(s, i)) {
            consumed = i + 1;
            return s.substr(0, s[i] == U'.' ? i : i + 1);
        }
    }
    consumed = s.size();
    return s;
}

std::u32string_view strip_edges(std::u32string_view s) {
    auto junk = [](char32_t c) {
        return text::is_space(c) || c == U',' || c == U'.' || c == U';' || c == U':';
    };
    while (!s.empty() && junk(s.front())) s.remove_prefix(1);
    while (!s.empty() && junk(s.back())) s.remove_suffix(1);
    return s;
}

// End of the author list: the first '.' closing a token of two or more
// alphanumerics ("Author." / "al." / "2019."), so initials are skipped.
std::optional<std::size_t> author_list_end(std::u32string_view s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != U'.') continue;
        if (i + 1 < s.size() && !text::is_space(s[i + 1])) continue;
        std::size_t b = i;
        while (b > 0 && text::is_alnum(s[b - 1])) --b;
        if (i - b >= 2) return i;
    }
    return std::nullopt;
}

struct Split {
    std::u32string_view authors;
    std::u32string_view title;
};

Split split_authors_title(std::u32string_view s, const std::optional<detail::YearToken>& year) {
    // Quoted titles: A. Author, "Great title," in Proc. ...
    for (auto [open, close] : {std::pair<char32_t, char32_t>{0x201C, 0x201D},
                               std::pair<char32_t, char32_t>{U'"', U'"'}}) {
        const auto q1 = s.find(open);
        if (q1 == std::u32string_view::npos) continue;
        const auto q2 = s.find(close, q1 + 1);
        if (q2 == std::u32string_view::npos) continue;
        return {s.substr(0, q1), strip_edges(s.substr(q1 + 1, q2 - q1 - 1))};
    }
    // Parenthesized year: Doe, J. (2019). Title. Venue.
    if (year && year->begin > 0 && s[year->begin - 1] == U'(' && year->end < s.size() &&
        s[year->end] == U')') {
        auto rest = s.substr(year->end + 1);
        while (!rest.empty() && (text::is_space(rest.front()) || rest.front() == U'.' ||
                                 rest.front() == U',')) {
            rest.remove_prefix(1);
        }
        std::size_t used = 0;
        return {s.substr(0, year->begin - 1), strip_edges(first_segment(rest, used))};
    }
    if (auto end = author_list_end(s)) {
        auto rest = s.substr(*end + 1);
        while (!rest.empty() && text::is_space(rest.front())) rest.remove_prefix(1);
        // Harvard style puts the year right after the authors: "Doe, J. 2019. Title."
        if (auto y = detail::year_at(rest, 0); y && y->end < rest.size() && rest[y->end] == U'.') {
            rest.remove_prefix(y->end + 1);
            while (!rest.empty() && text::is_space(rest.front())) rest.remove_prefix(1);
        }
        std::size_t used = 0;
        return {s.substr(0, *end + 1), strip_edges(first_segment(rest, used))};
    }
    return {{}, strip_edges(s)};
}

bool is_initials_chunk(std::u32string_view chunk) {
    chunk = text::trim(chunk);
    if (chunk.empty()) return false;
    std::size_t i = 0;
    while (i < chunk.size()) {
        while (i < chunk.size() && text::is_space(chunk[i])) ++i;
        const std::size_t b = i;
        while (i < chunk.size() && !text::is_space(chunk[i])) ++i;
        if (i == b) break;
        auto w = chunk.substr(b, i - b);
        if (!w.empty() && w.back() == U'.') w.remove_suffix(1);
        if (!detail::is_initial_token(w)) return false;
    }
    return true;
}

std::vector<std::u32string> split_authors(std::u32string_view authors) {
    std::u32string a = detail::collapse_whitespace(authors);
    // Drop a trailing year that Harvard-style splitting left in the author list.
    if (auto y = detail::find_year(a)) {
        a.erase(y->begin);
    }
    std::vector<std::u32string> parts;
    std::u32string current;
    auto flush = [&] {
        auto t = strip_edges(current);
        std::u32string piece(t);
        for (std::u32string_view lead : {std::u32string_view(U"and "), std::u32string_view(U"& ")}) {
            if (piece.starts_with(lead)) piece.erase(0, lead.size());
        }
        piece = std::u32string(strip_edges(piece));
        current.clear();
        if (piece.empty() || piece == U"et al" || piece == U"et al.") return;
        if (!parts.empty() && is_initials_chunk(piece)) {
            parts.back() += U", " + piece + U".";
            return;
        }
        parts.push_back(piece);
    };
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == U',' || a[i] == U';' || a[i] == U'&') {
            flush();
        } else if (a.compare(i, 5, U" and ") == 0) {
            flush();
            i += 3;
        } else if (a.compare(i, 7, U" et al.") == 0 || a.compare(i, 6, U" et al") == 0) {
            flush();
            break;
        } else {
            current.push_back(a[i]);
        }
    }
    flush();
    for (auto& p : parts) {
        // "Smith, J.." from the initials merge.
        while (p.ends_with(U"..")) p.pop_back();
    }
    return parts;
}

// "Smith, J." -> Smith; "A. Author" -> Author; "J. van der Berg" -> van der Berg;
// "Smith JK" -> Smith.
std::string first_author_key(const std::u32string& author) {
    const auto comma = author.find(U',');
    if (comma != std::u32string::npos) return text::surname_key(author.substr(0, comma));
    std::vector<std::u32string_view> words;
    std::u32string_view v(author);
    std::size_t i = 0;
    while (i < v.size()) {
        while (i < v.size() && text::is_space(v[i])) ++i;
        const std::size_t b = i;
        while (i < v.size() && !text::is_space(v[i])) ++i;
        if (i > b) words.push_back(v.substr(b, i - b));
    }
    std::u32string kept;
    for (auto w : words) {
        auto core = w;
        if (!core.empty() && core.back() == U'.') core.remove_suffix(1);
        if (detail::is_initial_token(core)) continue;
        kept += w;
    }
    return text::surname_key(kept);
}

ReferenceEntry build_entry(const Chunk& chunk) {
    ReferenceEntry e;
    const auto body = detail::collapse_whitespace(chunk.text);
    e.raw_text = text::to_utf8(body);
    const auto year = detail::find_year(body);
    if (year) {
        e.year_guess = year->year;
        e.year_suffix = year->suffix;
    }
    const auto split = split_authors_title(body, year);
    e.title_guess = text::to_utf8(split.title);
    if (e.title_guess.empty()) e.title_guess = text::to_utf8(strip_edges(body));
    for (const auto& a : split_authors(split.authors)) e.authors_guess.push_back(text::to_utf8(a));
    if (!e.authors_guess.empty()) {
        e.first_author_key = first_author_key(text::to_u32(e.authors_guess.front()));
    }
    if (!chunk.key.empty()) {
        e.entry_key = chunk.key;
    } else {
        e.entry_key = e.first_author_key + (year ? std::to_string(year->year) + year->suffix : "");
    }
    return e;
}

}  // namespace

std::vector<ReferenceEntry> parse_reference_section(std::string_view block) {
    const auto s = text::to_u32(block);
    if (text::trim(std::u32string_view(s)).empty()) {
        throw Error(ErrorKind::malformed_references, "reference block is empty");
    }
    const auto lines = split_lines(s);
    auto chunks = numeric_chunks(lines);
    const bool numeric = !chunks.empty();
    if (!numeric) chunks = author_year_chunks(lines);

    std::vector<ReferenceEntry> entries;
    std::set<std::string> seen;
    for (const auto& chunk : chunks) {
        if (text::trim(std::u32string_view(chunk.text)).empty()) continue;
        auto entry = build_entry(chunk);
        if (!numeric && (!entry.year_guess || entry.first_author_key.empty())) continue;
        if (!seen.insert(entry.entry_key).second) {
            // Duplicate author-year keys stay distinct entries; linking treats
            // them as ambiguous.
            int n = 2;
            while (!seen.insert(entry.entry_key + "#" + std::to_string(n)).second) ++n;
            entry.entry_key += "#" + std::to_string(n);
        }
        entries.push_back(std::move(entry));
    }
    if (entries.empty()) {
        throw Error(ErrorKind::malformed_references, "no reference entry delimiter found");
    }
    return entries;
}

}  // namespace citelens::citeparse
