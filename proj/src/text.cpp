#include "citelens/text.hpp"

#include <array>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "citelens/error.hpp"

namespace citelens::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Base letters for U+00C0..U+00FF; '\0' marks non-letters (x and division sign).
constexpr std::array<const char*, 64> kLatin1 = {
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "ss",
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "y",
};

struct Run {
    int count;
    const char* base;
};

// Latin Extended-A (U+0100..U+017F) as runs of code points sharing a base letter.
constexpr std::array<Run, 22> kLatinExtA = {{
    {6, "a"}, {8, "c"}, {4, "d"}, {10, "e"}, {8, "g"}, {4, "h"}, {10, "i"}, {2, "ij"},
    {2, "j"}, {3, "k"}, {10, "l"}, {9, "n"}, {6, "o"}, {2, "oe"}, {6, "r"}, {8, "s"},
    {6, "t"}, {12, "u"}, {2, "w"}, {3, "y"}, {6, "z"}, {1, "s"},
}};

const char* latin_ext_a_base(char32_t c) {
    int offset = static_cast<int>(c - 0x100);
    for (const auto& run : kLatinExtA) {
        if (offset < run.count) return run.base;
        offset -= run.count;
    }
    return nullptr;
}

}  // namespace

std::u32string to_u32(std::string_view utf8) {
    std::u32string out;
    out.reserve(utf8.size());
    std::size_t i = 0;
    const auto n = utf8.size();
    while (i < n) {
        const auto b0 = static_cast<unsigned char>(utf8[i]);
        int len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > n) {
            out.push_back(kReplacement);
            break;
        }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(utf8[i + k]);
            if ((b & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                              (len == 4 && cp < 0x10000);
        if (!ok || overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string to_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t c : text) {
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else if (c < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        } else if (c < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (c >> 12)));
            out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (c >> 18)));
            out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

bool is_space(char32_t c) noexcept {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
           c == 0xA0 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 ||
           c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_digit(char32_t c) noexcept { return c >= U'0' && c <= U'9'; }

bool is_upper(char32_t c) noexcept {
    if (c < 0x80) return c >= U'A' && c <= U'Z';
    if (c >= 0xC0 && c <= 0xDE) return c != 0xD7;
    if (c >= 0x100 && c <= 0x137) return c % 2 == 0;
    if (c >= 0x139 && c <= 0x148) return c % 2 == 1;
    if (c >= 0x14A && c <= 0x177) return c % 2 == 0;
    if (c == 0x178 || c == 0x179 || c == 0x17B || c == 0x17D) return true;
    if (c >= 0x391 && c <= 0x3A9) return true;
    if (c >= 0x410 && c <= 0x42F) return true;
    return false;
}

bool is_alpha(char32_t c) noexcept {
    if (c < 0x80) return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    if (c < 0xC0) return false;
    if (c == 0xD7 || c == 0xF7) return false;
    if (is_space(c)) return false;
    if (c >= 0x2000 && c <= 0x2BFF) return false;
    if (c >= 0x3000 && c <= 0x303F) return false;
    if (c >= 0xFE30 && c <= 0xFE4F) return false;
    if (c >= 0xFF00 && c <= 0xFF0F) return false;
    if (c == kReplacement) return false;
    return true;
}

bool is_lower(char32_t c) noexcept { return is_alpha(c) && !is_upper(c); }

bool is_alnum(char32_t c) noexcept { return is_digit(c) || is_alpha(c); }

bool is_dash(char32_t c) noexcept {
    return c == U'-' || c == 0x2010 || c == 0x2011 || c == 0x2012 || c == 0x2013;
}

std::u32string fold(char32_t c) {
    if (c < 0x80) {
        if (c >= U'A' && c <= U'Z') return std::u32string(1, c - U'A' + U'a');
        return std::u32string(1, c);
    }
    const char* base = nullptr;
    if (c >= 0xC0 && c <= 0xFF) {
        base = kLatin1[c - 0xC0];
        if (*base == '\0') return std::u32string(1, c);
    } else if (c >= 0x100 && c <= 0x17F) {
        base = latin_ext_a_base(c);
    } else if (c >= 0x391 && c <= 0x3A9) {
        return std::u32string(1, c + 0x20);
    } else if (c >= 0x410 && c <= 0x42F) {
        return std::u32string(1, c + 0x20);
    }
    if (base == nullptr) return std::u32string(1, c);
    std::u32string out;
    for (const char* p = base; *p != '\0'; ++p) out.push_back(static_cast<char32_t>(*p));
    return out;
}

std::u32string fold(std::u32string_view s) {
    std::u32string out;
    out.reserve(s.size());
    for (char32_t c : s) out += fold(c);
    return out;
}

std::u32string_view trim(std::u32string_view s) noexcept {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::string_view trim(std::string_view s) noexcept {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && ws(s[b])) ++b;
    while (e > b && ws(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> word_tokens(std::string_view utf8) {
    std::vector<std::string> tokens;
    std::u32string current;
    for (char32_t c : fold(to_u32(utf8))) {
        if (is_alnum(c)) {
            current.push_back(c);
        } else if (!current.empty()) {
            tokens.push_back(to_utf8(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(to_utf8(current));
    return tokens;
}

std::string surname_key(std::u32string_view name) {
    std::u32string out;
    for (char32_t c : fold(name)) {
        if (is_alpha(c)) out.push_back(c);
    }
    return to_utf8(out);
}

std::string content_digest(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha1(), nullptr) != 1) {
        throw Error(ErrorKind::io, "digest computation failed");
    }
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(md[i]);
    return out.str();
}

}  // namespace citelens::text
