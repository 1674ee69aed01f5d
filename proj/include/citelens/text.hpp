#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace citelens::text {

/// Decodes UTF-8 into Unicode scalars. Invalid sequences decode to U+FFFD.
std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

bool is_space(char32_t c) noexcept;
bool is_digit(char32_t c) noexcept;
bool is_upper(char32_t c) noexcept;
bool is_lower(char32_t c) noexcept;
bool is_alpha(char32_t c) noexcept;
bool is_alnum(char32_t c) noexcept;
bool is_dash(char32_t c) noexcept;

/// Lowercase with Latin diacritics removed ("É" -> "e", "ß" -> "ss").
/// Code points outside the Latin blocks pass through unchanged.
std::u32string fold(char32_t c);
std::u32string fold(std::u32string_view s);

std::u32string_view trim(std::u32string_view s) noexcept;
std::string_view trim(std::string_view s) noexcept;

/// Lowercase alphanumeric tokens of a UTF-8 string (folded).
std::vector<std::string> word_tokens(std::string_view utf8);

/// Folded letters only, e.g. "van der Berg" -> "vanderberg".
std::string surname_key(std::u32string_view name);

/// Hex digest of `bytes`. Algorithm name is available via digest_algorithm().
std::string content_digest(std::string_view bytes);
constexpr std::string_view digest_algorithm() noexcept { return "sha1"; }

}  // namespace citelens::text
