#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dcqa::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Replaces every run of whitespace (including newlines) with one space and trims.
std::string collapse_whitespace(std::string_view s);

/// Case-insensitive (ASCII) search. Returns npos when absent.
std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from = 0);
std::size_t rfind_ci(std::string_view haystack, std::string_view needle);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// A token with its byte span in the source string.
struct Token {
    std::string norm;  // lowercased, light-stemmed
    std::size_t begin;
    std::size_t end;
    bool stop;  // stopword, judged on the unstemmed form
};

/// Splits on anything that is not [A-Za-z0-9_]. Tokens are lowercased and
/// stripped of a plural "s"/"es" suffix so "teams" and "team" meet.
std::vector<Token> tokenize(std::string_view s);
std::vector<std::string> token_terms(std::string_view s);
/// Stemmed non-stopword terms in order of appearance.
std::vector<std::string> content_terms(std::string_view s);

/// Lowercased [A-Za-z0-9_] words, no stemming.
std::vector<std::string> word_tokens(std::string_view s);

bool is_stopword(std::string_view lowered);

/// 64-bit FNV-1a. Stable across processes and platforms.
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t mix(std::uint64_t a, std::uint64_t b);
std::string hex64(std::uint64_t v);

std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace dcqa::text
