#include "dcqa/text_util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

namespace dcqa::text {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool is_word(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

std::string stem(std::string w) {
    if (w.size() > 4 && w.ends_with("ies")) {
        w.resize(w.size() - 3);
        w += 'y';
    } else if (w.size() > 4 && (w.ends_with("ches") || w.ends_with("shes") || w.ends_with("xes"))) {
        w.resize(w.size() - 2);
    } else if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's' && w[w.size() - 2] != 'u' &&
               w[w.size() - 2] != 'i') {
        w.pop_back();
    }
    return w;
}

constexpr std::array<std::string_view, 64> kStopwords = {
    "a",     "an",    "the",   "of",   "in",   "on",    "at",    "to",    "for",   "by",
    "with",  "from",  "and",   "or",   "is",   "are",   "was",   "were",  "be",    "been",
    "do",    "did",   "does",  "what", "which", "who",  "whom",  "whose", "when",  "where",
    "why",   "how",   "that",  "this", "these", "those", "it",   "its",   "as",    "has",
    "have",  "had",   "many",  "much", "there", "their", "they", "them",  "he",    "she",
    "his",   "her",   "i",     "you",  "we",   "me",    "my",    "can",   "into",  "about",
    "also",  "than",  "any",   "all"};

}  // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = lower(c);
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    for (char c : s) {
        if (is_space(c)) {
            pending = true;
            continue;
        }
        if (pending && !out.empty()) out += ' ';
        pending = false;
        out += c;
    }
    return out;
}

std::size_t find_ci(std::string_view h, std::string_view n, std::size_t from) {
    if (n.size() > h.size()) return std::string_view::npos;
    for (std::size_t i = from; i + n.size() <= h.size(); ++i) {
        std::size_t j = 0;
        while (j < n.size() && lower(h[i + j]) == lower(n[j])) ++j;
        if (j == n.size()) return i;
    }
    return std::string_view::npos;
}

std::size_t rfind_ci(std::string_view h, std::string_view n) {
    if (n.size() > h.size()) return std::string_view::npos;
    for (std::size_t i = h.size() - n.size() + 1; i-- > 0;) {
        std::size_t j = 0;
        while (j < n.size() && lower(h[i + j]) == lower(n[j])) ++j;
        if (j == n.size()) return i;
    }
    return std::string_view::npos;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && find_ci(a, b) == 0;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_word(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_word(s[j])) ++j;
        auto low = to_lower(s.substr(i, j - i));
        bool stop = is_stopword(low);
        out.push_back(Token{stem(std::move(low)), i, j, stop});
        i = j;
    }
    return out;
}

std::vector<std::string> token_terms(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : tokenize(s)) out.push_back(std::move(t.norm));
    return out;
}

std::vector<std::string> content_terms(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : tokenize(s))
        if (!t.stop) out.push_back(std::move(t.norm));
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        if (!is_word(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_word(s[j])) ++j;
        out.push_back(to_lower(s.substr(i, j - i)));
        i = j;
    }
    return out;
}

bool is_stopword(std::string_view w) {
    return std::find(kStopwords.begin(), kStopwords.end(), w) != kStopwords.end();
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace dcqa::text
