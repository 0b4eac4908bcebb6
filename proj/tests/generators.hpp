#pragma once

// Seeded generators for property tests.

#include <array>
#include <string>
#include <vector>

#include "dcqa/protocol.hpp"
#include "dcqa/rng.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa::testkit {

inline const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = {
        "Which", "teams", "played", "the",    "Bears", "in",     "2017?", "What",  "is",     "capital",
        "of",    "E17",   "rel_color", "a",   "red",   "car",    "John's", "x-ray", "(note)", "[draft]",
        "42",    "3.5",   "Answer", "Tool",   "module", "from",   "So,",   "I",     "need",   "Persepolis.",
        "São",   "Paulo", "naïve",  "“quoted”", "…", "Tool:",  "=",  "answer"};
    return words;
}

inline std::string random_words(Rng& rng, std::size_t min_words, std::size_t max_words) {
    const auto& v = vocabulary();
    auto n = min_words + rng.below(max_words - min_words + 1);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(v[rng.below(v.size())]);
    return text::join(out, " ");
}

/// Canonical divider events: what the parser itself produces, so the round
/// trip must be exact.
inline DividerEvent random_divider(Rng& rng) {
    static const std::array<ToolKind, 4> tools = {ToolKind::Text, ToolKind::Table, ToolKind::Image, ToolKind::Search};
    auto rationale = random_words(rng, 0, 12);
    if (rng.below(2) == 0) {
        auto q = random_words(rng, 1, 10);
        return DividerEvent{rationale, SubQuestion{q, tools[rng.below(4)]}};
    }
    std::vector<std::string> items;
    auto n = 1 + rng.below(4);
    for (std::size_t i = 0; i < n; ++i) items.push_back(random_words(rng, 1, 3));
    auto raw = text::join(items, ", ");
    return DividerEvent{rationale, FinalAnswer{split_final_answer(raw), raw}};
}

/// Arbitrary bytes biased toward the grammar's own tokens.
inline std::string fuzz_input(Rng& rng) {
    static const std::array<std::string_view, 14> pieces = {
        "[Answer:", "]", "[", "Sub-question:", "(Tool=", "Text", ")", "(", "\n", " ",
        "Answer from the ", " Tool:", "NO_RESULT", "sub-QUESTION:"};
    std::string s;
    auto n = rng.below(24);
    for (std::size_t i = 0; i < n; ++i) {
        switch (rng.below(3)) {
            case 0: s += pieces[rng.below(pieces.size())]; break;
            case 1: s += static_cast<char>(rng.below(256)); break;
            default: s += random_words(rng, 1, 2); break;
        }
    }
    return s;
}

}  // namespace dcqa::testkit

namespace dcqa::testkit {

/// Reorders items and perturbs case and articles without changing the
/// normalized multiset.
inline void shuffle_case(Rng& rng, std::vector<std::string>& items) {
    rng.shuffle(items);
    for (auto& s : items) {
        if (rng.below(2)) s = "The " + s;
        for (auto& c : s)
            if (rng.below(2) && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
        if (rng.below(2)) s += ".";
    }
}

}  // namespace dcqa::testkit
