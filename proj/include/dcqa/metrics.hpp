#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dcqa {

/// SQuAD-style: lowercase, strip ASCII punctuation, drop the articles
/// a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view s);

/// Token-level F1 between two single answers after normalization.
double token_f1(std::string_view pred, std::string_view gold);

using AnswerList = std::vector<std::string>;

/// 1 when the normalized prediction equals some gold variant as a multiset.
int exact_match(const AnswerList& pred, const std::vector<AnswerList>& gold_variants);

/// List-aligned F1: items are matched one-to-one greedily by descending
/// per-item F1, the matched scores are summed and divided by
/// max(|pred|, |gold|). Maximum over gold variants. Empty pred scores 0.
double list_f1(const AnswerList& pred, const std::vector<AnswerList>& gold_variants);

}  // namespace dcqa
