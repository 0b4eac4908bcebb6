#include "dcqa/metrics.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace dcqa {

namespace {

bool is_ascii_punct(unsigned char c) {
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double f1_tokens(const std::vector<std::string>& p, const std::vector<std::string>& g) {
    if (p.empty() || g.empty()) return p == g ? 1.0 : 0.0;
    std::map<std::string_view, int> counts;
    for (const auto& t : g) ++counts[t];
    int same = 0;
    for (const auto& t : p) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++same;
        }
    }
    if (same == 0) return 0.0;
    double precision = static_cast<double>(same) / static_cast<double>(p.size());
    double recall = static_cast<double>(same) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

double aligned_f1(const AnswerList& pred, const AnswerList& gold) {
    std::vector<std::vector<std::string>> ptoks, gtoks;
    for (const auto& p : pred) ptoks.push_back(split_ws(normalize_answer(p)));
    for (const auto& g : gold) gtoks.push_back(split_ws(normalize_answer(g)));

    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < ptoks.size(); ++i)
        for (std::size_t j = 0; j < gtoks.size(); ++j) pairs.emplace_back(f1_tokens(ptoks[i], gtoks[j]), i, j);
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });

    std::vector<bool> pred_used(pred.size()), gold_used(gold.size());
    double total = 0.0;
    for (const auto& [score, i, j] : pairs) {
        if (pred_used[i] || gold_used[j]) continue;
        pred_used[i] = gold_used[j] = true;
        total += score;
    }
    return total / static_cast<double>(std::max(pred.size(), gold.size()));
}

}  // namespace

std::string normalize_answer(std::string_view s) {
    std::string lowered;
    lowered.reserve(s.size());
    for (unsigned char c : s) {
        if (is_ascii_punct(c)) continue;
        lowered += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    }
    std::string out;
    for (const auto& w : split_ws(lowered)) {
        if (w == "a" || w == "an" || w == "the") continue;
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

double token_f1(std::string_view pred, std::string_view gold) {
    return f1_tokens(split_ws(normalize_answer(pred)), split_ws(normalize_answer(gold)));
}

int exact_match(const AnswerList& pred, const std::vector<AnswerList>& gold_variants) {
    if (pred.empty()) return 0;
    std::vector<std::string> p;
    for (const auto& x : pred) p.push_back(normalize_answer(x));
    std::sort(p.begin(), p.end());
    for (const auto& variant : gold_variants) {
        std::vector<std::string> g;
        for (const auto& x : variant) g.push_back(normalize_answer(x));
        std::sort(g.begin(), g.end());
        if (g == p) return 1;
    }
    return 0;
}

double list_f1(const AnswerList& pred, const std::vector<AnswerList>& gold_variants) {
    if (pred.empty()) return 0.0;
    double best = 0.0;
    for (const auto& variant : gold_variants) {
        if (variant.empty()) continue;
        best = std::max(best, aligned_f1(pred, variant));
    }
    return best;
}

}  // namespace dcqa
