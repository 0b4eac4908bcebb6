#include "dcqa/toolkit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dcqa/errors.hpp"
#include "dcqa/jsonl.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa {

namespace {

bool is_sentence_end(std::string_view s, std::size_t i) {
    char c = s[i];
    if (c == '\n') return true;
    if (c != '.' && c != '?' && c != '!') return false;
    return i + 1 >= s.size() || s[i + 1] == ' ' || s[i + 1] == '\n';
}

std::vector<std::string_view> sentences(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_sentence_end(s, i)) continue;
        auto piece = text::trim(s.substr(start, i + 1 - start));
        if (!piece.empty()) out.push_back(piece);
        start = i + 1;
    }
    auto tail = text::trim(s.substr(std::min(start, s.size())));
    if (!tail.empty()) out.push_back(tail);
    return out;
}

std::string truncate_utf8(std::string_view s, std::size_t max_chars) {
    if (s.size() <= max_chars) return std::string(s);
    std::size_t cut = max_chars;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return std::string(s.substr(0, cut));
}

// Shared by the text and caption tools.
// `prebuilt` indexes exactly `docs` when given.
ToolResponse lexical_answer(const std::vector<std::string>& docs, std::string_view question,
                            const LexicalOptions& opt, const Bm25Index* prebuilt) {
    if (docs.empty()) return ToolResponse::failure();
    auto terms = text::content_terms(question);
    if (terms.empty()) return ToolResponse::failure();
    std::optional<Bm25Index> local;
    if (!prebuilt) prebuilt = &local.emplace(docs, opt.k1, opt.b);
    auto ranked = prebuilt->rank(terms, opt.bigram_weight);
    if (ranked.empty() || ranked.front().score < opt.min_score) return ToolResponse::failure();
    const auto& best = docs[ranked.front().index];
    if (opt.mode == AnswerMode::Span)
        if (auto span = extract_span(best, question)) return ToolResponse::ok(*span);
    return ToolResponse::ok(truncate_utf8(text::collapse_whitespace(best), opt.max_chars));
}

}  // namespace

// ---------------------------------------------------------------- registry

ToolRegistry::ToolRegistry(std::shared_ptr<const ToolClient> text, std::shared_ptr<const ToolClient> table,
                           std::shared_ptr<const ToolClient> image, std::shared_ptr<const ToolClient> search)
    : clients_{std::move(text), std::move(table), std::move(image), std::move(search)} {
    for (std::size_t i = 0; i < clients_.size(); ++i)
        if (!clients_[i])
            throw InvalidInput("tool registry is missing a client for " +
                               std::string(tool_name(kAllToolKinds[i])));
}

ToolResponse dispatch(const ToolRegistry& registry, const ToolRequest& request) noexcept {
    try {
        if (text::trim(request.question).empty()) return ToolResponse::failure();
        auto r = registry.client(request.tool).answer(request);
        r.answer = text::collapse_whitespace(r.answer);
        if (r.failed || r.answer.empty() || r.answer == kNoResult) return ToolResponse::failure();
        if (r.confidence && !(*r.confidence >= 0.0 && *r.confidence <= 1.0)) r.confidence.reset();
        return r;
    } catch (...) {
        return ToolResponse::failure();
    }
}

// ---------------------------------------------------------------- BM25

Bm25Index::Bm25Index(const std::vector<std::string>& docs, double k1, double b) : k1_(k1), b_(b) {
    std::map<std::string, int> df;
    std::size_t total = 0;
    for (const auto& d : docs) {
        std::map<std::string, int> tf;
        auto terms = text::content_terms(d);
        for (auto& t : terms) ++tf[t];
        for (const auto& [t, _] : tf) ++df[t];
        std::set<std::pair<std::string, std::string>> pairs;
        for (std::size_t i = 0; i + 1 < terms.size(); ++i) pairs.emplace(terms[i], terms[i + 1]);
        len_.push_back(terms.size());
        total += terms.size();
        tf_.push_back(std::move(tf));
        bigrams_.push_back(std::move(pairs));
    }
    const double n = static_cast<double>(docs.size());
    avgdl_ = docs.empty() ? 0.0 : static_cast<double>(total) / n;
    for (const auto& [t, f] : df) idf_[t] = std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

std::vector<RankedPassage> Bm25Index::rank(const std::vector<std::string>& query_terms,
                                           double bigram_weight) const {
    std::set<std::string> unique(query_terms.begin(), query_terms.end());
    std::vector<RankedPassage> out;
    for (std::size_t i = 0; i < tf_.size(); ++i) {
        double score = 0.0;
        for (const auto& q : unique) {
            auto it = tf_[i].find(q);
            if (it == tf_[i].end()) continue;
            double f = it->second;
            double norm = avgdl_ > 0 ? static_cast<double>(len_[i]) / avgdl_ : 1.0;
            score += idf_.at(q) * f * (k1_ + 1.0) / (f + k1_ * (1.0 - b_ + b_ * norm));
        }
        if (score > 0.0 && bigram_weight > 0.0)
            for (std::size_t k = 0; k + 1 < query_terms.size(); ++k)
                if (bigrams_[i].count({query_terms[k], query_terms[k + 1]})) score += bigram_weight;
        out.push_back({i, score});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    return out;
}

// ---------------------------------------------------------------- span extraction

std::optional<std::string> extract_span(std::string_view passage, std::string_view question) {
    auto q = text::content_terms(question);
    std::set<std::string> query(q.begin(), q.end());
    if (query.empty()) return std::nullopt;

    std::string_view best;
    std::size_t best_hits = 0;
    for (auto s : sentences(passage)) {
        std::set<std::string> hit;
        for (const auto& t : text::tokenize(s))
            if (!t.stop && query.count(t.norm)) hit.insert(t.norm);
        if (hit.size() > best_hits) {
            best_hits = hit.size();
            best = s;
        }
    }
    if (best_hits == 0) return std::nullopt;

    auto toks = text::tokenize(best);
    std::vector<std::size_t> matched;
    for (std::size_t i = 0; i < toks.size(); ++i)
        if (!toks[i].stop && query.count(toks[i].norm)) matched.push_back(i);

    // [lo, hi) token range, trimmed of stopwords at both ends.
    auto phrase = [&](std::size_t lo, std::size_t hi) -> std::optional<std::string> {
        while (lo < hi && toks[lo].stop) ++lo;
        while (hi > lo && toks[hi - 1].stop) --hi;
        if (lo >= hi) return std::nullopt;
        return std::string(best.substr(toks[lo].begin, toks[hi - 1].end - toks[lo].begin));
    };

    if (auto after = phrase(matched.back() + 1, toks.size())) return after;
    if (auto before = phrase(0, matched.front())) return before;
    std::optional<std::string> widest;
    for (std::size_t k = 0; k + 1 < matched.size(); ++k) {
        auto gap = phrase(matched[k] + 1, matched[k + 1]);
        if (gap && (!widest || gap->size() > widest->size())) widest = gap;
    }
    return widest;
}

// ---------------------------------------------------------------- text / image

LexicalTextTool::LexicalTextTool(std::shared_ptr<const TextStore> store, LexicalOptions options)
    : store_(std::move(store)), options_(options) {
    if (!store_) throw InvalidInput("text tool needs a store");
    std::vector<std::string> docs;
    for (const auto& p : store_->items()) docs.push_back(p.text);
    global_ = std::make_shared<const Bm25Index>(docs, options_.k1, options_.b);
}

ToolResponse LexicalTextTool::answer(const ToolRequest& request) const {
    std::vector<std::string> docs;
    for (const auto* p : store_->scope(request.context_refs)) docs.push_back(p->text);
    return lexical_answer(docs, request.question, options_,
                          request.context_refs.empty() ? global_.get() : nullptr);
}

CaptionImageTool::CaptionImageTool(std::shared_ptr<const CaptionStore> store, LexicalOptions options)
    : store_(std::move(store)), options_(options) {
    if (!store_) throw InvalidInput("image tool needs a caption store");
    std::vector<std::string> docs;
    for (const auto& c : store_->items()) docs.push_back(c.caption);
    global_ = std::make_shared<const Bm25Index>(docs, options_.k1, options_.b);
}

ToolResponse CaptionImageTool::answer(const ToolRequest& request) const {
    std::vector<std::string> docs;
    for (const auto* c : store_->scope(request.context_refs)) docs.push_back(c->caption);
    return lexical_answer(docs, request.question, options_,
                          request.context_refs.empty() ? global_.get() : nullptr);
}

// ---------------------------------------------------------------- table

TableLookupTool::TableLookupTool(std::shared_ptr<const TableStore> store) : store_(std::move(store)) {
    if (!store_) throw InvalidInput("table tool needs a store");
}

ToolResponse TableLookupTool::answer(const ToolRequest& request) const {
    auto qv = text::content_terms(request.question);
    std::set<std::string> q(qv.begin(), qv.end());
    if (q.empty()) return ToolResponse::failure();

    auto mentions = [&](const std::string& cell) {
        auto terms = text::content_terms(cell);
        return !terms.empty() && std::all_of(terms.begin(), terms.end(), [&](auto& t) { return q.count(t) > 0; });
    };

    std::size_t best_score = 0;
    std::string best_answer;
    for (const auto* table : store_->scope(request.context_refs)) {
        // Header overlap dominates; distinct query terms matched by cells break ties.
        std::size_t header_overlap = 0;
        std::set<std::string> cell_terms;
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < table->header.size(); ++c) {
            std::size_t overlap = 0;
            for (const auto& t : text::content_terms(table->header[c])) overlap += q.count(t);
            if (overlap) {
                cols.push_back(c);
                header_overlap += overlap;
            }
        }
        auto is_target = [&](std::size_t c) { return std::find(cols.begin(), cols.end(), c) != cols.end(); };

        std::vector<std::size_t> rows;
        std::vector<std::vector<bool>> hit(table->rows.size());
        for (std::size_t r = 0; r < table->rows.size(); ++r) {
            const auto& row = table->rows[r];
            hit[r].assign(row.size(), false);
            bool any = false;
            for (std::size_t c = 0; c < row.size(); ++c) {
                if ((!cols.empty() && is_target(c)) || !mentions(row[c])) continue;
                hit[r][c] = true;
                any = true;
                for (auto& t : text::content_terms(row[c])) cell_terms.insert(std::move(t));
            }
            if (any) rows.push_back(r);
        }
        const std::size_t score = header_overlap * 1000 + cell_terms.size();
        if (score <= best_score) continue;

        std::vector<std::string> cells;
        auto cell = [&](std::size_t r, std::size_t c) {
            if (c < table->rows[r].size() && !text::trim(table->rows[r][c]).empty())
                cells.push_back(table->rows[r][c]);
        };
        if (!cols.empty()) {
            if (rows.empty())
                for (std::size_t r = 0; r < table->rows.size(); ++r)
                    for (auto c : cols) cell(r, c);
            else
                for (auto r : rows)
                    for (auto c : cols) cell(r, c);
        } else {
            for (auto r : rows)
                for (std::size_t c = 0; c < table->rows[r].size(); ++c)
                    if (!hit[r][c]) cell(r, c);
        }
        if (cells.empty()) continue;
        best_score = score;
        best_answer = text::join(cells, ", ");
    }
    if (best_score == 0) return ToolResponse::failure();
    return ToolResponse::ok(best_answer);
}

// ---------------------------------------------------------------- oracle / noisy

OracleTool::OracleTool(const std::vector<OracleFact>& facts) {
    for (const auto& f : facts) {
        facts_[{f.subject, f.relation}] = f.object;
        subjects_[text::to_lower(f.subject)] = f.subject;
        relations_[text::to_lower(f.relation)] = f.relation;
    }
}

ToolResponse OracleTool::answer(const ToolRequest& request) const {
    std::vector<std::string> subjects, relations;
    for (const auto& w : text::word_tokens(request.question)) {
        if (auto s = subjects_.find(w); s != subjects_.end()) subjects.push_back(s->second);
        if (auto r = relations_.find(w); r != relations_.end()) relations.push_back(r->second);
    }
    for (const auto& rel : relations)
        for (const auto& subj : subjects)
            if (auto f = facts_.find({subj, rel}); f != facts_.end()) return ToolResponse::ok(f->second, 1.0);
    return ToolResponse::failure();
}

std::uint64_t request_hash(const ToolRequest& request) {
    auto h = text::fnv1a(tool_name(request.tool));
    h = text::fnv1a("\x1f", h);
    h = text::fnv1a(request.question, h);
    for (const auto& ref : request.context_refs) {
        h = text::fnv1a("\x1e", h);
        h = text::fnv1a(ref, h);
    }
    return h;
}

NoisyTool::NoisyTool(std::shared_ptr<const ToolClient> inner, double p, std::uint64_t seed,
                     std::vector<std::string> vocabulary)
    : inner_(std::move(inner)), p_(p), seed_(seed), vocabulary_(std::move(vocabulary)) {
    if (!inner_) throw InvalidInput("noisy tool needs an inner tool");
    if (!(p_ >= 0.0 && p_ <= 1.0)) throw InvalidInput("noise probability must lie in [0, 1]");
}

ToolResponse NoisyTool::answer(const ToolRequest& request) const {
    auto r = inner_->answer(request);
    if (r.failed) return r;
    auto h = text::mix(seed_, request_hash(request));
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u >= p_) return r;
    std::vector<const std::string*> others;
    for (const auto& v : vocabulary_)
        if (v != r.answer) others.push_back(&v);
    if (others.empty()) return ToolResponse::failure();
    return ToolResponse::ok(*others[text::mix(h, 1) % others.size()]);
}

// ---------------------------------------------------------------- stores

nlohmann::json to_json(const Passage& p) { return {{"id", p.id}, {"text", p.text}}; }
nlohmann::json to_json(const Table& t) { return {{"id", t.id}, {"header", t.header}, {"rows", t.rows}}; }
nlohmann::json to_json(const Caption& c) { return {{"id", c.id}, {"caption", c.caption}}; }

TextStore load_text_store(const std::string& path) {
    std::vector<Passage> items;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
        items.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    });
    return TextStore(std::move(items));
}

TableStore load_table_store(const std::string& path) {
    std::vector<Table> items;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
        items.push_back({j.at("id").get<std::string>(), j.at("header").get<std::vector<std::string>>(),
                         j.at("rows").get<std::vector<std::vector<std::string>>>()});
    });
    return TableStore(std::move(items));
}

CaptionStore load_caption_store(const std::string& path) {
    std::vector<Caption> items;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
        items.push_back({j.at("id").get<std::string>(), j.at("caption").get<std::string>()});
    });
    return CaptionStore(std::move(items));
}

}  // namespace dcqa
