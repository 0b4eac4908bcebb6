#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dcqa/protocol.hpp"
#include "dcqa/stores.hpp"

namespace dcqa {

struct ToolRequest {
    ToolKind tool = ToolKind::Text;
    std::string question;
    std::vector<std::string> context_refs;  // empty: search the whole store
};

struct ToolResponse {
    std::string answer;
    std::optional<double> confidence;
    bool failed = false;

    static ToolResponse failure() { return {std::string(kNoResult), std::nullopt, true}; }
    static ToolResponse ok(std::string answer, std::optional<double> confidence = std::nullopt) {
        return {std::move(answer), confidence, false};
    }
};

/// A single-modality USH answerer. Implementations may throw; dispatch()
/// turns every exception into a failed response. Must be safe to call
/// from several threads at once.
class ToolClient {
public:
    virtual ~ToolClient() = default;
    virtual ToolResponse answer(const ToolRequest& request) const = 0;
};

/// Exactly one client per ToolKind, iterated in the fixed order
/// Text, Table, Image, Search.
class ToolRegistry {
public:
    /// Throws InvalidInput if any client is null.
    ToolRegistry(std::shared_ptr<const ToolClient> text, std::shared_ptr<const ToolClient> table,
                 std::shared_ptr<const ToolClient> image, std::shared_ptr<const ToolClient> search);

    const ToolClient& client(ToolKind kind) const { return *clients_[static_cast<std::size_t>(kind)]; }
    static constexpr std::size_t size() { return 4; }
    static constexpr const std::array<ToolKind, 4>& order() { return kAllToolKinds; }

private:
    std::array<std::shared_ptr<const ToolClient>, 4> clients_;
};

/// Routes to the registered client. Never throws: transport errors,
/// timeouts and empty answers all come back as {NO_RESULT, failed=true}.
ToolResponse dispatch(const ToolRegistry& registry, const ToolRequest& request) noexcept;

/// Always fails. Stands in for an unconfigured tool.
class StubTool final : public ToolClient {
public:
    ToolResponse answer(const ToolRequest&) const override { return ToolResponse::failure(); }
};

/// How the lexical tools phrase their reply.
enum class AnswerMode {
    Span,     // the phrase next to the matched query terms, falling back to the passage
    Passage,  // the best passage, truncated to max_chars
};

struct LexicalOptions {
    double k1 = 1.2;
    double b = 0.75;
    double min_score = 1e-9;     // a top score below this is a miss
    double bigram_weight = 0.5;  // bonus per adjacent query-term pair found adjacent in the passage
    AnswerMode mode = AnswerMode::Span;
    std::size_t max_chars = 300;
};

/// A scored candidate; exposed for tests.
struct RankedPassage {
    std::size_t index;
    double score;
};

/// Okapi BM25 over a bag of short documents, idf = ln(1 + (N - df + 0.5) / (df + 0.5)),
/// plus an optional flat bonus for each query bigram the passage contains
/// (terms adjacent after stopword removal). Ties keep document order.
class Bm25Index {
public:
    Bm25Index(const std::vector<std::string>& docs, double k1, double b);
    std::vector<RankedPassage> rank(const std::vector<std::string>& query_terms,
                                    double bigram_weight = 0.0) const;

private:
    double k1_, b_, avgdl_ = 0.0;
    std::vector<std::map<std::string, int>> tf_;
    std::vector<std::set<std::pair<std::string, std::string>>> bigrams_;
    std::vector<std::size_t> len_;
    std::map<std::string, double> idf_;
};

/// Picks an answer phrase out of `passage` for `question`. Within the
/// sentence matching most query terms it takes the words after the last
/// matched term, else those before the first, else the widest gap between
/// matches; stopwords are trimmed from both ends.
std::optional<std::string> extract_span(std::string_view passage, std::string_view question);

/// TextQA stand-in: BM25 retrieval over passages plus span extraction.
class LexicalTextTool final : public ToolClient {
public:
    explicit LexicalTextTool(std::shared_ptr<const TextStore> store, LexicalOptions options = {});
    ToolResponse answer(const ToolRequest& request) const override;

private:
    std::shared_ptr<const TextStore> store_;
    LexicalOptions options_;
    std::shared_ptr<const Bm25Index> global_;
};

/// ImageQA stand-in: the image is represented by its caption; questions are
/// answered by lexical match against captions.
class CaptionImageTool final : public ToolClient {
public:
    explicit CaptionImageTool(std::shared_ptr<const CaptionStore> store, LexicalOptions options = {});
    ToolResponse answer(const ToolRequest& request) const override;

private:
    std::shared_ptr<const CaptionStore> store_;
    LexicalOptions options_;
    std::shared_ptr<const Bm25Index> global_;
};

/// TableQA stand-in. Question terms select columns (by header) and rows (by
/// cell); the answer is the selected column's cells in the selected rows,
/// comma-joined.
class TableLookupTool final : public ToolClient {
public:
    explicit TableLookupTool(std::shared_ptr<const TableStore> store);
    ToolResponse answer(const ToolRequest& request) const override;

private:
    std::shared_ptr<const TableStore> store_;
};

/// One (subject, relation) -> object fact, as stored by an oracle tool.
struct OracleFact {
    std::string subject;
    std::string relation;
    std::string object;
};

/// Exact lookup over a functional fact table. The question must mention a
/// known subject and relation as whole tokens; relations are tried in
/// order of appearance.
class OracleTool final : public ToolClient {
public:
    explicit OracleTool(const std::vector<OracleFact>& facts);
    ToolResponse answer(const ToolRequest& request) const override;

private:
    std::map<std::pair<std::string, std::string>, std::string> facts_;
    std::map<std::string, std::string> subjects_;   // lowercase token -> id
    std::map<std::string, std::string> relations_;  // lowercase token -> name
};

/// Wraps another tool and, with probability `p`, replaces a successful answer
/// with a different value drawn from `vocabulary` (or the failure sentinel
/// when the vocabulary offers nothing else). Randomness comes only from
/// (seed, request), so concurrency cannot change outcomes.
class NoisyTool final : public ToolClient {
public:
    NoisyTool(std::shared_ptr<const ToolClient> inner, double p, std::uint64_t seed,
              std::vector<std::string> vocabulary);
    ToolResponse answer(const ToolRequest& request) const override;

private:
    std::shared_ptr<const ToolClient> inner_;
    double p_;
    std::uint64_t seed_;
    std::vector<std::string> vocabulary_;
};

std::uint64_t request_hash(const ToolRequest& request);

}  // namespace dcqa
