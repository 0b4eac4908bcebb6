#pragma once

// Turn grammar shared by the divider LLM and the tools handler.
//
//   divider:  <rationale> Sub-question: <text> (Tool=<Name>)
//   divider:  <rationale> [Answer: <item>, <item>, ...]
//   tool:     Answer from the <Name> Tool: <answer>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dcqa {

enum class ToolKind { Text, Table, Image, Search };

inline constexpr std::array<ToolKind, 4> kAllToolKinds = {ToolKind::Text, ToolKind::Table,
                                                         ToolKind::Image, ToolKind::Search};

/// Failure sentinel carried by every failed tool reply.
inline constexpr std::string_view kNoResult = "NO_RESULT";

std::string_view tool_name(ToolKind kind);

/// Accepts the canonical names and the aliases TextQA, TableQA, ImageQA and
/// "Web Search", case-insensitively.
std::optional<ToolKind> parse_tool_kind(std::string_view name);

struct SubQuestion {
    std::string text;
    ToolKind tool;
    bool operator==(const SubQuestion&) const = default;
};

struct FinalAnswer {
    std::vector<std::string> items;
    std::string raw;
    bool operator==(const FinalAnswer&) const = default;
};

struct DividerEvent {
    std::string rationale;
    std::variant<SubQuestion, FinalAnswer> payload;

    bool is_final() const { return std::holds_alternative<FinalAnswer>(payload); }
    const SubQuestion* sub_question() const { return std::get_if<SubQuestion>(&payload); }
    const FinalAnswer* final_answer() const { return std::get_if<FinalAnswer>(&payload); }
    bool operator==(const DividerEvent&) const = default;
};

struct ToolReplyEvent {
    ToolKind tool;
    std::string answer;
    std::int64_t latency_ms = 0;  // wall clock; never serialized into transcripts
    bool failed = false;

    /// Equality ignores latency.
    bool operator==(const ToolReplyEvent& o) const {
        return tool == o.tool && answer == o.answer && failed == o.failed;
    }
};

/// Plumbing note: parse retries, budget exhaustion. `llm_output` keeps the
/// offending completion when the note records a parse failure.
struct SystemNote {
    std::string text;
    std::optional<std::string> llm_output;
    bool operator==(const SystemNote&) const = default;
};

using TranscriptEvent = std::variant<DividerEvent, ToolReplyEvent, SystemNote>;

struct ParseFailure {
    std::string reason;
    bool operator==(const ParseFailure&) const = default;
};

using ParseResult = std::variant<DividerEvent, ParseFailure>;

/// Extracts the divider's move from raw LLM text. The last `[Answer: ...]`
/// marker wins over any sub-question; otherwise the last
/// `Sub-question: ... (Tool=X)` is taken. Never throws.
ParseResult parse_divider_output(std::string_view text);

/// Canonical serializer; `parse_divider_output(render_divider(e)) == e` for
/// every event produced by the parser.
std::string render_divider(const DividerEvent& event);

std::string render_tool_reply(ToolKind tool, std::string_view answer);

/// Splits on ", " outside brackets, parentheses and double quotes; trims and
/// drops empty items.
std::vector<std::string> split_final_answer(std::string_view raw);

/// Rebuilds events from a rendered transcript (divider outputs separated by
/// `Answer from the X Tool:` lines). Used to validate generated completions.
std::variant<std::vector<TranscriptEvent>, ParseFailure> parse_transcript(std::string_view text);

/// Divider followed by tool reply, repeated, closed by a final answer.
/// SystemNotes are ignored.
bool is_well_formed(const std::vector<TranscriptEvent>& events);

// JSONL wire format. One object per event:
//   {"kind":"divider","rationale":..,"type":"sub_question","text":..,"tool":..}
//   {"kind":"divider","rationale":..,"type":"final_answer","items":[..],"raw":..}
//   {"kind":"tool_reply","tool":..,"answer":..,"failed":..}
//   {"kind":"system","text":..[,"llm_output":..]}
nlohmann::json to_json(const TranscriptEvent& event);
TranscriptEvent event_from_json(const nlohmann::json& j);

}  // namespace dcqa
