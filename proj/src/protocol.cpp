#include "dcqa/protocol.hpp"

#include "dcqa/errors.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa {

namespace {

constexpr std::string_view kAnswerMarker = "[Answer:";
constexpr std::string_view kSubQuestionMarker = "Sub-question:";
constexpr std::string_view kReplyPrefix = "Answer from the ";
constexpr std::string_view kReplyInfix = " Tool:";

struct ToolSuffix {
    std::size_t begin;  // position of '('
    std::string name;
};

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Matches "(" ws "Tool" ws "=" ws <name> ws ")" starting exactly at `pos`.
std::optional<ToolSuffix> match_suffix_at(std::string_view s, std::size_t pos) {
    if (pos >= s.size() || s[pos] != '(') return std::nullopt;
    std::size_t i = pos + 1;
    while (i < s.size() && is_blank(s[i])) ++i;
    if (!text::starts_with_ci(s.substr(i), "tool")) return std::nullopt;
    i += 4;
    while (i < s.size() && is_blank(s[i])) ++i;
    if (i >= s.size() || s[i] != '=') return std::nullopt;
    ++i;
    auto close = s.find(')', i);
    if (close == std::string_view::npos) return std::nullopt;
    auto name = text::trim(s.substr(i, close - i));
    if (name.empty()) return std::nullopt;
    return ToolSuffix{pos, std::string(name)};
}

std::optional<ToolSuffix> find_suffix(std::string_view s, std::size_t from, std::size_t until) {
    for (std::size_t i = from; i < until && i < s.size(); ++i) {
        if (s[i] != '(') continue;
        if (auto m = match_suffix_at(s, i)) return m;
    }
    return std::nullopt;
}

std::vector<std::size_t> all_positions_ci(std::string_view s, std::string_view needle) {
    std::vector<std::size_t> out;
    for (auto p = text::find_ci(s, needle); p != std::string_view::npos;
         p = text::find_ci(s, needle, p + 1))
        out.push_back(p);
    return out;
}

ParseResult parse_final(std::string_view text, std::size_t marker) {
    std::size_t start = marker + kAnswerMarker.size();
    std::size_t end = text.size();
    int depth = 1;
    for (std::size_t i = start; i < text.size(); ++i) {
        if (text[i] == '[') {
            ++depth;
        } else if (text[i] == ']' && --depth == 0) {
            end = i;
            break;
        }
    }
    // An unclosed marker runs to the end of the text, but only when nothing
    // inside it is left open; otherwise rendering could not reproduce it.
    if (end == text.size() && depth > 1) return ParseFailure{"unbalanced brackets in final answer"};
    std::string raw(text::trim(text.substr(start, end - start)));
    auto items = split_final_answer(raw);
    if (items.empty()) return ParseFailure{"empty final answer"};
    return DividerEvent{text::collapse_whitespace(text.substr(0, marker)),
                        FinalAnswer{std::move(items), std::move(raw)}};
}

ParseResult parse_sub_question(std::string_view text, const std::vector<std::size_t>& markers) {
    for (std::size_t k = markers.size(); k-- > 0;) {
        std::size_t marker = markers[k];
        std::size_t body = marker + kSubQuestionMarker.size();
        std::size_t limit = k + 1 < markers.size() ? markers[k + 1] : text.size();
        auto suffix = find_suffix(text, body, limit);
        if (!suffix) continue;
        auto kind = parse_tool_kind(suffix->name);
        if (!kind) return ParseFailure{"unknown tool: " + suffix->name};
        auto question = text::collapse_whitespace(text.substr(body, suffix->begin - body));
        if (question.empty()) return ParseFailure{"empty sub-question"};
        return DividerEvent{text::collapse_whitespace(text.substr(0, marker)),
                            SubQuestion{std::move(question), *kind}};
    }
    return ParseFailure{"sub-question without (Tool=...) suffix"};
}

}  // namespace

std::string_view tool_name(ToolKind kind) {
    switch (kind) {
        case ToolKind::Text: return "Text";
        case ToolKind::Table: return "Table";
        case ToolKind::Image: return "Image";
        case ToolKind::Search: return "Search";
    }
    return "Text";
}

std::optional<ToolKind> parse_tool_kind(std::string_view name) {
    auto n = text::collapse_whitespace(name);
    if (text::iequals(n, "Text") || text::iequals(n, "TextQA")) return ToolKind::Text;
    if (text::iequals(n, "Table") || text::iequals(n, "TableQA")) return ToolKind::Table;
    if (text::iequals(n, "Image") || text::iequals(n, "ImageQA")) return ToolKind::Image;
    if (text::iequals(n, "Search") || text::iequals(n, "Web Search")) return ToolKind::Search;
    return std::nullopt;
}

ParseResult parse_divider_output(std::string_view text) {
    auto answer = text::rfind_ci(text, kAnswerMarker);
    if (answer != std::string_view::npos) return parse_final(text, answer);
    auto markers = all_positions_ci(text, kSubQuestionMarker);
    if (!markers.empty()) return parse_sub_question(text, markers);
    return ParseFailure{"no marker found"};
}

std::string render_divider(const DividerEvent& event) {
    std::string out = event.rationale;
    if (!out.empty()) out += ' ';
    if (auto* sq = event.sub_question()) {
        out += "Sub-question: ";
        out += sq->text;
        out += " (Tool=";
        out += tool_name(sq->tool);
        out += ')';
    } else {
        out += "[Answer: ";
        out += event.final_answer()->raw;
        out += ']';
    }
    return out;
}

std::string render_tool_reply(ToolKind tool, std::string_view answer) {
    std::string out(kReplyPrefix);
    out += tool_name(tool);
    out += kReplyInfix;
    out += ' ';
    out += answer;
    return out;
}

std::vector<std::string> split_final_answer(std::string_view raw) {
    std::vector<std::string> items;
    int depth = 0;
    bool quoted = false;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        auto item = text::trim(raw.substr(start, end - start));
        if (item.find_first_not_of(", \t\n\r\f\v") != std::string_view::npos) items.emplace_back(item);
    };
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c == '"') {
            quoted = !quoted;
        } else if (quoted) {
            continue;
        } else if (c == '(' || c == '[' || c == '{') {
            ++depth;
        } else if ((c == ')' || c == ']' || c == '}') && depth > 0) {
            --depth;
        } else if (c == ',' && depth == 0 && i + 1 < raw.size() && raw[i + 1] == ' ') {
            flush(i);
            start = i + 2;
            ++i;
        }
    }
    flush(raw.size());
    return items;
}

std::variant<std::vector<TranscriptEvent>, ParseFailure> parse_transcript(std::string_view text) {
    std::vector<TranscriptEvent> events;
    std::string pending;
    auto flush = [&]() -> std::optional<ParseFailure> {
        if (text::trim(pending).empty()) {
            pending.clear();
            return ParseFailure{"tool reply without a preceding divider turn"};
        }
        auto parsed = parse_divider_output(pending);
        pending.clear();
        if (auto* f = std::get_if<ParseFailure>(&parsed)) return *f;
        events.emplace_back(std::get<DividerEvent>(std::move(parsed)));
        return std::nullopt;
    };
    for (const auto& line : text::split_lines(text)) {
        std::string_view l = line;
        auto infix = l.find(kReplyInfix);
        if (l.starts_with(kReplyPrefix) && infix != std::string_view::npos) {
            auto name = l.substr(kReplyPrefix.size(), infix - kReplyPrefix.size());
            auto kind = parse_tool_kind(name);
            if (!kind) return ParseFailure{"unknown tool in reply: " + std::string(name)};
            if (auto err = flush()) return *err;
            auto answer = std::string(text::trim(l.substr(infix + kReplyInfix.size())));
            bool failed = answer == kNoResult;
            events.emplace_back(ToolReplyEvent{*kind, std::move(answer), 0, failed});
            continue;
        }
        if (!pending.empty()) pending += '\n';
        pending += line;
    }
    if (text::trim(pending).empty()) return ParseFailure{"transcript does not end in a divider turn"};
    if (auto err = flush()) return *err;
    return events;
}

bool is_well_formed(const std::vector<TranscriptEvent>& events) {
    bool expect_divider = true;
    bool finished = false;
    for (const auto& e : events) {
        if (std::holds_alternative<SystemNote>(e)) continue;
        if (finished) return false;
        if (auto* d = std::get_if<DividerEvent>(&e)) {
            if (!expect_divider) return false;
            if (d->is_final()) finished = true;
            expect_divider = false;
        } else {
            if (expect_divider) return false;
            expect_divider = true;
        }
    }
    return finished;
}

nlohmann::json to_json(const TranscriptEvent& event) {
    using nlohmann::json;
    if (auto* d = std::get_if<DividerEvent>(&event)) {
        json j{{"kind", "divider"}, {"rationale", d->rationale}};
        if (auto* sq = d->sub_question()) {
            j["type"] = "sub_question";
            j["text"] = sq->text;
            j["tool"] = tool_name(sq->tool);
        } else {
            j["type"] = "final_answer";
            j["items"] = d->final_answer()->items;
            j["raw"] = d->final_answer()->raw;
        }
        return j;
    }
    if (auto* r = std::get_if<ToolReplyEvent>(&event)) {
        return json{{"kind", "tool_reply"},
                    {"tool", tool_name(r->tool)},
                    {"answer", r->answer},
                    {"failed", r->failed}};
    }
    const auto& n = std::get<SystemNote>(event);
    json j{{"kind", "system"}, {"text", n.text}};
    if (n.llm_output) j["llm_output"] = *n.llm_output;
    return j;
}

TranscriptEvent event_from_json(const nlohmann::json& j) {
    auto tool_of = [](const nlohmann::json& v) {
        auto kind = parse_tool_kind(v.get<std::string>());
        if (!kind) throw InvalidInput("unknown tool name: " + v.get<std::string>());
        return *kind;
    };
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "divider") {
        DividerEvent d;
        d.rationale = j.value("rationale", "");
        const auto type = j.at("type").get<std::string>();
        if (type == "sub_question") {
            d.payload = SubQuestion{j.at("text").get<std::string>(), tool_of(j.at("tool"))};
        } else if (type == "final_answer") {
            d.payload = FinalAnswer{j.at("items").get<std::vector<std::string>>(),
                                    j.at("raw").get<std::string>()};
        } else {
            throw InvalidInput("unknown divider type: " + type);
        }
        return d;
    }
    if (kind == "tool_reply") {
        return ToolReplyEvent{tool_of(j.at("tool")), j.at("answer").get<std::string>(), 0,
                              j.value("failed", false)};
    }
    if (kind == "system") {
        SystemNote n{j.at("text").get<std::string>(), std::nullopt};
        if (j.contains("llm_output")) n.llm_output = j["llm_output"].get<std::string>();
        return n;
    }
    throw InvalidInput("unknown event kind: " + kind);
}

}  // namespace dcqa
