#include "dcqa/datagen.hpp"

#include <atomic>
#include <thread>

#include "dcqa/errors.hpp"
#include "dcqa/jsonl.hpp"
#include "dcqa/metrics.hpp"
#include "dcqa/rng.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa::datagen {

namespace {

std::string render_event(const TranscriptEvent& e) {
    if (auto* d = std::get_if<DividerEvent>(&e)) return render_divider(*d);
    if (auto* r = std::get_if<ToolReplyEvent>(&e)) return render_tool_reply(r->tool, r->answer);
    return {};
}

std::string transcript_text(const std::vector<TranscriptEvent>& events) {
    std::vector<std::string> lines;
    for (const auto& e : events)
        if (!std::holds_alternative<SystemNote>(e)) lines.push_back(render_event(e));
    return text::join(lines, "\n");
}

Strategy strategy_for(const std::vector<Shot>& shots, const PromptOptions& options) {
    Strategy s = Strategy::of(StrategyKind::DivideConquer);
    if (!shots.empty()) {
        for (const auto& shot : shots) {
            if (shot.instruction != shots.front().instruction)
                throw InvalidShot("shot " + shot.id + " uses a different instruction than shot " + shots.front().id);
            validate_shot(shot);
        }
        s.instruction = shots.front().instruction;
        s.shots = render_shots(shots);
    } else {
        s.instruction = options.instruction;
    }
    return s;
}

// Drops the oldest shots until the prompt fits.
Strategy fitted_strategy(const std::vector<Shot>& shots, const QaRecord& q, const PromptOptions& options) {
    std::size_t drop = 0;
    for (;;) {
        std::vector<Shot> kept(shots.begin() + static_cast<std::ptrdiff_t>(drop), shots.end());
        auto s = strategy_for(kept, options);
        if (!shots.empty() && kept.empty()) s.instruction = shots.front().instruction;
        if (options.max_chars == 0 || kept.empty() || initial_prompt(q, s).size() <= options.max_chars) return s;
        ++drop;
    }
}

void collect(const Episode& ep, const QaRecord& q, const std::string& prompt, const GenConfig& cfg,
             std::vector<FinetuneRecord>& out, GenReport& report) {
    switch (ep.outcome.kind) {
        case OutcomeKind::ParseFailed: ++report.parse_failures; return;
        case OutcomeKind::BudgetExhausted: ++report.budget_exhaustions; return;
        case OutcomeKind::BackendError: ++report.backend_errors; return;
        case OutcomeKind::Answered: break;
    }
    auto whole = validate_record({q.qid, prompt, transcript_text(ep.events), false, 0.0, ep.tool_calls},
                                 q.gold_answers, cfg.keep_threshold);
    if (cfg.granularity == Granularity::WholeTranscript) {
        out.push_back(std::move(whole));
        return;
    }
    std::string context = prompt;
    for (const auto& e : ep.events) {
        if (std::holds_alternative<SystemNote>(e)) continue;
        if (std::holds_alternative<DividerEvent>(e))
            out.push_back({q.qid, context, render_event(e), whole.validated, whole.f1, ep.tool_calls});
        context += '\n';
        context += render_event(e);
    }
}

std::string_view mode_name(ReplyMode m) { return m == ReplyMode::LiveTools ? "live_tools" : "generator_invents"; }
std::string_view granularity_name(Granularity g) { return g == Granularity::WholeTranscript ? "whole" : "per_turn"; }

}  // namespace

void validate_shot(const Shot& shot) {
    std::vector<TranscriptEvent> events;
    for (const auto& turn : shot.turns) {
        if (auto* d = std::get_if<DividerEvent>(&turn.event)) {
            auto reparsed = parse_divider_output(render_divider(*d));
            auto* r = std::get_if<DividerEvent>(&reparsed);
            if (!r || !(*r == *d)) throw InvalidShot("shot " + shot.id + ": divider turn does not round-trip");
        }
        events.push_back(turn.event);
    }
    if (!is_well_formed(events))
        throw InvalidShot("shot " + shot.id + ": turns must alternate divider/tool and end in a final answer");
}

std::vector<Shot> load_shots(const std::string& path) {
    std::vector<Shot> shots;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        Shot s;
        s.id = j.value("id", "shot-" + std::to_string(line));
        s.focus = j.value("focus", "");
        s.instruction = j.at("instruction").get<std::string>();
        s.question = j.at("question").get<std::string>();
        s.gold = j.value("gold", std::vector<std::string>{});
        for (const auto& t : j.at("turns")) {
            const auto role = t.at("role").get<std::string>();
            if (role == "divider") {
                auto text = t.at("text").get<std::string>();
                auto parsed = parse_divider_output(text);
                if (auto* f = std::get_if<ParseFailure>(&parsed))
                    throw SchemaError(path, line, "shot " + s.id + ": " + f->reason);
                s.turns.push_back({text, std::get<DividerEvent>(std::move(parsed))});
            } else if (role == "tool") {
                auto kind = parse_tool_kind(t.at("tool").get<std::string>());
                if (!kind) throw SchemaError(path, line, "shot " + s.id + ": unknown tool");
                auto answer = t.at("answer").get<std::string>();
                bool failed = answer == kNoResult;
                s.turns.push_back({answer, ToolReplyEvent{*kind, answer, 0, failed}});
            } else {
                throw SchemaError(path, line, "unknown turn role " + role);
            }
        }
        validate_shot(s);
        shots.push_back(std::move(s));
    });
    return shots;
}

nlohmann::json to_json(const Shot& shot) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : shot.turns) {
        if (auto* r = std::get_if<ToolReplyEvent>(&t.event))
            turns.push_back({{"role", "tool"}, {"tool", tool_name(r->tool)}, {"answer", r->answer}});
        else
            turns.push_back({{"role", "divider"}, {"text", t.text}});
    }
    return {{"id", shot.id},     {"focus", shot.focus}, {"instruction", shot.instruction},
            {"question", shot.question}, {"gold", shot.gold}, {"turns", turns}};
}

std::string render_shot_body(const Shot& shot) {
    std::string out(kQuestionPrefix);
    out += text::collapse_whitespace(shot.question);
    for (const auto& t : shot.turns) {
        out += '\n';
        if (auto* r = std::get_if<ToolReplyEvent>(&t.event))
            out += render_tool_reply(r->tool, r->answer);
        else
            out += text::collapse_whitespace(t.text);
    }
    return out;
}

std::string render_shots(const std::vector<Shot>& shots) {
    std::vector<std::string> bodies;
    for (const auto& s : shots) bodies.push_back(render_shot_body(s));
    return text::join(bodies, "\n\n");
}

std::string assemble_prompt(const std::vector<Shot>& shots, const QaRecord& question, const PromptOptions& options) {
    return initial_prompt(question, fitted_strategy(shots, question, options));
}

std::vector<QaRecord> sample_training_subset(const std::vector<QaRecord>& benchmark, std::size_t n,
                                             std::uint64_t seed) {
    if (n > benchmark.size())
        throw InvalidInput("cannot sample " + std::to_string(n) + " records from " +
                           std::to_string(benchmark.size()));
    std::vector<std::size_t> idx(benchmark.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    std::vector<QaRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(benchmark[idx[i]]);
    return out;
}

FinetuneRecord validate_record(FinetuneRecord record, const std::vector<std::vector<std::string>>& gold,
                               double threshold) {
    record.validated = false;
    record.f1 = 0.0;
    auto parsed = parse_transcript(record.completion);
    auto* events = std::get_if<std::vector<TranscriptEvent>>(&parsed);
    if (!events || !is_well_formed(*events)) return record;
    const auto& last = std::get<DividerEvent>(events->back());
    record.f1 = list_f1(last.final_answer()->items, gold);
    record.validated = record.f1 >= threshold;
    return record;
}

GenResult generate_dataset(const std::vector<QaRecord>& subset, const std::vector<Shot>& shots,
                           const LlmBackend& generator, const ToolRegistry& tools, const Budget& budget,
                           const GenConfig& config) {
    if (config.parallelism == 0) throw InvalidInput("parallelism must be positive");
    // Shots are checked once up front so a bad library fails fast.
    if (!shots.empty()) (void)strategy_for(shots, config.prompt);

    struct Slot {
        std::vector<FinetuneRecord> records;
        GenReport report;
    };
    std::vector<Slot> slots(subset.size());
    std::atomic<std::size_t> next{0};

    auto work = [&](std::size_t i) {
        const auto& q = subset[i];
        auto& slot = slots[i];
        auto strategy = fitted_strategy(shots, q, config.prompt);
        auto prompt = initial_prompt(q, strategy);
        const auto seed = episode_seed(config.run_seed, q.qid);
        if (config.mode == ReplyMode::LiveTools) {
            auto ep = run_episode(q, strategy, budget, generator, tools, seed);
            collect(ep, q, prompt, config, slot.records, slot.report);
            return;
        }
        std::string output;
        try {
            output = std::string(text::trim(generator.complete(LlmCall{prompt, q.qid, 0, seed})));
        } catch (const std::exception&) {
            ++slot.report.backend_errors;
            return;
        }
        auto parsed = parse_transcript(output);
        auto* events = std::get_if<std::vector<TranscriptEvent>>(&parsed);
        if (!events || !is_well_formed(*events)) {
            ++slot.report.parse_failures;
            return;
        }
        int calls = 0;
        for (const auto& e : *events) calls += std::holds_alternative<ToolReplyEvent>(e);
        if (calls > budget.max_tool_calls()) {
            ++slot.report.budget_exhaustions;
            return;
        }
        Episode ep;
        ep.question = q;
        ep.events = std::move(*events);
        ep.tool_calls = calls;
        ep.outcome.kind = OutcomeKind::Answered;
        collect(ep, q, prompt, config, slot.records, slot.report);
    };
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < subset.size();) work(i);
    };
    if (config.parallelism == 1 || subset.size() <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(config.parallelism, subset.size()); ++t) pool.emplace_back(worker);
    }

    GenResult result;
    result.report.questions = subset.size();
    result.report.keep_threshold = config.keep_threshold;
    result.report.mode = mode_name(config.mode);
    result.report.granularity = granularity_name(config.granularity);
    for (auto& slot : slots) {
        result.report.parse_failures += slot.report.parse_failures;
        result.report.budget_exhaustions += slot.report.budget_exhaustions;
        result.report.backend_errors += slot.report.backend_errors;
        for (auto& r : slot.records) {
            result.report.kept += r.validated;
            result.records.push_back(std::move(r));
        }
    }
    result.report.records = result.records.size();
    return result;
}

nlohmann::json to_json(const FinetuneRecord& r) {
    return {{"prompt", r.prompt},
            {"completion", r.completion},
            {"meta", {{"qid", r.qid}, {"f1", r.f1}, {"tool_calls", r.tool_calls}, {"validated", r.validated}}}};
}

nlohmann::json to_json(const GenReport& r) {
    return {{"questions", r.questions},
            {"records", r.records},
            {"kept", r.kept},
            {"parse_failures", r.parse_failures},
            {"budget_exhaustions", r.budget_exhaustions},
            {"backend_errors", r.backend_errors},
            {"keep_threshold", r.keep_threshold},
            {"mode", r.mode},
            {"granularity", r.granularity}};
}

}  // namespace dcqa::datagen
