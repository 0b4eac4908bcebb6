#include "dcqa/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "dcqa/errors.hpp"
#include "dcqa/jsonl.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa {

const std::string kDivideConquerInstruction =
    "Your task is to answer a given Open Question. However, the Open Question needs information from "
    "different modules, which are Text module, Table module, Image module, and Search module. You can "
    "divide the Open Question into a simpler Sub-question and wait to receive the answer to it. Each "
    "time you can ask a Sub-question from only one module. If the provided answer was not complete, you "
    "ask a new Sub-question from different or the same module. You can repeat this loop until you get "
    "the complete information to answer the Open Question. Ask each Sub-question as "
    "\"Sub-question: <question> (Tool=<Text|Table|Image|Search>)\" and give the final answer as "
    "\"[Answer: <answer>]\".";

const std::string kToolsAnswerInstruction =
    "Your task is to answer a given Open Question. The Open Question was sent unchanged to every "
    "module, and each module's answer is listed below it. Use these answers to answer the Open "
    "Question and give the final answer as \"[Answer: <answer>]\".";

const std::string kReActInstruction =
    "Answer the Open Question by interleaving Thought, Action and Observation steps. Thought reasons "
    "about the current situation. Action can be one of: Text[<question>] asks the text module, "
    "Table[<question>] asks the table module, Image[<question>] asks the image module, "
    "Search[<query>] searches the web, and Finish[<answer>] returns the final answer. Reply with one "
    "Thought line followed by one Action line.";

namespace {

constexpr std::string_view kRetryNote =
    "Your last reply could not be parsed. Reply with exactly one Sub-question: <question> "
    "(Tool=<Text|Table|Image|Search>) or [Answer: <answer>].";
constexpr std::string_view kReActRetryNote =
    "Your last reply could not be parsed. Reply with one Thought line and one Action line such as "
    "Action: Text[<question>] or Action: Finish[<answer>].";

const std::vector<std::string>& refs_for(const QaRecord& q, ToolKind kind) {
    static const std::vector<std::string> kNone;
    switch (kind) {
        case ToolKind::Text: return q.context_refs.text;
        case ToolKind::Table: return q.context_refs.table;
        case ToolKind::Image: return q.context_refs.image;
        case ToolKind::Search: return kNone;
    }
    return kNone;
}

ToolReplyEvent call_tool(const ToolRegistry& tools, const QaRecord& q, ToolKind kind, const std::string& question) {
    auto start = std::chrono::steady_clock::now();
    auto r = dispatch(tools, ToolRequest{kind, question, refs_for(q, kind)});
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return ToolReplyEvent{kind, std::move(r.answer), ms.count(), r.failed};
}

// Mutable state of one running episode.
class EpisodeRun {
public:
    EpisodeRun(Episode& ep, const LlmBackend& llm, const EpisodeHooks& hooks)
        : ep_(ep), llm_(llm), hooks_(hooks) {}

    // nullopt when the backend failed; the outcome is then already set.
    std::optional<std::string> ask(const std::string& prompt) {
        if (hooks_.on_prompt) hooks_.on_prompt(prompt);
        LlmCall call{prompt, ep_.question.qid, static_cast<std::size_t>(ep_.llm_calls), ep_.seed};
        ++ep_.llm_calls;
        try {
            return llm_.complete(call);
        } catch (const std::exception& e) {
            ep_.outcome = Outcome{OutcomeKind::BackendError, {}, e.what()};
            return std::nullopt;
        }
    }

private:
    Episode& ep_;
    const LlmBackend& llm_;
    const EpisodeHooks& hooks_;
};

void finish_budget(Episode& ep, const Budget& budget) {
    ep.events.emplace_back(SystemNote{
        "Tool-call budget of " + std::to_string(budget.max_tool_calls()) + " exhausted.", std::nullopt});
    ep.outcome = Outcome{OutcomeKind::BudgetExhausted, {}, {}};
}

// Shared loop of DivideConquer and ReActStyle; they differ only in grammar
// and in how a tool reply is fed back.
void run_loop(Episode& ep, const QaRecord& q, const Strategy& strategy, const Budget& budget,
              const LlmBackend& llm, const ToolRegistry& tools, const EpisodeHooks& hooks) {
    const bool is_react = strategy.kind == StrategyKind::ReActStyle;
    auto parse = is_react ? react::parse_output : parse_divider_output;
    auto render = is_react ? react::render : render_divider;
    const std::string_view retry_note = is_react ? kReActRetryNote : kRetryNote;

    EpisodeRun run(ep, llm, hooks);
    std::string context = initial_prompt(q, strategy);
    int retries_left = budget.max_parse_retries();
    for (;;) {
        auto output = run.ask(context);
        if (!output) return;
        auto parsed = parse(*output);
        if (auto* failure = std::get_if<ParseFailure>(&parsed)) {
            if (retries_left-- <= 0) {
                ep.events.emplace_back(SystemNote{"Parse failed: " + failure->reason, *output});
                ep.outcome = Outcome{OutcomeKind::ParseFailed, {}, failure->reason};
                return;
            }
            std::string note = "Parse failed: " + failure->reason + ". " + std::string(retry_note);
            ep.events.emplace_back(SystemNote{note, *output});
            context += '\n';
            context += note;
            continue;
        }
        retries_left = budget.max_parse_retries();
        auto event = std::get<DividerEvent>(std::move(parsed));
        context += '\n';
        context += render(event);
        if (auto* fa = event.final_answer()) {
            auto items = fa->items;
            ep.events.emplace_back(std::move(event));
            ep.outcome = Outcome{OutcomeKind::Answered, std::move(items), {}};
            return;
        }
        const auto sq = *event.sub_question();
        ep.events.emplace_back(std::move(event));
        if (ep.tool_calls >= budget.max_tool_calls()) {
            finish_budget(ep, budget);
            return;
        }
        auto reply = call_tool(tools, q, sq.tool, sq.text);
        ++ep.tool_calls;
        context += '\n';
        if (is_react) {
            context += kObservationPrefix;
            context += reply.answer;
        } else {
            context += render_tool_reply(reply.tool, reply.answer);
        }
        ep.events.emplace_back(std::move(reply));
    }
}

void run_tools_answer(Episode& ep, const QaRecord& q, const Strategy& strategy, const Budget& budget,
                      const LlmBackend& llm, const ToolRegistry& tools, const EpisodeHooks& hooks) {
    std::string prompt = initial_prompt(q, strategy);
    for (auto kind : ToolRegistry::order()) {
        if (ep.tool_calls >= budget.max_tool_calls()) {
            finish_budget(ep, budget);
            return;
        }
        auto reply = call_tool(tools, q, kind, q.question);
        ++ep.tool_calls;
        prompt += '\n';
        prompt += render_tool_reply(reply.tool, reply.answer);
        ep.events.emplace_back(std::move(reply));
    }
    EpisodeRun run(ep, llm, hooks);
    auto output = run.ask(prompt);
    if (!output) return;
    auto parsed = parse_divider_output(*output);
    auto* event = std::get_if<DividerEvent>(&parsed);
    if (!event || !event->is_final()) {
        auto reason = event ? std::string("expected a final answer") : std::get<ParseFailure>(parsed).reason;
        ep.events.emplace_back(SystemNote{"Parse failed: " + reason, *output});
        ep.outcome = Outcome{OutcomeKind::ParseFailed, {}, reason};
        return;
    }
    ep.outcome = Outcome{OutcomeKind::Answered, event->final_answer()->items, {}};
    ep.events.emplace_back(std::move(*event));
}

std::string_view default_instruction(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::DivideConquer: return kDivideConquerInstruction;
        case StrategyKind::ToolsAnswer: return kToolsAnswerInstruction;
        case StrategyKind::ReActStyle: return kReActInstruction;
    }
    return kDivideConquerInstruction;
}

}  // namespace

std::string_view strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::DivideConquer: return "divide-conquer";
        case StrategyKind::ToolsAnswer: return "tools-answer";
        case StrategyKind::ReActStyle: return "react";
    }
    return "divide-conquer";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
    for (auto k : {StrategyKind::DivideConquer, StrategyKind::ToolsAnswer, StrategyKind::ReActStyle})
        if (name == strategy_name(k)) return k;
    return std::nullopt;
}

Budget::Budget(int max_tool_calls, int max_parse_retries)
    : max_tool_calls_(max_tool_calls), max_parse_retries_(max_parse_retries) {
    if (max_tool_calls_ < 1) throw InvalidInput("max_tool_calls must be at least 1");
    if (max_parse_retries_ < 0) throw InvalidInput("max_parse_retries must be non-negative");
}

std::string_view outcome_name(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Answered: return "answered";
        case OutcomeKind::BudgetExhausted: return "budget_exhausted";
        case OutcomeKind::ParseFailed: return "parse_failed";
        case OutcomeKind::BackendError: return "backend_error";
    }
    return "parse_failed";
}

const std::vector<std::string>& Episode::predicted() const {
    static const std::vector<std::string> kEmpty;
    return outcome.kind == OutcomeKind::Answered ? outcome.items : kEmpty;
}

std::string render_history(const std::vector<HistoryTurn>& history) {
    std::string out;
    for (const auto& h : history) {
        out += "Q: " + text::collapse_whitespace(h.question) + "\n";
        out += "A: " + text::collapse_whitespace(h.answer) + "\n";
    }
    return out;
}

std::string initial_prompt(const QaRecord& q, const Strategy& strategy) {
    std::string out = strategy.instruction.empty() ? std::string(default_instruction(strategy.kind))
                                                   : strategy.instruction;
    out += "\n\n";
    if (!strategy.shots.empty()) {
        out += strategy.shots;
        out += "\n\n";
    }
    out += render_history(q.history);
    out += kQuestionPrefix;
    out += text::collapse_whitespace(q.question);
    return out;
}

Episode run_episode(const QaRecord& question, const Strategy& strategy, const Budget& budget,
                    const LlmBackend& llm, const ToolRegistry& tools, std::uint64_t seed,
                    const EpisodeHooks& hooks) {
    Episode ep;
    ep.question = question;
    ep.strategy = strategy.kind;
    ep.seed = seed;
    if (strategy.kind == StrategyKind::ToolsAnswer)
        run_tools_answer(ep, question, strategy, budget, llm, tools, hooks);
    else
        run_loop(ep, question, strategy, budget, llm, tools, hooks);
    return ep;
}

std::uint64_t episode_seed(std::uint64_t run_seed, std::string_view qid) {
    return text::mix(run_seed, text::fnv1a(qid));
}

std::vector<Episode> run_batch(const std::vector<QaRecord>& questions, const Strategy& strategy,
                               const Budget& budget, const LlmBackend& llm, const ToolRegistry& tools,
                               std::uint64_t run_seed, std::size_t parallelism) {
    if (questions.empty()) throw InvalidInput("run_batch needs at least one question");
    if (parallelism == 0) throw InvalidInput("parallelism must be positive");
    std::vector<Episode> out(questions.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < questions.size();) {
            const auto& q = questions[i];
            out[i] = run_episode(q, strategy, budget, llm, tools, episode_seed(run_seed, q.qid));
        }
    };
    const auto n = std::min(parallelism, questions.size());
    if (n == 1) {
        worker();
        return out;
    }
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    pool.clear();
    return out;
}

// ---------------------------------------------------------------- ReAct grammar

namespace react {

ParseResult parse_output(std::string_view text) {
    auto action = text::rfind_ci(text, "Action:");
    if (action == std::string_view::npos) return ParseFailure{"no Action found"};
    auto body = text.substr(action + 7);
    auto eol = body.find('\n');
    auto line = body.substr(0, eol);
    auto open = line.find('[');
    if (open == std::string_view::npos) return ParseFailure{"Action without [input]"};
    auto close = line.rfind(']');
    if (close == std::string_view::npos || close < open) close = line.size();
    auto name = text::trim(line.substr(0, open));
    auto input = std::string(text::trim(line.substr(open + 1, close - open - 1)));

    auto head = text.substr(0, action);
    auto thought = text::rfind_ci(head, "Thought:");
    std::string rationale =
        text::collapse_whitespace(thought == std::string_view::npos ? head : head.substr(thought + 8));

    if (text::iequals(name, "Finish")) {
        auto items = split_final_answer(input);
        if (items.empty()) return ParseFailure{"empty final answer"};
        return DividerEvent{std::move(rationale), FinalAnswer{std::move(items), std::move(input)}};
    }
    auto kind = parse_tool_kind(name);
    if (!kind) return ParseFailure{"unknown tool: " + std::string(name)};
    auto question = text::collapse_whitespace(input);
    if (question.empty()) return ParseFailure{"empty action input"};
    return DividerEvent{std::move(rationale), SubQuestion{std::move(question), *kind}};
}

std::string render(const DividerEvent& event) {
    std::string out;
    if (!event.rationale.empty()) out += "Thought: " + event.rationale + "\n";
    if (auto* sq = event.sub_question())
        out += "Action: " + std::string(tool_name(sq->tool)) + "[" + sq->text + "]";
    else
        out += "Action: Finish[" + event.final_answer()->raw + "]";
    return out;
}

}  // namespace react

// ---------------------------------------------------------------- serialization

std::string serialize_episode(const Episode& ep) {
    nlohmann::json header{{"kind", "episode"},
                          {"qid", ep.question.qid},
                          {"question", ep.question.question},
                          {"strategy", strategy_name(ep.strategy)},
                          {"seed", ep.seed},
                          {"outcome", outcome_name(ep.outcome.kind)},
                          {"answer", ep.predicted()},
                          {"detail", ep.outcome.detail},
                          {"tool_calls", ep.tool_calls},
                          {"llm_calls", ep.llm_calls},
                          {"num_events", ep.events.size()}};
    std::string out = header.dump() + "\n";
    for (const auto& e : ep.events) out += to_json(e).dump() + "\n";
    return out;
}

std::string serialize_episodes(const std::vector<Episode>& episodes) {
    std::string out;
    for (const auto& ep : episodes) out += serialize_episode(ep);
    return out;
}

std::vector<Episode> parse_episodes(std::string_view jsonl) {
    std::vector<Episode> out;
    std::size_t pending = 0;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            if (pending > 0) {
                out.back().events.push_back(event_from_json(j));
                --pending;
                continue;
            }
            if (j.at("kind") != "episode") throw InvalidInput("expected an episode header");
            Episode ep;
            ep.question.qid = j.at("qid").get<std::string>();
            ep.question.question = j.value("question", "");
            auto strategy = parse_strategy(j.at("strategy").get<std::string>());
            if (!strategy) throw InvalidInput("unknown strategy");
            ep.strategy = *strategy;
            ep.seed = j.at("seed").get<std::uint64_t>();
            const auto outcome = j.at("outcome").get<std::string>();
            bool known = false;
            for (auto k : {OutcomeKind::Answered, OutcomeKind::BudgetExhausted, OutcomeKind::ParseFailed,
                           OutcomeKind::BackendError})
                if (outcome == outcome_name(k)) {
                    ep.outcome.kind = k;
                    known = true;
                }
            if (!known) throw InvalidInput("unknown outcome " + outcome);
            ep.outcome.items = j.at("answer").get<std::vector<std::string>>();
            ep.outcome.detail = j.value("detail", "");
            ep.tool_calls = j.at("tool_calls").get<int>();
            ep.llm_calls = j.value("llm_calls", 0);
            pending = j.at("num_events").get<std::size_t>();
            out.push_back(std::move(ep));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("<episodes>", line_no, e.what());
        } catch (const InvalidInput& e) {
            throw SchemaError("<episodes>", line_no, e.what());
        }
    }
    if (pending > 0) throw SchemaError("<episodes>", line_no, "truncated episode");
    return out;
}

std::vector<Episode> read_episodes(const std::string& path) {
    try {
        return parse_episodes(read_text(path));
    } catch (const SchemaError& e) {
        throw SchemaError(path, e.line(), e.what());
    }
}

std::map<std::string, std::vector<std::string>> replay_outputs(const std::vector<Episode>& episodes) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& ep : episodes) {
        auto& calls = out[ep.question.qid];
        for (const auto& e : ep.events) {
            if (auto* d = std::get_if<DividerEvent>(&e))
                calls.push_back(ep.strategy == StrategyKind::ReActStyle ? react::render(*d) : render_divider(*d));
            else if (auto* n = std::get_if<SystemNote>(&e); n && n->llm_output)
                calls.push_back(*n->llm_output);
        }
    }
    return out;
}

}  // namespace dcqa
