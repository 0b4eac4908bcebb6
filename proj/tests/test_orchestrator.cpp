#include <gtest/gtest.h>

#include "dcqa/errors.hpp"
#include "dcqa/metrics.hpp"
#include "dcqa/orchestrator.hpp"
#include "dcqa/report.hpp"
#include "dcqa/text_util.hpp"
#include "synth_suite.hpp"

using namespace dcqa;

namespace {

QaRecord simple_question(std::string qid = "q1") {
    QaRecord q;
    q.qid = std::move(qid);
    q.question = "Which team won?";
    q.gold_answers = {{"Bears"}};
    return q;
}

ToolRegistry echo_tools() {
    auto stub = std::make_shared<StubTool>();
    auto fixed = std::make_shared<OracleTool>(std::vector<OracleFact>{});
    return ToolRegistry(stub, stub, stub, stub);
}

// Asks `n` sub-questions, then answers.
ScriptedPolicy n_hop_policy(int n) {
    return [n](std::string_view prompt) -> std::string {
        int replies = 0;
        for (auto p = prompt.find("Answer from the "); p != std::string_view::npos; p = prompt.find("Answer from the ", p + 1))
            ++replies;
        if (replies < n) return "Sub-question: step " + std::to_string(replies) + "? (Tool=Text)";
        return "[Answer: Bears]";
    };
}

// Deterministic but erratic divider: the prompt hash picks garbage, a
// sub-question for a random tool, or a final answer.
ScriptedPolicy erratic_policy(std::uint64_t salt) {
    return [salt](std::string_view prompt) -> std::string {
        auto h = text::mix(salt, text::fnv1a(prompt));
        switch (h % 7) {
            case 0: return "hmm, let me think";
            case 1: return "[Answer: maybe]";
            default: {
                static const char* tools[] = {"Text", "Table", "Image", "Search"};
                return "Sub-question: item " + std::to_string(h % 1000) + "? (Tool=" + tools[(h >> 8) % 4] + ")";
            }
        }
    };
}

class FailingBackend final : public LlmBackend {
public:
    std::string complete(const LlmCall&) const override { throw BackendError("connection refused", true); }
    std::string label() const override { return "failing"; }
};

}  // namespace

TEST(Budget, Validation) {
    EXPECT_THROW(Budget(0), InvalidInput);
    EXPECT_THROW(Budget(3, -1), InvalidInput);
    EXPECT_EQ(Budget().max_tool_calls(), 12);
    EXPECT_EQ(Budget().max_parse_retries(), 1);
}

TEST(RunEpisode, BudgetBoundary) {
    ScriptedBackend llm(n_hop_policy(2));
    auto ep = run_episode(simple_question(), Strategy::of(StrategyKind::DivideConquer), Budget(1), llm, echo_tools(), 0);
    EXPECT_EQ(ep.outcome.kind, OutcomeKind::BudgetExhausted);
    EXPECT_EQ(ep.tool_calls, 1);
    EXPECT_TRUE(ep.predicted().empty());

    auto ok = run_episode(simple_question(), Strategy::of(StrategyKind::DivideConquer), Budget(2), llm, echo_tools(), 0);
    EXPECT_EQ(ok.outcome.kind, OutcomeKind::Answered);
    EXPECT_EQ(ok.tool_calls, 2);
}

TEST(RunEpisode, EndlessDividerHitsEveryBudget) {
    ScriptedBackend llm(endless_sub_question_policy());
    for (int b = 1; b <= 12; ++b) {
        auto ep = run_episode(simple_question(), Strategy::of(StrategyKind::DivideConquer), Budget(b), llm, echo_tools(), 0);
        EXPECT_EQ(ep.outcome.kind, OutcomeKind::BudgetExhausted);
        EXPECT_EQ(ep.tool_calls, b);
    }
}

TEST(RunEpisode, OracleTwoHop) {
    auto s = testkit::synth_suite(10, 2, 3);
    ScriptedBackend llm(synth::oracle_divider_policy(s.questions));
    auto tools = synth::oracle_registry(s.world);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        auto ep = run_episode(s.records[i], Strategy::of(StrategyKind::DivideConquer), Budget(), llm, tools, 0);
        EXPECT_EQ(ep.outcome.kind, OutcomeKind::Answered);
        EXPECT_EQ(ep.tool_calls, 2);
        EXPECT_EQ(ep.predicted(), s.questions[i].final_gold);
        // Replies follow the gold chain hop by hop.
        int hop = 0;
        for (const auto& e : ep.events)
            if (auto* r = std::get_if<ToolReplyEvent>(&e)) EXPECT_EQ(r->answer, s.questions[i].hops[hop++].answer);
    }
}

TEST(RunEpisode, ToolsAnswerCallsEveryToolOnce) {
    auto s = testkit::synth_suite(5, 2, 4);
    ScriptedBackend llm(synth::oracle_divider_policy(s.questions));
    for (const auto& q : s.records) {
        auto ep = run_episode(q, Strategy::of(StrategyKind::ToolsAnswer), Budget(), llm, synth::oracle_registry(s.world), 0);
        EXPECT_EQ(ep.tool_calls, 4);
        EXPECT_EQ(ep.llm_calls, 1);
        std::vector<ToolKind> order;
        for (const auto& e : ep.events)
            if (auto* r = std::get_if<ToolReplyEvent>(&e)) order.push_back(r->tool);
        EXPECT_EQ(order, (std::vector<ToolKind>(kAllToolKinds.begin(), kAllToolKinds.end())));
    }
}

TEST(RunEpisode, ParseRetryThenFailure) {
    ScriptedBackend llm([](std::string_view) { return std::string("no idea"); });
    auto ep = run_episode(simple_question(), Strategy::of(StrategyKind::DivideConquer), Budget(), llm, echo_tools(), 0);
    EXPECT_EQ(ep.outcome.kind, OutcomeKind::ParseFailed);
    EXPECT_EQ(ep.llm_calls, 2);
    ASSERT_EQ(ep.events.size(), 2u);
    EXPECT_EQ(std::get<SystemNote>(ep.events[0]).llm_output, "no idea");
}

TEST(RunEpisode, RetryAllowanceResetsAfterGoodTurn) {
    // Garbage before every valid turn: fine with one retry per turn.
    ScriptedBackend llm([](std::string_view prompt) -> std::string {
        const bool after_note = prompt.ends_with("[Answer: <answer>].");
        if (!after_note) return "umm";
        if (prompt.find("Answer from the ") == std::string_view::npos) return "Sub-question: who? (Tool=Text)";
        return "[Answer: Bears]";
    });
    auto ep = run_episode(simple_question(), Strategy::of(StrategyKind::DivideConquer), Budget(), llm, echo_tools(), 0);
    EXPECT_EQ(ep.outcome.kind, OutcomeKind::Answered);
    EXPECT_EQ(ep.llm_calls, 4);
    EXPECT_EQ(ep.tool_calls, 1);
}

TEST(RunEpisode, BackendErrorIsRecorded) {
    FailingBackend llm;
    auto ep = run_episode(simple_question(), Strategy::of(StrategyKind::DivideConquer), Budget(), llm, echo_tools(), 0);
    EXPECT_EQ(ep.outcome.kind, OutcomeKind::BackendError);
    EXPECT_NE(ep.outcome.detail.find("connection refused"), std::string::npos);
}

TEST(RunEpisode, BudgetSafetyUnderErraticDividers) {
    for (std::uint64_t salt = 0; salt < 40; ++salt) {
        ScriptedBackend llm(erratic_policy(salt));
        for (int b = 1; b <= 12; ++b)
            for (auto kind : {StrategyKind::DivideConquer, StrategyKind::ToolsAnswer}) {
                auto ep = run_episode(simple_question("q" + std::to_string(salt)), Strategy::of(kind), Budget(b), llm,
                                      echo_tools(), salt);
                int replies = 0;
                for (const auto& e : ep.events) replies += std::holds_alternative<ToolReplyEvent>(e);
                EXPECT_LE(ep.tool_calls, b);
                EXPECT_EQ(ep.tool_calls, replies);
                if (ep.outcome.kind == OutcomeKind::Answered) {
                    auto* d = std::get_if<DividerEvent>(&ep.events.back());
                    ASSERT_NE(d, nullptr);
                    EXPECT_TRUE(d->is_final());
                }
            }
    }
}

TEST(RunEpisode, ContextOnlyGrows) {
    auto s = testkit::synth_suite(5, 3, 9);
    for (std::uint64_t salt = 0; salt < 5; ++salt) {
        ScriptedBackend oracle(synth::oracle_divider_policy(s.questions));
        ScriptedBackend erratic(erratic_policy(salt));
        for (const LlmBackend* llm : {static_cast<const LlmBackend*>(&oracle), static_cast<const LlmBackend*>(&erratic)}) {
            std::vector<std::string> prompts;
            EpisodeHooks hooks{[&](std::string_view p) { prompts.emplace_back(p); }};
            (void)run_episode(s.records[salt], Strategy::of(StrategyKind::DivideConquer), Budget(), *llm,
                              synth::oracle_registry(s.world), 0, hooks);
            for (std::size_t i = 1; i < prompts.size(); ++i) {
                EXPECT_GT(prompts[i].size(), prompts[i - 1].size());
                EXPECT_TRUE(prompts[i].starts_with(prompts[i - 1]));
            }
        }
    }
}

TEST(RunEpisode, HistoryPrecedesQuestion) {
    auto q = simple_question();
    q.history = {{"Who hosted?", "Dallas"}, {"When?", "2012"}};
    std::string seen;
    EpisodeHooks hooks{[&](std::string_view p) { seen = p; }};
    ScriptedBackend llm(constant_answer_policy("x"));
    (void)run_episode(q, Strategy::of(StrategyKind::DivideConquer), Budget(), llm, echo_tools(), 0, hooks);
    EXPECT_TRUE(seen.ends_with("Q: Who hosted?\nA: Dallas\nQ: When?\nA: 2012\nOpen Question: Which team won?")) << seen;
}

TEST(RunEpisode, ReplayReproducesEpisodes) {
    auto s = testkit::synth_suite(20, 2, 12);
    auto tools = synth::oracle_registry(s.world);
    for (auto kind : {StrategyKind::DivideConquer, StrategyKind::ReActStyle, StrategyKind::ToolsAnswer}) {
        ScriptedBackend llm(synth::oracle_divider_policy(s.questions));
        auto episodes = run_batch(s.records, Strategy::of(kind), Budget(), llm, tools, 5, 1);
        ReplayBackend replay(replay_outputs(episodes));
        auto again = run_batch(s.records, Strategy::of(kind), Budget(), replay, tools, 5, 1);
        EXPECT_EQ(serialize_episodes(again), serialize_episodes(episodes)) << strategy_name(kind);
    }
    // Parse retries are part of the recording too.
    ScriptedBackend flaky([](std::string_view p) -> std::string {
        return p.ends_with("[Answer: <answer>].") ? "[Answer: Bears]" : "not yet";
    });
    auto episodes = run_batch({simple_question()}, Strategy::of(StrategyKind::DivideConquer), Budget(), flaky, echo_tools(), 0, 1);
    ReplayBackend replay(replay_outputs(episodes));
    auto again = run_batch({simple_question()}, Strategy::of(StrategyKind::DivideConquer), Budget(), replay, echo_tools(), 0, 1);
    EXPECT_EQ(serialize_episodes(again), serialize_episodes(episodes));
}

TEST(RunBatch, Preconditions) {
    ScriptedBackend llm(constant_answer_policy("x"));
    EXPECT_THROW(run_batch({}, Strategy::of(StrategyKind::DivideConquer), Budget(), llm, echo_tools(), 0, 1), InvalidInput);
    EXPECT_THROW(run_batch({simple_question()}, Strategy::of(StrategyKind::DivideConquer), Budget(), llm, echo_tools(), 0, 0),
                 InvalidInput);
}

TEST(RunBatch, ParallelismDoesNotChangeOutput) {
    auto s = testkit::synth_suite(20, 2, 21);
    ScriptedBackend llm(synth::oracle_divider_policy(s.questions));
    auto tools = synth::noisy_oracle_registry(s.world, 0.3, 4);
    for (auto kind : {StrategyKind::DivideConquer, StrategyKind::ToolsAnswer, StrategyKind::ReActStyle}) {
        auto one = serialize_episodes(run_batch(s.records, Strategy::of(kind), Budget(), llm, tools, 8, 1));
        auto eight = serialize_episodes(run_batch(s.records, Strategy::of(kind), Budget(), llm, tools, 8, 8));
        EXPECT_EQ(one, eight);
    }
}

TEST(RunBatch, ThreeHopOracleAveragesThreeCalls) {
    auto s = testkit::synth_suite(100, 3, 30);
    ScriptedBackend llm(synth::oracle_divider_policy(s.questions));
    auto episodes = run_batch(s.records, Strategy::of(StrategyKind::DivideConquer), Budget(), llm,
                              synth::oracle_registry(s.world), 0, 4);
    for (const auto& ep : episodes) EXPECT_EQ(ep.outcome.kind, OutcomeKind::Answered);
    EXPECT_DOUBLE_EQ(average_tool_calls(episodes), 3.0);
}

TEST(React, ParseAndRender) {
    auto r = react::parse_output("Thought: I need the capital.\nAction: Text[What is the capital of France?]");
    ASSERT_TRUE(std::holds_alternative<DividerEvent>(r));
    const auto& d = std::get<DividerEvent>(r);
    EXPECT_EQ(d.rationale, "I need the capital.");
    EXPECT_EQ(*d.sub_question(), (SubQuestion{"What is the capital of France?", ToolKind::Text}));
    EXPECT_EQ(react::parse_output(react::render(d)), r);

    auto fin = react::parse_output("Thought: done\nAction: Finish[Paris, Lyon]");
    ASSERT_TRUE(std::holds_alternative<DividerEvent>(fin));
    EXPECT_EQ(std::get<DividerEvent>(fin).final_answer()->items, (std::vector<std::string>{"Paris", "Lyon"}));
    EXPECT_TRUE(std::holds_alternative<ParseFailure>(react::parse_output("Thought: hmm")));
    EXPECT_TRUE(std::holds_alternative<ParseFailure>(react::parse_output("Action: Telepathy[x]")));
}

TEST(Serialization, EpisodesRoundTrip) {
    auto s = testkit::synth_suite(8, 2, 40);
    ScriptedBackend llm(synth::oracle_divider_policy(s.questions));
    auto episodes = run_batch(s.records, Strategy::of(StrategyKind::DivideConquer), Budget(1), llm,
                              synth::oracle_registry(s.world), 0, 1);
    auto text = serialize_episodes(episodes);
    EXPECT_EQ(text.find("latency"), std::string::npos);
    auto back = parse_episodes(text);
    ASSERT_EQ(back.size(), episodes.size());
    EXPECT_EQ(serialize_episodes(back), text);
    EXPECT_THROW(parse_episodes("{\"kind\":\"episode\"}\n"), SchemaError);
}
