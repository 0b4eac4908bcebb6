#include <gtest/gtest.h>

#include <set>

#include "dcqa/errors.hpp"
#include "dcqa/metrics.hpp"
#include "dcqa/orchestrator.hpp"
#include "dcqa/report.hpp"
#include "dcqa/synthworld.hpp"
#include "synth_suite.hpp"

using namespace dcqa;
using namespace dcqa::synth;

TEST(World, SameSeedSameWorld) {
    auto a = generate_world(5, 3, 42);
    auto b = generate_world(5, 3, 42);
    EXPECT_EQ(serialize_world(a), serialize_world(b));
    EXPECT_EQ(a.entities.size(), 5u);
    EXPECT_NE(serialize_world(a), serialize_world(generate_world(5, 3, 43)));
}

TEST(World, TooFewEntities) {
    EXPECT_THROW(generate_world(2, 3, 0), InvalidInput);
    EXPECT_THROW(generate_world(5, 0, 0), InvalidInput);
    EXPECT_NO_THROW(generate_world(4, 3, 0));
}

TEST(World, FactsAreFunctional) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto w = generate_world(10, 2, seed + 7);
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& f : w.facts) {
            EXPECT_TRUE(seen.emplace(f.subject, f.relation).second);
            EXPECT_NE(f.subject, f.object);
            EXPECT_NE(f.modality, ToolKind::Search);
        }
    }
}

TEST(World, DepthMaxChainAlwaysExists) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto w = generate_world(4, 3, seed);
        EXPECT_NO_THROW(generate_questions(w, 1, 3, seed, false));
    }
}

TEST(Questions, DepthOneHasOneHop) {
    auto w = generate_world(20, 3, 1);
    auto qs = generate_questions(w, 5, 1, 1);
    for (const auto& q : qs) {
        ASSERT_EQ(q.hops.size(), 1u);
        EXPECT_EQ(q.final_gold, std::vector<std::string>{q.hops[0].answer});
    }
}

TEST(Questions, ChainsFollowTheWorld) {
    auto w = generate_world(60, 3, 5);
    auto qs = generate_questions(w, 50, 3, 5);
    ASSERT_EQ(qs.size(), 50u);
    std::set<std::string> surfaces;
    for (const auto& q : qs) {
        EXPECT_TRUE(surfaces.insert(q.question).second);
        ASSERT_EQ(q.hops.size(), 3u);
        for (std::size_t i = 0; i < q.hops.size(); ++i) {
            const auto& h = q.hops[i];
            if (i > 0) EXPECT_EQ(h.subject, q.hops[i - 1].answer);
            const auto* f = w.find(h.subject, h.relation);
            ASSERT_NE(f, nullptr);
            EXPECT_EQ(f->object, h.answer);
            EXPECT_EQ(f->modality, h.tool);
            EXPECT_EQ(h.sub_question, sub_question_text(h.relation, h.subject));
        }
        EXPECT_EQ(q.final_gold.front(), q.hops.back().answer);
    }
}

TEST(Questions, ModalitiesAreMixed) {
    auto w = generate_world(60, 3, 6);
    for (int depth : {2, 3}) {
        for (const auto& q : generate_questions(w, 30, depth, 6)) {
            std::set<ToolKind> tools;
            for (const auto& h : q.hops) tools.insert(h.tool);
            EXPECT_GE(tools.size(), 2u);
        }
    }
}

TEST(Questions, Preconditions) {
    auto w = generate_world(4, 2, 0);
    EXPECT_THROW(generate_questions(w, 1, 3, 0), InvalidInput);
    EXPECT_THROW(generate_questions(w, 1, 0, 0), InvalidInput);
    EXPECT_THROW(generate_questions(w, 100000, 2, 0), InsufficientChains);
}

TEST(Questions, RecordCarriesGold) {
    auto s = testkit::synth_suite(3, 2, 8);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        EXPECT_EQ(s.records[i].qid, s.questions[i].id);
        EXPECT_EQ(s.records[i].gold_answers, (std::vector<std::vector<std::string>>{s.questions[i].final_gold}));
        EXPECT_NO_THROW(validate(s.records[i]));
    }
}

TEST(OraclePolicy, FollowsTheDecomposition) {
    auto s = testkit::synth_suite(1, 3, 11);
    const auto& q = s.questions[0];
    auto policy = oracle_divider_policy(q);
    auto prompt = initial_prompt(s.records[0], Strategy::of(StrategyKind::DivideConquer));
    auto first = parse_divider_output(policy(prompt));
    ASSERT_TRUE(std::holds_alternative<DividerEvent>(first));
    EXPECT_EQ(std::get<DividerEvent>(first).sub_question()->text, q.hops[0].sub_question);

    // A wrong reply is carried into the next hop as given.
    prompt += "\n" + render_divider(std::get<DividerEvent>(first)) + "\n" + render_tool_reply(q.hops[0].tool, "E999");
    auto second = parse_divider_output(policy(prompt));
    ASSERT_TRUE(std::holds_alternative<DividerEvent>(second));
    EXPECT_EQ(std::get<DividerEvent>(second).sub_question()->text, sub_question_text(q.hops[1].relation, "E999"));
}

TEST(OraclePolicy, UnknownQuestion) {
    auto s = testkit::synth_suite(1, 2, 12);
    auto policy = oracle_divider_policy(s.questions);
    QaRecord other{"x", "What is nothing?", {{"y"}}, {}, {}, "dev", ""};
    auto r = parse_divider_output(policy(initial_prompt(other, Strategy::of(StrategyKind::DivideConquer))));
    ASSERT_TRUE(std::holds_alternative<DividerEvent>(r));
    EXPECT_TRUE(std::get<DividerEvent>(r).is_final());
}

TEST(EndToEnd, LexicalToolsSolveTheWorld) {
    auto s = testkit::synth_suite(40, 2, 13);
    ScriptedBackend llm(oracle_divider_policy(s.questions));
    auto eps = run_batch(s.records, Strategy::of(StrategyKind::DivideConquer), Budget(), llm, lexical_registry(s.world), 0, 4);
    auto report = evaluate(eps, {"oracle"});
    EXPECT_DOUBLE_EQ(report.em_pct, 100.0);
}

TEST(EndToEnd, ToolsAnswerIsWorseThanDividing) {
    auto s = testkit::synth_suite(100, 2, 14);
    ScriptedBackend llm(oracle_divider_policy(s.questions));
    auto tools = oracle_registry(s.world);
    auto dc = evaluate(run_batch(s.records, Strategy::of(StrategyKind::DivideConquer), Budget(), llm, tools, 0, 4), {"o"});
    auto ta = evaluate(run_batch(s.records, Strategy::of(StrategyKind::ToolsAnswer), Budget(), llm, tools, 0, 4), {"o"});
    EXPECT_DOUBLE_EQ(dc.em_pct, 100.0);
    EXPECT_LT(ta.em_pct, 100.0);
    EXPECT_DOUBLE_EQ(ta.avg_tool_calls, 4.0);
}

TEST(EndToEnd, NoiseHurts) {
    auto s = testkit::synth_suite(100, 2, 15);
    ScriptedBackend llm(oracle_divider_policy(s.questions));
    auto clean = evaluate(run_batch(s.records, Strategy::of(StrategyKind::DivideConquer), Budget(), llm,
                                    noisy_oracle_registry(s.world, 0.0, 1), 0, 4), {"o"});
    auto noisy = evaluate(run_batch(s.records, Strategy::of(StrategyKind::DivideConquer), Budget(), llm,
                                    noisy_oracle_registry(s.world, 0.5, 1), 0, 4), {"o"});
    EXPECT_DOUBLE_EQ(clean.em_pct, 100.0);
    EXPECT_LT(noisy.em_pct, clean.em_pct);
}

TEST(Serialization, WorldAndQuestionsRoundTrip) {
    auto s = testkit::synth_suite(10, 3, 16);
    auto text = serialize_world(s.world);
    auto back = parse_world(text);
    EXPECT_EQ(back.facts, s.world.facts);
    EXPECT_EQ(back.entities, s.world.entities);
    EXPECT_EQ(back.depth_max, s.world.depth_max);
    EXPECT_EQ(serialize_world(back), text);
    for (const auto& q : s.questions) EXPECT_EQ(synth_question_from_json(to_json(q)), q);
    EXPECT_THROW(parse_world("{\"kind\":\"fact\"}\n"), SchemaError);
}

TEST(Stores, EachFactLivesInOneModality) {
    auto w = generate_world(30, 2, 17);
    auto texts = text_store(w);
    auto tables = table_store(w);
    auto captions = caption_store(w);
    std::size_t table_rows = 0;
    for (const auto& t : tables.items()) table_rows += t.rows.size();
    EXPECT_EQ(texts.size() + table_rows + captions.size(), w.facts.size());
    EXPECT_EQ(texts.size(), w.facts_of(ToolKind::Text).size());
    EXPECT_EQ(captions.size(), w.facts_of(ToolKind::Image).size());
}
