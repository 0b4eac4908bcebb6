#include <gtest/gtest.h>

#include <fstream>

#include "dcqa/benchmark.hpp"
#include "dcqa/errors.hpp"
#include "dcqa/report.hpp"
#include "helpers.hpp"
#include "synth_suite.hpp"

using namespace dcqa;

namespace {

Episode episode_with_calls(std::string qid, int calls, std::vector<std::string> answer = {}) {
    Episode e;
    e.question.qid = std::move(qid);
    e.question.question = "q?";
    e.question.gold_answers = {{"x"}};
    e.tool_calls = calls;
    if (!answer.empty()) {
        e.outcome.kind = OutcomeKind::Answered;
        e.outcome.items = std::move(answer);
    }
    return e;
}

void write(const std::string& path, const std::string& content) { std::ofstream(path) << content; }

}  // namespace

TEST(AverageToolCalls, Examples) {
    EXPECT_DOUBLE_EQ(average_tool_calls({episode_with_calls("a", 5), episode_with_calls("b", 7)}), 6.0);
    EXPECT_THROW(average_tool_calls({}), InvalidInput);
}

TEST(Evaluate, ScoresAgainstGold) {
    std::vector<Episode> eps{episode_with_calls("a", 2, {"x"}), episode_with_calls("b", 4, {"wrong"}),
                             episode_with_calls("c", 12)};
    auto r = evaluate(eps, {"gpt", "175B", "DC", 12});
    EXPECT_NEAR(r.em_pct, 100.0 / 3, 1e-9);
    EXPECT_DOUBLE_EQ(r.avg_tool_calls, 6.0);
    ASSERT_EQ(r.per_question.size(), 3u);
    EXPECT_EQ(r.per_question[2].outcome, "parse_failed");
    EXPECT_EQ(r.per_question[2].em, 0);
    EXPECT_EQ(r.context_mode, "global");

    std::map<std::string, QaRecord> gold{{"a", eps[0].question}};
    EXPECT_THROW(evaluate(eps, gold, {}), InvalidInput);
    EXPECT_THROW(evaluate({}, {}), InvalidInput);

    gold = {{"a", eps[0].question}, {"b", eps[1].question}, {"c", eps[2].question}};
    gold["b"].context_refs.text = {"doc1"};
    EXPECT_EQ(evaluate(eps, gold, {}).context_mode, "per-question");
}

TEST(Evaluate, ExactMatchImpliesFullF1) {
    std::vector<Episode> eps{episode_with_calls("a", 1, {"The X"})};
    auto r = evaluate(eps, {});
    EXPECT_EQ(r.per_question[0].em, 1);
    EXPECT_DOUBLE_EQ(r.per_question[0].f1, 1.0);
}

TEST(ReportTable, OracleRow) {
    auto s = testkit::synth_suite(20, 2, 70);
    ScriptedBackend llm(synth::oracle_divider_policy(s.questions));
    auto eps = run_batch(s.records, Strategy::of(StrategyKind::DivideConquer), Budget(), llm,
                         synth::oracle_registry(s.world), 0, 2);
    auto table = render_report_table({evaluate(eps, {"oracle", "-", "divide_conquer", 12})});
    EXPECT_NE(table.find("| LLM"), std::string::npos);
    EXPECT_NE(table.find("Average Tool Calls"), std::string::npos);
    EXPECT_NE(table.find("| 100.00 | 100.00 | 2.00"), std::string::npos) << table;
    EXPECT_EQ(table.find("Note:"), std::string::npos);
}

TEST(ReportTable, RowsInOrderWithBudgetFooter) {
    EvalReport a, b;
    a.llm = "first";
    a.em_pct = 12.345;
    b.llm = "second";
    b.budget = 5;
    auto table = render_report_table({a, b});
    EXPECT_LT(table.find("first"), table.find("second"));
    EXPECT_NE(table.find("12.35"), std::string::npos);
    EXPECT_NE(table.find("Note: maximum tool calls per question set to 5."), std::string::npos);
    auto j = report_json({a, b});
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[1]["budget"], 5);
    EXPECT_EQ(j[0]["context_mode"], "global");
}

TEST(Benchmarks, Names) {
    EXPECT_EQ(parse_benchmark_name("MultiModalQA"), BenchmarkName::MultiModalQA);
    EXPECT_EQ(parse_benchmark_name("mmcoqa"), BenchmarkName::MMCoQA);
    EXPECT_FALSE(parse_benchmark_name("squad").has_value());
    EXPECT_EQ(expected_split_size(BenchmarkName::MultiModalQA, "dev"), 2441u);
    EXPECT_EQ(expected_split_size(BenchmarkName::MMCoQA, "test"), 590u);
}

TEST(Benchmarks, MultiModalQaFiles) {
    testkit::TempDir dir("mmqa");
    write(dir.file("q.jsonl"),
          R"({"qid":"a1","question":"Which teams?","answers":[{"answer":"Bears"},{"answer":"Browns"}],)"
          R"("metadata":{"text_doc_ids":["t1"],"table_id":"tb1","image_doc_ids":["i1"]}})"
          "\n");
    write(dir.file("texts.jsonl"), R"({"id":"t1","title":"Bears","text":"The Bears have no cheerleaders."})" "\n");
    write(dir.file("tables.jsonl"),
          R"({"id":"tb1","title":"2012","table":{"header":[{"column_name":"Team"}],"table_rows":[[{"text":"Bears"}]]}})"
          "\n");
    write(dir.file("images.jsonl"), R"({"id":"i1","title":"Bears logo","path":"x.png"})" "\n");
    auto b = load_benchmark(BenchmarkName::MultiModalQA,
                            {dir.file("q.jsonl"), dir.file("texts.jsonl"), dir.file("tables.jsonl"), dir.file("images.jsonl"), ""},
                            "dev");
    ASSERT_EQ(b.records.size(), 1u);
    EXPECT_EQ(b.records[0].gold_answers, (std::vector<std::vector<std::string>>{{"Bears", "Browns"}}));
    EXPECT_EQ(b.records[0].context_refs.table, std::vector<std::string>{"tb1"});
    EXPECT_EQ(b.texts.items()[0].text, "Bears. The Bears have no cheerleaders.");
    EXPECT_EQ(b.tables.items()[0].header, std::vector<std::string>{"Team"});
    EXPECT_EQ(b.images.items()[0].caption, "Bears logo");
    ASSERT_EQ(b.warnings.size(), 1u);
    EXPECT_NE(b.warnings[0].find("2441"), std::string::npos);
}

TEST(Benchmarks, MmCoQaConversations) {
    testkit::TempDir dir("mmcoqa");
    std::string lines;
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 3; ++t)
            lines += R"({"qid":"C)" + std::to_string(c) + "_q" + std::to_string(t) +
                     R"(","question":"q","answer":[{"answer":"a"}],"history":[{"question":"h","answer":[{"answer":"x"}]}]})" "\n";
    write(dir.file("MMCoQA_test.txt"), lines);
    auto b = load_benchmark(BenchmarkName::MMCoQA, {dir.file("MMCoQA_test.txt"), "", "", "", ""}, "test");
    ASSERT_EQ(b.records.size(), 6u);
    EXPECT_EQ(conversation_id(b.records[4]), "C1");
    EXPECT_DOUBLE_EQ(questions_per_conversation(b.records), 3.0);
    EXPECT_EQ(b.records[0].history, (std::vector<HistoryTurn>{{"h", "x"}}));
}

TEST(Benchmarks, BadFiles) {
    testkit::TempDir dir("bad");
    write(dir.file("q.jsonl"),
          R"({"qid":"a","question":"q","answers":[{"answer":"x"}]})" "\n"
          R"({"qid":"b","question":"q","answers":[{"answer":"x"}]})" "\n"
          R"({"qid":"c","question":"q","answ)" "\n");
    try {
        load_benchmark(BenchmarkName::MultiModalQA, {dir.file("q.jsonl"), "", "", "", ""}, "dev");
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(load_benchmark(BenchmarkName::MultiModalQA, {dir.file("none.jsonl"), "", "", "", ""}, "dev"),
                 MissingFile);
}

TEST(QaRecords, JsonlRoundTrip) {
    testkit::TempDir dir("qa");
    auto s = testkit::synth_suite(5, 2, 71);
    s.records[0].history = {{"a?", "b"}};
    s.records[1].context_refs.image = {"img-1"};
    write_qa_jsonl(dir.file("qa.jsonl"), s.records);
    EXPECT_EQ(read_qa_jsonl(dir.file("qa.jsonl")), s.records);
    QaRecord empty;
    empty.qid = "x";
    EXPECT_THROW(validate(empty), InvalidInput);
}
