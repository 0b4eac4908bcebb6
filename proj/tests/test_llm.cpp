#include <gtest/gtest.h>

#include <atomic>
#include <fstream>

#include "dcqa/errors.hpp"
#include "dcqa/jsonl.hpp"
#include "dcqa/llm.hpp"
#include "dcqa/protocol.hpp"
#include "helpers.hpp"

using namespace dcqa;

namespace {

std::string completion_body(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

HttpChatConfig local_config(const testkit::LocalServer& server) {
    HttpChatConfig c;
    c.endpoint = server.url("/v1/chat/completions");
    c.api_key = "sk-secret-test-key";
    c.timeout_s = 5;
    c.backoff_ms = 1;
    return c;
}

}  // namespace

TEST(Scripted, PureFunctionOfPrompt) {
    ScriptedBackend llm(endless_sub_question_policy("Table"));
    auto a = llm.complete({"prompt one", "q", 0, 1});
    EXPECT_EQ(a, llm.complete({"prompt one", "other", 5, 99}));
    auto parsed = parse_divider_output(a);
    ASSERT_TRUE(std::holds_alternative<DividerEvent>(parsed));
    EXPECT_EQ(std::get<DividerEvent>(parsed).sub_question()->tool, ToolKind::Table);
    EXPECT_THROW(llm.complete({"", "q", 0, 0}), InvalidInput);
}

TEST(Scripted, ConstantAnswer) {
    ScriptedBackend llm(constant_answer_policy("banana"));
    EXPECT_EQ(llm.complete({"anything", "q", 0, 0}), "[Answer: banana]");
}

TEST(Replay, ExhaustionIsBackendError) {
    ReplayBackend llm({{"q1", {"a", "b", "c"}}});
    EXPECT_EQ(llm.complete({"p", "q1", 0, 0}), "a");
    EXPECT_EQ(llm.complete({"p", "q1", 2, 0}), "c");
    try {
        (void)llm.complete({"p", "q1", 3, 0});
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("exhausted"), std::string::npos);
    }
    EXPECT_THROW(llm.complete({"p", "unknown", 0, 0}), BackendError);
}

TEST(HttpChat, PostsOpenAiBodyAndReturnsContent) {
    nlohmann::json seen;
    std::string auth;
    testkit::LocalServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
            seen = nlohmann::json::parse(req.body);
            auth = req.get_header_value("Authorization");
            res.set_content(completion_body("[Answer: Paris]"), "application/json");
        });
    });
    HttpChatBackend llm(local_config(server));
    EXPECT_EQ(llm.complete({"Open Question: capital of France?", "q", 0, 0}), "[Answer: Paris]");
    EXPECT_EQ(seen["model"], "gpt-3.5-turbo");
    EXPECT_EQ(seen["temperature"], 0.0);
    EXPECT_EQ(seen["messages"][0]["content"], "Open Question: capital of France?");
    EXPECT_EQ(auth, "Bearer sk-secret-test-key");
}

TEST(HttpChat, RetriesTransientErrors) {
    std::atomic<int> hits{0};
    testkit::LocalServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            if (++hits < 3) {
                res.status = 503;
                return;
            }
            res.set_content(completion_body("ok"), "application/json");
        });
    });
    HttpChatBackend llm(local_config(server));
    EXPECT_EQ(llm.complete({"p", "q", 0, 0}), "ok");
    EXPECT_EQ(hits.load(), 3);
}

TEST(HttpChat, GivesUpAfterRetries) {
    std::atomic<int> hits{0};
    testkit::LocalServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 500;
        });
    });
    HttpChatBackend llm(local_config(server));
    EXPECT_THROW(llm.complete({"p", "q", 0, 0}), BackendError);
    EXPECT_EQ(hits.load(), 3);
}

TEST(HttpChat, ClientErrorsAreNotRetried) {
    std::atomic<int> hits{0};
    testkit::LocalServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 401;
        });
    });
    HttpChatBackend llm(local_config(server));
    EXPECT_THROW(llm.complete({"p", "q", 0, 0}), BackendError);
    EXPECT_EQ(hits.load(), 1);
}

TEST(HttpChat, MalformedResponse) {
    testkit::LocalServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"choices":[]})", "application/json");
        });
    });
    HttpChatBackend llm(local_config(server));
    EXPECT_THROW(llm.complete({"p", "q", 0, 0}), BackendError);
}

TEST(HttpChat, CassetteRecordThenReplayIsByteIdentical) {
    testkit::TempDir dir("cassette");
    const auto path = dir.file("chat.jsonl");
    std::atomic<int> hits{0};
    std::string first;
    {
        testkit::LocalServer server([&](httplib::Server& s) {
            s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
                res.set_content(completion_body("reply #" + std::to_string(++hits)), "application/json");
            });
        });
        auto cfg = local_config(server);
        cfg.cassette_path = path;
        cfg.cassette_mode = CassetteMode::Record;
        HttpChatBackend llm(cfg);
        first = llm.complete({"the prompt", "q", 0, 0});
        EXPECT_EQ(first, "reply #1");
    }
    // Server gone: replay must serve the recording, twice, identically.
    HttpChatConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9";
    cfg.cassette_path = path;
    cfg.cassette_mode = CassetteMode::Replay;
    HttpChatBackend replay(cfg);
    EXPECT_EQ(replay.complete({"the prompt", "q", 0, 0}), first);
    EXPECT_EQ(replay.complete({"the prompt", "q", 0, 0}), first);
    EXPECT_THROW(replay.complete({"another prompt", "q", 0, 0}), BackendError);
    EXPECT_EQ(read_text(path).find("sk-secret"), std::string::npos);
}

TEST(HttpChat, AutoModeRecordsMissesOnly) {
    testkit::TempDir dir("cassette-auto");
    std::atomic<int> hits{0};
    testkit::LocalServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.set_content(completion_body("x"), "application/json");
        });
    });
    auto cfg = local_config(server);
    cfg.cassette_path = dir.file("c.jsonl");
    cfg.cassette_mode = CassetteMode::Auto;
    HttpChatBackend llm(cfg);
    (void)llm.complete({"p", "q", 0, 0});
    (void)llm.complete({"p", "q", 1, 0});
    EXPECT_EQ(hits.load(), 1);
    EXPECT_EQ(Cassette(cfg.cassette_path).size(), 1u);
}

TEST(RequestGate, CapsConcurrency) {
    RequestGate gate(2, 0);
    std::atomic<int> active{0}, peak{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&] {
            gate.acquire();
            int now = ++active;
            int prev = peak.load();
            while (now > prev && !peak.compare_exchange_weak(prev, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --active;
            gate.release();
        });
    for (auto& t : threads) t.join();
    EXPECT_LE(peak.load(), 2);
}

TEST(SplitUrl, Parts) {
    EXPECT_EQ(split_url("https://api.openai.com/v1/chat/completions"),
              (std::pair<std::string, std::string>{"https://api.openai.com", "/v1/chat/completions"}));
    EXPECT_EQ(split_url("http://localhost:8080").first, "http://localhost:8080");
}
