#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dcqa {

/// Everything a backend may look at for one completion.
struct LlmCall {
    std::string_view prompt;
    std::string_view qid;
    std::size_t call_index = 0;  // 0-based LLM call number within the episode
    std::uint64_t seed = 0;
};

/// Text generation. Implementations are shared by concurrently running
/// episodes and throw BackendError on failure.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const LlmCall& call) const = 0;
    virtual std::string label() const = 0;
};

/// A policy is a pure function of the prompt.
using ScriptedPolicy = std::function<std::string(std::string_view prompt)>;

class ScriptedBackend final : public LlmBackend {
public:
    explicit ScriptedBackend(ScriptedPolicy policy, std::string label = "scripted");
    std::string complete(const LlmCall& call) const override;
    std::string label() const override { return label_; }

private:
    ScriptedPolicy policy_;
    std::string label_;
};

/// Always answers `[Answer: <text>]`.
ScriptedPolicy constant_answer_policy(std::string text);

/// Never finalizes: every turn asks another sub-question of `tool_name`.
ScriptedPolicy endless_sub_question_policy(std::string tool_name = "Text");

/// Returns recorded divider outputs, indexed by (qid, call_index).
class ReplayBackend final : public LlmBackend {
public:
    explicit ReplayBackend(std::map<std::string, std::vector<std::string>> outputs,
                           std::string label = "replay");
    std::string complete(const LlmCall& call) const override;
    std::string label() const override { return label_; }

private:
    std::map<std::string, std::vector<std::string>> outputs_;
    std::string label_;
};

enum class CassetteMode {
    Off,
    Record,  // call live, store every completion
    Replay,  // never call live; a miss is a BackendError
    Auto,    // replay hits, record misses
};

/// Prompt-hash -> completion store, JSONL {"key":..,"completion":..}.
/// Appends are flushed line by line so a crash keeps earlier entries.
class Cassette {
public:
    explicit Cassette(std::string path);
    std::optional<std::string> find(const std::string& key) const;
    void store(const std::string& key, const std::string& completion);
    std::size_t size() const;

private:
    std::string path_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
};

/// Bounded concurrency plus a sliding one-minute request window.
class RequestGate {
public:
    RequestGate(std::size_t max_concurrent, std::size_t per_minute);
    void acquire();
    void release();

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t max_concurrent_, per_minute_, active_ = 0;
    std::deque<std::chrono::steady_clock::time_point> recent_;
};

struct HttpChatConfig {
    std::string endpoint = "https://api.openai.com";  // base URL, or full URL including path
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    double temperature = 0.0;
    int max_tokens = 512;
    std::vector<std::string> stop = {"\nAnswer from the "};
    std::string api_key;  // never logged or serialized
    double timeout_s = 60.0;
    std::size_t max_concurrent = 4;
    std::size_t requests_per_minute = 0;  // 0 = unlimited
    int retries = 2;
    int backoff_ms = 500;  // doubled on every retry
    std::string cassette_path;
    CassetteMode cassette_mode = CassetteMode::Off;
};

/// OpenAI-compatible chat completions over HTTP(S).
class HttpChatBackend final : public LlmBackend {
public:
    explicit HttpChatBackend(HttpChatConfig config);
    std::string complete(const LlmCall& call) const override;
    std::string label() const override { return config_.model; }

    /// Cassette key for a prompt under this configuration.
    std::string cassette_key(std::string_view prompt) const;

private:
    std::string call_once(std::string_view prompt) const;

    HttpChatConfig config_;
    std::unique_ptr<Cassette> cassette_;
    mutable RequestGate gate_;
};

/// Splits "https://host:port/some/path" into ("https://host:port", "/some/path").
std::pair<std::string, std::string> split_url(std::string_view url);

}  // namespace dcqa
