// HTTP transport for the chat backend and the remote tools. All of
// cpp-httplib is confined to this translation unit.

#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dcqa/errors.hpp"
#include "dcqa/http_tools.hpp"
#include "dcqa/llm.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa {

namespace {

void set_timeouts(httplib::Client& cli, double seconds) {
    auto whole = static_cast<time_t>(seconds);
    auto micros = static_cast<time_t>((seconds - static_cast<double>(whole)) * 1e6);
    cli.set_connection_timeout(whole, micros);
    cli.set_read_timeout(whole, micros);
    cli.set_write_timeout(whole, micros);
}

struct GateHold {
    explicit GateHold(RequestGate& g) : gate(g) { gate.acquire(); }
    ~GateHold() { gate.release(); }
    GateHold(const GateHold&) = delete;
    GateHold& operator=(const GateHold&) = delete;
    RequestGate& gate;
};

}  // namespace

// ---------------------------------------------------------------- chat backend

HttpChatBackend::HttpChatBackend(HttpChatConfig config)
    : config_(std::move(config)), gate_(config_.max_concurrent, config_.requests_per_minute) {
    auto [base, path] = split_url(config_.endpoint);
    if (!path.empty() && path != "/") {
        config_.endpoint = base;
        config_.path = path;
    } else {
        config_.endpoint = base;
    }
    if (config_.cassette_mode != CassetteMode::Off) {
        if (config_.cassette_path.empty()) throw InvalidInput("cassette mode requires a cassette path");
        cassette_ = std::make_unique<Cassette>(config_.cassette_path);
    }
}

std::string HttpChatBackend::cassette_key(std::string_view prompt) const {
    std::string material = config_.model + '\x1f' + std::to_string(config_.temperature) + '\x1f' +
                           std::to_string(config_.max_tokens) + '\x1f';
    material += prompt;
    return text::hex64(text::fnv1a(material));
}

std::string HttpChatBackend::complete(const LlmCall& call) const {
    if (call.prompt.empty()) throw InvalidInput("empty prompt");
    const auto key = cassette_ ? cassette_key(call.prompt) : std::string();
    if (cassette_ && (config_.cassette_mode == CassetteMode::Replay || config_.cassette_mode == CassetteMode::Auto)) {
        if (auto hit = cassette_->find(key)) return *hit;
        if (config_.cassette_mode == CassetteMode::Replay)
            throw BackendError("cassette miss for prompt " + key);
    }

    std::optional<BackendError> last;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms) * (1 << (attempt - 1)));
        try {
            auto out = call_once(call.prompt);
            if (cassette_ && config_.cassette_mode != CassetteMode::Replay) cassette_->store(key, out);
            return out;
        } catch (const BackendError& e) {
            if (!e.transient()) throw;
            last = e;
        }
    }
    throw BackendError("giving up after " + std::to_string(config_.retries + 1) + " attempts: " + last->what());
}

std::string HttpChatBackend::call_once(std::string_view prompt) const {
    nlohmann::json body{{"model", config_.model},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                        {"temperature", config_.temperature},
                        {"max_tokens", config_.max_tokens}};
    if (!config_.stop.empty()) body["stop"] = config_.stop;

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    GateHold hold(gate_);
    httplib::Client cli(config_.endpoint);
    set_timeouts(cli, config_.timeout_s);
    auto res = cli.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) throw BackendError("transport error: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500)
        throw BackendError("server returned HTTP " + std::to_string(res->status), true);
    if (res->status != 200) throw BackendError("server returned HTTP " + std::to_string(res->status));
    try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed completion response: ") + e.what());
    }
}

// ---------------------------------------------------------------- tools

HttpToolClient::HttpToolClient(HttpToolConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw InvalidInput("http tool needs a URL");
}

ToolResponse HttpToolClient::answer(const ToolRequest& request) const {
    auto [base, path] = split_url(config_.url);
    if (path.empty()) path = "/";
    httplib::Client cli(base);
    set_timeouts(cli, config_.timeout_s);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    nlohmann::json body{{"question", request.question}, {"context_refs", request.context_refs}};
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res || res->status != 200) return ToolResponse::failure();
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("answer") || !j["answer"].is_string())
        return ToolResponse::failure();
    std::optional<double> confidence;
    if (j.contains("confidence") && j["confidence"].is_number()) confidence = j["confidence"].get<double>();
    return ToolResponse::ok(j["answer"].get<std::string>(), confidence);
}

SearchToolClient::SearchToolClient(SearchConfig config) : config_(std::move(config)) {}

ToolResponse SearchToolClient::answer(const ToolRequest& request) const {
    if (config_.api_key.empty()) return ToolResponse::failure();
    auto [base, path] = split_url(config_.url);
    if (path.empty()) path = "/";
    httplib::Client cli(base);
    set_timeouts(cli, config_.timeout_s);
    httplib::Params params{{"q", request.question}, {"api_key", config_.api_key}, {"engine", config_.engine}};
    auto res = cli.Get(path, params, httplib::Headers{});
    if (!res || res->status != 200) return ToolResponse::failure();
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return ToolResponse::failure();
    auto organic = j.find("organic_results");
    if (organic == j.end() || !organic->is_array()) return ToolResponse::failure();
    for (const auto& r : *organic)
        if (r.is_object() && r.contains("snippet") && r["snippet"].is_string())
            return ToolResponse::ok(r["snippet"].get<std::string>());
    return ToolResponse::failure();
}

}  // namespace dcqa
