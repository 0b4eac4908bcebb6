#include "dcqa/llm.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "dcqa/errors.hpp"
#include "dcqa/jsonl.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa {

ScriptedBackend::ScriptedBackend(ScriptedPolicy policy, std::string label)
    : policy_(std::move(policy)), label_(std::move(label)) {
    if (!policy_) throw InvalidInput("scripted backend needs a policy");
}

std::string ScriptedBackend::complete(const LlmCall& call) const {
    if (call.prompt.empty()) throw InvalidInput("empty prompt");
    return policy_(call.prompt);
}

ScriptedPolicy constant_answer_policy(std::string text) {
    return [text = std::move(text)](std::string_view) { return "[Answer: " + text + "]"; };
}

ScriptedPolicy endless_sub_question_policy(std::string tool_name) {
    return [tool = std::move(tool_name)](std::string_view prompt) {
        // Vary the question with the prompt length so every turn differs.
        return "I still need more information. Sub-question: What else is known about item " +
               std::to_string(prompt.size()) + "? (Tool=" + tool + ")";
    };
}

ReplayBackend::ReplayBackend(std::map<std::string, std::vector<std::string>> outputs, std::string label)
    : outputs_(std::move(outputs)), label_(std::move(label)) {}

std::string ReplayBackend::complete(const LlmCall& call) const {
    auto it = outputs_.find(std::string(call.qid));
    if (it == outputs_.end()) throw BackendError("replay: no recording for " + std::string(call.qid));
    if (call.call_index >= it->second.size())
        throw BackendError("replay exhausted for " + std::string(call.qid) + " after " +
                           std::to_string(it->second.size()) + " calls");
    return it->second[call.call_index];
}

Cassette::Cassette(std::string path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    for_each_jsonl(path_, [&](const nlohmann::json& j, std::size_t) {
        entries_[j.at("key").get<std::string>()] = j.at("completion").get<std::string>();
    });
}

std::optional<std::string> Cassette::find(const std::string& key) const {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

void Cassette::store(const std::string& key, const std::string& completion) {
    std::lock_guard lock(mu_);
    if (!entries_.emplace(key, completion).second) return;
    auto parent = std::filesystem::path(path_).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << nlohmann::json{{"key", key}, {"completion", completion}}.dump() << '\n';
}

std::size_t Cassette::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

RequestGate::RequestGate(std::size_t max_concurrent, std::size_t per_minute)
    : max_concurrent_(max_concurrent == 0 ? 1 : max_concurrent), per_minute_(per_minute) {}

void RequestGate::acquire() {
    std::unique_lock lock(mu_);
    for (;;) {
        cv_.wait(lock, [&] { return active_ < max_concurrent_; });
        if (per_minute_ == 0) break;
        auto now = std::chrono::steady_clock::now();
        while (!recent_.empty() && now - recent_.front() >= std::chrono::minutes(1)) recent_.pop_front();
        if (recent_.size() < per_minute_) {
            recent_.push_back(now);
            break;
        }
        cv_.wait_until(lock, recent_.front() + std::chrono::minutes(1));
    }
    ++active_;
}

void RequestGate::release() {
    {
        std::lock_guard lock(mu_);
        --active_;
    }
    cv_.notify_all();
}

std::pair<std::string, std::string> split_url(std::string_view url) {
    auto scheme = url.find("://");
    auto host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
    auto slash = url.find('/', host_start);
    if (slash == std::string_view::npos) return {std::string(url), ""};
    return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

}  // namespace dcqa
