#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dcqa/llm.hpp"
#include "dcqa/protocol.hpp"
#include "dcqa/qa_record.hpp"
#include "dcqa/toolkit.hpp"

namespace dcqa {

enum class StrategyKind { DivideConquer, ToolsAnswer, ReActStyle };

/// "divide-conquer", "tools-answer", "react".
std::string_view strategy_name(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view name);

/// Default instruction for the divide-and-conquer divider.
extern const std::string kDivideConquerInstruction;
/// Header of the single ToolsAnswer prompt; scripted policies key on it.
extern const std::string kToolsAnswerInstruction;
/// Header of the ReAct prompt; scripted policies key on it.
extern const std::string kReActInstruction;
/// Prefix of the line carrying the question being answered.
inline constexpr std::string_view kQuestionPrefix = "Open Question: ";
inline constexpr std::string_view kObservationPrefix = "Observation: ";

struct Strategy {
    StrategyKind kind = StrategyKind::DivideConquer;
    std::string instruction;  // empty: the kind's default
    std::string shots;        // pre-rendered few-shot block placed after the instruction

    static Strategy of(StrategyKind kind) { return Strategy{kind, {}, {}}; }
};

/// Tool-call and parse-retry limits for one episode.
class Budget {
public:
    /// Throws InvalidInput unless max_tool_calls >= 1 and max_parse_retries >= 0.
    explicit Budget(int max_tool_calls = 12, int max_parse_retries = 1);
    int max_tool_calls() const { return max_tool_calls_; }
    int max_parse_retries() const { return max_parse_retries_; }

private:
    int max_tool_calls_;
    int max_parse_retries_;
};

enum class OutcomeKind { Answered, BudgetExhausted, ParseFailed, BackendError };

std::string_view outcome_name(OutcomeKind kind);

struct Outcome {
    OutcomeKind kind = OutcomeKind::ParseFailed;
    std::vector<std::string> items;  // Answered only
    std::string detail;              // ParseFailed / BackendError
};

struct Episode {
    QaRecord question;
    StrategyKind strategy = StrategyKind::DivideConquer;
    std::vector<TranscriptEvent> events;
    int tool_calls = 0;
    int llm_calls = 0;
    Outcome outcome;
    std::uint64_t seed = 0;

    /// Final answer items; empty unless the episode was answered.
    const std::vector<std::string>& predicted() const;
};

struct EpisodeHooks {
    /// Called with every prompt sent to the LLM, in order.
    std::function<void(std::string_view)> on_prompt;
};

/// Runs one question under `strategy`. Backend failures and unparseable
/// output become recorded outcomes; nothing is thrown for them.
Episode run_episode(const QaRecord& question, const Strategy& strategy, const Budget& budget,
                    const LlmBackend& llm, const ToolRegistry& tools, std::uint64_t seed,
                    const EpisodeHooks& hooks = {});

/// Per-episode seed derived from the run seed and the question id.
std::uint64_t episode_seed(std::uint64_t run_seed, std::string_view qid);

/// Runs every question with `parallelism` workers. Output order follows
/// input order and each episode is identical to a sequential run.
/// Throws InvalidInput for an empty question list or parallelism 0.
std::vector<Episode> run_batch(const std::vector<QaRecord>& questions, const Strategy& strategy,
                               const Budget& budget, const LlmBackend& llm, const ToolRegistry& tools,
                               std::uint64_t run_seed, std::size_t parallelism);

/// The prompt that opens an episode (instruction, shots, history, question).
std::string initial_prompt(const QaRecord& question, const Strategy& strategy);

/// Prior conversation turns as alternating "Q: ..." / "A: ..." lines.
std::string render_history(const std::vector<HistoryTurn>& history);

namespace react {

/// `Thought: ...` / `Action: <Tool>[<input>]`; `Action: Finish[<answer>]` ends
/// the episode. The last Action line wins.
ParseResult parse_output(std::string_view text);
std::string render(const DividerEvent& event);

}  // namespace react

// Episode JSONL: a header line
//   {"kind":"episode","qid","question","strategy","seed","outcome","answer",
//    "detail","tool_calls","llm_calls","num_events"}
// followed by `num_events` transcript event lines.
std::string serialize_episode(const Episode& episode);
std::string serialize_episodes(const std::vector<Episode>& episodes);
/// Episodes read back carry only qid and question text in `question`.
std::vector<Episode> parse_episodes(std::string_view jsonl);
std::vector<Episode> read_episodes(const std::string& path);

/// The divider outputs an LLM would have produced for these episodes, keyed
/// by qid, in call order. Feed to ReplayBackend.
std::map<std::string, std::vector<std::string>> replay_outputs(const std::vector<Episode>& episodes);

}  // namespace dcqa
