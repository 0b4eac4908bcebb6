#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcqa/llm.hpp"
#include "dcqa/orchestrator.hpp"
#include "dcqa/protocol.hpp"
#include "dcqa/qa_record.hpp"
#include "dcqa/toolkit.hpp"

namespace dcqa::datagen {

/// One divider turn as written in the shot file, with its parse.
struct ShotTurn {
    std::string text;  // verbatim divider output, or the tool answer
    TranscriptEvent event;
};

/// A worked few-shot example: question and the alternating divider/tool
/// turns that answer it.
struct Shot {
    std::string id;
    std::string instruction;
    std::string question;
    std::vector<ShotTurn> turns;
    std::vector<std::string> gold;  // optional; lets the shot be validated like a generated record
    std::string focus;              // dominant modality, informational
};

/// Throws InvalidShot unless every divider turn survives
/// parse(render(parse(text))) unchanged and the turns alternate
/// divider / tool reply and end in a final answer.
void validate_shot(const Shot& shot);

/// Shot library JSONL:
///   {"id","focus","instruction","question","gold":[..],
///    "turns":[{"role":"divider","text":..},{"role":"tool","tool":"Text","answer":..},..]}
/// Throws MissingFile, SchemaError, or InvalidShot.
std::vector<Shot> load_shots(const std::string& path);
nlohmann::json to_json(const Shot& shot);

/// Question line, then divider turns verbatim and tool turns as
/// "Answer from the X Tool: ..." lines.
std::string render_shot_body(const Shot& shot);

struct PromptOptions {
    std::string instruction;    // used when there are no shots; empty means the divider default
    std::size_t max_chars = 0;  // 0 = unlimited; otherwise oldest shots are dropped first
};

/// Instruction, each shot's body, then the target question. All shots must
/// share one instruction; it is written once at the top. Throws InvalidShot.
std::string assemble_prompt(const std::vector<Shot>& shots, const QaRecord& question,
                            const PromptOptions& options = {});

/// The few-shot block alone, for Strategy::shots.
std::string render_shots(const std::vector<Shot>& shots);

/// Seeded uniform sample without replacement. Throws InvalidInput when
/// n exceeds the benchmark size.
std::vector<QaRecord> sample_training_subset(const std::vector<QaRecord>& benchmark, std::size_t n = 2000,
                                             std::uint64_t seed = 0);

enum class Granularity { WholeTranscript, PerTurn };
enum class ReplyMode {
    LiveTools,        // the generator divides, real or stand-in tools answer
    GeneratorInvents  // the generator writes the whole transcript, tool replies included
};

struct GenConfig {
    double keep_threshold = 0.8;
    Granularity granularity = Granularity::WholeTranscript;
    ReplyMode mode = ReplyMode::LiveTools;
    std::size_t parallelism = 1;
    std::uint64_t run_seed = 0;
    PromptOptions prompt;
};

struct FinetuneRecord {
    std::string qid;
    std::string prompt;
    std::string completion;
    bool validated = false;
    double f1 = 0.0;
    int tool_calls = 0;
};

struct GenReport {
    std::size_t questions = 0;
    std::size_t records = 0;
    std::size_t kept = 0;
    std::size_t parse_failures = 0;
    std::size_t budget_exhaustions = 0;
    std::size_t backend_errors = 0;
    double keep_threshold = 0.8;
    std::string mode;
    std::string granularity;
};

struct GenResult {
    std::vector<FinetuneRecord> records;
    GenReport report;
};

/// Re-checks a record: the completion must parse into a well-formed
/// transcript whose final answer scores F1 >= threshold against `gold`.
/// Idempotent.
FinetuneRecord validate_record(FinetuneRecord record, const std::vector<std::vector<std::string>>& gold,
                               double threshold);

/// Runs the generator over `subset` and packages prompt/completion pairs.
/// Per-question failures are counted in the report, never thrown.
GenResult generate_dataset(const std::vector<QaRecord>& subset, const std::vector<Shot>& shots,
                           const LlmBackend& generator, const ToolRegistry& tools, const Budget& budget,
                           const GenConfig& config = {});

/// {"prompt","completion","meta":{"qid","f1","tool_calls","validated"}}
nlohmann::json to_json(const FinetuneRecord& record);
nlohmann::json to_json(const GenReport& report);

}  // namespace dcqa::datagen
