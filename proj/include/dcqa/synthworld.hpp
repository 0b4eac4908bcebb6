#pragma once

// Seeded synthetic worlds for checking the orchestration end to end.
//
// Entities are opaque ids ("E17"), relations opaque names ("rel_capital"),
// and every fact lives in exactly one of the Text, Table or Image stores, so
// the lexical stand-in tools resolve by exact token match and no outside
// knowledge can leak into an answer.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcqa/llm.hpp"
#include "dcqa/protocol.hpp"
#include "dcqa/qa_record.hpp"
#include "dcqa/stores.hpp"
#include "dcqa/toolkit.hpp"

namespace dcqa::synth {

struct Fact {
    std::string subject;
    std::string relation;
    std::string object;
    ToolKind modality;  // Text, Table or Image
    bool operator==(const Fact&) const = default;
};

struct FactGraph {
    std::uint64_t seed = 0;
    int depth_max = 1;
    std::vector<std::string> entities;
    std::vector<std::string> relations;
    std::vector<Fact> facts;

    /// Object of the functional (subject, relation) pair, if any.
    const Fact* find(const std::string& subject, const std::string& relation) const;
    std::vector<OracleFact> facts_of(ToolKind modality) const;
};

struct Hop {
    std::string sub_question;  // with the previous hop's gold answer substituted
    std::string relation;
    std::string subject;
    ToolKind tool;
    std::string answer;
    bool operator==(const Hop&) const = default;
};

struct SynthQuestion {
    std::string id;
    std::string question;  // surface form, composed back to front
    std::vector<Hop> hops;
    std::vector<std::string> final_gold;
    int depth = 1;
    bool operator==(const SynthQuestion&) const = default;
};

/// Throws InvalidInput unless num_entities >= depth_max + 1 and depth_max >= 1.
FactGraph generate_world(int num_entities, int depth_max, std::uint64_t seed);

/// `n` distinct relation chains of length `depth`. With `mix_modalities`,
/// chains of depth >= 2 never use the same tool on every hop.
/// Throws InvalidInput if depth is outside [1, depth_max], and
/// InsufficientChains if the world has fewer than `n` eligible chains.
std::vector<SynthQuestion> generate_questions(const FactGraph& world, int n, int depth, std::uint64_t seed,
                                              bool mix_modalities = true);

/// "What is the <relation> of <subject>?"
std::string sub_question_text(const std::string& relation, const std::string& subject);

QaRecord to_qa_record(const SynthQuestion& q);

// Stores realizing each fact in its own modality.
TextStore text_store(const FactGraph& world);
TableStore table_store(const FactGraph& world);
CaptionStore caption_store(const FactGraph& world);

/// Oracle tools for Text/Table/Image (each sees only its own facts) and a
/// failing Search stub.
ToolRegistry oracle_registry(const FactGraph& world);

/// The oracle registry with every tool wrapped in NoisyTool(p); corrupted
/// answers are other entity ids.
ToolRegistry noisy_oracle_registry(const FactGraph& world, double p, std::uint64_t noise_seed);

/// BM25 text tool, table lookup, caption tool over the world's stores.
ToolRegistry lexical_registry(const FactGraph& world);

/// Divider policy that follows the gold decomposition. It finds its question
/// by the last "Open Question:" line, counts the tool replies that follow,
/// substitutes the latest reply into the next hop and ends with the final
/// answer. Replies are taken as given, so tool errors propagate.
/// ToolsAnswer prompts are answered with the first non-failed reply; ReAct
/// prompts get ReAct-formatted moves.
ScriptedPolicy oracle_divider_policy(const std::vector<SynthQuestion>& questions);
ScriptedPolicy oracle_divider_policy(const SynthQuestion& question);

nlohmann::json to_json(const SynthQuestion& q);
SynthQuestion synth_question_from_json(const nlohmann::json& j);

/// World JSONL: one {"kind":"world",..} header then one {"kind":"fact",..} per fact.
std::string serialize_world(const FactGraph& world);
FactGraph parse_world(std::string_view jsonl);

}  // namespace dcqa::synth
