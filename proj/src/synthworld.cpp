#include "dcqa/synthworld.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <unordered_map>

#include "dcqa/errors.hpp"
#include "dcqa/orchestrator.hpp"
#include "dcqa/rng.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa::synth {

namespace {

constexpr std::array<std::string_view, 12> kRelationNames = {
    "rel_capital", "rel_color",  "rel_founder", "rel_partner", "rel_origin", "rel_leader",
    "rel_rival",   "rel_mentor", "rel_neighbor", "rel_author", "rel_owner", "rel_sponsor"};

constexpr double kFactDensity = 0.6;
constexpr std::array<ToolKind, 3> kFactModalities = {ToolKind::Text, ToolKind::Table, ToolKind::Image};

std::string relation_name(std::size_t i) {
    if (i < kRelationNames.size()) return std::string(kRelationNames[i]);
    return "rel_r" + std::to_string(i);
}

std::string tool_module(ToolKind k) { return std::string(tool_name(k)); }

// Answers extracted from the prompt that follows the question line.
struct PromptState {
    const SynthQuestion* question = nullptr;
    std::vector<std::string> replies;
};

PromptState read_prompt(std::string_view prompt, const std::unordered_map<std::string, const SynthQuestion*>& by_surface,
                        std::string_view reply_prefix, bool tool_replies) {
    PromptState st;
    auto pos = prompt.rfind(kQuestionPrefix);
    if (pos == std::string_view::npos) return st;
    auto rest = prompt.substr(pos + kQuestionPrefix.size());
    auto eol = rest.find('\n');
    auto surface = std::string(text::trim(rest.substr(0, eol)));
    if (auto it = by_surface.find(surface); it != by_surface.end()) st.question = it->second;
    if (eol == std::string_view::npos) return st;
    for (const auto& line : text::split_lines(rest.substr(eol + 1))) {
        std::string_view l = line;
        if (!l.starts_with(reply_prefix)) continue;
        if (tool_replies) {
            auto colon = l.find(" Tool: ");
            if (colon == std::string_view::npos) continue;
            st.replies.emplace_back(text::trim(l.substr(colon + 7)));
        } else {
            st.replies.emplace_back(text::trim(l.substr(reply_prefix.size())));
        }
    }
    return st;
}

DividerEvent next_move(const SynthQuestion& q, const std::vector<std::string>& replies) {
    const auto k = replies.size();
    if (k < q.hops.size()) {
        const auto& hop = q.hops[k];
        const auto& subject = k == 0 ? hop.subject : replies[k - 1];
        std::string rationale = (k == 0 ? "To answer this question, I first need to know the " : "Now, I need to know the ") +
                                hop.relation + " of " + subject + " from the " + tool_module(hop.tool) +
                                " module. So, I need to ask this sub-question:";
        return DividerEvent{std::move(rationale), SubQuestion{sub_question_text(hop.relation, subject), hop.tool}};
    }
    std::string raw = replies.empty() ? "unknown" : replies.back();
    auto items = split_final_answer(raw);
    if (items.empty()) {
        raw = "unknown";
        items = {raw};
    }
    return DividerEvent{"Based on the answers, the final answer is:", FinalAnswer{std::move(items), std::move(raw)}};
}

}  // namespace

const Fact* FactGraph::find(const std::string& subject, const std::string& relation) const {
    for (const auto& f : facts)
        if (f.subject == subject && f.relation == relation) return &f;
    return nullptr;
}

std::vector<OracleFact> FactGraph::facts_of(ToolKind modality) const {
    std::vector<OracleFact> out;
    for (const auto& f : facts)
        if (f.modality == modality) out.push_back({f.subject, f.relation, f.object});
    return out;
}

FactGraph generate_world(int num_entities, int depth_max, std::uint64_t seed) {
    if (depth_max < 1) throw InvalidInput("depth_max must be at least 1");
    if (num_entities < depth_max + 1)
        throw InvalidInput("num_entities must be at least depth_max + 1 (got " + std::to_string(num_entities) +
                           " entities for depth " + std::to_string(depth_max) + ")");
    Rng rng(seed);
    FactGraph g;
    g.seed = seed;
    g.depth_max = depth_max;
    for (int i = 0; i < num_entities; ++i) g.entities.push_back("E" + std::to_string(i));
    const auto num_relations = static_cast<std::size_t>(std::max(3, depth_max + 2));
    for (std::size_t r = 0; r < num_relations; ++r) g.relations.push_back(relation_name(r));

    // object[r][s]: -1 when relation r is undefined for subject s.
    const auto n = static_cast<std::size_t>(num_entities);
    std::vector<std::vector<long>> object(num_relations, std::vector<long>(n, -1));
    for (std::size_t r = 0; r < num_relations; ++r)
        for (std::size_t s = 0; s < n; ++s)
            if (rng.unit() < kFactDensity) {
                auto o = rng.below(n - 1);
                object[r][s] = static_cast<long>(o >= s ? o + 1 : o);
            }

    // Plant one chain through distinct entities so depth_max is always reachable.
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    for (int i = 0; i < depth_max; ++i) object[i][perm[i]] = static_cast<long>(perm[i + 1]);

    for (std::size_t r = 0; r < num_relations; ++r)
        for (std::size_t s = 0; s < n; ++s)
            if (object[r][s] >= 0)
                g.facts.push_back({g.entities[s], g.relations[r], g.entities[object[r][s]], ToolKind::Text});

    // Round-robin over Text/Table/Image in a seeded shuffled order.
    std::vector<std::size_t> order(g.facts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) g.facts[order[i]].modality = kFactModalities[i % 3];
    return g;
}

std::string sub_question_text(const std::string& relation, const std::string& subject) {
    return "What is the " + relation + " of " + subject + "?";
}

std::vector<SynthQuestion> generate_questions(const FactGraph& world, int n, int depth, std::uint64_t seed,
                                              bool mix_modalities) {
    if (depth < 1 || depth > world.depth_max)
        throw InvalidInput("depth must lie in [1, " + std::to_string(world.depth_max) + "]");
    if (n < 0) throw InvalidInput("n must be non-negative");

    std::map<std::string, std::vector<std::size_t>> outgoing;
    for (std::size_t i = 0; i < world.facts.size(); ++i) outgoing[world.facts[i].subject].push_back(i);

    std::vector<std::vector<std::size_t>> chains;
    std::vector<std::size_t> path;
    auto extend = [&](auto&& self, const std::string& entity) -> void {
        if (static_cast<int>(path.size()) == depth) {
            bool mixed = true;
            if (mix_modalities && depth >= 2) {
                auto first = world.facts[path.front()].modality;
                mixed = std::any_of(path.begin(), path.end(), [&](auto f) { return world.facts[f].modality != first; });
            }
            if (mixed) chains.push_back(path);
            return;
        }
        auto it = outgoing.find(entity);
        if (it == outgoing.end()) return;
        for (auto f : it->second) {
            path.push_back(f);
            self(self, world.facts[f].object);
            path.pop_back();
        }
    };
    for (const auto& e : world.entities) extend(extend, e);

    if (chains.size() < static_cast<std::size_t>(n))
        throw InsufficientChains("world supports " + std::to_string(chains.size()) + " distinct chains of depth " +
                                 std::to_string(depth) + ", " + std::to_string(n) + " requested");

    Rng rng(text::mix(seed, static_cast<std::uint64_t>(depth)));
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) std::swap(chains[i], chains[i + rng.below(chains.size() - i)]);

    std::vector<SynthQuestion> out;
    for (int i = 0; i < n; ++i) {
        const auto& chain = chains[i];
        SynthQuestion q;
        q.id = "synth-d" + std::to_string(depth) + "-s" + std::to_string(seed) + "-" + std::to_string(i);
        q.depth = depth;
        std::string phrase = world.facts[chain.front()].subject;
        for (auto f : chain) {
            const auto& fact = world.facts[f];
            q.hops.push_back({sub_question_text(fact.relation, fact.subject), fact.relation, fact.subject,
                              fact.modality, fact.object});
            phrase = "the " + fact.relation + " of " + phrase;
        }
        q.question = "What is " + phrase + "?";
        q.final_gold = {q.hops.back().answer};
        out.push_back(std::move(q));
    }
    return out;
}

QaRecord to_qa_record(const SynthQuestion& q) {
    QaRecord r;
    r.qid = q.id;
    r.question = q.question;
    r.gold_answers = {q.final_gold};
    r.split = "test";
    r.benchmark = "synthworld";
    return r;
}

TextStore text_store(const FactGraph& world) {
    std::vector<Passage> items;
    for (std::size_t i = 0; i < world.facts.size(); ++i) {
        const auto& f = world.facts[i];
        if (f.modality != ToolKind::Text) continue;
        items.push_back({"txt-" + std::to_string(i), "The " + f.relation + " of " + f.subject + " is " + f.object + "."});
    }
    return TextStore(std::move(items));
}

TableStore table_store(const FactGraph& world) {
    std::vector<Table> items;
    for (const auto& rel : world.relations) {
        Table t{"tab-" + rel, {"entity", rel}, {}};
        for (const auto& f : world.facts)
            if (f.modality == ToolKind::Table && f.relation == rel) t.rows.push_back({f.subject, f.object});
        if (!t.rows.empty()) items.push_back(std::move(t));
    }
    return TableStore(std::move(items));
}

CaptionStore caption_store(const FactGraph& world) {
    std::vector<Caption> items;
    for (std::size_t i = 0; i < world.facts.size(); ++i) {
        const auto& f = world.facts[i];
        if (f.modality != ToolKind::Image) continue;
        items.push_back({"img-" + std::to_string(i),
                         "A picture of the " + f.relation + " of " + f.subject + ", which is " + f.object + "."});
    }
    return CaptionStore(std::move(items));
}

ToolRegistry oracle_registry(const FactGraph& world) {
    return ToolRegistry(std::make_shared<OracleTool>(world.facts_of(ToolKind::Text)),
                        std::make_shared<OracleTool>(world.facts_of(ToolKind::Table)),
                        std::make_shared<OracleTool>(world.facts_of(ToolKind::Image)), std::make_shared<StubTool>());
}

ToolRegistry noisy_oracle_registry(const FactGraph& world, double p, std::uint64_t noise_seed) {
    auto wrap = [&](ToolKind kind, std::shared_ptr<const ToolClient> inner) {
        return std::make_shared<NoisyTool>(std::move(inner), p, text::mix(noise_seed, static_cast<std::uint64_t>(kind)),
                                           world.entities);
    };
    return ToolRegistry(wrap(ToolKind::Text, std::make_shared<OracleTool>(world.facts_of(ToolKind::Text))),
                        wrap(ToolKind::Table, std::make_shared<OracleTool>(world.facts_of(ToolKind::Table))),
                        wrap(ToolKind::Image, std::make_shared<OracleTool>(world.facts_of(ToolKind::Image))),
                        wrap(ToolKind::Search, std::make_shared<StubTool>()));
}

ToolRegistry lexical_registry(const FactGraph& world) {
    return ToolRegistry(std::make_shared<LexicalTextTool>(std::make_shared<const TextStore>(text_store(world))),
                        std::make_shared<TableLookupTool>(std::make_shared<const TableStore>(table_store(world))),
                        std::make_shared<CaptionImageTool>(std::make_shared<const CaptionStore>(caption_store(world))),
                        std::make_shared<StubTool>());
}

ScriptedPolicy oracle_divider_policy(const std::vector<SynthQuestion>& questions) {
    auto owned = std::make_shared<const std::vector<SynthQuestion>>(questions);
    auto by_surface = std::make_shared<std::unordered_map<std::string, const SynthQuestion*>>();
    for (const auto& q : *owned) by_surface->emplace(q.question, &q);

    return [owned, by_surface](std::string_view prompt) -> std::string {
        if (prompt.starts_with(kToolsAnswerInstruction)) {
            auto st = read_prompt(prompt, *by_surface, "Answer from the ", true);
            for (const auto& r : st.replies)
                if (r != kNoResult) return "Based on the tool answers: [Answer: " + r + "]";
            return "None of the tools could answer. [Answer: unknown]";
        }
        if (prompt.starts_with(kReActInstruction)) {
            auto st = read_prompt(prompt, *by_surface, kObservationPrefix, false);
            if (!st.question) return "Thought: I do not know this question.\nAction: Finish[unknown]";
            return react::render(next_move(*st.question, st.replies));
        }
        auto st = read_prompt(prompt, *by_surface, "Answer from the ", true);
        if (!st.question) return "I do not know this question. [Answer: unknown]";
        return render_divider(next_move(*st.question, st.replies));
    };
}

ScriptedPolicy oracle_divider_policy(const SynthQuestion& question) {
    return oracle_divider_policy(std::vector<SynthQuestion>{question});
}

nlohmann::json to_json(const SynthQuestion& q) {
    nlohmann::json hops = nlohmann::json::array();
    for (const auto& h : q.hops)
        hops.push_back({{"sub_question", h.sub_question},
                        {"relation", h.relation},
                        {"subject", h.subject},
                        {"tool", tool_name(h.tool)},
                        {"answer", h.answer}});
    return {{"id", q.id}, {"question", q.question}, {"depth", q.depth}, {"hops", hops}, {"final_gold", q.final_gold}};
}

SynthQuestion synth_question_from_json(const nlohmann::json& j) {
    SynthQuestion q;
    q.id = j.at("id").get<std::string>();
    q.question = j.at("question").get<std::string>();
    q.depth = j.at("depth").get<int>();
    q.final_gold = j.at("final_gold").get<std::vector<std::string>>();
    for (const auto& h : j.at("hops")) {
        auto kind = parse_tool_kind(h.at("tool").get<std::string>());
        if (!kind) throw InvalidInput("unknown tool in hop");
        q.hops.push_back({h.at("sub_question").get<std::string>(), h.at("relation").get<std::string>(),
                          h.at("subject").get<std::string>(), *kind, h.at("answer").get<std::string>()});
    }
    return q;
}

std::string serialize_world(const FactGraph& world) {
    std::string out = nlohmann::json{{"kind", "world"},
                                     {"seed", world.seed},
                                     {"depth_max", world.depth_max},
                                     {"entities", world.entities},
                                     {"relations", world.relations}}
                          .dump() +
                      "\n";
    for (const auto& f : world.facts)
        out += nlohmann::json{{"kind", "fact"},
                              {"subject", f.subject},
                              {"relation", f.relation},
                              {"object", f.object},
                              {"modality", tool_name(f.modality)}}
                   .dump() +
               "\n";
    return out;
}

FactGraph parse_world(std::string_view jsonl) {
    FactGraph g;
    bool header = false;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "world") {
                g.seed = j.at("seed").get<std::uint64_t>();
                g.depth_max = j.at("depth_max").get<int>();
                g.entities = j.at("entities").get<std::vector<std::string>>();
                g.relations = j.at("relations").get<std::vector<std::string>>();
                header = true;
            } else if (kind == "fact") {
                auto m = parse_tool_kind(j.at("modality").get<std::string>());
                if (!m || *m == ToolKind::Search) throw InvalidInput("bad fact modality");
                g.facts.push_back({j.at("subject").get<std::string>(), j.at("relation").get<std::string>(),
                                   j.at("object").get<std::string>(), *m});
            } else {
                throw InvalidInput("unknown record kind " + kind);
            }
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("<world>", line_no, e.what());
        } catch (const InvalidInput& e) {
            throw SchemaError("<world>", line_no, e.what());
        }
    }
    if (!header) throw SchemaError("<world>", 0, "missing world header");
    return g;
}

}  // namespace dcqa::synth
