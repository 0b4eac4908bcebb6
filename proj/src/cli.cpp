#include "dcqa/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "dcqa/benchmark.hpp"
#include "dcqa/datagen.hpp"
#include "dcqa/errors.hpp"
#include "dcqa/http_tools.hpp"
#include "dcqa/jsonl.hpp"
#include "dcqa/orchestrator.hpp"
#include "dcqa/report.hpp"
#include "dcqa/synthworld.hpp"
#include "dcqa/text_util.hpp"

#ifndef DCQA_DEFAULT_SHOTS
#define DCQA_DEFAULT_SHOTS "shots/default.jsonl"
#endif

namespace dcqa {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public Error {
public:
    using Error::Error;
};

const std::map<std::string, std::string> kEnvKeys = {
    {"DCQA_LLM_API_KEY", "llm_api_key"},
    {"DCQA_LLM_ENDPOINT", "llm_endpoint"},
    {"DCQA_SEARCH_API_KEY", "search_api_key"},
};

json input_defaults() {
    return {{"synth", ""},     {"benchmark", "qa"}, {"questions", ""}, {"texts", ""},
            {"tables", ""},    {"images", ""},      {"captions", ""},  {"split", ""},
            {"limit", 0}};
}

json backend_defaults() {
    return {{"llm", "scripted-oracle"},
            {"llm_size", "-"},
            {"model", "gpt-3.5-turbo"},
            {"llm_endpoint", "https://api.openai.com"},
            {"llm_api_key", ""},
            {"temperature", 0.0},
            {"max_tokens", 512},
            {"timeout_s", 60.0},
            {"max_concurrent", 4},
            {"requests_per_minute", 0},
            {"retries", 2},
            {"cassette", ""},
            {"cassette_mode", "off"},
            {"tools", "oracle"},
            {"noise", 0.0},
            {"noise_seed", std::uint64_t{0}},
            {"text_tool_url", ""},
            {"table_tool_url", ""},
            {"image_tool_url", ""},
            {"tool_api_key", ""},
            {"search_api_key", ""},
            {"search_url", "https://serpapi.com/search.json"},
            {"max_tool_calls", 12},
            {"max_parse_retries", 1},
            {"seed", std::uint64_t{0}},
            {"parallelism", 1}};
}

json merged(json a, const json& b) {
    for (auto it = b.begin(); it != b.end(); ++it) a[it.key()] = it.value();
    return a;
}

std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

json coerce(const json& def, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        if (def.is_boolean()) {
            auto l = text::to_lower(v);
            if (l == "true" || l == "1" || l == "yes") return true;
            if (l == "false" || l == "0" || l == "no") return false;
        } else if (def.is_number_unsigned()) {
            if (!v.empty() && v[0] != '-') {
                auto x = std::stoull(v, &pos);
                if (pos == v.size()) return x;
            }
        } else if (def.is_number_integer()) {
            auto x = std::stoll(v, &pos);
            if (pos == v.size()) return x;
        } else if (def.is_number_float()) {
            auto x = std::stod(v, &pos);
            if (pos == v.size()) return x;
        } else {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw UsageError("invalid value for " + flag_name(key) + ": " + v);
}

bool same_type(const json& def, const json& v) {
    if (def.is_number_float()) return v.is_number();
    if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    if (def.is_number_integer()) return v.is_number_integer();
    return def.type() == v.type();
}

// A subcommand whose settings are all declared in `defaults`.
struct Command {
    CLI::App* app = nullptr;
    json defaults;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> options;
    std::string config_path;

    void declare(CLI::App* parent, const std::string& name, const std::string& about, json defs) {
        app = parent->add_subcommand(name, about);
        defaults = std::move(defs);
        app->add_option("--config", config_path, "JSON file with settings (keys as below, with underscores)");
        for (auto it = defaults.begin(); it != defaults.end(); ++it) {
            auto& slot = flags[it.key()];
            std::string shown = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
            if (it.key().ends_with("api_key")) shown = "";
            options[it.key()] = app->add_option(flag_name(it.key()), slot, shown.empty() ? "" : "default: " + shown);
        }
    }

    json resolve() const {
        json cfg = defaults;
        if (!config_path.empty()) {
            json file;
            try {
                file = json::parse(read_text(config_path));
            } catch (const json::exception& e) {
                throw SchemaError(config_path, 0, e.what());
            }
            if (!file.is_object()) throw SchemaError(config_path, 0, "config must be a JSON object");
            for (auto it = file.begin(); it != file.end(); ++it) {
                if (!defaults.contains(it.key())) throw UsageError("unknown config key: " + it.key());
                if (!same_type(defaults[it.key()], it.value()))
                    throw UsageError("config key " + it.key() + " has the wrong type");
                cfg[it.key()] = it.value();
            }
        }
        for (const auto& [env, key] : kEnvKeys)
            if (const char* v = std::getenv(env.c_str()); v && *v && cfg.contains(key)) cfg[key] = v;
        for (const auto& [key, opt] : options)
            if (opt->count() > 0) cfg[key] = coerce(defaults[key], key, flags.at(key));
        return cfg;
    }
};

json redacted(json cfg) {
    for (auto it = cfg.begin(); it != cfg.end(); ++it)
        if (it.key().ends_with("api_key") && it.value().is_string())
            it.value() = it.value().get<std::string>().empty() ? "" : "<redacted>";
    return cfg;
}

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string path_in(const json& cfg, const std::string& name) { return (fs::path(cfg.at("out").get<std::string>()) / name).string(); }

// Questions plus whatever world or stores came with them.
struct Inputs {
    std::vector<QaRecord> records;
    std::shared_ptr<synth::FactGraph> world;
    std::vector<synth::SynthQuestion> synth_questions;
    std::shared_ptr<LoadedBenchmark> bench;
};

Inputs load_inputs(const json& cfg, std::ostream& err) {
    Inputs in;
    const auto synth_dir = cfg.at("synth").get<std::string>();
    if (!synth_dir.empty()) {
        in.world = std::make_shared<synth::FactGraph>(
            synth::parse_world(read_text((fs::path(synth_dir) / "world.jsonl").string())));
        for_each_jsonl((fs::path(synth_dir) / "questions.jsonl").string(), [&](const json& j, std::size_t) {
            in.synth_questions.push_back(synth::synth_question_from_json(j));
        });
        for (const auto& q : in.synth_questions) in.records.push_back(synth::to_qa_record(q));
    } else {
        const auto questions = cfg.at("questions").get<std::string>();
        if (questions.empty()) throw UsageError("either --synth or --questions is required");
        auto name = parse_benchmark_name(cfg.at("benchmark").get<std::string>());
        if (!name) throw UsageError("unknown benchmark: " + cfg.at("benchmark").get<std::string>());
        auto split = cfg.at("split").get<std::string>();
        if (split.empty() && *name == BenchmarkName::MultiModalQA) split = "dev";
        if (split.empty() && *name == BenchmarkName::MMCoQA) split = "test";
        BenchmarkPaths paths{questions, cfg.at("texts"), cfg.at("tables"), cfg.at("images"), cfg.at("captions")};
        in.bench = std::make_shared<LoadedBenchmark>(load_benchmark(*name, paths, split));
        for (const auto& w : in.bench->warnings) err << "warning: " << w << "\n";
        in.records = in.bench->records;
    }
    const auto limit = cfg.at("limit").get<long long>();
    if (limit < 0) throw UsageError("--limit must be non-negative");
    if (limit > 0 && static_cast<std::size_t>(limit) < in.records.size()) in.records.resize(static_cast<std::size_t>(limit));
    if (in.records.empty()) throw InvalidInput("no questions to run");
    return in;
}

CassetteMode parse_cassette_mode(const std::string& s) {
    if (s == "off") return CassetteMode::Off;
    if (s == "record") return CassetteMode::Record;
    if (s == "replay") return CassetteMode::Replay;
    if (s == "auto") return CassetteMode::Auto;
    throw UsageError("unknown cassette mode: " + s);
}

std::unique_ptr<LlmBackend> make_llm(const json& cfg, const Inputs& in) {
    const auto spec = cfg.at("llm").get<std::string>();
    if (spec == "scripted-oracle") {
        if (!in.world) throw UsageError("--llm scripted-oracle needs a --synth question set");
        return std::make_unique<ScriptedBackend>(synth::oracle_divider_policy(in.synth_questions), "scripted-oracle");
    }
    if (spec.starts_with("constant:"))
        return std::make_unique<ScriptedBackend>(constant_answer_policy(spec.substr(9)), "constant");
    if (spec == "endless" || spec.starts_with("endless:"))
        return std::make_unique<ScriptedBackend>(
            endless_sub_question_policy(spec.size() > 8 ? spec.substr(8) : "Text"), "endless");
    if (spec.starts_with("replay:"))
        return std::make_unique<ReplayBackend>(replay_outputs(read_episodes(spec.substr(7))), "replay");
    if (spec == "http") {
        HttpChatConfig c;
        c.endpoint = cfg.at("llm_endpoint").get<std::string>();
        c.model = cfg.at("model").get<std::string>();
        c.api_key = cfg.at("llm_api_key").get<std::string>();
        c.temperature = cfg.at("temperature").get<double>();
        c.max_tokens = cfg.at("max_tokens").get<int>();
        c.timeout_s = cfg.at("timeout_s").get<double>();
        c.max_concurrent = static_cast<std::size_t>(std::max(1, cfg.at("max_concurrent").get<int>()));
        c.requests_per_minute = static_cast<std::size_t>(std::max(0, cfg.at("requests_per_minute").get<int>()));
        c.retries = cfg.at("retries").get<int>();
        c.cassette_path = cfg.at("cassette").get<std::string>();
        c.cassette_mode = parse_cassette_mode(cfg.at("cassette_mode").get<std::string>());
        if (c.cassette_mode != CassetteMode::Off && c.cassette_path.empty())
            throw UsageError("--cassette-mode needs --cassette");
        return std::make_unique<HttpChatBackend>(std::move(c));
    }
    throw UsageError("unknown --llm: " + spec + " (scripted-oracle, http, replay:<file>, constant:<text>, endless[:Tool])");
}

std::shared_ptr<const ToolClient> search_client(const json& cfg) {
    const auto key = cfg.at("search_api_key").get<std::string>();
    if (key.empty()) return std::make_shared<StubTool>();
    SearchConfig s;
    s.url = cfg.at("search_url").get<std::string>();
    s.api_key = key;
    return std::make_shared<SearchToolClient>(std::move(s));
}

ToolRegistry make_tools(const json& cfg, const Inputs& in) {
    const auto spec = cfg.at("tools").get<std::string>();
    const auto noise = cfg.at("noise").get<double>();
    if (noise < 0.0 || noise > 1.0) throw UsageError("--noise must be in [0, 1]");
    if (noise > 0.0 && spec != "oracle") throw UsageError("--noise applies to --tools oracle only");
    if (spec == "oracle") {
        if (!in.world) throw UsageError("--tools oracle needs a --synth question set");
        if (noise > 0.0) return synth::noisy_oracle_registry(*in.world, noise, cfg.at("noise_seed").get<std::uint64_t>());
        return synth::oracle_registry(*in.world);
    }
    if (spec == "lexical") {
        if (in.world) return synth::lexical_registry(*in.world);
        return ToolRegistry(std::make_shared<LexicalTextTool>(std::make_shared<const TextStore>(in.bench->texts)),
                            std::make_shared<TableLookupTool>(std::make_shared<const TableStore>(in.bench->tables)),
                            std::make_shared<CaptionImageTool>(std::make_shared<const CaptionStore>(in.bench->images)),
                            search_client(cfg));
    }
    if (spec == "http") {
        auto remote = [&](const char* key) -> std::shared_ptr<const ToolClient> {
            auto url = cfg.at(key).get<std::string>();
            if (url.empty()) return std::make_shared<StubTool>();
            return std::make_shared<HttpToolClient>(
                HttpToolConfig{url, cfg.at("tool_api_key").get<std::string>(), cfg.at("timeout_s").get<double>()});
        };
        return ToolRegistry(remote("text_tool_url"), remote("table_tool_url"), remote("image_tool_url"),
                            search_client(cfg));
    }
    throw UsageError("unknown --tools: " + spec + " (oracle, lexical, http)");
}

Strategy make_strategy(const json& cfg) {
    auto kind = parse_strategy(cfg.at("strategy").get<std::string>());
    if (!kind) throw UsageError("unknown --strategy: " + cfg.at("strategy").get<std::string>() +
                                " (divide-conquer, tools-answer, react)");
    auto s = Strategy::of(*kind);
    const auto shots_path = cfg.at("shots").get<std::string>();
    if (!shots_path.empty()) {
        if (*kind != StrategyKind::DivideConquer) throw UsageError("--shots applies to divide-conquer only");
        auto shots = datagen::load_shots(shots_path);
        if (!shots.empty()) {
            s.instruction = shots.front().instruction;
            s.shots = datagen::render_shots(shots);
        }
    }
    return s;
}

Budget make_budget(const json& cfg) {
    const auto calls = cfg.at("max_tool_calls").get<int>();
    const auto retries = cfg.at("max_parse_retries").get<int>();
    if (calls < 1 || retries < 0) throw UsageError("--max-tool-calls must be >= 1 and --max-parse-retries >= 0");
    return Budget(calls, retries);
}

std::size_t parallelism_of(const json& cfg) {
    const auto p = cfg.at("parallelism").get<long long>();
    if (p < 1) throw UsageError("--parallelism must be >= 1");
    return static_cast<std::size_t>(p);
}

void write_run_sidecar(const json& cfg, const std::vector<Episode>& episodes, const std::string& started,
                       double wall_ms) {
    std::string out = json{{"kind", "run"}, {"started_at", started}, {"wall_ms", wall_ms}}.dump() + "\n";
    for (const auto& ep : episodes) {
        json lat = json::array();
        for (const auto& e : ep.events)
            if (auto* r = std::get_if<ToolReplyEvent>(&e)) lat.push_back(r->latency_ms);
        out += json{{"kind", "episode"}, {"qid", ep.question.qid}, {"tool_latency_ms", lat}}.dump() + "\n";
    }
    write_text(path_in(cfg, "timings.jsonl"), out);
}

int cmd_synth(const json& cfg, std::ostream& out) {
    const auto hops = cfg.at("hops").get<int>();
    const auto n = cfg.at("n").get<int>();
    if (hops < 1 || n < 1) throw UsageError("--hops and --n must be >= 1");
    auto entities = cfg.at("entities").get<int>();
    if (entities == 0) entities = std::max(4 * n, 2 * hops + 2);
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    auto world = synth::generate_world(entities, hops, seed);
    auto qs = synth::generate_questions(world, n, hops, seed, cfg.at("mix").get<bool>());

    write_text(path_in(cfg, "world.jsonl"), synth::serialize_world(world));
    std::vector<json> rows;
    std::vector<QaRecord> records;
    for (const auto& q : qs) {
        rows.push_back(synth::to_json(q));
        records.push_back(synth::to_qa_record(q));
    }
    write_jsonl(path_in(cfg, "questions.jsonl"), rows);
    write_qa_jsonl(path_in(cfg, "qa.jsonl"), records);
    auto dump_store = [&](const auto& store, const char* name) {
        std::vector<json> items;
        for (const auto& it : store.items()) items.push_back(to_json(it));
        write_jsonl(path_in(cfg, name), items);
    };
    dump_store(synth::text_store(world), "text.jsonl");
    dump_store(synth::table_store(world), "tables.jsonl");
    dump_store(synth::caption_store(world), "images.jsonl");
    write_text(path_in(cfg, "resolved_config.json"), redacted(cfg).dump(2) + "\n");
    out << "wrote " << qs.size() << " questions of depth " << hops << " over " << world.facts.size() << " facts to "
        << cfg.at("out").get<std::string>() << "\n";
    return kExitOk;
}

int cmd_run(const json& cfg, std::ostream& out, std::ostream& err) {
    auto strategy = make_strategy(cfg);
    auto budget = make_budget(cfg);
    auto parallelism = parallelism_of(cfg);
    auto in = load_inputs(cfg, err);
    auto llm = make_llm(cfg, in);
    auto tools = make_tools(cfg, in);

    const auto started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    auto episodes = run_batch(in.records, strategy, budget, *llm, tools, cfg.at("seed").get<std::uint64_t>(), parallelism);
    const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    auto report = evaluate(episodes, {llm->label(), cfg.at("llm_size").get<std::string>(),
                                      std::string(strategy_name(strategy.kind)), budget.max_tool_calls()});
    write_text(path_in(cfg, "transcripts.jsonl"), serialize_episodes(episodes));
    write_text(path_in(cfg, "report.json"), report_json({report}).dump(2) + "\n");
    const auto table = render_report_table({report});
    write_text(path_in(cfg, "report.txt"), table);
    write_text(path_in(cfg, "resolved_config.json"), redacted(cfg).dump(2) + "\n");
    write_run_sidecar(cfg, episodes, started, wall_ms);
    out << table;

    std::size_t backend_errors = 0;
    for (const auto& ep : episodes) backend_errors += ep.outcome.kind == OutcomeKind::BackendError;
    if (backend_errors > 0) {
        for (const auto& ep : episodes)
            if (ep.outcome.kind == OutcomeKind::BackendError) {
                err << "backend error (" << ep.question.qid << "): " << ep.outcome.detail << "\n";
                break;
            }
        err << backend_errors << " of " << episodes.size() << " episodes ended in a backend error\n";
        return kExitBackend;
    }
    return kExitOk;
}

int cmd_eval(const json& cfg, std::ostream& out, std::ostream& err) {
    const auto path = cfg.at("transcripts").get<std::string>();
    if (path.empty()) throw UsageError("--transcripts is required");
    auto episodes = read_episodes(path);
    auto in = load_inputs(cfg, err);
    std::map<std::string, QaRecord> gold;
    for (const auto& r : in.records) gold.emplace(r.qid, r);
    if (episodes.empty()) throw InvalidInput("no episodes in " + path);
    auto report = evaluate(episodes, gold,
                           {cfg.at("label").get<std::string>(), cfg.at("llm_size").get<std::string>(),
                            std::string(strategy_name(episodes.front().strategy)), cfg.at("max_tool_calls").get<int>()});
    out << render_report_table({report});
    if (auto o = cfg.at("report").get<std::string>(); !o.empty()) write_text(o, report_json({report}).dump(2) + "\n");
    return kExitOk;
}

int cmd_datagen(const json& cfg, std::ostream& out, std::ostream& err) {
    auto budget = make_budget(cfg);
    auto parallelism = parallelism_of(cfg);
    auto in = load_inputs(cfg, err);
    auto llm = make_llm(cfg, in);
    auto tools = make_tools(cfg, in);
    std::vector<datagen::Shot> shots;
    if (auto p = cfg.at("shots").get<std::string>(); !p.empty()) shots = datagen::load_shots(p);

    auto n = cfg.at("n").get<long long>();
    if (n < 1) throw UsageError("--n must be >= 1");
    if (static_cast<std::size_t>(n) > in.records.size()) {
        err << "warning: --n " << n << " exceeds the " << in.records.size() << " available questions; using all\n";
        n = static_cast<long long>(in.records.size());
    }
    auto subset = datagen::sample_training_subset(in.records, static_cast<std::size_t>(n),
                                                  cfg.at("seed").get<std::uint64_t>());

    datagen::GenConfig g;
    g.keep_threshold = cfg.at("threshold").get<double>();
    const auto gran = cfg.at("granularity").get<std::string>();
    if (gran == "whole") g.granularity = datagen::Granularity::WholeTranscript;
    else if (gran == "per-turn") g.granularity = datagen::Granularity::PerTurn;
    else throw UsageError("unknown --granularity: " + gran + " (whole, per-turn)");
    const auto mode = cfg.at("mode").get<std::string>();
    if (mode == "live") g.mode = datagen::ReplyMode::LiveTools;
    else if (mode == "invent") g.mode = datagen::ReplyMode::GeneratorInvents;
    else throw UsageError("unknown --mode: " + mode + " (live, invent)");
    g.parallelism = parallelism;
    g.run_seed = cfg.at("seed").get<std::uint64_t>();
    g.prompt.max_chars = static_cast<std::size_t>(std::max(0LL, cfg.at("max_prompt_chars").get<long long>()));

    const auto started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    auto result = datagen::generate_dataset(subset, shots, *llm, tools, budget, g);
    const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    std::vector<json> kept, rejected;
    for (const auto& r : result.records) (r.validated ? kept : rejected).push_back(datagen::to_json(r));
    write_jsonl(path_in(cfg, "dataset.jsonl"), kept);
    write_jsonl(path_in(cfg, "rejected.jsonl"), rejected);
    auto report = datagen::to_json(result.report);
    write_text(path_in(cfg, "gen_report.json"), report.dump(2) + "\n");
    write_text(path_in(cfg, "resolved_config.json"), redacted(cfg).dump(2) + "\n");
    write_text(path_in(cfg, "timings.jsonl"),
               json{{"kind", "datagen"}, {"started_at", started}, {"wall_ms", wall_ms}}.dump() + "\n");
    out << report.dump(2) << "\n";
    if (result.report.backend_errors > 0) {
        err << result.report.backend_errors << " questions ended in a backend error\n";
        return kExitBackend;
    }
    return kExitOk;
}

std::string pretty_event(const TranscriptEvent& e) {
    if (auto* d = std::get_if<DividerEvent>(&e)) return "LLM   | " + render_divider(*d);
    if (auto* r = std::get_if<ToolReplyEvent>(&e)) return "TOOL  | " + render_tool_reply(r->tool, r->answer);
    const auto& s = std::get<SystemNote>(e);
    std::string out = "NOTE  | " + s.text;
    if (s.llm_output) out += "\n      | raw output: " + text::collapse_whitespace(*s.llm_output);
    return out;
}

int cmd_inspect(const json& cfg, std::ostream& out) {
    const auto path = cfg.at("transcripts").get<std::string>();
    const auto qid = cfg.at("qid").get<std::string>();
    if (path.empty()) throw UsageError("--transcripts is required");
    auto episodes = read_episodes(path);
    bool found = false;
    for (const auto& ep : episodes) {
        if (!qid.empty() && ep.question.qid != qid) continue;
        found = true;
        out << "qid:        " << ep.question.qid << "\n"
            << "question:   " << ep.question.question << "\n"
            << "strategy:   " << strategy_name(ep.strategy) << "\n"
            << "outcome:    " << outcome_name(ep.outcome.kind);
        if (!ep.outcome.detail.empty()) out << " (" << ep.outcome.detail << ")";
        out << "\n"
            << "answer:     " << text::join(ep.predicted(), " | ") << "\n"
            << "tool calls: " << ep.tool_calls << ", llm calls: " << ep.llm_calls << "\n";
        for (const auto& e : ep.events) out << pretty_event(e) << "\n";
        out << "\n";
    }
    if (!found) throw InvalidInput("no episode with qid " + qid + " in " + path);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Divide-and-conquer multimodal question answering: LLM divider, tool conquerors"};
    app.name("dcqa");
    app.require_subcommand(1);

    Command synth, run, eval, gen, inspect;
    synth.declare(&app, "synth", "Generate a synthetic world and question set",
                  {{"hops", 2}, {"n", 20}, {"entities", 0}, {"seed", std::uint64_t{0}}, {"mix", true}, {"out", "synth_out"}});
    run.declare(&app, "run", "Answer a question set and score it",
                merged(merged(input_defaults(), backend_defaults()),
                       {{"strategy", "divide-conquer"}, {"shots", ""}, {"out", "run_out"}}));
    eval.declare(&app, "eval", "Score saved transcripts against gold answers",
                 merged(input_defaults(), {{"transcripts", ""}, {"label", "-"}, {"llm_size", "-"},
                                           {"max_tool_calls", 12}, {"report", ""}}));
    gen.declare(&app, "datagen", "Generate divider fine-tuning data",
                merged(merged(input_defaults(), backend_defaults()),
                       {{"shots", DCQA_DEFAULT_SHOTS}, {"n", 2000}, {"threshold", 0.8}, {"granularity", "whole"},
                        {"mode", "live"}, {"max_prompt_chars", 0}, {"out", "datagen_out"}}));
    inspect.declare(&app, "inspect", "Pretty-print saved episodes", {{"transcripts", ""}, {"qid", ""}});

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, r;
        int code = app.exit(e, o, r);
        out << o.str();
        err << r.str();
        return code == 0 ? kExitOk : kExitUsage;
    }

    Command* active = nullptr;
    for (auto* c : {&synth, &run, &eval, &gen, &inspect})
        if (c->app->parsed()) active = c;
    try {
        auto cfg = active->resolve();
        if (active == &synth) return cmd_synth(cfg, out);
        if (active == &run) return cmd_run(cfg, out, err);
        if (active == &eval) return cmd_eval(cfg, out, err);
        if (active == &gen) return cmd_datagen(cfg, out, err);
        return cmd_inspect(cfg, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << active->app->help();
        return kExitUsage;
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace dcqa
