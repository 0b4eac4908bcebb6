#include "dcqa/benchmark.hpp"

#include <filesystem>
#include <map>
#include <set>

#include "dcqa/errors.hpp"
#include "dcqa/jsonl.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa {

namespace {

std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    return v.dump();
}

// Answer lists come as [{"answer": x, ..}], [x, ..], or a bare x.
std::vector<std::string> answer_items(const nlohmann::json& v) {
    std::vector<std::string> out;
    auto one = [&](const nlohmann::json& a) {
        if (a.is_object()) {
            if (a.contains("answer")) out.push_back(scalar_text(a["answer"]));
        } else if (!a.is_null()) {
            out.push_back(scalar_text(a));
        }
    };
    if (v.is_array())
        for (const auto& a : v) one(a);
    else
        one(v);
    return out;
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (j[key].is_string()) return {j[key].get<std::string>()};
    std::vector<std::string> out;
    for (const auto& v : j[key]) out.push_back(scalar_text(v));
    return out;
}

QaRecord mmqa_record(const nlohmann::json& j, const std::string& split) {
    QaRecord r;
    r.qid = scalar_text(j.at("qid"));
    r.question = j.at("question").get<std::string>();
    auto items = answer_items(j.at("answers"));
    if (items.empty()) throw InvalidInput("question " + r.qid + " has no answers");
    r.gold_answers = {items};
    if (j.contains("metadata")) {
        const auto& m = j["metadata"];
        r.context_refs.text = string_list(m, "text_doc_ids");
        r.context_refs.table = string_list(m, "table_id");
        r.context_refs.image = string_list(m, "image_doc_ids");
    }
    r.split = split;
    r.benchmark = "multimodalqa";
    return r;
}

QaRecord mmcoqa_record(const nlohmann::json& j, const std::string& split) {
    QaRecord r;
    r.qid = scalar_text(j.at("qid"));
    r.question = j.at("question").get<std::string>();
    auto items = answer_items(j.contains("answer") ? j["answer"] : j.at("answers"));
    if (items.empty()) throw InvalidInput("question " + r.qid + " has no answers");
    r.gold_answers = {items};
    if (j.contains("history"))
        for (const auto& h : j["history"])
            r.history.push_back({h.at("question").get<std::string>(), text::join(answer_items(h.at("answer")), ", ")});
    r.split = split;
    r.benchmark = "mmcoqa";
    return r;
}

}  // namespace

std::optional<BenchmarkName> parse_benchmark_name(std::string_view name) {
    auto n = text::to_lower(name);
    if (n == "multimodalqa" || n == "mmqa") return BenchmarkName::MultiModalQA;
    if (n == "mmcoqa") return BenchmarkName::MMCoQA;
    if (n == "qa" || n == "normalized" || n == "synth") return BenchmarkName::Normalized;
    return std::nullopt;
}

std::optional<std::size_t> expected_split_size(BenchmarkName name, std::string_view split) {
    static const std::map<std::pair<BenchmarkName, std::string_view>, std::size_t> kSizes = {
        {{BenchmarkName::MultiModalQA, "train"}, 23817}, {{BenchmarkName::MultiModalQA, "dev"}, 2441},
        {{BenchmarkName::MultiModalQA, "test"}, 3660},   {{BenchmarkName::MMCoQA, "train"}, 4582},
        {{BenchmarkName::MMCoQA, "dev"}, 581},           {{BenchmarkName::MMCoQA, "test"}, 590}};
    if (auto it = kSizes.find({name, split}); it != kSizes.end()) return it->second;
    return std::nullopt;
}

LoadedBenchmark load_benchmark(BenchmarkName name, const BenchmarkPaths& paths, const std::string& split) {
    LoadedBenchmark out;
    for_each_jsonl(paths.questions, [&](const nlohmann::json& j, std::size_t) {
        switch (name) {
            case BenchmarkName::MultiModalQA: out.records.push_back(mmqa_record(j, split)); break;
            case BenchmarkName::MMCoQA: out.records.push_back(mmcoqa_record(j, split)); break;
            case BenchmarkName::Normalized: out.records.push_back(qa_record_from_json(j)); break;
        }
    });

    if (!paths.texts.empty()) {
        std::vector<Passage> items;
        for_each_jsonl(paths.texts, [&](const nlohmann::json& j, std::size_t) {
            auto title = j.value("title", "");
            auto body = j.at("text").get<std::string>();
            items.push_back({scalar_text(j.at("id")), title.empty() ? body : title + ". " + body});
        });
        out.texts = TextStore(std::move(items));
    }
    if (!paths.tables.empty()) {
        std::vector<Table> items;
        for_each_jsonl(paths.tables, [&](const nlohmann::json& j, std::size_t) {
            Table t;
            t.id = scalar_text(j.at("id"));
            if (j.contains("header") && j["header"].is_array() && j.contains("rows")) {
                t.header = j["header"].get<std::vector<std::string>>();
                t.rows = j["rows"].get<std::vector<std::vector<std::string>>>();
            } else {
                const auto& table = j.at("table");
                for (const auto& h : table.at("header")) t.header.push_back(h.at("column_name").get<std::string>());
                for (const auto& row : table.at("table_rows")) {
                    std::vector<std::string> cells;
                    for (const auto& c : row) cells.push_back(c.is_object() ? c.value("text", "") : scalar_text(c));
                    t.rows.push_back(std::move(cells));
                }
            }
            items.push_back(std::move(t));
        });
        out.tables = TableStore(std::move(items));
    }
    if (!paths.images.empty()) {
        std::map<std::string, std::string> captions;
        if (!paths.captions.empty())
            for_each_jsonl(paths.captions, [&](const nlohmann::json& j, std::size_t) {
                captions[scalar_text(j.at("id"))] = j.at("caption").get<std::string>();
            });
        std::vector<Caption> items;
        for_each_jsonl(paths.images, [&](const nlohmann::json& j, std::size_t) {
            auto id = scalar_text(j.at("id"));
            auto it = captions.find(id);
            items.push_back({id, it != captions.end() ? it->second : j.value("caption", j.value("title", ""))});
        });
        out.images = CaptionStore(std::move(items));
    }

    if (auto expected = expected_split_size(name, split); expected && *expected != out.records.size())
        out.warnings.push_back("split " + split + " has " + std::to_string(out.records.size()) +
                               " records; the published size is " + std::to_string(*expected));
    return out;
}

std::string conversation_id(const QaRecord& r) {
    auto cut = r.qid.rfind('_');
    return cut == std::string::npos ? r.qid : r.qid.substr(0, cut);
}

double questions_per_conversation(const std::vector<QaRecord>& records) {
    if (records.empty()) return 0.0;
    std::set<std::string> convs;
    for (const auto& r : records) convs.insert(conversation_id(r));
    return static_cast<double>(records.size()) / static_cast<double>(convs.size());
}

}  // namespace dcqa
