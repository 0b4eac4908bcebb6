#include "dcqa/qa_record.hpp"

#include "dcqa/errors.hpp"
#include "dcqa/jsonl.hpp"

namespace dcqa {

void validate(const QaRecord& r) {
    if (r.gold_answers.empty()) throw InvalidInput("record " + r.qid + " has no gold answers");
    for (const auto& v : r.gold_answers)
        if (v.empty()) throw InvalidInput("record " + r.qid + " has an empty gold variant");
}

nlohmann::json to_json(const QaRecord& r) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : r.history) history.push_back({{"question", h.question}, {"answer", h.answer}});
    return {{"qid", r.qid},
            {"question", r.question},
            {"gold_answers", r.gold_answers},
            {"context_refs",
             {{"text", r.context_refs.text}, {"table", r.context_refs.table}, {"image", r.context_refs.image}}},
            {"history", history},
            {"split", r.split},
            {"benchmark", r.benchmark}};
}

QaRecord qa_record_from_json(const nlohmann::json& j) {
    QaRecord r;
    r.qid = j.at("qid").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.gold_answers = j.at("gold_answers").get<std::vector<std::vector<std::string>>>();
    if (j.contains("context_refs")) {
        const auto& c = j["context_refs"];
        r.context_refs.text = c.value("text", std::vector<std::string>{});
        r.context_refs.table = c.value("table", std::vector<std::string>{});
        r.context_refs.image = c.value("image", std::vector<std::string>{});
    }
    if (j.contains("history"))
        for (const auto& h : j["history"])
            r.history.push_back({h.at("question").get<std::string>(), h.at("answer").get<std::string>()});
    r.split = j.value("split", "dev");
    r.benchmark = j.value("benchmark", "");
    validate(r);
    return r;
}

void write_qa_jsonl(const std::string& path, const std::vector<QaRecord>& records) {
    std::vector<nlohmann::json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(to_json(r));
    write_jsonl(path, rows);
}

std::vector<QaRecord> read_qa_jsonl(const std::string& path) {
    std::vector<QaRecord> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) { out.push_back(qa_record_from_json(j)); });
    return out;
}

}  // namespace dcqa
