#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace dcqa {

struct ContextRefs {
    std::vector<std::string> text;
    std::vector<std::string> table;
    std::vector<std::string> image;

    bool empty() const { return text.empty() && table.empty() && image.empty(); }
    bool operator==(const ContextRefs&) const = default;
};

struct HistoryTurn {
    std::string question;
    std::string answer;
    bool operator==(const HistoryTurn&) const = default;
};

/// One benchmark question, normalized across datasets. Each gold variant is a
/// list of answer items (list-type answers have more than one).
struct QaRecord {
    std::string qid;
    std::string question;
    std::vector<std::vector<std::string>> gold_answers;
    ContextRefs context_refs;
    std::vector<HistoryTurn> history;
    std::string split = "dev";
    std::string benchmark;

    bool operator==(const QaRecord&) const = default;
};

/// Throws InvalidInput when gold_answers or one of its variants is empty.
void validate(const QaRecord& record);

nlohmann::json to_json(const QaRecord& record);
QaRecord qa_record_from_json(const nlohmann::json& j);

void write_qa_jsonl(const std::string& path, const std::vector<QaRecord>& records);

/// Reads the normalized QaRecord JSONL written by write_qa_jsonl.
/// Throws MissingFile, or SchemaError carrying the first bad line.
std::vector<QaRecord> read_qa_jsonl(const std::string& path);

}  // namespace dcqa
