#pragma once

// Loaders for the released benchmark files.
//
// MultiModalQA (MMQA_<split>.jsonl), one question per line:
//   qid, question, answers[].answer            -> gold (one variant, list-type)
//   metadata.text_doc_ids / table_id / image_doc_ids -> context_refs
// MMQA_texts.jsonl  {id, title, text}          -> TextStore, "<title>. <text>"
// MMQA_tables.jsonl {id, title, table.header[].column_name,
//                    table.table_rows[][].text} -> TableStore
// MMQA_images.jsonl {id, title, path}          -> CaptionStore (caption = title,
//                    or the caption from an optional {id, caption} file)
//
// MMCoQA (MMCoQA_<split>.txt), one JSON question per line:
//   qid, question, answer[] (objects with "answer", or strings) -> gold
//   history[] {question, answer}               -> history
//   conversation id: qid up to its last '_'
// MMCoQA shares the MultiModalQA knowledge base, so the same store files apply.
//
// Normalized: our own QaRecord JSONL (see qa_record.hpp).

#include <optional>
#include <string>
#include <vector>

#include "dcqa/qa_record.hpp"
#include "dcqa/stores.hpp"

namespace dcqa {

enum class BenchmarkName { MultiModalQA, MMCoQA, Normalized };

std::optional<BenchmarkName> parse_benchmark_name(std::string_view name);

struct BenchmarkPaths {
    std::string questions;
    std::string texts;     // optional
    std::string tables;    // optional
    std::string images;    // optional
    std::string captions;  // optional
};

struct LoadedBenchmark {
    std::vector<QaRecord> records;
    TextStore texts;
    TableStore tables;
    CaptionStore images;
    std::vector<std::string> warnings;
};

/// Published split sizes; nullopt for unknown pairs.
std::optional<std::size_t> expected_split_size(BenchmarkName name, std::string_view split);

/// Throws MissingFile, or SchemaError at the first bad line. A split size
/// that differs from the published one is a warning, not an error.
LoadedBenchmark load_benchmark(BenchmarkName name, const BenchmarkPaths& paths, const std::string& split);

std::string conversation_id(const QaRecord& record);
/// Mean number of questions per conversation.
double questions_per_conversation(const std::vector<QaRecord>& records);

}  // namespace dcqa
