#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcqa/orchestrator.hpp"
#include "dcqa/qa_record.hpp"

namespace dcqa {

struct QuestionScore {
    std::string qid;
    int em = 0;
    double f1 = 0.0;
    int tool_calls = 0;
    std::string outcome;
};

struct EvalReport {
    std::vector<QuestionScore> per_question;
    double em_pct = 0.0;
    double f1_pct = 0.0;
    double avg_tool_calls = 0.0;
    std::string llm;
    std::string size = "-";
    std::string strategy;
    int budget = 12;
    // "per-question" when any gold record carries context_refs (tools are
    // scoped to those documents), else "global" (tools search whole stores).
    std::string context_mode = "global";
};

struct ReportLabels {
    std::string llm;
    std::string size = "-";
    std::string strategy;
    int budget = 12;
};

/// Scores every episode against the gold record with the same qid.
/// Unanswered episodes score 0 and still count their tool calls.
/// Throws InvalidInput on an empty episode set or a qid without gold.
EvalReport evaluate(const std::vector<Episode>& episodes, const std::map<std::string, QaRecord>& gold,
                    const ReportLabels& labels);
/// Convenience overload using each episode's own question record as gold.
EvalReport evaluate(const std::vector<Episode>& episodes, const ReportLabels& labels);

/// Mean Episode::tool_calls. Throws InvalidInput on empty input.
double average_tool_calls(const std::vector<Episode>& episodes);

/// Columns LLM | Size | Strategy | EM | F1 | Average Tool Calls, one row per
/// report in input order, two decimals. A footer notes any budget other
/// than 12.
std::string render_report_table(const std::vector<EvalReport>& reports);
nlohmann::json to_json(const EvalReport& report);
nlohmann::json report_json(const std::vector<EvalReport>& reports);

}  // namespace dcqa
