#include "dcqa/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "dcqa/errors.hpp"
#include "dcqa/metrics.hpp"

namespace dcqa {

namespace {

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

double average_tool_calls(const std::vector<Episode>& episodes) {
    if (episodes.empty()) throw InvalidInput("average_tool_calls needs at least one episode");
    double sum = 0;
    for (const auto& e : episodes) sum += e.tool_calls;
    return sum / static_cast<double>(episodes.size());
}

EvalReport evaluate(const std::vector<Episode>& episodes, const std::map<std::string, QaRecord>& gold,
                    const ReportLabels& labels) {
    if (episodes.empty()) throw InvalidInput("cannot evaluate an empty episode set");
    EvalReport r;
    r.llm = labels.llm;
    r.size = labels.size;
    r.strategy = labels.strategy;
    r.budget = labels.budget;
    double em = 0, f1 = 0;
    for (const auto& ep : episodes) {
        auto it = gold.find(ep.question.qid);
        if (it == gold.end()) throw InvalidInput("no gold answer for " + ep.question.qid);
        QuestionScore s;
        s.qid = ep.question.qid;
        s.em = exact_match(ep.predicted(), it->second.gold_answers);
        s.f1 = list_f1(ep.predicted(), it->second.gold_answers);
        if (s.em == 1) s.f1 = 1.0;
        s.tool_calls = ep.tool_calls;
        if (!it->second.context_refs.empty()) r.context_mode = "per-question";
        s.outcome = outcome_name(ep.outcome.kind);
        em += s.em;
        f1 += s.f1;
        r.per_question.push_back(std::move(s));
    }
    const auto n = static_cast<double>(episodes.size());
    r.em_pct = 100.0 * em / n;
    r.f1_pct = 100.0 * f1 / n;
    r.avg_tool_calls = average_tool_calls(episodes);
    return r;
}

EvalReport evaluate(const std::vector<Episode>& episodes, const ReportLabels& labels) {
    std::map<std::string, QaRecord> gold;
    for (const auto& e : episodes) gold.emplace(e.question.qid, e.question);
    return evaluate(episodes, gold, labels);
}

std::string render_report_table(const std::vector<EvalReport>& reports) {
    const std::vector<std::string> head = {"LLM", "Size", "Strategy", "EM", "F1", "Average Tool Calls"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports)
        rows.push_back({r.llm, r.size, r.strategy, fixed2(r.em_pct), fixed2(r.f1_pct), fixed2(r.avg_tool_calls)});
    std::vector<std::size_t> width(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) {
        width[c] = head[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out = "|";
        for (std::size_t c = 0; c < cells.size(); ++c)
            out += " " + cells[c] + std::string(width[c] - cells[c].size(), ' ') + " |";
        return out + "\n";
    };
    std::string out = line(head);
    out += "|";
    for (auto w : width) out += std::string(w + 2, '-') + "|";
    out += "\n";
    for (const auto& row : rows) out += line(row);
    std::set<int> budgets;
    for (const auto& r : reports)
        if (r.budget != 12) budgets.insert(r.budget);
    for (int b : budgets) out += "Note: maximum tool calls per question set to " + std::to_string(b) + ".\n";
    return out;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : r.per_question)
        per.push_back({{"qid", s.qid}, {"em", s.em}, {"f1", s.f1}, {"tool_calls", s.tool_calls}, {"outcome", s.outcome}});
    return {{"llm", r.llm},
            {"size", r.size},
            {"strategy", r.strategy},
            {"budget", r.budget},
            {"context_mode", r.context_mode},
            {"em", r.em_pct},
            {"f1", r.f1_pct},
            {"avg_tool_calls", r.avg_tool_calls},
            {"questions", r.per_question.size()},
            {"per_question", per}};
}

nlohmann::json report_json(const std::vector<EvalReport>& reports) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : reports) out.push_back(to_json(r));
    return out;
}

}  // namespace dcqa
