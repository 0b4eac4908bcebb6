#pragma once

#include <string>

#include "dcqa/toolkit.hpp"

namespace dcqa {

struct HttpToolConfig {
    std::string url;  // full URL of the POST endpoint
    std::string api_key;
    double timeout_s = 30.0;
};

/// Remote USH model behind a JSON endpoint.
/// POST {"question":..,"context_refs":[..]}  ->  {"answer":..,"confidence":..?}
class HttpToolClient final : public ToolClient {
public:
    explicit HttpToolClient(HttpToolConfig config);
    ToolResponse answer(const ToolRequest& request) const override;

private:
    HttpToolConfig config_;
};

struct SearchConfig {
    std::string url = "https://serpapi.com/search.json";
    std::string api_key;  // DCQA_SEARCH_API_KEY
    std::string engine = "google";
    double timeout_s = 30.0;
};

/// Web search: GET <url>?q=..&api_key=..&engine=.. and answer with the
/// first organic result's snippet.
class SearchToolClient final : public ToolClient {
public:
    explicit SearchToolClient(SearchConfig config);
    ToolResponse answer(const ToolRequest& request) const override;

private:
    SearchConfig config_;
};

}  // namespace dcqa
