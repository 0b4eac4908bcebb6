#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dcqa {

/// Calls `fn(json, line_no)` for every non-blank line. Parse errors and
/// exceptions thrown by `fn` surface as SchemaError with the 1-based line.
void for_each_jsonl(const std::string& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace dcqa
