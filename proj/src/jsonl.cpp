#include "dcqa/jsonl.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dcqa/errors.hpp"
#include "dcqa/text_util.hpp"

namespace dcqa {

void for_each_jsonl(const std::string& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path, line_no, e.what());
        }
        try {
            fn(j, line_no);
        } catch (const SchemaError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path, line_no, e.what());
        } catch (const InvalidInput& e) {
            throw SchemaError(path, line_no, e.what());
        }
    }
}

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    write_text(path, out);
}

void write_text(const std::string& path, const std::string& content) {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace dcqa
