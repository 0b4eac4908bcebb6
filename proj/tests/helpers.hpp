#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>

namespace dcqa::testkit {

inline std::string data_path(const std::string& name) { return std::string(DCQA_TEST_DATA) + "/" + name; }
inline std::string shots_path() { return std::string(DCQA_SHOTS_DIR) + "/default.jsonl"; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("dcqa-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// httplib server on an ephemeral localhost port, running on its own thread.
class LocalServer {
public:
    explicit LocalServer(const std::function<void(httplib::Server&)>& setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace dcqa::testkit
