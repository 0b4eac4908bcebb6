#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcqa {

/// Base class for every error this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates a documented precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

class MissingFile : public Error {
public:
    explicit MissingFile(const std::string& path)
        : Error("missing file: " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A data file was readable but its content did not match the expected schema.
/// `line()` is 1-based; 0 means the error is not tied to one line.
class SchemaError : public Error {
public:
    SchemaError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}
    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

class InsufficientChains : public Error {
public:
    using Error::Error;
};

class InvalidShot : public Error {
public:
    using Error::Error;
};

/// LLM transport or replay failure. `transient()` marks errors worth retrying.
class BackendError : public Error {
public:
    explicit BackendError(const std::string& what, bool transient = false)
        : Error(what), transient_(transient) {}
    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

}  // namespace dcqa
