#pragma once

#include <stdexcept>
#include <string>

namespace modernize {

/// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Error tied to a file on disk; the path is always part of the message.
class FileError : public Error {
public:
    FileError(std::string path, const std::string& what)
        : Error(what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class UnsupportedFormat : public FileError {
public:
    explicit UnsupportedFormat(std::string path)
        : FileError(std::move(path), "unsupported document format") {}
};

class ParseFailure : public FileError {
public:
    ParseFailure(std::string path, const std::string& detail)
        : FileError(std::move(path), "parse failure (" + detail + ")") {}
};

class EmptyQuery : public Error {
public:
    EmptyQuery() : Error("query contains no searchable terms") {}
};

class EmptyText : public Error {
public:
    EmptyText() : Error("cannot embed empty text") {}
};

class EmptyGraph : public Error {
public:
    EmptyGraph() : Error("community detection needs at least one node") {}
};

class EmptySource : public Error {
public:
    EmptySource() : Error("Fortran source is empty") {}
};

class UnknownStrategy : public Error {
public:
    explicit UnknownStrategy(const std::string& name) : Error("unknown retrieval strategy: " + name) {}
};

class BackendUnavailable : public Error {
public:
    using Error::Error;
};

class RateLimited : public Error {
public:
    using Error::Error;
};

class Timeout : public Error {
public:
    using Error::Error;
};

class MalformedJson : public Error {
public:
    explicit MalformedJson(const std::string& detail) : Error("malformed JSON: " + detail) {}
};

class SchemaViolation : public Error {
public:
    SchemaViolation(std::string field, std::string reason)
        : Error("schema violation: " + field + " (" + reason + ")"),
          field_(std::move(field)), reason_(std::move(reason)) {}
    const std::string& field() const noexcept { return field_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string reason_;
};

class JudgeUnparseable : public Error {
public:
    explicit JudgeUnparseable(const std::string& raw)
        : Error("judge response carries no score in [0,1]: " + raw.substr(0, 120)) {}
};

class SyntaxErrorInCode : public Error {
public:
    SyntaxErrorInCode(int line, const std::string& detail)
        : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class FormatterFailed : public Error {
public:
    using Error::Error;
};

class MissingGroundTruth : public Error {
public:
    explicit MissingGroundTruth(const std::string& query)
        : Error("benchmark query has no ground truth: " + query) {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace modernize
