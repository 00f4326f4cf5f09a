#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clap {

// Base for every failure the pipeline reports. Subclasses let the CLI map
// failures onto exit codes and let callers decide what is retryable.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (JSONL, TSV, run files, agent output).
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a uniqueness or referential invariant.
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Binary store corruption. Carries the byte offset where decoding failed.
class FormatError : public Error {
public:
    FormatError(std::size_t offset, const std::string& what)
        : Error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Network or remote-service failure (agent endpoint, encoder endpoint).
class TransportError : public Error {
public:
    using Error::Error;
};

// A vector lookup for an id that is not in the store.
class MissingEmbeddingError : public Error {
public:
    explicit MissingEmbeddingError(const std::string& id)
        : Error("missing embedding for id '" + id + "'"), id_(id) {}

    [[nodiscard]] const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

// Caller passed arguments outside an operation's domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace clap
