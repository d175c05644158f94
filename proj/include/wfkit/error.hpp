#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfkit {

// Base class for every error the toolkit throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- graph / codec -------------------------------------------------------

struct CyclicGraph : Error {
    using Error::Error;
};

struct InvalidGraph : Error {
    using Error::Error;
};

struct MalformedJson : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct CodeSyntaxError : Error {
    CodeSyntaxError(std::size_t line_no, const std::string& msg)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
    std::size_t line;
};

struct UseBeforeDef : Error {
    UseBeforeDef(std::size_t line_no, const std::string& var)
        : Error("line " + std::to_string(line_no) + ": use of undefined variable '" + var + "'"),
          line(line_no),
          var_name(var) {}
    std::size_t line;
    std::string var_name;
};

struct DuplicateDef : Error {
    DuplicateDef(std::size_t line_no, const std::string& var)
        : Error("line " + std::to_string(line_no) + ": variable '" + var + "' already defined"),
          line(line_no),
          var_name(var) {}
    std::size_t line;
    std::string var_name;
};

// --- persistence ---------------------------------------------------------

struct IoError : Error {
    using Error::Error;
};

struct CorruptRecord : Error {
    CorruptRecord(std::size_t line_no, const std::string& msg)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
    std::size_t line;
};

// --- candidate / grpo ----------------------------------------------------

struct GoldNotInKb : Error {
    explicit GoldNotInKb(std::vector<std::string> offenders)
        : Error(describe(offenders)), missing(std::move(offenders)) {}
    std::vector<std::string> missing;

private:
    static std::string describe(const std::vector<std::string>& names) {
        std::string s = "gold nodes not present in KB:";
        for (const auto& n : names) s += " '" + n + "'";
        return s;
    }
};

struct GroupTooSmall : Error {
    using Error::Error;
};

struct NonPositiveRatio : Error {
    using Error::Error;
};

// --- metrics / retrieval / config ---------------------------------------

struct EmptyCorpus : Error {
    using Error::Error;
};

struct ProviderUnavailable : Error {
    using Error::Error;
};

struct EmptyText : Error {
    using Error::Error;
};

struct ProviderMismatch : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace wfkit
