#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clue {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CLUE_DEFINE_ERROR(Name)                    \
    class Name : public Error {                    \
    public:                                        \
        using Error::Error;                        \
    }

CLUE_DEFINE_ERROR(OutOfRangeError);
CLUE_DEFINE_ERROR(ArityMismatchError);
CLUE_DEFINE_ERROR(DanglingClickError);
CLUE_DEFINE_ERROR(EmptyDocListError);
CLUE_DEFINE_ERROR(DuplicateLabelError);
CLUE_DEFINE_ERROR(MissingGoldError);
CLUE_DEFINE_ERROR(BackendExhaustedError);
CLUE_DEFINE_ERROR(AuthError);
CLUE_DEFINE_ERROR(TimeoutError);
CLUE_DEFINE_ERROR(UnparseableError);
CLUE_DEFINE_ERROR(EvenVoterCountError);
CLUE_DEFINE_ERROR(DimensionMismatchError);
CLUE_DEFINE_ERROR(NoOverlapError);
CLUE_DEFINE_ERROR(UndefinedMetricError);
CLUE_DEFINE_ERROR(MissingLabelError);
CLUE_DEFINE_ERROR(DegenerateTargetError);
CLUE_DEFINE_ERROR(ZeroVarianceError);
CLUE_DEFINE_ERROR(RowMismatchError);
CLUE_DEFINE_ERROR(ConfigError);

#undef CLUE_DEFINE_ERROR

/// Malformed input line (JSONL parsing). Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Missing or ill-typed field. Carries the field path, e.g. "queries[0].results[2].rank".
class SchemaError : public Error {
public:
    SchemaError(std::string field_path, const std::string& what)
        : Error(field_path + ": " + what), field_path_(std::move(field_path)) {}

    const std::string& field_path() const { return field_path_; }

private:
    std::string field_path_;
};

/// Cache file damage. Carries the offending key (or line content when no key parses).
class CacheIoError : public Error {
public:
    CacheIoError(std::string key, const std::string& what)
        : Error("cache: " + what + " (key: " + key + ")"), key_(std::move(key)) {}

    const std::string& key() const { return key_; }

private:
    std::string key_;
};

}  // namespace clue
