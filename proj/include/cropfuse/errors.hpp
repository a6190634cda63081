#pragma once

#include <stdexcept>
#include <string>

namespace cropfuse {

/// Base of all library errors. `DataError` maps to CLI exit code 2,
/// `ConfigError` to exit code 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// -- data-shaped errors -------------------------------------------------

class DomainError : public DataError {
public:
    explicit DomainError(const std::string& msg) : DataError(msg) {}
};

class MissingConversionError : public DataError {
public:
    explicit MissingConversionError(const std::string& msg) : DataError(msg) {}
};

class UndefinedYieldError : public DataError {
public:
    explicit UndefinedYieldError(const std::string& msg) : DataError(msg) {}
};

class EmptyCountyError : public DataError {
public:
    explicit EmptyCountyError(const std::string& msg) : DataError(msg) {}
};

class DimensionError : public DataError {
public:
    explicit DimensionError(const std::string& msg) : DataError(msg) {}
};

class InsufficientDataError : public DataError {
public:
    explicit InsufficientDataError(const std::string& msg) : DataError(msg) {}
};

class RankError : public DataError {
public:
    explicit RankError(const std::string& msg) : DataError(msg) {}
};

class HeadGapError : public DataError {
public:
    explicit HeadGapError(const std::string& msg) : DataError(msg) {}
};

class WindowError : public DataError {
public:
    explicit WindowError(const std::string& msg) : DataError(msg) {}
};

class InsufficientOverlapError : public DataError {
public:
    explicit InsufficientOverlapError(const std::string& msg) : DataError(msg) {}
};

class DegenerateFeatureError : public DataError {
public:
    explicit DegenerateFeatureError(const std::string& msg) : DataError(msg) {}
};

class FileError : public DataError {
public:
    explicit FileError(const std::string& msg) : DataError(msg) {}
};

// -- configuration-shaped errors -----------------------------------------

class ParameterError : public ConfigError {
public:
    explicit ParameterError(const std::string& msg) : ConfigError(msg) {}
};

} // namespace cropfuse
