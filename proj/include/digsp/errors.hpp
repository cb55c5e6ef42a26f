#pragma once

#include <stdexcept>
#include <string>

namespace digsp {

// Error categories map one-to-one onto CLI exit codes (see tools/).

/// Bad configuration: invalid parameter values, empty terminal sets, ...
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad call input: dimension mismatches, non-finite values, out-of-range args.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Internal consistency violation: unresolved abstraction ids, duplicate
/// registry entries, unknown feature indices. Signals corrupted state.
class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dataset ingestion failure; message names the offending row/column.
class IngestionError : public std::runtime_error {
public:
    explicit IngestionError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace digsp
