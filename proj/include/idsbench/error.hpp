#pragma once

#include <stdexcept>
#include <string>

namespace idsbench {

// Process exit codes used by the CLI.
enum class ExitCode : int {
    ok = 0,
    config_error = 1,
    data_error = 2,
    pipeline_error = 3,
};

class IdsError : public std::runtime_error {
public:
    IdsError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

class ConfigError : public IdsError {
public:
    explicit ConfigError(const std::string& what) : IdsError(ExitCode::config_error, what) {}
};

class DataError : public IdsError {
public:
    explicit DataError(const std::string& what) : IdsError(ExitCode::data_error, what) {}
};

// Raised when a stage leaves no rows behind.
class EmptyDatasetError : public DataError {
public:
    explicit EmptyDatasetError(const std::string& what) : DataError(what) {}
};

class PipelineError : public IdsError {
public:
    explicit PipelineError(const std::string& what) : IdsError(ExitCode::pipeline_error, what) {}
};

// Broken preconditions (mismatched lengths, unknown columns, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace idsbench
