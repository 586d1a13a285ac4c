#pragma once

#include <stdexcept>
#include <string>

namespace paneldml {

/// Error caused by user input: bad config, malformed data files, references
/// to columns that do not exist. The CLI maps these to exit code 2.
class UserError : public std::runtime_error {
public:
    explicit UserError(const std::string& what) : std::runtime_error(what) {}
};

/// Error raised while executing one stage of a multi-stage pipeline; carries
/// the stage name so callers can report where a run failed.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace paneldml
