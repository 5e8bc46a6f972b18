#pragma once

#include <stdexcept>
#include <string>

namespace spineforge {

// Thrown by operations whose preconditions fail or whose bounded searches
// are exhausted. `stage` carries the pipeline stage / move name when the
// error originates inside build_spine, empty otherwise.
class Error : public std::runtime_error {
public:
    explicit Error(std::string message, std::string stage = {})
        : std::runtime_error(stage.empty() ? message : stage + ": " + message),
          stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace spineforge
