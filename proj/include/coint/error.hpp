#pragma once

#include <stdexcept>
#include <string>

namespace coint {

/// Library-wide error. `stage` names the pipeline step that failed when the
/// error has been routed through run_test or the harness.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, std::string stage = {})
        : std::runtime_error(stage.empty() ? what : stage + ": " + what),
          stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace coint
