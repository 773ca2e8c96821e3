#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ter {

// Error with a stable machine-readable class alongside the human message.
// The CLI prints failures as a single line `error <code>: <message>`.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

}  // namespace ter
