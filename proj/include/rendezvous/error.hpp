#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rendezvous {

// Base of every error the library raises on purpose.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One failed validation rule, located by a JSON pointer (e.g. "/adjacency/2/2").
struct issue {
    std::string path;
    std::string message;
};

/// Invalid input. Carries every failed rule, not just the first one.
class validation_error : public error {
public:
    explicit validation_error(std::vector<issue> issues)
        : error(summarize(issues)), issues_(std::move(issues)) {}

    validation_error(std::string path, std::string message)
        : validation_error(std::vector<issue>{{std::move(path), std::move(message)}}) {}

    [[nodiscard]] const std::vector<issue>& issues() const noexcept { return issues_; }

private:
    static std::string summarize(const std::vector<issue>& issues) {
        if (issues.empty())
            return "validation failed";
        std::string out = issues.front().path + ": " + issues.front().message;
        if (issues.size() > 1)
            out += " (and " + std::to_string(issues.size() - 1) + " more)";
        return out;
    }

    std::vector<issue> issues_;
};

/// Numerical failure: non-convergence, singular systems, blow-up.
class numeric_error : public error {
public:
    using error::error;
};

/// File system failures; the message names the offending path.
class io_error : public error {
public:
    using error::error;
};

} // namespace rendezvous
