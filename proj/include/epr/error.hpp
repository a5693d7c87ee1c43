#pragma once

#include <stdexcept>
#include <string>

namespace epr {

/// Base error. The category token is stable and machine-parsable; the CLI
/// prints failures as "error: <category>: <detail>" on a single line.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

/// Invalid or inconsistent run configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("config", m) {}
};

/// Malformed or unusable data (parse failures, empty views, bad shapes).
struct DataError : Error {
    explicit DataError(const std::string& m) : Error("data", m) {}
};

/// Evaluability failure: a power term met a value outside its domain.
struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error("domain", m) {}
};

/// Search-level failure (underdetermined view, structure space over cap).
struct SearchError : Error {
    explicit SearchError(const std::string& m) : Error("search", m) {}
};

/// Hierarchy plan construction or prediction failure.
struct PlanError : Error {
    explicit PlanError(const std::string& m) : Error("plan", m) {}
};

struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace epr
