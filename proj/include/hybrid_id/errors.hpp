#pragma once

#include <stdexcept>
#include <string>

namespace hybrid_id {

// Coarse error families; the CLI maps them onto exit codes.
enum class ErrorKind { Config, Data, Solver };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

// Parameter outside the model's physical domain (e.g. a non-positive modulus).
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct LookupError : Error {
    explicit LookupError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct DatasetError : Error {
    explicit DatasetError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// An all-zero measurement series makes the sensor weight 1/chi undefined.
struct DegenerateWeightError : Error {
    explicit DegenerateWeightError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line)
        : Error(ErrorKind::Data, what + " (line " + std::to_string(line) + ")"), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct EvaluationError : Error {
    explicit EvaluationError(const std::string& what) : Error(ErrorKind::Solver, what) {}
};

struct InsufficientDataError : Error {
    explicit InsufficientDataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct SolverError : Error {
    explicit SolverError(const std::string& what) : Error(ErrorKind::Solver, what) {}
};

} // namespace hybrid_id
