#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace erm {

// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorCategory { config, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

// Dimension mismatch or malformed matrix shape.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

// Empty input, empty partition, k > m and similar cardinality violations.
class SizeError : public Error {
public:
    explicit SizeError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::size_t pivot)
        : Error(ErrorCategory::numeric, what), pivot_(pivot) {}

    // Index of the failing pivot, or npos when not applicable.
    std::size_t pivot() const noexcept { return pivot_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t pivot_;
};

// A column named by the caller is absent from the input.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string column)
        : Error(ErrorCategory::data, what), column_(std::move(column)) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::string column)
        : Error(ErrorCategory::data, what), row_(row), column_(std::move(column)) {}

    // 1-based line number in the source file (the header is line 1).
    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

// Data that cannot support the requested fit (single class, constant feature).
class DegenerateDataError : public Error {
public:
    explicit DegenerateDataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Statistical validity condition violated (e.g. m_t <= r + 1 for the
// inverse-Wishart expectation).
class ValidityError : public Error {
public:
    explicit ValidityError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

const char* to_string(ErrorCategory category) noexcept;

} // namespace erm
