#pragma once

#include <stdexcept>
#include <string>

namespace crosskerr {

/// Invalid input: malformed config text, out-of-range parameters, cutoffs too small.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
    ConfigError(const std::string& what, int line, int column)
        : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_ = 0;
    int column_ = 0;
};

/// A numerical routine could not meet its tolerance (quadrature, ODE, unitarity).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, double achieved = 0.0)
        : std::runtime_error(what), achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

} // namespace crosskerr
