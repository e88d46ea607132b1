#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lakesim {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0, int column = 0)
        : std::runtime_error(format(msg, line, column)), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    static std::string format(const std::string& msg, int line, int column) {
        if (line <= 0) return msg;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg;
    }
    int line_;
    int column_;
};

// Linear or fixed-point iteration failed; history holds the residual per iteration.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& msg, std::vector<double> history = {})
        : std::runtime_error(msg), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

class CflViolation : public SolverError {
public:
    CflViolation(const std::string& msg, double cfl) : SolverError(msg), cfl_(cfl) {}
    double cfl() const { return cfl_; }

private:
    double cfl_;
};

class CompatibilityError : public std::runtime_error {
public:
    CompatibilityError(const std::string& msg, double residual, double tolerance)
        : std::runtime_error(msg), residual_(residual), tolerance_(tolerance) {}
    double residual() const { return residual_; }
    double tolerance() const { return tolerance_; }

private:
    double residual_;
    double tolerance_;
};

}  // namespace lakesim
