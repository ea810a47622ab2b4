#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vertiflow {

/// Input data violates a documented precondition or invariant (bad model,
/// inconsistent dimensions, malformed scenario).  CLI maps this to exit 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A file could not be parsed.  Carries the path and (when known) the
/// 1-based line number of the offending record.  CLI maps this to exit 2.
class ParseError : public ValidationError {
public:
    ParseError(std::string path, long line, const std::string& what)
        : ValidationError(format(path, line, what)), path_(std::move(path)), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    long line() const noexcept { return line_; }

private:
    static std::string format(const std::string& path, long line, const std::string& what) {
        std::string s = path;
        if (line > 0) s += ":" + std::to_string(line);
        s += ": " + what;
        return s;
    }

    std::string path_;
    long line_;
};

/// The model admits no feasible flow (or selection).  Carries an
/// infeasibility certificate: a row-multiplier vector proving that the
/// constraints are contradictory.  CLI maps this to exit 3.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, std::vector<double> certificate)
        : std::runtime_error(what), certificate_(std::move(certificate)) {}

    /// One multiplier per constraint row of the offending program.
    const std::vector<double>& certificate() const noexcept { return certificate_; }

private:
    std::vector<double> certificate_;
};

/// Internal numerical failure (factorization breakdown, iteration limit in a
/// context that cannot surface a partial answer).  CLI maps this to exit 1.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace vertiflow
